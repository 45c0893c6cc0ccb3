#include "doctest.h"

#include "orbitledger/mission.hpp"

using namespace orbitledger;
using namespace orbitledger::mission;

namespace {

ConsortiumConfig consortium(std::uint64_t budget = 600)
{
  return ConsortiumConfig{{1, 2, 3}, {10, 11}, budget, ConsortiumConfig::uniform_fractions(), 99, 1};
}

PhaseRecord record_for(std::uint8_t phase, NodeId submitter = 1)
{
  PhaseRecord r{phase, submitter, {}};
  for (auto key : required_fields(phase))
  {
    r.fields[std::string{key}] = "doc-" + std::string{key} + "-" + std::to_string(phase);
  }
  return r;
}

void check_replay(MissionLedger const &live)
{
  auto const copy = MissionLedger::replay(live.chain().blocks());
  CHECK(format_lifecycle_status(copy.status()) == format_lifecycle_status(live.status()));
  CHECK(ledger::validate_chain(live.chain().blocks(), live.config().difficulty).valid());
}

}  // namespace

TEST_CASE("phases 1 to 6 in order give genesis plus six phase blocks")
{
  MissionLedger m{consortium()};
  CHECK(m.status().current_phase == 0);
  CHECK(m.status().released == 0);

  for (std::uint8_t p = 1; p <= PHASE_COUNT; ++p)
  {
    auto const &block = m.submit_phase(record_for(p, 1 + p % 3), p * 10);
    CHECK(block.header.index == p);
  }
  CHECK(m.chain().height() == 7);
  CHECK(m.committed_phase() == 6);

  for (std::size_t i = 1; i < m.chain().height(); ++i)
  {
    auto const &block = m.chain().blocks()[i];
    REQUIRE(block.transactions.size() == 2);
    std::optional<tokens::MissionPhaseToken> phase;
    std::optional<NodeId>                    miner;
    for (auto const &tx : block.transactions)
    {
      auto const token = tokens::token_of(tx);
      if (auto const *p = std::get_if<tokens::MissionPhaseToken>(&*token))
      {
        phase = *p;
      }
      if (std::holds_alternative<tokens::DecisionToken>(*token))
      {
        miner = tx.issuer;
      }
    }
    REQUIRE(phase);
    CHECK(phase->phase == i);
    CHECK(m.config().members.contains(phase->submitter));
    CHECK(miner == m.miner_for(i));
    CHECK(phase->payload_digest == record_digest(record_for(static_cast<std::uint8_t>(i), phase->submitter)));
  }
  check_replay(m);
}

TEST_CASE("rejections leave the chain unchanged")
{
  // Every state k in 0..6 against every ordinal 0..7 and both kinds of submitter.
  for (std::uint8_t k = 0; k <= PHASE_COUNT; ++k)
  {
    MissionLedger m{consortium()};
    for (std::uint8_t p = 1; p <= k; ++p)
    {
      m.submit_phase(record_for(p), p);
    }
    for (std::uint8_t p = 0; p <= PHASE_COUNT + 1; ++p)
    {
      for (NodeId submitter : {NodeId{2}, NodeId{500}})
      {
        CAPTURE(static_cast<int>(k));
        CAPTURE(static_cast<int>(p));
        CAPTURE(submitter);
        auto const before = m.chain().blocks();
        auto const rec    = record_for(p, submitter);
        bool const valid  = p >= 1 && p <= PHASE_COUNT;
        if (submitter == 500)
        {
          CHECK_THROWS_AS(m.submit_phase(rec, 100), UnauthorizedSubmitter);
        }
        else if (valid && p <= k)
        {
          CHECK_THROWS_AS(m.submit_phase(rec, 100), DuplicatePhase);
        }
        else if (valid && p > k + 1)
        {
          CHECK_THROWS_AS(m.submit_phase(rec, 100), OutOfOrder);
        }
        else if (!valid)
        {
          CHECK_THROWS_AS(m.submit_phase(rec, 100), RejectedByMiners);
        }
        else
        {
          // the one acceptable submission; skip it to keep the state fixed
          continue;
        }
        CHECK(m.chain().blocks() == before);
      }
    }
  }

  MissionLedger m{consortium()};
  auto          incomplete = record_for(1);
  incomplete.fields["requirements"].clear();
  CHECK_THROWS_AS(m.submit_phase(incomplete, 1), RejectedByMiners);
  m.submit_phase(record_for(1), 1);
  m.submit_phase(record_for(2), 2);
  auto const before = m.chain().height();
  CHECK_THROWS_AS(m.submit_phase(record_for(4), 3), OutOfOrder);
  auto missing = record_for(3);
  missing.fields.erase("schedule");
  CHECK_THROWS_AS(m.submit_phase(missing, 3), RejectedByMiners);
  CHECK(m.chain().height() == before);
}

TEST_CASE("release_funds")
{
  SUBCASE("equal sixths of 600 release 100 each")
  {
    MissionLedger m{consortium(600)};
    CHECK_THROWS_AS(m.release_funds(1, 0), PhaseNotCommitted);
    for (std::uint8_t p = 1; p <= PHASE_COUNT; ++p)
    {
      m.submit_phase(record_for(p), p);
      auto const r = m.release_funds(p, p);
      CHECK(r.amount == 100);
      CHECK(m.status().released == 100u * p);
      auto const token = tokens::token_of(m.chain().blocks()[r.block].transactions.front());
      bool found = false;
      for (auto const &tx : m.chain().blocks()[r.block].transactions)
      {
        if (auto t = tokens::token_of(tx); t && std::holds_alternative<tokens::FundingToken>(*t))
        {
          auto const &f = std::get<tokens::FundingToken>(*t);
          CHECK(f.amount == 100);
          CHECK(f.beneficiary == 99);
          CHECK(f.milestone_phase == p);
          found = true;
        }
      }
      CHECK(found);
    }
    CHECK(m.status().released == 600);
    CHECK(m.status().current_phase == 6);
    CHECK_THROWS_AS(m.release_funds(3, 50), AlreadyReleased);
    CHECK_THROWS_AS(m.release_funds(0, 50), PhaseNotCommitted);
    CHECK_THROWS_AS(m.release_funds(7, 50), PhaseNotCommitted);
    check_replay(m);
  }

  SUBCASE("uneven fractions: cumulative release tracks budget times the partial sum")
  {
    auto config      = consortium(1000);
    config.fractions = {Fraction{1, 3}, Fraction{1, 7}, Fraction{1, 11}, Fraction{0}, Fraction{1, 5},
                        Fraction{1} - Fraction{1, 3} - Fraction{1, 7} - Fraction{1, 11} - Fraction{1, 5}};
    MissionLedger m{config};
    Fraction      partial{0};
    for (std::uint8_t p = 1; p <= PHASE_COUNT; ++p)
    {
      m.submit_phase(record_for(p), p);
      m.release_funds(p, p);
      partial += config.fractions[p - 1];
      auto const expected = boost::rational_cast<std::int64_t>(Fraction{1000} * partial);
      CAPTURE(static_cast<int>(p));
      CHECK(m.status().released == static_cast<std::uint64_t>(expected));
      CHECK(m.status().released <= 1000);
    }
    CHECK(m.status().released == 1000);
    // phase 4 carries a zero share and is recorded without a funding token
    CHECK(m.status().releases[3].amount == 0);
    check_replay(m);
  }

  SUBCASE("releases may trail the phases")
  {
    MissionLedger m{consortium(60)};
    m.submit_phase(record_for(1), 1);
    m.submit_phase(record_for(2), 2);
    CHECK(m.release_funds(2, 3).amount == 10);
    CHECK(m.release_funds(1, 4).amount == 10);
    CHECK(m.status().released == 20);
    CHECK_THROWS_AS(m.release_funds(3, 5), PhaseNotCommitted);
  }
}

TEST_CASE("lifecycle_status")
{
  MissionLedger m{consortium(600)};
  auto          text = format_lifecycle_status(m.status());
  CHECK(text == "phase=0\nphase_name=none\nreleased=0\nbudget=600\nheight=1\nphase_blocks=\nreleases=\n");

  m.submit_phase(record_for(1), 1);
  m.release_funds(1, 2);
  m.submit_phase(record_for(2), 3);
  m.release_funds(2, 4);
  CHECK(m.status().released == 200);
  text = format_lifecycle_status(m.status());
  CHECK(text ==
        "phase=2\nphase_name=FeasibilityStudy\nreleased=200\nbudget=600\nheight=5\nphase_blocks=1:1,2:3\n"
        "releases=1:100@2,2:100@4\n");
}

TEST_CASE("consortium configuration")
{
  auto bad      = consortium();
  bad.fractions = {Fraction{1, 2}, Fraction{1, 2}, Fraction{1, 6}, Fraction{0}, Fraction{0}, Fraction{0}};
  CHECK_THROWS_AS(MissionLedger{bad}, InvalidConfig);
  bad.fractions = {Fraction{3, 2}, Fraction{-1, 2}, Fraction{0}, Fraction{0}, Fraction{0}, Fraction{0}};
  CHECK_THROWS_AS(MissionLedger{bad}, InvalidConfig);
  bad        = consortium();
  bad.miners = {};
  CHECK_THROWS_AS(MissionLedger{bad}, InvalidConfig);

  auto const cfg  = consortium(77);
  auto const back = parse_charter(charter_text(cfg));
  CHECK(back.members == cfg.members);
  CHECK(back.miners == cfg.miners);
  CHECK(back.budget == 77);
  CHECK(back.fractions == cfg.fractions);
  CHECK_THROWS_AS(parse_charter("charter budget=x"), InvalidConfig);
  CHECK_THROWS_AS(parse_charter("hello"), InvalidConfig);
}

TEST_CASE("replay refuses chains without miner attestation")
{
  MissionLedger m{consortium()};
  m.submit_phase(record_for(1), 1);
  auto blocks = m.chain().blocks();

  // Re-mine block 1 without the attestation transaction.
  ledger::Chain forged{blocks[0], 1};
  for (auto const &tx : blocks[1].transactions)
  {
    auto const token = tokens::token_of(tx);
    if (std::holds_alternative<tokens::MissionPhaseToken>(*token))
    {
      forged.submit(tx);
    }
  }
  forged.seal(1);
  CHECK_THROWS_AS(MissionLedger::replay(forged.blocks()), std::invalid_argument);
  CHECK_NOTHROW(MissionLedger::replay(blocks));
}
