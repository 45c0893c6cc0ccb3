#include "doctest.h"

#include "orbitledger/zones.hpp"

#include <set>

using namespace orbitledger;
using namespace orbitledger::zones;

namespace {

std::vector<SatelliteInfo> leo_swarm(std::size_t n, NodeId first = 100)
{
  std::vector<SatelliteInfo> sats;
  for (std::size_t i = 0; i < n; ++i)
  {
    sats.push_back({first + i, OrbitClass::LEO});
  }
  return sats;
}

void check_consistent(VirtualZone const &zone)
{
  CHECK(ledger::validate_chain(zone.chain().blocks(), ZONE_DIFFICULTY).valid());
  for (auto id : zone.intruders())
  {
    CHECK_FALSE(zone.is_member(id));
  }
  CHECK(format_zone_status(VirtualZone::replay(zone.chain().blocks()).status()) ==
        format_zone_status(zone.status()));
}

}  // namespace

TEST_CASE("create_zone")
{
  auto const sats = leo_swarm(3);
  auto const zone = VirtualZone::create(7, 1, sats, OrbitClass::LEO);

  CHECK(zone.chain().height() == 1);
  std::set<std::uint64_t> vids;
  for (auto const &[sat, vid] : zone.members())
  {
    vids.insert(vid);
  }
  CHECK(vids == std::set<std::uint64_t>{1, 2, 3});

  auto const &genesis = zone.chain().genesis();
  REQUIRE(genesis.transactions.size() == 1);
  auto const token = tokens::token_of(genesis.transactions.front());
  REQUIRE(token);
  auto const &reg = std::get<tokens::ZoneRegistrationToken>(*token);
  CHECK(reg.zone_id == 7);
  CHECK(reg.master == 1);
  CHECK(reg.members == std::vector<tokens::MemberRecord>{{100, 1}, {101, 2}, {102, 3}});
  check_consistent(zone);

  std::vector<SatelliteInfo> mixed{{1, OrbitClass::LEO}, {2, OrbitClass::GEO}};
  CHECK_THROWS_AS(VirtualZone::create(1, 9, mixed, OrbitClass::LEO), OrbitMismatch);
  CHECK_THROWS_AS(VirtualZone::create(1, 9, {}, OrbitClass::LEO), EmptySwarm);
}

TEST_CASE("mfa acceptance matrix")
{
  auto const sats = leo_swarm(3);
  for (bool member : {true, false})
  {
    for (bool correct : {true, false})
    {
      auto         zone      = VirtualZone::create(1, 1, sats, OrbitClass::LEO);
      NodeId const initiator = member ? 101 : 555;
      auto const   nonce     = correct ? zone.expected_nonce() : zone.expected_nonce() + 1;
      auto const   before    = zone.chain().height();
      auto const   result    = zone.mfa_authenticate(initiator, 100, nonce, 5);

      CAPTURE(member);
      CAPTURE(correct);
      CHECK(result.established() == (member && correct));
      if (member && correct)
      {
        CHECK(zone.chain().height() == before + 1);
        auto const token = tokens::token_of(zone.chain().tip().transactions.front());
        auto const &session = std::get<tokens::TransactionSessionToken>(*token);
        CHECK(session.initiator == initiator);
        CHECK(session.responder == 100);
        CHECK(session.session_id == result.session_id);
      }
      else
      {
        CHECK(zone.chain().height() == before);
        CHECK(result.outcome == (member ? MfaOutcome::WrongNonce : MfaOutcome::NotMember));
      }
      check_consistent(zone);
    }
  }

  auto zone = VirtualZone::create(1, 1, sats, OrbitClass::LEO);
  CHECK_THROWS_AS(zone.mfa_authenticate(100, 999, zone.expected_nonce(), 0), NotAMember);
}

TEST_CASE("replayed nonces never authenticate twice")
{
  auto zone = VirtualZone::create(1, 1, leo_swarm(4), OrbitClass::LEO);

  auto const first = zone.expected_nonce();
  REQUIRE(zone.mfa_authenticate(100, 101, first, 1).established());
  auto const replay = zone.mfa_authenticate(100, 101, first, 2);
  CHECK(replay.outcome == MfaOutcome::WrongNonce);

  // Longer run: every accepted nonce is distinct, and each old one fails.
  std::set<std::uint64_t> accepted{first};
  for (Tick t = 3; t < 200; ++t)
  {
    auto const nonce = zone.expected_nonce();
    REQUIRE(zone.mfa_authenticate(100 + t % 4, 100 + (t + 1) % 4, nonce, t).established());
    CHECK(accepted.insert(nonce).second);
    for (auto old : {first, nonce})
    {
      CHECK(zone.mfa_authenticate(100, 101, old, t).outcome == MfaOutcome::WrongNonce);
    }
  }
  check_consistent(zone);
}

TEST_CASE("request_join")
{
  auto const sats = leo_swarm(3);

  SUBCASE("authorized candidate in the right orbit is admitted")
  {
    auto zone = VirtualZone::create(1, 1, sats, OrbitClass::LEO, JoinRules{{200}, {}});
    auto const r = zone.request_join({200, OrbitClass::LEO}, 3);
    CHECK(r.admitted());
    CHECK(r.virtual_id == 4);
    CHECK(r.votes.size() == 3);
    CHECK(zone.members().size() == 4);
    CHECK(zone.chain().height() == 2);
    CHECK_THROWS_AS(zone.request_join({200, OrbitClass::LEO}, 4), AlreadyMember);
    // the newcomer can authenticate
    CHECK(zone.mfa_authenticate(200, 100, zone.expected_nonce(), 5).established());
    check_consistent(zone);
  }

  SUBCASE("wrong orbit class makes an intruder")
  {
    auto zone = VirtualZone::create(1, 1, sats, OrbitClass::LEO, JoinRules{{200}, {}});
    auto const r = zone.request_join({200, OrbitClass::MEO}, 3);
    CHECK_FALSE(r.admitted());
    CHECK(zone.members().size() == 3);
    CHECK(zone.intruders() == std::set<NodeId>{200});
    CHECK(zone.chain().height() == 2);
    // once an intruder, always refused
    CHECK_FALSE(zone.request_join({200, OrbitClass::LEO}, 3).admitted());
    CHECK(zone.chain().height() == 3);
    check_consistent(zone);
  }

  SUBCASE("unlisted candidate makes an intruder")
  {
    auto zone = VirtualZone::create(1, 1, sats, OrbitClass::LEO);
    CHECK_FALSE(zone.request_join({300, OrbitClass::LEO}, 1).admitted());
    CHECK(zone.intruders().contains(300));
  }

  SUBCASE("unanimity over every scripted vote pattern")
  {
    for (std::size_t n = 1; n <= 4; ++n)
    {
      auto const swarm = leo_swarm(n);
      for (unsigned pattern = 0; pattern < (1u << n); ++pattern)
      {
        JoinRules rules{{900}, {}};
        for (std::size_t i = 0; i < n; ++i)
        {
          rules.scripted_votes[{swarm[i].id, 900}] = ((pattern >> i) & 1u) != 0;
        }
        auto       zone     = VirtualZone::create(1, 1, swarm, OrbitClass::LEO, rules);
        auto const r        = zone.request_join({900, OrbitClass::LEO}, 1);
        bool const all_yes  = pattern == (1u << n) - 1;
        CAPTURE(n);
        CAPTURE(pattern);
        CHECK(r.admitted() == all_yes);
        CHECK(zone.is_member(900) == all_yes);
        CHECK(zone.intruders().contains(900) == !all_yes);
        std::size_t yes = 0;
        for (auto const &v : r.votes)
        {
          yes += v.approve ? 1 : 0;
        }
        CHECK(yes == static_cast<std::size_t>(__builtin_popcount(pattern)));
      }
    }
  }
}

TEST_CASE("zone_status")
{
  auto zone = VirtualZone::create(4, 1, leo_swarm(2), OrbitClass::LEO);
  auto s    = zone.status();
  CHECK(s.intruders.empty());
  CHECK(s.height == 1);
  CHECK(s.tip_nonce == zone.chain().genesis().header.nonce);

  zone.mfa_authenticate(100, 101, zone.expected_nonce(), 2);
  CHECK(zone.status().height == 2);

  zone.request_join({555, OrbitClass::LEO}, 3);
  s = zone.status();
  CHECK(s.intruders == std::vector<NodeId>{555});

  auto const text = format_zone_status(s);
  CHECK(text.rfind("zone=4\norbit=leo\nmaster=1\nmembers=100:1,101:2\nintruders=555\nheight=3\n", 0) == 0);
}

TEST_CASE("replay rejects foreign chains")
{
  auto zone   = VirtualZone::create(4, 1, leo_swarm(2), OrbitClass::LEO);
  auto blocks = zone.chain().blocks();
  blocks[0].transactions.front().payload.back() ^= 1;
  CHECK_THROWS(VirtualZone::replay(blocks));
  CHECK_THROWS_AS(VirtualZone::replay({}), std::invalid_argument);
}

TEST_CASE("directory authenticates against the responder's zone")
{
  ZoneDirectory dir;
  dir.add(VirtualZone::create(1, 1, leo_swarm(2, 100), OrbitClass::LEO));
  dir.add(VirtualZone::create(2, 2, leo_swarm(2, 200), OrbitClass::LEO));
  CHECK_THROWS_AS(dir.add(VirtualZone::create(3, 3, leo_swarm(1, 100), OrbitClass::LEO)), std::invalid_argument);

  auto const nonce_b = dir.at(2).expected_nonce();
  CHECK(dir.authenticate(100, 200, nonce_b, 1).outcome == MfaOutcome::NotMember);
  CHECK(dir.authenticate(201, 200, nonce_b, 1).established());
  CHECK(dir.zone_of(101)->zone_id() == 1);
  CHECK(dir.zone_of(7) == nullptr);
  CHECK_THROWS_AS(dir.authenticate(100, 7, 0, 1), NotAMember);
}
