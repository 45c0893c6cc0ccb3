#include "orbitledger/mission.hpp"

#include "orbitledger/sha256.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace orbitledger::mission {
namespace {

constexpr std::string_view CHARTER_PREFIX = "charter ";
constexpr std::string_view ZERO_RELEASE   = "release phase=";

bool valid_ordinal(std::uint8_t ordinal)
{
  return ordinal >= 1 && ordinal <= PHASE_COUNT;
}

std::string join_ids(auto const &ids)
{
  std::string out;
  for (auto id : ids)
  {
    if (!out.empty())
    {
      out += ',';
    }
    out += std::to_string(id);
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep)
{
  std::vector<std::string_view> parts;
  while (true)
  {
    auto const pos = text.find(sep);
    parts.push_back(text.substr(0, pos));
    if (pos == std::string_view::npos)
    {
      return parts;
    }
    text.remove_prefix(pos + 1);
  }
}

std::int64_t parse_int(std::string_view text)
{
  std::int64_t value = 0;
  auto const [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
  {
    throw InvalidConfig{"bad number '" + std::string{text} + "' in charter"};
  }
  return value;
}

}  // namespace

std::string_view phase_name(std::uint8_t ordinal)
{
  static constexpr std::array<std::string_view, PHASE_COUNT + 1> names{
      "none",
      "MissionAnalysisIdentification",
      "FeasibilityStudy",
      "PreliminaryDesign",
      "DetailedDesign",
      "QualificationProduction",
      "LaunchingOperating",
  };
  return ordinal <= PHASE_COUNT ? names[ordinal] : "unknown";
}

std::vector<std::string_view> required_fields(std::uint8_t ordinal)
{
  switch (ordinal)
  {
  case 1:
    return {"requirements"};
  case 2:
    return {"cost_estimates"};
  case 3:
    return {"component_interfaces", "schedule"};
  case 4:
    return {"stm", "em"};
  case 5:
    return {"fm", "test_results"};
  case 6:
    return {"launch_control", "tracking_data"};
  default:
    return {};
  }
}

Bytes encode_record(PhaseRecord const &record)
{
  ByteWriter w;
  w.put_u8(record.phase).put_u64(record.submitter).put_count(record.fields.size());
  for (auto const &[key, value] : record.fields)
  {
    w.put_string(key).put_string(value);
  }
  return std::move(w).take();
}

Digest record_digest(PhaseRecord const &record)
{
  return sha256(encode_record(record));
}

std::array<Fraction, PHASE_COUNT> ConsortiumConfig::uniform_fractions()
{
  std::array<Fraction, PHASE_COUNT> f;
  f.fill(Fraction{1, PHASE_COUNT});
  return f;
}

void ConsortiumConfig::validate() const
{
  if (members.empty())
  {
    throw InvalidConfig{"consortium needs at least one member"};
  }
  if (miners.empty())
  {
    throw InvalidConfig{"consortium needs at least one miner"};
  }
  if (std::set<NodeId>{miners.begin(), miners.end()}.size() != miners.size())
  {
    throw InvalidConfig{"miner ids repeat"};
  }
  // Boost 1.74 recurses forever on rational-vs-integer comparisons under
  // C++20 rewritten operators, so every comparison uses Fraction operands.
  Fraction const zero{0};
  Fraction const one{1};
  Fraction       sum{0};
  for (auto const &f : fractions)
  {
    if (f < zero || f > one)
    {
      throw InvalidConfig{"release fractions must lie in [0, 1]"};
    }
    sum += f;
  }
  if (sum != one)
  {
    throw InvalidConfig{"release fractions must sum to exactly 1"};
  }
  if (difficulty > ledger::MAX_DIFFICULTY)
  {
    throw InvalidConfig{"difficulty exceeds 16"};
  }
  if (budget > static_cast<std::uint64_t>(INT64_MAX))
  {
    throw InvalidConfig{"budget too large"};
  }
}

std::uint64_t cumulative_entitlement(ConsortiumConfig const &config, std::uint8_t phase)
{
  Fraction share{0};
  for (std::uint8_t k = 0; k < phase && k < PHASE_COUNT; ++k)
  {
    share += config.fractions[k];
  }
  // floor(B * n / d) without forming B * n
  auto const n = static_cast<std::uint64_t>(share.numerator());
  auto const d = static_cast<std::uint64_t>(share.denominator());
  return (config.budget / d) * n + (config.budget % d) * n / d;
}

UnauthorizedSubmitter::UnauthorizedSubmitter(NodeId submitter)
  : std::runtime_error{"submitter " + std::to_string(submitter) + " is not a consortium member"}
{}

DuplicatePhase::DuplicatePhase(std::uint8_t phase)
  : std::runtime_error{"phase " + std::to_string(phase) + " is already committed"}
{}

OutOfOrder::OutOfOrder(std::uint8_t phase, std::uint8_t expected)
  : std::runtime_error{"phase " + std::to_string(phase) + " submitted while phase " + std::to_string(expected) +
                       " is next"}
{}

RejectedByMiners::RejectedByMiners(NodeId miner, std::string const &why)
  : std::runtime_error{"miner " + std::to_string(miner) + " rejected the record: " + why}
{}

PhaseNotCommitted::PhaseNotCommitted(std::uint8_t phase)
  : std::runtime_error{"phase " + std::to_string(phase) + " has no committed block"}
{}

AlreadyReleased::AlreadyReleased(std::uint8_t phase)
  : std::runtime_error{"funds for phase " + std::to_string(phase) + " were already released"}
{}

std::string charter_text(ConsortiumConfig const &config)
{
  std::string fractions;
  for (auto const &f : config.fractions)
  {
    if (!fractions.empty())
    {
      fractions += ',';
    }
    fractions += std::to_string(f.numerator()) + "/" + std::to_string(f.denominator());
  }
  return std::string{CHARTER_PREFIX} + "budget=" + std::to_string(config.budget) +
         " beneficiary=" + std::to_string(config.beneficiary) + " members=" + join_ids(config.members) +
         " miners=" + join_ids(config.miners) + " fractions=" + fractions;
}

ConsortiumConfig parse_charter(std::string_view text)
{
  if (!text.starts_with(CHARTER_PREFIX))
  {
    throw InvalidConfig{"not a consortium charter"};
  }
  text.remove_prefix(CHARTER_PREFIX.size());

  ConsortiumConfig config;
  for (auto item : split(text, ' '))
  {
    auto const eq = item.find('=');
    if (eq == std::string_view::npos)
    {
      throw InvalidConfig{"malformed charter item '" + std::string{item} + "'"};
    }
    auto const key   = item.substr(0, eq);
    auto const value = item.substr(eq + 1);
    if (key == "budget")
    {
      config.budget = static_cast<std::uint64_t>(parse_int(value));
    }
    else if (key == "beneficiary")
    {
      config.beneficiary = static_cast<NodeId>(parse_int(value));
    }
    else if (key == "members")
    {
      for (auto id : split(value, ','))
      {
        config.members.insert(static_cast<NodeId>(parse_int(id)));
      }
    }
    else if (key == "miners")
    {
      for (auto id : split(value, ','))
      {
        config.miners.push_back(static_cast<NodeId>(parse_int(id)));
      }
    }
    else if (key == "fractions")
    {
      auto const parts = split(value, ',');
      if (parts.size() != PHASE_COUNT)
      {
        throw InvalidConfig{"charter needs six fractions"};
      }
      for (std::size_t k = 0; k < PHASE_COUNT; ++k)
      {
        auto const slash = parts[k].find('/');
        if (slash == std::string_view::npos)
        {
          throw InvalidConfig{"fraction without '/'"};
        }
        auto const den = parse_int(parts[k].substr(slash + 1));
        if (den <= 0)
        {
          throw InvalidConfig{"fraction denominator must be positive"};
        }
        config.fractions[k] = Fraction{parse_int(parts[k].substr(0, slash)), den};
      }
    }
    else
    {
      throw InvalidConfig{"unknown charter key '" + std::string{key} + "'"};
    }
  }
  return config;
}

std::string format_lifecycle_status(LifecycleStatus const &status)
{
  std::string phases;
  for (auto const &[phase, block] : status.phase_blocks)
  {
    if (!phases.empty())
    {
      phases += ',';
    }
    phases += std::to_string(phase) + ":" + std::to_string(block);
  }
  std::string releases;
  for (auto const &r : status.releases)
  {
    if (!releases.empty())
    {
      releases += ',';
    }
    releases += std::to_string(r.phase) + ":" + std::to_string(r.amount) + "@" + std::to_string(r.block);
  }
  std::ostringstream out;
  out << "phase=" << static_cast<unsigned>(status.current_phase) << '\n'
      << "phase_name=" << phase_name(status.current_phase) << '\n'
      << "released=" << status.released << '\n'
      << "budget=" << status.budget << '\n'
      << "height=" << status.height << '\n'
      << "phase_blocks=" << phases << '\n'
      << "releases=" << releases << '\n';
  return out.str();
}

MissionLedger::MissionLedger(ConsortiumConfig config, ledger::Chain chain)
  : config_{std::move(config)}
  , chain_{std::move(chain)}
{
  status_.budget = config_.budget;
  status_.height = chain_.height();
}

MissionLedger::MissionLedger(ConsortiumConfig config, Tick now)
  : MissionLedger{config,
                  [&] {
                    config.validate();
                    auto charter = tokens::to_transaction(tokens::DecisionToken{charter_text(config), 0},
                                                          config.miners.front(), 0, now);
                    auto genesis = ledger::mine_genesis({std::move(charter)}, now, config.difficulty).block;
                    return ledger::Chain{std::move(genesis), config.difficulty};
                  }()}
{}

MissionLedger MissionLedger::replay(std::span<ledger::Block const> blocks)
{
  if (blocks.empty())
  {
    throw std::invalid_argument("mission chain is empty");
  }
  auto const &genesis = blocks.front();
  std::optional<tokens::SpaceToken> first;
  if (genesis.transactions.size() == 1)
  {
    first = tokens::token_of(genesis.transactions.front());
  }
  auto const *charter = first ? std::get_if<tokens::DecisionToken>(&*first) : nullptr;
  if (charter == nullptr)
  {
    throw std::invalid_argument("mission genesis must hold exactly one charter decision");
  }
  auto config       = parse_charter(charter->text);
  config.difficulty = genesis.header.difficulty;
  config.validate();

  MissionLedger mission{config, ledger::Chain::from_blocks(blocks, config.difficulty)};
  for (auto const &block : blocks.subspan(1))
  {
    mission.apply(block);
  }
  mission.status_.height = mission.chain_.height();
  return mission;
}

NodeId MissionLedger::miner_for(std::size_t index) const
{
  return config_.miners[(index - 1) % config_.miners.size()];
}

void MissionLedger::apply(ledger::Block const &block)
{
  auto const index = static_cast<std::size_t>(block.header.index);
  bool       attested = false;
  for (auto const &tx : block.transactions)
  {
    auto const token = tokens::token_of(tx);
    if (!token)
    {
      throw std::invalid_argument("mission block " + std::to_string(index) + " holds a non-token transaction");
    }
    if (auto const *p = std::get_if<tokens::MissionPhaseToken>(&*token))
    {
      if (p->phase != status_.current_phase + 1 || !config_.members.contains(p->submitter))
      {
        throw std::invalid_argument("mission block " + std::to_string(index) + " breaks phase order or authorization");
      }
      status_.current_phase = p->phase;
      status_.phase_blocks[p->phase] = index;
    }
    else if (auto const *f = std::get_if<tokens::FundingToken>(&*token))
    {
      status_.releases.push_back({f->milestone_phase, f->amount, index});
      status_.released += f->amount;
    }
    else if (auto const *d = std::get_if<tokens::DecisionToken>(&*token))
    {
      if (d->text.starts_with("attest "))
      {
        attested = attested || (tx.issuer == miner_for(index) && d->source_contract == tx.issuer);
      }
      else if (d->text.starts_with(ZERO_RELEASE))
      {
        auto const phase = static_cast<std::uint8_t>(parse_int(split(d->text.substr(ZERO_RELEASE.size()), ' ')[0]));
        status_.releases.push_back({phase, 0, index});
      }
    }
  }
  if (!attested)
  {
    throw std::invalid_argument("mission block " + std::to_string(index) + " lacks the rotating miner's attestation");
  }
}

ledger::Block const &MissionLedger::mine(std::vector<ledger::Transaction> txs, Tick now)
{
  auto const index = chain_.height();
  auto const miner = miner_for(index);
  txs.push_back(tokens::to_transaction(
      tokens::DecisionToken{"attest block=" + std::to_string(index) + " miner=" + std::to_string(miner), miner},
      miner, 0, now));
  for (auto &tx : txs)
  {
    if (!chain_.submit(std::move(tx)))
    {
      throw std::logic_error("mission transaction already committed");
    }
  }
  auto const &block = chain_.seal(now);
  apply(block);
  status_.height = chain_.height();
  return block;
}

ledger::Block const &MissionLedger::submit_phase(PhaseRecord const &record, Tick now)
{
  if (!config_.members.contains(record.submitter))
  {
    throw UnauthorizedSubmitter{record.submitter};
  }
  auto const current = status_.current_phase;
  if (valid_ordinal(record.phase) && record.phase <= current)
  {
    throw DuplicatePhase{record.phase};
  }
  if (valid_ordinal(record.phase) && record.phase != current + 1)
  {
    throw OutOfOrder{record.phase, static_cast<std::uint8_t>(current + 1)};
  }

  // Every miner runs the same schema check; the first refusal is reported.
  for (auto miner : config_.miners)
  {
    if (!valid_ordinal(record.phase))
    {
      throw RejectedByMiners{miner, "unknown phase ordinal " + std::to_string(record.phase)};
    }
    for (auto key : required_fields(record.phase))
    {
      auto it = record.fields.find(std::string{key});
      if (it == record.fields.end() || it->second.empty())
      {
        throw RejectedByMiners{miner, "missing field '" + std::string{key} + "'"};
      }
    }
  }

  tokens::MissionPhaseToken const token{record.phase, record_digest(record), record.submitter};
  return mine({tokens::to_transaction(token, record.submitter, 0, now)}, now);
}

Release MissionLedger::release_funds(std::uint8_t phase, Tick now)
{
  if (!valid_ordinal(phase) || phase > status_.current_phase)
  {
    throw PhaseNotCommitted{phase};
  }
  for (auto const &r : status_.releases)
  {
    if (r.phase == phase)
    {
      throw AlreadyReleased{phase};
    }
  }
  auto const amount = cumulative_entitlement(config_, phase) - cumulative_entitlement(config_, phase - 1);
  auto const issuer = miner_for(chain_.height());

  ledger::Transaction tx;
  if (amount > 0)
  {
    tx = tokens::to_transaction(tokens::FundingToken{amount, config_.beneficiary, phase}, issuer, 0, now);
  }
  else
  {
    tx = tokens::to_transaction(
        tokens::DecisionToken{std::string{ZERO_RELEASE} + std::to_string(phase) + " amount=0", issuer}, issuer, 0,
        now);
  }
  auto const &block = mine({std::move(tx)}, now);
  return {phase, amount, static_cast<std::size_t>(block.header.index)};
}

}  // namespace orbitledger::mission
