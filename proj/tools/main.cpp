// orbitledger: scenario runner and chain inspection tool.

#include "orbitledger/chain_io.hpp"
#include "orbitledger/mission.hpp"
#include "orbitledger/scenario.hpp"
#include "orbitledger/sha256.hpp"
#include "orbitledger/zones.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace orbitledger;

namespace {

constexpr int EXIT_OK        = 0;
constexpr int EXIT_VIOLATION = 1;
constexpr int EXIT_CONFIG    = 2;

void setup_logging()
{
  auto logger = spdlog::stderr_color_mt("orbitledger");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (char const *env = std::getenv("ORBITLEDGER_LOG"))
  {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string vec_text(Vec3 const &v)
{
  std::ostringstream out;
  out << v.x << ',' << v.y << ',' << v.z;
  return out.str();
}

std::string describe(tokens::SpaceToken const &token)
{
  using namespace tokens;
  std::ostringstream out;
  out << to_string(kind_of(token));
  std::visit(Overloaded{
                 [&](UserRequestToken const &t) {
                   out << " query=" << t.query_id << " requester=" << t.requester << " locations=" << t.locations.size()
                       << " timeframes=" << t.timeframes.size();
                 },
                 [&](TransactionSessionToken const &t) {
                   out << " session=" << t.session_id << " initiator=" << t.initiator << " responder=" << t.responder
                       << " meta=" << t.uplink_metadata;
                 },
                 [&](UplinkToken const &t) {
                   out << " ground=" << t.ground_station << " tdrs=" << t.tdrs << " command=" << to_hex(t.command);
                 },
                 [&](DownlinkFeedbackToken const &t) {
                   out << " query=" << t.query_id << " image=" << to_hex(t.image_digest) << " downlink=" << t.downlink_tick
                       << " start=" << t.start_tick << " completion=" << t.completion_tick << " feedback=" << t.feedback;
                 },
                 [&](OrbitalAssetToken const &t) {
                   out << " asset=" << to_string(t.asset_kind) << " id=" << t.asset_id << " owner=" << t.owner
                       << " label=" << t.label << " pos=" << vec_text(t.state.position)
                       << " vel=" << vec_text(t.state.velocity) << " size_km=" << t.size_km;
                 },
                 [&](ManeuverToken const &t) {
                   out << " zone=" << t.zone_id << " debris=" << t.debris_id << " planned=" << t.planning_tick
                       << " threshold_km=" << t.threshold_km;
                   for (auto const &d : t.deltas)
                   {
                     out << " dv[" << d.satellite << "]=" << vec_text(d.delta);
                   }
                 },
                 [&](MissionPhaseToken const &t) {
                   out << " phase=" << int{t.phase} << " submitter=" << t.submitter
                       << " digest=" << to_hex(t.payload_digest);
                 },
                 [&](DecisionToken const &t) { out << " source=" << t.source_contract << " text=\"" << t.text << '"'; },
                 [&](FundingToken const &t) {
                   out << " amount=" << t.amount << " beneficiary=" << t.beneficiary
                       << " phase=" << int{t.milestone_phase};
                 },
                 [&](ZoneRegistrationToken const &t) {
                   out << " zone=" << t.zone_id << " orbit=" << to_string(t.orbit) << " master=" << t.master
                       << " members=";
                   for (std::size_t i = 0; i < t.members.size(); ++i)
                   {
                     out << (i ? "," : "") << t.members[i].satellite << ':' << t.members[i].virtual_id;
                   }
                 },
                 [&](ZoneMembershipToken const &t) {
                   out << " zone=" << t.zone_id << " candidate=" << t.candidate
                       << " verdict=" << (t.verdict == JoinVerdict::Admitted ? "admitted" : "intruder")
                       << " vid=" << t.virtual_id;
                 },
             },
             token);
  return out.str();
}

void print_block(ledger::Block const &block)
{
  auto const &h = block.header;
  std::cout << "block " << h.index << "\n"
            << "  hash       " << to_hex(block.hash()) << "\n"
            << "  parent     " << to_hex(h.parent_hash) << "\n"
            << "  tx_digest  " << to_hex(h.tx_digest) << "\n"
            << "  timestamp  " << h.timestamp << "\n"
            << "  difficulty " << h.difficulty << "\n"
            << "  nonce      " << h.nonce << "\n"
            << "  txs        " << block.transactions.size() << "\n";
  for (auto const &tx : block.transactions)
  {
    std::cout << "  tx " << to_hex(tx.tx_id) << " issuer=" << tx.issuer << " fee=" << tx.fee << " ts=" << tx.timestamp
              << "\n";
    if (auto token = tokens::token_of(tx))
    {
      std::cout << "     token " << to_hex(sha256(tx.payload)) << " " << describe(*token) << "\n";
    }
    else
    {
      std::cout << "     payload " << tx.payload.size() << " bytes (not a token)\n";
    }
  }
}

int cmd_run(std::string const &path, std::optional<std::uint64_t> seed, std::string const &out)
{
  scenario::Scenario sc;
  try
  {
    sc = scenario::load_scenario(path);
  }
  catch (scenario::ScenarioError const &e)
  {
    std::cerr << path << ": " << e.what() << "\n";
    return EXIT_CONFIG;
  }
  if (seed)
  {
    sc.world.seed = *seed;
  }
  spdlog::info("running {} with seed {} to tick {}", path, sc.world.seed, sc.horizon);
  auto const started = std::chrono::steady_clock::now();
  auto const outcome = scenario::run_scenario(sc);
  spdlog::info("run finished in {} ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                                            std::chrono::steady_clock::now() - started)
                                            .count());
  try
  {
    scenario::write_artifacts(outcome, out);
  }
  catch (std::exception const &e)
  {
    std::cerr << e.what() << "\n";
    return EXIT_CONFIG;
  }
  for (auto const &[name, content] : outcome.files)
  {
    spdlog::debug("wrote {} ({} bytes)", name, content.size());
  }
  for (auto const &v : outcome.violations)
  {
    std::cerr << "violation: " << v << "\n";
  }
  std::cout << (outcome.ok() ? "ok" : "violation") << "\n";
  return outcome.ok() ? EXIT_OK : EXIT_VIOLATION;
}

/// Loads a chain export, reporting format errors on stderr.
std::optional<std::vector<ledger::Block>> load_chain(std::string const &path)
{
  try
  {
    return ledger::read_chain_file(path);
  }
  catch (ledger::ChainFormatError const &e)
  {
    std::cerr << path << ":" << e.line() << ": " << e.what() << "\n";
  }
  catch (std::exception const &e)
  {
    std::cerr << path << ": " << e.what() << "\n";
  }
  return std::nullopt;
}

int cmd_validate(std::string const &path, unsigned difficulty)
{
  auto blocks = load_chain(path);
  if (!blocks)
  {
    return EXIT_CONFIG;
  }
  auto const report = ledger::validate_chain(*blocks, difficulty);
  if (report.valid())
  {
    std::cout << "valid\n";
    return EXIT_OK;
  }
  std::cout << "invalid index=" << *report.first_invalid << " reason=" << ledger::to_string(*report.reason) << "\n";
  return EXIT_VIOLATION;
}

int cmd_inspect(std::string const &path, std::optional<std::size_t> index, std::optional<std::string> token_hex)
{
  auto blocks = load_chain(path);
  if (!blocks)
  {
    return EXIT_CONFIG;
  }
  if (index)
  {
    if (*index >= blocks->size())
    {
      std::cerr << "block " << *index << " out of range (height " << blocks->size() << ")\n";
      return EXIT_CONFIG;
    }
    print_block((*blocks)[*index]);
    return EXIT_OK;
  }
  if (token_hex)
  {
    Digest wanted;
    try
    {
      wanted = digest_from_hex(*token_hex);
    }
    catch (std::exception const &)
    {
      std::cerr << "--token expects 64 hex characters\n";
      return EXIT_CONFIG;
    }
    for (auto const &block : *blocks)
    {
      for (auto const &tx : block.transactions)
      {
        if (sha256(tx.payload) == wanted || tx.tx_id == wanted)
        {
          auto const token = tokens::token_of(tx);
          std::cout << "block=" << block.header.index << " tx=" << to_hex(tx.tx_id) << "\n"
                    << (token ? describe(*token) : std::string{"not a token"}) << "\n";
          return EXIT_OK;
        }
      }
    }
    std::cout << "not found\n";
    return EXIT_VIOLATION;
  }
  for (auto const &block : *blocks)
  {
    std::cout << block.header.index << " " << to_hex(block.hash()) << " txs=" << block.transactions.size();
    for (auto const &tx : block.transactions)
    {
      auto const token = tokens::token_of(tx);
      std::cout << " " << (token ? tokens::to_string(tokens::kind_of(*token)) : "raw");
    }
    std::cout << "\n";
  }
  return EXIT_OK;
}

int cmd_mine_bench(unsigned difficulty, std::size_t trials)
{
  if (difficulty > ledger::MAX_DIFFICULTY || trials == 0)
  {
    std::cerr << "difficulty must be at most " << ledger::MAX_DIFFICULTY << " and trials positive\n";
    return EXIT_CONFIG;
  }
  std::uint64_t lo = UINT64_MAX, hi = 0;
  double        total = 0;
  auto const    started = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < trials; ++i)
  {
    ledger::BlockHeader header;
    header.index       = i + 1;
    ByteWriter seed;
    seed.put_string("mine-bench").put_u64(i);
    header.parent_hash = sha256(seed.bytes());
    header.tx_digest   = sha256(header.parent_hash);
    header.difficulty  = difficulty;
    auto const attempts = ledger::search_nonce(header);
    if (!ledger::meets_difficulty(ledger::block_hash(header), difficulty))
    {
      std::cerr << "trial " << i << " produced a hash without the target prefix\n";
      return EXIT_VIOLATION;
    }
    lo = std::min(lo, attempts);
    hi = std::max(hi, attempts);
    total += static_cast<double>(attempts);
    spdlog::debug("trial {} nonce {} attempts {}", i, header.nonce, attempts);
  }
  auto const secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::cout << "difficulty=" << difficulty << " trials=" << trials << " min=" << lo << " mean=" << total / trials
            << " max=" << hi << " expected=" << std::pow(16.0, difficulty) << " seconds=" << secs << "\n";
  return EXIT_OK;
}

int cmd_zone_status(std::string const &path)
{
  auto blocks = load_chain(path);
  if (!blocks)
  {
    return EXIT_CONFIG;
  }
  try
  {
    std::cout << zones::format_zone_status(zones::VirtualZone::replay(*blocks).status());
  }
  catch (std::exception const &e)
  {
    std::cerr << path << ": " << e.what() << "\n";
    return EXIT_VIOLATION;
  }
  return EXIT_OK;
}

int cmd_lifecycle_status(std::string const &path)
{
  auto blocks = load_chain(path);
  if (!blocks)
  {
    return EXIT_CONFIG;
  }
  try
  {
    std::cout << mission::format_lifecycle_status(mission::MissionLedger::replay(*blocks).status());
  }
  catch (std::exception const &e)
  {
    std::cerr << path << ": " << e.what() << "\n";
    return EXIT_VIOLATION;
  }
  return EXIT_OK;
}

}  // namespace

int main(int argc, char **argv)
{
  setup_logging();

  CLI::App app{"orbitledger: blockchain-coordinated satellite network simulator"};
  app.require_subcommand(1);

  std::string                  scenario_path, out_dir, chain_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t>   block_index;
  std::optional<std::string>   token_hex;
  unsigned                     difficulty = 1;
  std::size_t                  trials     = 200;

  auto *run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Artifact directory")->required();

  auto *validate = app.add_subcommand("validate", "Audit a chain export");
  validate->add_option("--chain", chain_path, "Chain export")->required();
  validate->add_option("--difficulty", difficulty, "Leading zero hex digits")->required();

  auto *inspect = app.add_subcommand("inspect", "Decode blocks and tokens of a chain export");
  inspect->add_option("--chain", chain_path, "Chain export")->required();
  auto *block_opt = inspect->add_option("--block", block_index, "Block index");
  inspect->add_option("--token", token_hex, "Token id or tx id (hex)")->excludes(block_opt);

  auto *bench = app.add_subcommand("mine-bench", "Nonce search statistics");
  bench->add_option("--difficulty", difficulty, "Leading zero hex digits")->required();
  bench->add_option("--trials", trials, "Blocks to mine");

  auto *zone_status = app.add_subcommand("zone-status", "Status report of a zone chain export");
  zone_status->add_option("--chain", chain_path, "Zone chain export")->required();

  auto *lifecycle = app.add_subcommand("lifecycle-status", "Status report of a mission chain export");
  lifecycle->add_option("--chain", chain_path, "Mission chain export")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::ParseError const &e)
  {
    auto const code = app.exit(e);
    return code == 0 ? EXIT_OK : EXIT_CONFIG;
  }

  if (run->parsed())
  {
    return cmd_run(scenario_path, seed, out_dir);
  }
  if (validate->parsed())
  {
    return cmd_validate(chain_path, difficulty);
  }
  if (inspect->parsed())
  {
    return cmd_inspect(chain_path, block_index, token_hex);
  }
  if (bench->parsed())
  {
    return cmd_mine_bench(difficulty, trials);
  }
  if (zone_status->parsed())
  {
    return cmd_zone_status(chain_path);
  }
  return cmd_lifecycle_status(chain_path);
}
