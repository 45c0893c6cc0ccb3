#pragma once

#include "orbitledger/debris.hpp"
#include "orbitledger/mission.hpp"
#include "orbitledger/sim.hpp"
#include "orbitledger/tdrs.hpp"
#include "orbitledger/zones.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orbitledger::scenario {

/// Config error with the offending line (1-based, 0 if not tied to a line)
/// and field name (empty if the whole line is at fault).
class ScenarioError : public std::runtime_error
{
public:
  ScenarioError(std::size_t line, std::string field, std::string const &message);

  std::size_t line() const noexcept
  {
    return line_;
  }
  std::string const &field() const noexcept
  {
    return field_;
  }

private:
  std::size_t line_;
  std::string field_;
};

struct ZoneSpec
{
  std::uint64_t       id{0};
  NodeId              master{0};
  OrbitClass          orbit{OrbitClass::LEO};
  std::vector<NodeId> members;
  zones::JoinRules    rules;
  std::size_t         line{0};
};

struct DebrisSpec
{
  Tick                 at{0};
  debris::DebrisObject object;
  std::uint64_t        zone{0};
  NodeId               sensor{0};
  double               threshold_km{0.0};
  std::size_t          line{0};
};

struct QuerySpec
{
  Tick              at{0};
  tdrs::ImageQuery  query;
  std::size_t       line{0};
};

struct Mine
{
  NodeId node{0};
};

/// A decision token submitted to the global chain.
struct SubmitTx
{
  NodeId        from{0};
  NodeId        via{0};
  std::uint64_t fee{0};
  std::string   text;
};

struct Read
{
  NodeId             reader{0};
  NodeId             via{0};
  sim::ChainSelector selector;
};

struct Mfa
{
  std::uint64_t zone{0};
  NodeId        initiator{0};
  NodeId        responder{0};
  /// nullopt presents the zone's current tip nonce.
  std::optional<std::uint64_t> nonce;
};

struct Join
{
  std::uint64_t zone{0};
  NodeId        satellite{0};
};

struct SubmitPhase
{
  std::uint8_t phase{0};
  NodeId       submitter{0};
  /// Required field left out of the record, for rejection fixtures.
  std::string omit;
};

struct ReleaseFunds
{
  std::uint8_t phase{0};
};

struct Uplink
{};

using ActionBody = std::variant<Mine, SubmitTx, Read, Mfa, Join, SubmitPhase, ReleaseFunds, Uplink>;

struct Action
{
  Tick        at{0};
  NodeId      node{0};  // node the log line is attributed to
  ActionBody  body;
  std::size_t line{0};
};

struct Scenario
{
  sim::WorldConfig                      world;
  Tick                                  horizon{0};
  std::vector<sim::NodeSpec>            nodes;
  std::vector<ZoneSpec>                 zones;
  std::optional<mission::ConsortiumConfig> mission;
  std::optional<tdrs::TdrsConfig>       tdrs;
  std::vector<DebrisSpec>               debris;
  std::vector<QuerySpec>                queries;
  std::vector<Action>                   actions;
};

/// Parses the sectioned `directive key=value ...` format and checks every
/// referenced id. Throws ScenarioError.
Scenario parse_scenario(std::string_view text);

/// Reads and parses a file. Throws ScenarioError (line 0 if unreadable).
Scenario load_scenario(std::filesystem::path const &path);

struct RunOutcome
{
  /// Artifact file name -> content, in name order.
  std::map<std::string, std::string> files;
  /// Runtime invariant violations; empty on success.
  std::vector<std::string> violations;

  bool ok() const noexcept
  {
    return violations.empty();
  }
};

/// Runs the scenario to its horizon and then to quiescence, and checks the
/// end-of-run invariants.
RunOutcome run_scenario(Scenario const &scenario);

void write_artifacts(RunOutcome const &outcome, std::filesystem::path const &dir);

}  // namespace orbitledger::scenario
