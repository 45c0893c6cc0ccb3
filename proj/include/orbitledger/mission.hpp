#pragma once

#include "orbitledger/ledger.hpp"
#include "orbitledger/tokens.hpp"

#include <boost/rational.hpp>

#include <array>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace orbitledger::mission {

inline constexpr std::uint8_t PHASE_COUNT = 6;

enum class Phase : std::uint8_t
{
  MissionAnalysisIdentification = 1,
  FeasibilityStudy,
  PreliminaryDesign,
  DetailedDesign,
  QualificationProduction,
  LaunchingOperating,
};

/// "none" for 0, the phase name for 1..6.
std::string_view phase_name(std::uint8_t ordinal);

/// Field keys each phase record must carry with nonempty values.
std::vector<std::string_view> required_fields(std::uint8_t ordinal);

struct PhaseRecord
{
  std::uint8_t                       phase{0};
  NodeId                             submitter{0};
  std::map<std::string, std::string> fields;
};

/// Canonical bytes of a record (fields in key order); its digest goes on chain.
Bytes  encode_record(PhaseRecord const &record);
Digest record_digest(PhaseRecord const &record);

using Fraction = boost::rational<std::int64_t>;

struct ConsortiumConfig
{
  std::set<NodeId>                 members;
  std::vector<NodeId>              miners;  // mining rotates in this order
  std::uint64_t                    budget{0};
  std::array<Fraction, PHASE_COUNT> fractions{};
  NodeId                           beneficiary{0};
  unsigned                         difficulty{1};

  static std::array<Fraction, PHASE_COUNT> uniform_fractions();

  /// Throws InvalidConfig unless members and miners are nonempty, each fraction
  /// lies in [0, 1] and they sum to exactly 1.
  void validate() const;
};

class InvalidConfig : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class UnauthorizedSubmitter : public std::runtime_error
{
public:
  explicit UnauthorizedSubmitter(NodeId submitter);
};

class DuplicatePhase : public std::runtime_error
{
public:
  explicit DuplicatePhase(std::uint8_t phase);
};

class OutOfOrder : public std::runtime_error
{
public:
  OutOfOrder(std::uint8_t phase, std::uint8_t expected);
};

/// A miner refused the record: unknown phase ordinal or missing fields.
class RejectedByMiners : public std::runtime_error
{
public:
  RejectedByMiners(NodeId miner, std::string const &why);
};

class PhaseNotCommitted : public std::runtime_error
{
public:
  explicit PhaseNotCommitted(std::uint8_t phase);
};

class AlreadyReleased : public std::runtime_error
{
public:
  explicit AlreadyReleased(std::uint8_t phase);
};

struct Release
{
  std::uint8_t  phase{0};
  std::uint64_t amount{0};
  std::size_t   block{0};
};

struct LifecycleStatus
{
  std::uint8_t                         current_phase{0};
  std::uint64_t                        released{0};
  std::uint64_t                        budget{0};
  std::size_t                          height{0};
  std::map<std::uint8_t, std::size_t>  phase_blocks;  // phase -> block index
  std::vector<Release>                 releases;
};

/// key=value lines in a fixed order: phase, phase_name, released, budget,
/// height, phase_blocks, releases.
std::string format_lifecycle_status(LifecycleStatus const &status);

/// floor(budget * (f1 + ... + fk)): cumulative entitlement after phase k.
std::uint64_t cumulative_entitlement(ConsortiumConfig const &config, std::uint8_t phase);

class MissionLedger
{
public:
  /// Mines a genesis holding the consortium charter. Throws InvalidConfig.
  explicit MissionLedger(ConsortiumConfig config, Tick now = 0);

  /// Rebuilds state (config included) from a chain export. Throws
  /// std::invalid_argument for chains that are invalid or not mission chains.
  static MissionLedger replay(std::span<ledger::Block const> blocks);

  /// Appends exactly one block for the next phase, mined by the next miner in
  /// rotation. Throws UnauthorizedSubmitter, DuplicatePhase, OutOfOrder or
  /// RejectedByMiners and leaves the chain unchanged on any error.
  ledger::Block const &submit_phase(PhaseRecord const &record, Tick now);

  /// Releases the phase's share (the increment in cumulative entitlement) in
  /// its own block. A zero increment records an audit decision instead of a
  /// funding token. Throws PhaseNotCommitted or AlreadyReleased.
  Release release_funds(std::uint8_t phase, Tick now);

  ConsortiumConfig const &config() const noexcept
  {
    return config_;
  }
  ledger::Chain const &chain() const noexcept
  {
    return chain_;
  }
  std::uint8_t committed_phase() const noexcept
  {
    return status_.current_phase;
  }
  LifecycleStatus const &status() const noexcept
  {
    return status_;
  }

  /// Miner for the block at `index` (index >= 1).
  NodeId miner_for(std::size_t index) const;

private:
  MissionLedger(ConsortiumConfig config, ledger::Chain chain);
  ledger::Block const &mine(std::vector<ledger::Transaction> txs, Tick now);
  void                 apply(ledger::Block const &block);

  ConsortiumConfig config_;
  ledger::Chain    chain_;
  LifecycleStatus  status_;
};

/// Charter text stored in the genesis decision token, and its parser.
std::string      charter_text(ConsortiumConfig const &config);
ConsortiumConfig parse_charter(std::string_view text);

}  // namespace orbitledger::mission
