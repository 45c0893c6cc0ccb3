#pragma once

#include "orbitledger/ledger.hpp"
#include "orbitledger/tokens.hpp"

#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace orbitledger::zones {

/// Zone chains are cheap to extend: one leading zero nibble.
inline constexpr unsigned ZONE_DIFFICULTY = 1;

struct SatelliteInfo
{
  NodeId     id{0};
  OrbitClass orbit{OrbitClass::LEO};
};

class OrbitMismatch : public std::invalid_argument
{
public:
  explicit OrbitMismatch(NodeId satellite);
};

class EmptySwarm : public std::invalid_argument
{
public:
  EmptySwarm();
};

class AlreadyMember : public std::invalid_argument
{
public:
  explicit AlreadyMember(NodeId satellite);
};

class NotAMember : public std::invalid_argument
{
public:
  explicit NotAMember(NodeId satellite);
};

/// Each member approves a candidate that matches the zone orbit, is on the
/// authorized roster and is not a known intruder. A scripted vote can only
/// turn an approval into a rejection.
struct JoinRules
{
  std::set<NodeId>                          authorized;
  std::map<std::pair<NodeId, NodeId>, bool> scripted_votes;  // (member, candidate)
};

enum class MfaOutcome
{
  Established,
  NotMember,
  WrongNonce,
};

std::string_view to_string(MfaOutcome outcome);

struct MfaResult
{
  MfaOutcome    outcome{MfaOutcome::WrongNonce};
  std::uint64_t session_id{0};  // 0 unless established

  bool established() const noexcept
  {
    return outcome == MfaOutcome::Established;
  }
};

struct Vote
{
  NodeId member{0};
  bool   approve{false};
};

struct JoinResult
{
  tokens::JoinVerdict verdict{tokens::JoinVerdict::Intruder};
  std::uint64_t       virtual_id{0};
  std::vector<Vote>   votes;

  bool admitted() const noexcept
  {
    return verdict == tokens::JoinVerdict::Admitted;
  }
};

struct ZoneStatus
{
  std::uint64_t                     zone_id{0};
  OrbitClass                        orbit{OrbitClass::LEO};
  NodeId                            master{0};
  std::vector<tokens::MemberRecord> members;  // ascending satellite id
  std::vector<NodeId>               intruders;
  std::size_t                       height{0};
  std::uint64_t                     tip_nonce{0};
  Digest                            tip_hash{};
};

/// key=value lines in a fixed order: zone, orbit, master, members, intruders,
/// height, tip_nonce, tip_hash.
std::string format_zone_status(ZoneStatus const &status);

class VirtualZone
{
public:
  /// Issues virtual ids 1..n in the given order and mines the registration
  /// genesis. Throws EmptySwarm or OrbitMismatch.
  static VirtualZone create(std::uint64_t zone_id, NodeId master, std::span<SatelliteInfo const> satellites,
                            OrbitClass orbit, JoinRules rules = {}, Tick now = 0);

  /// Rebuilds membership, intruders and sessions from a zone chain export.
  /// Throws std::invalid_argument if the chain is invalid or not a zone chain.
  static VirtualZone replay(std::span<ledger::Block const> blocks);

  std::uint64_t zone_id() const noexcept
  {
    return zone_id_;
  }
  OrbitClass orbit() const noexcept
  {
    return orbit_;
  }
  NodeId master() const noexcept
  {
    return master_;
  }
  ledger::Chain const &chain() const noexcept
  {
    return chain_;
  }
  std::map<NodeId, std::uint64_t> const &members() const noexcept
  {
    return members_;
  }
  std::set<NodeId> const &intruders() const noexcept
  {
    return intruders_;
  }
  JoinRules &rules() noexcept
  {
    return rules_;
  }

  bool is_member(NodeId satellite) const
  {
    return members_.contains(satellite);
  }

  /// The challenge value: the zone chain tip's header nonce.
  std::uint64_t expected_nonce() const noexcept
  {
    return chain_.tip().header.nonce;
  }

  /// `responder` challenges `initiator`. Established iff the initiator is a
  /// member and presents the current tip nonce; a session block is then mined.
  /// Throws NotAMember if the responder is outside the zone.
  MfaResult mfa_authenticate(NodeId initiator, NodeId responder, std::uint64_t presented_nonce, Tick now);

  /// Every member votes; admission needs all of them. Throws AlreadyMember.
  JoinResult request_join(SatelliteInfo candidate, Tick now);

  /// Mines a block holding one master-issued token onto the zone chain.
  ledger::Block const &append_token(tokens::SpaceToken const &token, Tick now);

  ZoneStatus status() const;

private:
  VirtualZone(ledger::Chain chain, JoinRules rules);
  VirtualZone with_rules(JoinRules rules) &&;
  void        apply(tokens::SpaceToken const &token);

  std::uint64_t                   zone_id_{0};
  OrbitClass                      orbit_{OrbitClass::LEO};
  NodeId                          master_{0};
  ledger::Chain                   chain_;
  JoinRules                       rules_;
  std::map<NodeId, std::uint64_t> members_;
  std::set<NodeId>                intruders_;
  std::set<std::uint64_t>         used_nonces_;
  std::uint64_t                   next_virtual_id_{1};
  std::uint64_t                   next_session_{1};
};

/// All zones of a scenario, with lookup by member satellite.
class ZoneDirectory
{
public:
  VirtualZone &add(VirtualZone zone);

  VirtualZone       &at(std::uint64_t zone_id);
  VirtualZone const &at(std::uint64_t zone_id) const;
  bool               contains(std::uint64_t zone_id) const
  {
    return zones_.contains(zone_id);
  }

  /// Zone holding `satellite` as a member, or nullptr.
  VirtualZone *zone_of(NodeId satellite);

  /// Authenticates against the responder's zone chain, which also covers
  /// initiators from other zones (they fail the membership factor).
  MfaResult authenticate(NodeId initiator, NodeId responder, std::uint64_t presented_nonce, Tick now);

  std::map<std::uint64_t, VirtualZone> const &all() const noexcept
  {
    return zones_;
  }

private:
  std::map<std::uint64_t, VirtualZone> zones_;
};

}  // namespace orbitledger::zones
