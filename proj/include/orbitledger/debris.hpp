#pragma once

#include "orbitledger/ledger.hpp"
#include "orbitledger/orbital.hpp"
#include "orbitledger/tokens.hpp"
#include "orbitledger/zones.hpp"

#include <map>
#include <stdexcept>

namespace orbitledger::debris {

struct DebrisObject
{
  std::uint64_t  id{0};
  KinematicState state;
  double         radius_km{0.0};
};

struct Approach
{
  double t_star{0.0};  // seconds from now, never negative
  double d_star{0.0};  // km
};

/// Straight-line closest approach of two objects from their current states.
Approach closest_approach(KinematicState const &satellite, KinematicState const &debris);

using MemberStates = std::map<NodeId, KinematicState>;

struct PlannerConfig
{
  double   base_magnitude{0.01};  // km/s
  unsigned max_doublings{4};
};

struct ManeuverPlan
{
  std::uint64_t                      zone_id{0};
  std::uint64_t                      debris_id{0};
  Tick                               planning_tick{0};
  double                             threshold_km{0.0};
  std::vector<tokens::VelocityDelta> deltas;  // one per member, ascending id

  bool all_zero() const;
  tokens::ManeuverToken token() const;
};

class Unavoidable : public std::runtime_error
{
public:
  Unavoidable(NodeId satellite, double best_km);

  NodeId satellite() const noexcept
  {
    return satellite_;
  }

private:
  NodeId satellite_;
};

class InvalidDebris : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Wraps a member's sighting as a debris asset transaction for the zone
/// master. Throws zones::NotAMember or InvalidDebris.
ledger::Transaction report_debris(zones::VirtualZone const &zone, NodeId sensor, DebrisObject const &debris,
                                  Tick now);

/// Drops repeated reports of one debris object inside a tick window.
class DebrisTracker
{
public:
  explicit DebrisTracker(Tick window = 10)
    : window_{window}
  {}

  /// True for the first report of `debris_id` in the window.
  bool accept(std::uint64_t debris_id, Tick tick);

private:
  Tick                          window_;
  std::map<std::uint64_t, Tick> last_accepted_;
};

/// Every member below `threshold_km` gets a cross-track burn that pushes its
/// miss vector outward; the burn doubles until the member clears. Throws
/// Unavoidable when the largest burn is still short.
ManeuverPlan plan_maneuvers(std::uint64_t zone_id, DebrisObject const &debris, MemberStates const &members,
                            double threshold_km, Tick now, PlannerConfig const &config = {});

/// Mines the plan's maneuver token onto the zone chain.
ledger::Block const &commit_maneuver_plan(zones::VirtualZone &zone, ManeuverPlan const &plan, Tick now);

/// Member-side handling of a delivered zone block: verify it against its
/// parent, then add every listed delta to the matching state. Returns the
/// rejection reason and leaves states untouched if verification fails.
ledger::VerifyResult apply_maneuver_block(ledger::Block const &block, ledger::Block const &parent,
                                          MemberStates &states);

}  // namespace orbitledger::debris
