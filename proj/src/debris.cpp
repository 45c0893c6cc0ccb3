#include "orbitledger/debris.hpp"

#include <cmath>

namespace orbitledger::debris {
namespace {

void check_debris(DebrisObject const &debris)
{
  if (!debris.state.finite() || !std::isfinite(debris.radius_km) || debris.radius_km <= 0.0)
  {
    throw InvalidDebris{"debris " + std::to_string(debris.id) + " needs a finite state and positive radius"};
  }
}

// Unit vector along the miss vector's component orthogonal to the relative
// velocity. A dead-centre course has no such component, so fall back to +z,
// or +x when the relative velocity itself is along z.
Vec3 burn_direction(Vec3 const &r, Vec3 const &v, double t_star)
{
  Vec3 const   w  = r + v * t_star;
  double const vv = v.dot(v);
  Vec3 const   wp = vv > 0.0 ? w - v * (w.dot(v) / vv) : w;
  double const n  = wp.norm();
  if (n > 1e-12 * std::max(1.0, r.norm()))
  {
    return wp * (1.0 / n);
  }
  Vec3 const z{0.0, 0.0, 1.0};
  if (z.cross(v).norm() > 0.0 || vv == 0.0)
  {
    return z;
  }
  return {1.0, 0.0, 0.0};
}

}  // namespace

Approach closest_approach(KinematicState const &satellite, KinematicState const &debris)
{
  Vec3 const   r  = satellite.position - debris.position;
  Vec3 const   v  = satellite.velocity - debris.velocity;
  double const vv = v.dot(v);
  double const t  = vv > 0.0 ? std::max(0.0, -r.dot(v) / vv) : 0.0;
  return {t, (r + v * t).norm()};
}

Unavoidable::Unavoidable(NodeId satellite, double best_km)
  : std::runtime_error{"satellite " + std::to_string(satellite) + " cannot clear the threshold; best miss " +
                       std::to_string(best_km) + " km"}
  , satellite_{satellite}
{}

bool ManeuverPlan::all_zero() const
{
  for (auto const &d : deltas)
  {
    if (d.delta != Vec3{})
    {
      return false;
    }
  }
  return true;
}

tokens::ManeuverToken ManeuverPlan::token() const
{
  return {zone_id, debris_id, planning_tick, threshold_km, deltas};
}

ledger::Transaction report_debris(zones::VirtualZone const &zone, NodeId sensor, DebrisObject const &debris,
                                  Tick now)
{
  if (!zone.is_member(sensor))
  {
    throw zones::NotAMember{sensor};
  }
  check_debris(debris);
  tokens::OrbitalAssetToken const token{tokens::AssetKind::Debris, debris.id, sensor,
                                        "debris-" + std::to_string(debris.id), debris.state, debris.radius_km};
  return tokens::to_transaction(token, sensor, 0, now);
}

bool DebrisTracker::accept(std::uint64_t debris_id, Tick tick)
{
  auto it = last_accepted_.find(debris_id);
  if (it != last_accepted_.end() && tick < it->second + window_)
  {
    return false;
  }
  last_accepted_[debris_id] = tick;
  return true;
}

ManeuverPlan plan_maneuvers(std::uint64_t zone_id, DebrisObject const &debris, MemberStates const &members,
                            double threshold_km, Tick now, PlannerConfig const &config)
{
  check_debris(debris);
  if (!(threshold_km > 0.0) || !std::isfinite(threshold_km))
  {
    throw std::invalid_argument("threshold must be a positive distance");
  }
  if (!(config.base_magnitude > 0.0))
  {
    throw std::invalid_argument("burn magnitude must be positive");
  }

  ManeuverPlan plan{zone_id, debris.id, now, threshold_km, {}};
  for (auto const &[id, state] : members)
  {
    auto const approach = closest_approach(state, debris.state);
    if (approach.d_star >= threshold_km)
    {
      plan.deltas.push_back({id, Vec3{}});
      continue;
    }

    Vec3 const dir = burn_direction(state.position - debris.state.position,
                                    state.velocity - debris.state.velocity, approach.t_star);
    double     mu   = config.base_magnitude;
    double     best = approach.d_star;
    bool       done = false;
    for (unsigned k = 0; k <= config.max_doublings && !done; ++k, mu *= 2.0)
    {
      KinematicState trial = state;
      Vec3 const     delta = dir * mu;
      trial.velocity       = trial.velocity + delta;
      double const d       = closest_approach(trial, debris.state).d_star;
      best                 = std::max(best, d);
      if (d >= threshold_km)
      {
        plan.deltas.push_back({id, delta});
        done = true;
      }
    }
    if (!done)
    {
      throw Unavoidable{id, best};
    }
  }
  return plan;
}

ledger::Block const &commit_maneuver_plan(zones::VirtualZone &zone, ManeuverPlan const &plan, Tick now)
{
  return zone.append_token(plan.token(), now);
}

ledger::VerifyResult apply_maneuver_block(ledger::Block const &block, ledger::Block const &parent,
                                          MemberStates &states)
{
  auto result = ledger::verify_block(block, parent, zones::ZONE_DIFFICULTY);
  if (!result)
  {
    return result;
  }
  for (auto const &tx : block.transactions)
  {
    auto const token = tokens::token_of(tx);
    auto const *maneuver = token ? std::get_if<tokens::ManeuverToken>(&*token) : nullptr;
    if (maneuver == nullptr)
    {
      continue;
    }
    for (auto const &d : maneuver->deltas)
    {
      if (auto it = states.find(d.satellite); it != states.end())
      {
        it->second.velocity = it->second.velocity + d.delta;
      }
    }
  }
  return result;
}

}  // namespace orbitledger::debris
