#include "orbitledger/tokens.hpp"

#include "orbitledger/sha256.hpp"

#include <cmath>
#include <unordered_set>

namespace orbitledger::tokens {
namespace {

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool condition, char const *what)
{
  if (!condition)
  {
    throw InvalidFields{what};
  }
}

void put_vec3(ByteWriter &w, Vec3 const &v)
{
  w.put_f64(v.x).put_f64(v.y).put_f64(v.z);
}

Vec3 get_vec3(ByteReader &r)
{
  Vec3 v;
  v.x = r.get_f64();
  v.y = r.get_f64();
  v.z = r.get_f64();
  return v;
}

// Field encoders, one per kind, in declared field order.

void put_fields(ByteWriter &w, UserRequestToken const &t)
{
  w.put_u64(t.query_id).put_u64(t.requester);
  w.put_count(t.locations.size());
  for (auto const &p : t.locations)
  {
    w.put_f64(p.lat).put_f64(p.lon);
  }
  w.put_count(t.timeframes.size());
  for (auto const &tf : t.timeframes)
  {
    w.put_u64(tf.begin).put_u64(tf.end);
  }
}

void put_fields(ByteWriter &w, TransactionSessionToken const &t)
{
  w.put_u64(t.session_id).put_u64(t.initiator).put_u64(t.responder).put_string(t.uplink_metadata);
}

void put_fields(ByteWriter &w, UplinkToken const &t)
{
  w.put_u64(t.ground_station).put_u64(t.tdrs).put_blob(t.command);
}

void put_fields(ByteWriter &w, DownlinkFeedbackToken const &t)
{
  w.put_u64(t.query_id)
      .put_digest(t.image_digest)
      .put_u64(t.downlink_tick)
      .put_u64(t.start_tick)
      .put_u64(t.completion_tick)
      .put_string(t.feedback);
}

void put_fields(ByteWriter &w, OrbitalAssetToken const &t)
{
  w.put_u8(static_cast<std::uint8_t>(t.asset_kind))
      .put_u64(t.asset_id)
      .put_u64(t.owner)
      .put_string(t.label);
  put_vec3(w, t.state.position);
  put_vec3(w, t.state.velocity);
  w.put_f64(t.size_km);
}

void put_fields(ByteWriter &w, ManeuverToken const &t)
{
  w.put_u64(t.zone_id).put_u64(t.debris_id).put_u64(t.planning_tick).put_f64(t.threshold_km);
  w.put_count(t.deltas.size());
  for (auto const &d : t.deltas)
  {
    w.put_u64(d.satellite);
    put_vec3(w, d.delta);
  }
}

void put_fields(ByteWriter &w, MissionPhaseToken const &t)
{
  w.put_u8(t.phase).put_digest(t.payload_digest).put_u64(t.submitter);
}

void put_fields(ByteWriter &w, DecisionToken const &t)
{
  w.put_string(t.text).put_u64(t.source_contract);
}

void put_fields(ByteWriter &w, FundingToken const &t)
{
  w.put_u64(t.amount).put_u64(t.beneficiary).put_u8(t.milestone_phase);
}

void put_fields(ByteWriter &w, ZoneRegistrationToken const &t)
{
  w.put_u64(t.zone_id).put_u8(static_cast<std::uint8_t>(t.orbit)).put_u64(t.master);
  w.put_count(t.members.size());
  for (auto const &m : t.members)
  {
    w.put_u64(m.satellite).put_u64(m.virtual_id);
  }
}

void put_fields(ByteWriter &w, ZoneMembershipToken const &t)
{
  w.put_u64(t.zone_id)
      .put_u64(t.candidate)
      .put_u8(static_cast<std::uint8_t>(t.verdict))
      .put_u64(t.virtual_id);
}

UserRequestToken get_user_request(ByteReader &r)
{
  UserRequestToken t;
  t.query_id    = r.get_u64();
  t.requester   = r.get_u64();
  auto const nl = r.get_count(16);
  for (std::size_t i = 0; i < nl; ++i)
  {
    GeoPoint p;
    p.lat = r.get_f64();
    p.lon = r.get_f64();
    t.locations.push_back(p);
  }
  auto const nt = r.get_count(16);
  for (std::size_t i = 0; i < nt; ++i)
  {
    TickInterval tf;
    tf.begin = r.get_u64();
    tf.end   = r.get_u64();
    t.timeframes.push_back(tf);
  }
  return t;
}

TransactionSessionToken get_session(ByteReader &r)
{
  TransactionSessionToken t;
  t.session_id      = r.get_u64();
  t.initiator       = r.get_u64();
  t.responder       = r.get_u64();
  t.uplink_metadata = r.get_string();
  return t;
}

UplinkToken get_uplink(ByteReader &r)
{
  UplinkToken t;
  t.ground_station = r.get_u64();
  t.tdrs           = r.get_u64();
  t.command        = r.get_blob();
  return t;
}

DownlinkFeedbackToken get_feedback(ByteReader &r)
{
  DownlinkFeedbackToken t;
  t.query_id        = r.get_u64();
  t.image_digest    = r.get_digest();
  t.downlink_tick   = r.get_u64();
  t.start_tick      = r.get_u64();
  t.completion_tick = r.get_u64();
  t.feedback        = r.get_string();
  return t;
}

OrbitalAssetToken get_asset(ByteReader &r)
{
  OrbitalAssetToken t;
  auto const        at   = r.offset();
  auto const        kind = r.get_u8();
  if (kind > static_cast<std::uint8_t>(AssetKind::Astronaut))
  {
    throw MalformedBytes{"unknown asset kind", at};
  }
  t.asset_kind     = static_cast<AssetKind>(kind);
  t.asset_id       = r.get_u64();
  t.owner          = r.get_u64();
  t.label          = r.get_string();
  t.state.position = get_vec3(r);
  t.state.velocity = get_vec3(r);
  t.size_km        = r.get_f64();
  return t;
}

ManeuverToken get_maneuver(ByteReader &r)
{
  ManeuverToken t;
  t.zone_id       = r.get_u64();
  t.debris_id     = r.get_u64();
  t.planning_tick = r.get_u64();
  t.threshold_km  = r.get_f64();
  auto const n    = r.get_count(32);
  for (std::size_t i = 0; i < n; ++i)
  {
    VelocityDelta d;
    d.satellite = r.get_u64();
    d.delta     = get_vec3(r);
    t.deltas.push_back(d);
  }
  return t;
}

MissionPhaseToken get_phase(ByteReader &r)
{
  MissionPhaseToken t;
  t.phase          = r.get_u8();
  t.payload_digest = r.get_digest();
  t.submitter      = r.get_u64();
  return t;
}

DecisionToken get_decision(ByteReader &r)
{
  DecisionToken t;
  t.text            = r.get_string();
  t.source_contract = r.get_u64();
  return t;
}

FundingToken get_funding(ByteReader &r)
{
  FundingToken t;
  t.amount          = r.get_u64();
  t.beneficiary     = r.get_u64();
  t.milestone_phase = r.get_u8();
  return t;
}

ZoneRegistrationToken get_registration(ByteReader &r)
{
  ZoneRegistrationToken t;
  t.zone_id     = r.get_u64();
  auto const at = r.offset();
  auto const o  = r.get_u8();
  if (o > static_cast<std::uint8_t>(OrbitClass::GEO))
  {
    throw MalformedBytes{"unknown orbit class", at};
  }
  t.orbit      = static_cast<OrbitClass>(o);
  t.master     = r.get_u64();
  auto const n = r.get_count(16);
  for (std::size_t i = 0; i < n; ++i)
  {
    MemberRecord m;
    m.satellite  = r.get_u64();
    m.virtual_id = r.get_u64();
    t.members.push_back(m);
  }
  return t;
}

ZoneMembershipToken get_membership(ByteReader &r)
{
  ZoneMembershipToken t;
  t.zone_id     = r.get_u64();
  t.candidate   = r.get_u64();
  auto const at = r.offset();
  auto const v  = r.get_u8();
  if (v != static_cast<std::uint8_t>(JoinVerdict::Admitted) &&
      v != static_cast<std::uint8_t>(JoinVerdict::Intruder))
  {
    throw MalformedBytes{"unknown join verdict", at};
  }
  t.verdict    = static_cast<JoinVerdict>(v);
  t.virtual_id = r.get_u64();
  return t;
}

}  // namespace

std::string_view to_string(TokenKind kind)
{
  switch (kind)
  {
  case TokenKind::UserRequest:
    return "user_request";
  case TokenKind::TransactionSession:
    return "transaction_session";
  case TokenKind::Uplink:
    return "uplink";
  case TokenKind::DownlinkFeedback:
    return "downlink_feedback";
  case TokenKind::OrbitalAsset:
    return "orbital_asset";
  case TokenKind::Maneuver:
    return "maneuver";
  case TokenKind::MissionPhase:
    return "mission_phase";
  case TokenKind::Decision:
    return "decision";
  case TokenKind::Funding:
    return "funding";
  case TokenKind::ZoneRegistration:
    return "zone_registration";
  case TokenKind::ZoneMembership:
    return "zone_membership";
  }
  return "unknown";
}

std::string_view to_string(AssetKind kind)
{
  switch (kind)
  {
  case AssetKind::Orbit:
    return "orbit";
  case AssetKind::Satellite:
    return "satellite";
  case AssetKind::Asteroid:
    return "asteroid";
  case AssetKind::Debris:
    return "debris";
  case AssetKind::Spacecraft:
    return "spacecraft";
  case AssetKind::Astronaut:
    return "astronaut";
  }
  return "unknown";
}

std::optional<AssetKind> parse_asset_kind(std::string_view text)
{
  for (std::uint8_t k = 0; k <= static_cast<std::uint8_t>(AssetKind::Astronaut); ++k)
  {
    if (to_string(static_cast<AssetKind>(k)) == text)
    {
      return static_cast<AssetKind>(k);
    }
  }
  return std::nullopt;
}

TokenKind kind_of(SpaceToken const &token)
{
  // Variant alternatives are declared in tag order starting at 1.
  return static_cast<TokenKind>(token.index() + 1);
}

void validate_token(SpaceToken const &token)
{
  std::visit(
      Overloaded{
          [](UserRequestToken const &t) {
            require(!t.locations.empty(), "user request needs at least one location");
            require(!t.timeframes.empty(), "user request needs at least one timeframe");
            for (auto const &p : t.locations)
            {
              require(p.valid(), "location out of range");
            }
            for (auto const &tf : t.timeframes)
            {
              require(tf.begin <= tf.end, "timeframe begins after it ends");
            }
          },
          [](TransactionSessionToken const &) {},
          [](UplinkToken const &) {},
          [](DownlinkFeedbackToken const &t) {
            require(t.start_tick <= t.completion_tick, "feedback completes before it starts");
            require(t.completion_tick <= t.downlink_tick, "feedback downlinked before completion");
          },
          [](OrbitalAssetToken const &t) {
            require(t.state.finite(), "kinematic state must be finite");
            require(std::isfinite(t.size_km) && t.size_km >= 0.0, "asset size must be finite and >= 0");
            require(t.asset_kind != AssetKind::Debris || t.size_km > 0.0, "debris radius must be > 0");
          },
          [](ManeuverToken const &t) {
            require(std::isfinite(t.threshold_km) && t.threshold_km > 0.0,
                    "maneuver threshold must be > 0");
            std::unordered_set<NodeId> seen;
            for (auto const &d : t.deltas)
            {
              require(d.delta.finite(), "velocity delta must be finite");
              require(seen.insert(d.satellite).second, "duplicate satellite in maneuver");
            }
          },
          [](MissionPhaseToken const &t) {
            require(t.phase >= 1 && t.phase <= 6, "mission phase must be in 1..6");
          },
          [](DecisionToken const &) {},
          [](FundingToken const &t) {
            require(t.amount > 0, "funding amount must be > 0");
            require(t.milestone_phase >= 1 && t.milestone_phase <= 6, "milestone phase must be in 1..6");
          },
          [](ZoneRegistrationToken const &t) {
            require(!t.members.empty(), "zone registration needs members");
            std::unordered_set<NodeId>        sats;
            std::unordered_set<std::uint64_t> vids;
            for (auto const &m : t.members)
            {
              require(sats.insert(m.satellite).second, "duplicate satellite in zone registration");
              require(vids.insert(m.virtual_id).second, "duplicate virtual id in zone registration");
            }
          },
          [](ZoneMembershipToken const &t) {
            require((t.verdict == JoinVerdict::Admitted) == (t.virtual_id != 0),
                    "virtual id must be set exactly for admitted candidates");
          },
      },
      token);
}

Bytes encode_token(SpaceToken const &token)
{
  ByteWriter w;
  w.put_u8(static_cast<std::uint8_t>(kind_of(token)));
  std::visit([&w](auto const &t) { put_fields(w, t); }, token);
  return std::move(w).take();
}

SpaceToken decode_token(std::span<std::uint8_t const> bytes)
{
  ByteReader r{bytes};
  auto const tag = r.get_u8();

  SpaceToken token;
  switch (static_cast<TokenKind>(tag))
  {
  case TokenKind::UserRequest:
    token = get_user_request(r);
    break;
  case TokenKind::TransactionSession:
    token = get_session(r);
    break;
  case TokenKind::Uplink:
    token = get_uplink(r);
    break;
  case TokenKind::DownlinkFeedback:
    token = get_feedback(r);
    break;
  case TokenKind::OrbitalAsset:
    token = get_asset(r);
    break;
  case TokenKind::Maneuver:
    token = get_maneuver(r);
    break;
  case TokenKind::MissionPhase:
    token = get_phase(r);
    break;
  case TokenKind::Decision:
    token = get_decision(r);
    break;
  case TokenKind::Funding:
    token = get_funding(r);
    break;
  case TokenKind::ZoneRegistration:
    token = get_registration(r);
    break;
  case TokenKind::ZoneMembership:
    token = get_membership(r);
    break;
  default:
    throw MalformedBytes{"unknown token kind " + std::to_string(tag), 0};
  }
  r.expect_end();

  try
  {
    validate_token(token);
  }
  catch (InvalidFields const &e)
  {
    throw MalformedBytes{std::string{"invalid fields: "} + e.what(), r.offset()};
  }
  return token;
}

Digest token_id(SpaceToken const &token)
{
  return sha256(encode_token(token));
}

MintedToken mint_token(SpaceToken fields, NodeId issuer)
{
  validate_token(fields);
  auto const id = token_id(fields);
  return {std::move(fields), id, issuer};
}

ledger::Transaction to_transaction(SpaceToken const &token, NodeId issuer, std::uint64_t fee,
                                   Tick timestamp)
{
  validate_token(token);
  return ledger::make_transaction(timestamp, issuer, fee, encode_token(token));
}

std::optional<SpaceToken> token_of(ledger::Transaction const &tx)
{
  try
  {
    return decode_token(tx.payload);
  }
  catch (MalformedBytes const &)
  {
    return std::nullopt;
  }
}

OrbitalAssetToken tokenize_asset(AssetDescriptor const &descriptor, OwnerRoster const &owners)
{
  require(owners.contains(descriptor.owner), "asset owner is not a registered stakeholder");

  OrbitalAssetToken token;
  token.asset_kind = descriptor.kind;
  token.asset_id   = descriptor.asset_id;
  token.owner      = descriptor.owner;
  token.label      = descriptor.label;
  token.state      = descriptor.state;
  token.size_km    = descriptor.size_km;
  validate_token(token);
  return token;
}

}  // namespace orbitledger::tokens
