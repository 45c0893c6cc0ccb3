#pragma once

#include "orbitledger/bytes.hpp"
#include "orbitledger/ledger.hpp"
#include "orbitledger/orbital.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orbitledger::tokens {

/// Canonical kind tags; the first byte of every encoded token.
enum class TokenKind : std::uint8_t
{
  UserRequest        = 1,
  TransactionSession = 2,
  Uplink             = 3,
  DownlinkFeedback   = 4,
  OrbitalAsset       = 5,
  Maneuver           = 6,
  MissionPhase       = 7,
  Decision           = 8,
  Funding            = 9,
  ZoneRegistration   = 10,
  ZoneMembership     = 11,
};

std::string_view to_string(TokenKind kind);

enum class AssetKind : std::uint8_t
{
  Orbit      = 0,
  Satellite  = 1,
  Asteroid   = 2,
  Debris     = 3,
  Spacecraft = 4,
  Astronaut  = 5,
};

std::string_view         to_string(AssetKind kind);
std::optional<AssetKind> parse_asset_kind(std::string_view text);

struct TickInterval
{
  Tick begin{0};
  Tick end{0};

  friend bool operator==(TickInterval const &, TickInterval const &) = default;
};

struct UserRequestToken
{
  std::uint64_t             query_id{0};
  NodeId                    requester{0};
  std::vector<GeoPoint>     locations;
  std::vector<TickInterval> timeframes;

  friend bool operator==(UserRequestToken const &, UserRequestToken const &) = default;
};

struct TransactionSessionToken
{
  std::uint64_t session_id{0};
  NodeId        initiator{0};
  NodeId        responder{0};
  std::string   uplink_metadata;

  friend bool operator==(TransactionSessionToken const &, TransactionSessionToken const &) = default;
};

struct UplinkToken
{
  NodeId ground_station{0};
  NodeId tdrs{0};
  Bytes  command;

  friend bool operator==(UplinkToken const &, UplinkToken const &) = default;
};

struct DownlinkFeedbackToken
{
  std::uint64_t query_id{0};
  Digest        image_digest{};
  Tick          downlink_tick{0};
  Tick          start_tick{0};
  Tick          completion_tick{0};
  std::string   feedback;

  friend bool operator==(DownlinkFeedbackToken const &, DownlinkFeedbackToken const &) = default;
};

struct OrbitalAssetToken
{
  AssetKind      asset_kind{AssetKind::Satellite};
  std::uint64_t  asset_id{0};
  NodeId         owner{0};
  std::string    label;
  KinematicState state;
  /// Characteristic radius in km; required positive for debris.
  double size_km{0.0};

  friend bool operator==(OrbitalAssetToken const &, OrbitalAssetToken const &) = default;
};

struct VelocityDelta
{
  NodeId satellite{0};
  Vec3   delta;

  friend bool operator==(VelocityDelta const &, VelocityDelta const &) = default;
};

struct ManeuverToken
{
  std::uint64_t              zone_id{0};
  std::uint64_t              debris_id{0};
  Tick                       planning_tick{0};
  double                     threshold_km{0.0};
  std::vector<VelocityDelta> deltas;

  friend bool operator==(ManeuverToken const &, ManeuverToken const &) = default;
};

struct MissionPhaseToken
{
  std::uint8_t phase{1};
  Digest       payload_digest{};
  NodeId       submitter{0};

  friend bool operator==(MissionPhaseToken const &, MissionPhaseToken const &) = default;
};

struct DecisionToken
{
  std::string   text;
  std::uint64_t source_contract{0};

  friend bool operator==(DecisionToken const &, DecisionToken const &) = default;
};

struct FundingToken
{
  std::uint64_t amount{0};
  NodeId        beneficiary{0};
  std::uint8_t  milestone_phase{1};

  friend bool operator==(FundingToken const &, FundingToken const &) = default;
};

struct MemberRecord
{
  NodeId        satellite{0};
  std::uint64_t virtual_id{0};

  friend bool operator==(MemberRecord const &, MemberRecord const &) = default;
};

/// Zone genesis payload: the zone id and every issued virtual id.
struct ZoneRegistrationToken
{
  std::uint64_t             zone_id{0};
  OrbitClass                orbit{OrbitClass::LEO};
  NodeId                    master{0};
  std::vector<MemberRecord> members;

  friend bool operator==(ZoneRegistrationToken const &, ZoneRegistrationToken const &) = default;
};

enum class JoinVerdict : std::uint8_t
{
  Admitted = 1,
  Intruder = 2,
};

/// Outcome of a join request. virtual_id is zero for intruders.
struct ZoneMembershipToken
{
  std::uint64_t zone_id{0};
  NodeId        candidate{0};
  JoinVerdict   verdict{JoinVerdict::Admitted};
  std::uint64_t virtual_id{0};

  friend bool operator==(ZoneMembershipToken const &, ZoneMembershipToken const &) = default;
};

using SpaceToken = std::variant<UserRequestToken, TransactionSessionToken, UplinkToken,
                                DownlinkFeedbackToken, OrbitalAssetToken, ManeuverToken,
                                MissionPhaseToken, DecisionToken, FundingToken,
                                ZoneRegistrationToken, ZoneMembershipToken>;

TokenKind kind_of(SpaceToken const &token);

class InvalidFields : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidFields naming the first violated invariant.
void validate_token(SpaceToken const &token);

/// kind tag (1 byte) || fields in declared order; integers big-endian, strings
/// and blobs 4-byte length-prefixed, lists 4-byte count-prefixed, doubles as
/// IEEE-754 bit patterns.
Bytes encode_token(SpaceToken const &token);

/// Inverse of encode_token. Throws MalformedBytes on truncation, unknown tags,
/// trailing bytes, or decoded fields that violate the kind's invariants.
SpaceToken decode_token(std::span<std::uint8_t const> bytes);

/// Content address: SHA-256 of the canonical encoding.
Digest token_id(SpaceToken const &token);

struct MintedToken
{
  SpaceToken token;
  Digest     id{};
  NodeId     issuer{0};
};

/// Validates the fields and assigns the content-derived token id.
MintedToken mint_token(SpaceToken fields, NodeId issuer);

/// Wraps a token as a ledger transaction whose payload is the token encoding.
ledger::Transaction to_transaction(SpaceToken const &token, NodeId issuer, std::uint64_t fee,
                                   Tick timestamp);

/// Decodes a transaction payload, or nullopt if it is not a valid token.
std::optional<SpaceToken> token_of(ledger::Transaction const &tx);

struct AssetDescriptor
{
  AssetKind      kind{AssetKind::Satellite};
  std::uint64_t  asset_id{0};
  std::string    label;
  NodeId         owner{0};
  KinematicState state;
  double         size_km{0.0};
};

using OwnerRoster = std::set<NodeId>;

/// Throws InvalidFields when the owner is not registered or the descriptor
/// fails the orbital-asset invariants.
OrbitalAssetToken tokenize_asset(AssetDescriptor const &descriptor, OwnerRoster const &owners);

}  // namespace orbitledger::tokens
