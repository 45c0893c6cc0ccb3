#include "doctest.h"

#include "orbitledger/tokens.hpp"
#include "support.hpp"
#include "token_gen.hpp"

#include <set>

using namespace orbitledger;
using namespace orbitledger::tokens;
using orbitledger::testing::TokenGen;

namespace {

OrbitalAssetToken debris_fixture()
{
  return OrbitalAssetToken{AssetKind::Debris, 9001, 3, "frag-9001",
                           {{7000.0, 0.0, 0.0}, {0.0, 7.5, 0.0}}, 0.05};
}

}  // namespace

TEST_CASE("mint_token")
{
  SUBCASE("user request with one location and one timeframe round-trips")
  {
    UserRequestToken const t{1, 900, {{48.85, 2.35}}, {{10, 20}}};
    auto const             minted = mint_token(t, 900);
    CHECK(minted.issuer == 900);
    CHECK(decode_token(encode_token(minted.token)) == SpaceToken{t});
  }

  SUBCASE("mission phase 7 is rejected")
  {
    CHECK_THROWS_AS(mint_token(MissionPhaseToken{7, {}, 1}, 1), InvalidFields);
    CHECK_THROWS_AS(mint_token(MissionPhaseToken{0, {}, 1}, 1), InvalidFields);
  }

  SUBCASE("zero funding is rejected")
  {
    CHECK_THROWS_AS(mint_token(FundingToken{0, 1, 1}, 1), InvalidFields);
  }

  SUBCASE("debris token id matches the frozen field digest")
  {
    auto const minted = mint_token(debris_fixture(), 3);
    // Encoding and digest frozen from an independent struct.pack/hashlib build.
    CHECK(to_hex(encode_token(debris_fixture())) ==
          "05030000000000002329000000000000000300000009667261672d3930303140bb58000000000000000000"
          "0000000000000000000000000000000000000000401e00000000000000000000000000003fa999999999999a");
    CHECK(to_hex(minted.id) == "8a894a761a00c5bfc291a8f6e6855da0f714aa66e62bb618a5d7f3fa400b865b");
  }

  SUBCASE("other invariants")
  {
    CHECK_THROWS_AS(mint_token(UserRequestToken{1, 1, {}, {{0, 1}}}, 1), InvalidFields);
    CHECK_THROWS_AS(mint_token(UserRequestToken{1, 1, {{91, 0}}, {{0, 1}}}, 1), InvalidFields);
    CHECK_THROWS_AS(mint_token(UserRequestToken{1, 1, {{0, 0}}, {{5, 1}}}, 1), InvalidFields);
    auto bad_debris    = debris_fixture();
    bad_debris.size_km = 0.0;
    CHECK_THROWS_AS(mint_token(bad_debris, 1), InvalidFields);
    auto nan_state                 = debris_fixture();
    nan_state.state.velocity.x     = std::nan("");
    CHECK_THROWS_AS(mint_token(nan_state, 1), InvalidFields);
    CHECK_THROWS_AS(mint_token(ZoneRegistrationToken{1, OrbitClass::LEO, 1, {}}, 1), InvalidFields);
    CHECK_THROWS_AS(
        mint_token(ZoneRegistrationToken{1, OrbitClass::LEO, 1, {{10, 1}, {11, 1}}}, 1),
        InvalidFields);
    CHECK_THROWS_AS(mint_token(ZoneMembershipToken{1, 2, JoinVerdict::Intruder, 5}, 1),
                    InvalidFields);
    CHECK_THROWS_AS(mint_token(DownlinkFeedbackToken{1, {}, 5, 4, 3, ""}, 1), InvalidFields);
    CHECK_THROWS_AS(mint_token(ManeuverToken{1, 1, 0, 2.0, {{5, {}}, {5, {}}}}, 1), InvalidFields);
  }
}

TEST_CASE("every kind round-trips and carries its tag")
{
  TokenGen gen{1};
  for (std::uint8_t tag = 1; tag <= TokenGen::KIND_COUNT; ++tag)
  {
    auto const kind  = static_cast<TokenKind>(tag);
    auto const token = gen.make(kind);
    CAPTURE(to_string(kind));
    CHECK(kind_of(token) == kind);
    auto const bytes = encode_token(token);
    CHECK(bytes.front() == tag);
    CHECK(decode_token(bytes) == token);
  }
}

TEST_CASE("malformed buffers")
{
  TokenGen   gen{2};
  auto const bytes = encode_token(gen.make(TokenKind::UserRequest));

  for (std::size_t cut = 0; cut < bytes.size(); ++cut)
  {
    CHECK_THROWS_AS(decode_token(std::span{bytes}.first(cut)), MalformedBytes);
  }

  auto extended = bytes;
  extended.push_back(0);
  CHECK_THROWS_AS(decode_token(extended), MalformedBytes);

  Bytes const unknown{0x7f};
  CHECK_THROWS_AS(decode_token(unknown), MalformedBytes);

  // phase 7 smuggled past mint_token
  auto phase = encode_token(MissionPhaseToken{6, {}, 1});
  phase[1]   = 7;
  CHECK_THROWS_AS(decode_token(phase), MalformedBytes);
}

TEST_CASE("fuzz: 10^4 random tokens per kind round-trip")
{
  TokenGen gen{3};
  for (std::uint8_t tag = 1; tag <= TokenGen::KIND_COUNT; ++tag)
  {
    auto const kind     = static_cast<TokenKind>(tag);
    int        failures = 0;
    for (int i = 0; i < 10'000; ++i)
    {
      auto const token = gen.make(kind);
      if (decode_token(encode_token(token)) != token)
      {
        ++failures;
      }
    }
    CAPTURE(to_string(kind));
    CHECK(failures == 0);
  }
}

TEST_CASE("canonical encoding: equal bytes iff equal fields")
{
  TokenGen gen{4};
  for (int i = 0; i < 2000; ++i)
  {
    auto const a = gen.any();
    auto const b = gen.any();
    CHECK((encode_token(a) == encode_token(b)) == (a == b));
    CHECK(encode_token(a) == encode_token(SpaceToken{a}));
  }

  OrbitalAssetToken pos_zero = debris_fixture();
  OrbitalAssetToken neg_zero = debris_fixture();
  neg_zero.state.position.y  = -0.0;
  CHECK(pos_zero == neg_zero);
  CHECK(encode_token(pos_zero) == encode_token(neg_zero));
}

TEST_CASE("token ids are injective over 10^5 random tokens")
{
  TokenGen                                       gen{5};
  std::set<Digest>                               ids;
  std::set<Bytes>                                encodings;
  for (int i = 0; i < 100'000; ++i)
  {
    auto const token = gen.any();
    auto const enc   = encode_token(token);
    auto const fresh = encodings.insert(enc).second;
    CHECK(ids.insert(token_id(token)).second == fresh);
  }
}

TEST_CASE("tokenize_asset")
{
  OwnerRoster const owners{3, 4};
  AssetDescriptor   sat{AssetKind::Satellite, 101, "sat-101", 3, {{7000, 0, 0}, {0, 7.5, 0}}, 0.002};

  auto const token = tokenize_asset(sat, owners);
  CHECK(token.asset_kind == AssetKind::Satellite);
  CHECK(token.state == sat.state);
  CHECK(token.owner == 3);

  AssetDescriptor asteroid{AssetKind::Asteroid, 7, "2024 XY", 4, {{1e6, 0, 0}, {0, 0, 0}}, 0.4};
  AssetDescriptor debris{AssetKind::Debris, 7, "frag", 4, {{1e6, 0, 0}, {0, 0, 0}}, 0.4};
  CHECK(token_id(tokenize_asset(asteroid, owners)) != token_id(tokenize_asset(debris, owners)));
  CHECK(token_id(tokenize_asset(debris, owners)) == token_id(tokenize_asset(debris, owners)));

  sat.owner = 99;
  CHECK_THROWS_AS(tokenize_asset(sat, owners), InvalidFields);

  AssetDescriptor astronaut{AssetKind::Astronaut, 1, "eva-1", 4, {}, 0.0};
  CHECK(tokenize_asset(astronaut, owners).asset_kind == AssetKind::Astronaut);
}

TEST_CASE("every kind persists inside a mined block")
{
  TokenGen      gen{6};
  ledger::Chain chain{orbitledger::testing::empty_genesis(1), 1};
  std::vector<SpaceToken> written;
  for (std::uint8_t tag = 1; tag <= TokenGen::KIND_COUNT; ++tag)
  {
    written.push_back(gen.make(static_cast<TokenKind>(tag)));
    REQUIRE(chain.submit(to_transaction(written.back(), 1, tag, 1)));
  }
  chain.seal(2);
  REQUIRE(chain.height() == 2);
  CHECK(ledger::validate_chain(chain.blocks(), 1).valid());

  std::set<std::uint8_t> kinds;
  for (auto const &tx : chain.tip().transactions)
  {
    auto const token = token_of(tx);
    REQUIRE(token.has_value());
    kinds.insert(static_cast<std::uint8_t>(kind_of(*token)));
    CHECK(std::find(written.begin(), written.end(), *token) != written.end());
  }
  CHECK(kinds.size() == TokenGen::KIND_COUNT);
}
