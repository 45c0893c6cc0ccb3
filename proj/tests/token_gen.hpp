#pragma once

// Random generators for valid tokens, used by the fuzz and property tests.

#include "orbitledger/tokens.hpp"

#include <random>

namespace orbitledger::testing {

class TokenGen
{
public:
  explicit TokenGen(std::uint64_t seed)
    : rng_{seed}
  {}

  static constexpr std::size_t KIND_COUNT = 11;

  tokens::SpaceToken make(tokens::TokenKind kind)
  {
    using namespace tokens;
    switch (kind)
    {
    case TokenKind::UserRequest:
    {
      UserRequestToken t{u64(), u64(), {}, {}};
      for (std::size_t i = 0, n = 1 + small(4); i < n; ++i)
      {
        t.locations.push_back({real(-90, 90), real(-180, 180)});
      }
      for (std::size_t i = 0, n = 1 + small(4); i < n; ++i)
      {
        auto const b = u64() >> 1;
        t.timeframes.push_back({b, b + small(1000)});
      }
      return t;
    }
    case TokenKind::TransactionSession:
      return TransactionSessionToken{u64(), u64(), u64(), text()};
    case TokenKind::Uplink:
      return UplinkToken{u64(), u64(), blob()};
    case TokenKind::DownlinkFeedback:
    {
      auto const start = u64() >> 2;
      auto const done  = start + small(500);
      return DownlinkFeedbackToken{u64(), digest(), done + small(50), start, done, text()};
    }
    case TokenKind::OrbitalAsset:
    {
      auto const ak = static_cast<AssetKind>(small(6));
      return OrbitalAssetToken{ak, u64(), u64(), text(), state(), real(0.001, 10.0)};
    }
    case TokenKind::Maneuver:
    {
      ManeuverToken t{u64(), u64(), u64(), real(0.1, 20.0), {}};
      for (std::size_t i = 0, n = small(5); i < n; ++i)
      {
        t.deltas.push_back({1000 + i, vec()});
      }
      return t;
    }
    case TokenKind::MissionPhase:
      return MissionPhaseToken{static_cast<std::uint8_t>(1 + small(6)), digest(), u64()};
    case TokenKind::Decision:
      return DecisionToken{text(), u64()};
    case TokenKind::Funding:
      return FundingToken{1 + (u64() >> 1), u64(), static_cast<std::uint8_t>(1 + small(6))};
    case TokenKind::ZoneRegistration:
    {
      ZoneRegistrationToken t{u64(), static_cast<OrbitClass>(small(3)), u64(), {}};
      for (std::size_t i = 0, n = 1 + small(6); i < n; ++i)
      {
        t.members.push_back({100 + i, 1 + i});
      }
      return t;
    }
    case TokenKind::ZoneMembership:
    {
      bool const admitted = small(2) == 0;
      return ZoneMembershipToken{u64(), u64(),
                                 admitted ? JoinVerdict::Admitted : JoinVerdict::Intruder,
                                 admitted ? 1 + (u64() >> 1) : 0};
    }
    }
    return DecisionToken{};
  }

  tokens::SpaceToken any()
  {
    return make(static_cast<tokens::TokenKind>(1 + small(KIND_COUNT)));
  }

  std::uint64_t u64()
  {
    return rng_();
  }
  std::size_t small(std::size_t n)
  {
    return static_cast<std::size_t>(rng_() % n);
  }
  double real(double lo, double hi)
  {
    return std::uniform_real_distribution<double>{lo, hi}(rng_);
  }

private:
  Vec3 vec()
  {
    return {real(-10, 10), real(-10, 10), real(-10, 10)};
  }
  KinematicState state()
  {
    return {{real(-8000, 8000), real(-8000, 8000), real(-8000, 8000)}, vec()};
  }
  Digest digest()
  {
    Digest d{};
    for (auto &b : d)
    {
      b = static_cast<std::uint8_t>(rng_());
    }
    return d;
  }
  Bytes blob()
  {
    Bytes b(small(40));
    for (auto &x : b)
    {
      x = static_cast<std::uint8_t>(rng_());
    }
    return b;
  }
  std::string text()
  {
    std::string s(small(24), ' ');
    for (auto &c : s)
    {
      c = static_cast<char>('a' + small(26));
    }
    return s;
  }

  std::mt19937_64 rng_;
};

}  // namespace orbitledger::testing
