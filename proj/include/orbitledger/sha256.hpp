#pragma once

#include "orbitledger/bytes.hpp"

#include <memory>
#include <span>

namespace orbitledger {

Digest sha256(std::span<std::uint8_t const> data);

/// Incremental SHA-256 whose state can be snapshotted. Mining hashes a fixed
/// header prefix once and replays only the nonce-bearing tail per attempt.
class Sha256
{
public:
  Sha256();
  Sha256(Sha256 const &other);
  Sha256 &operator=(Sha256 const &other);
  Sha256(Sha256 &&) noexcept;
  Sha256 &operator=(Sha256 &&) noexcept;
  ~Sha256();

  Sha256 &update(std::span<std::uint8_t const> data);
  Digest  finish();

private:
  struct Context;
  std::unique_ptr<Context> ctx_;
};

}  // namespace orbitledger
