#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orbitledger {

using Bytes  = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;
using NodeId = std::uint64_t;
using Tick   = std::uint64_t;

inline constexpr Digest ZERO_DIGEST{};

/// Lowercase hex of an arbitrary byte range.
std::string to_hex(std::span<std::uint8_t const> bytes);

inline std::string to_hex(Digest const &digest)
{
  return to_hex(std::span<std::uint8_t const>{digest});
}

/// Parses lowercase or uppercase hex. Throws std::invalid_argument on odd
/// length or non-hex characters.
Bytes from_hex(std::string_view hex);

Digest digest_from_hex(std::string_view hex);

/// Thrown by ByteReader when a buffer ends early, carries trailing garbage, or
/// holds a value outside the encoding's domain.
class MalformedBytes : public std::runtime_error
{
public:
  MalformedBytes(std::string const &what, std::size_t offset);

  std::size_t offset() const noexcept
  {
    return offset_;
  }

private:
  std::size_t offset_;
};

/// Big-endian canonical writer. Strings and blobs carry a 4-byte length prefix,
/// lists a 4-byte count prefix written by the caller via put_u32.
class ByteWriter
{
public:
  ByteWriter &put_u8(std::uint8_t v);
  ByteWriter &put_u32(std::uint32_t v);
  ByteWriter &put_u64(std::uint64_t v);
  /// IEEE-754 bit pattern; negative zero is written as positive zero so that
  /// equal values always encode identically.
  ByteWriter &put_f64(double v);
  ByteWriter &put_raw(std::span<std::uint8_t const> bytes);
  ByteWriter &put_digest(Digest const &d);
  ByteWriter &put_blob(std::span<std::uint8_t const> bytes);
  ByteWriter &put_string(std::string_view s);
  ByteWriter &put_count(std::size_t n);

  Bytes const &bytes() const &
  {
    return buffer_;
  }
  Bytes take() &&
  {
    return std::move(buffer_);
  }

private:
  Bytes buffer_;
};

class ByteReader
{
public:
  explicit ByteReader(std::span<std::uint8_t const> bytes)
    : bytes_{bytes}
  {}

  std::uint8_t  get_u8();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  double        get_f64();
  Digest        get_digest();
  Bytes         get_raw(std::size_t n);
  Bytes         get_blob();
  std::string   get_string();
  /// Count prefix, bounded by the bytes left so a corrupt count cannot trigger a
  /// huge allocation. `min_element_size` is the smallest encoding of one element.
  std::size_t get_count(std::size_t min_element_size = 1);

  std::size_t offset() const noexcept
  {
    return offset_;
  }
  std::size_t remaining() const noexcept
  {
    return bytes_.size() - offset_;
  }
  /// Throws if unread bytes remain.
  void expect_end() const;

private:
  void need(std::size_t n) const;

  std::span<std::uint8_t const> bytes_;
  std::size_t                   offset_{0};
};

}  // namespace orbitledger
