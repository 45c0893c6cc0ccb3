#include "orbitledger/bytes.hpp"

#include <bit>
#include <cstring>

namespace orbitledger {
namespace {

constexpr char HEX_DIGITS[] = "0123456789abcdef";

int nibble_value(char c)
{
  if (c >= '0' && c <= '9')
  {
    return c - '0';
  }
  if (c >= 'a' && c <= 'f')
  {
    return c - 'a' + 10;
  }
  if (c >= 'A' && c <= 'F')
  {
    return c - 'A' + 10;
  }
  return -1;
}

}  // namespace

std::string to_hex(std::span<std::uint8_t const> bytes)
{
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes)
  {
    out.push_back(HEX_DIGITS[b >> 4]);
    out.push_back(HEX_DIGITS[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex)
{
  if (hex.size() % 2 != 0)
  {
    throw std::invalid_argument("hex string has odd length");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
  {
    int const hi = nibble_value(hex[i]);
    int const lo = nibble_value(hex[i + 1]);
    if (hi < 0 || lo < 0)
    {
      throw std::invalid_argument("invalid hex character");
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

Digest digest_from_hex(std::string_view hex)
{
  auto const bytes = from_hex(hex);
  if (bytes.size() != 32)
  {
    throw std::invalid_argument("digest must be 64 hex characters");
  }
  Digest d{};
  std::memcpy(d.data(), bytes.data(), d.size());
  return d;
}

MalformedBytes::MalformedBytes(std::string const &what, std::size_t offset)
  : std::runtime_error{what + " at offset " + std::to_string(offset)}
  , offset_{offset}
{}

ByteWriter &ByteWriter::put_u8(std::uint8_t v)
{
  buffer_.push_back(v);
  return *this;
}

ByteWriter &ByteWriter::put_u32(std::uint32_t v)
{
  for (int shift = 24; shift >= 0; shift -= 8)
  {
    buffer_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

ByteWriter &ByteWriter::put_u64(std::uint64_t v)
{
  for (int shift = 56; shift >= 0; shift -= 8)
  {
    buffer_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

ByteWriter &ByteWriter::put_f64(double v)
{
  if (v == 0.0)
  {
    v = 0.0;
  }
  return put_u64(std::bit_cast<std::uint64_t>(v));
}

ByteWriter &ByteWriter::put_raw(std::span<std::uint8_t const> bytes)
{
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  return *this;
}

ByteWriter &ByteWriter::put_digest(Digest const &d)
{
  return put_raw(d);
}

ByteWriter &ByteWriter::put_blob(std::span<std::uint8_t const> bytes)
{
  put_count(bytes.size());
  return put_raw(bytes);
}

ByteWriter &ByteWriter::put_string(std::string_view s)
{
  put_count(s.size());
  buffer_.insert(buffer_.end(), s.begin(), s.end());
  return *this;
}

ByteWriter &ByteWriter::put_count(std::size_t n)
{
  if (n > UINT32_MAX)
  {
    throw std::length_error("length does not fit a 4-byte prefix");
  }
  return put_u32(static_cast<std::uint32_t>(n));
}

void ByteReader::need(std::size_t n) const
{
  if (remaining() < n)
  {
    throw MalformedBytes{"truncated buffer: need " + std::to_string(n) + " bytes", offset_};
  }
}

std::uint8_t ByteReader::get_u8()
{
  need(1);
  return bytes_[offset_++];
}

std::uint32_t ByteReader::get_u32()
{
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
  {
    v = (v << 8) | bytes_[offset_++];
  }
  return v;
}

std::uint64_t ByteReader::get_u64()
{
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
  {
    v = (v << 8) | bytes_[offset_++];
  }
  return v;
}

double ByteReader::get_f64()
{
  return std::bit_cast<double>(get_u64());
}

Digest ByteReader::get_digest()
{
  need(32);
  Digest d{};
  std::memcpy(d.data(), bytes_.data() + offset_, d.size());
  offset_ += d.size();
  return d;
}

Bytes ByteReader::get_raw(std::size_t n)
{
  need(n);
  Bytes out(bytes_.begin() + static_cast<std::ptrdiff_t>(offset_),
            bytes_.begin() + static_cast<std::ptrdiff_t>(offset_ + n));
  offset_ += n;
  return out;
}

Bytes ByteReader::get_blob()
{
  auto const n = get_count();
  return get_raw(n);
}

std::string ByteReader::get_string()
{
  auto const raw = get_blob();
  return {raw.begin(), raw.end()};
}

std::size_t ByteReader::get_count(std::size_t min_element_size)
{
  auto const at = offset_;
  auto const n  = static_cast<std::size_t>(get_u32());
  if (min_element_size > 0 && n > remaining() / min_element_size)
  {
    throw MalformedBytes{"count prefix exceeds remaining bytes", at};
  }
  return n;
}

void ByteReader::expect_end() const
{
  if (remaining() != 0)
  {
    throw MalformedBytes{"trailing bytes", offset_};
  }
}

}  // namespace orbitledger
