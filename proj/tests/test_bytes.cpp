#include "doctest.h"

#include "orbitledger/bytes.hpp"
#include "orbitledger/sha256.hpp"

#include <cmath>
#include <string_view>

using namespace orbitledger;

namespace {

Bytes ascii(std::string_view s)
{
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("sha256 matches published test vectors")
{
  CHECK(to_hex(sha256(ascii(""))) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(to_hex(sha256(ascii("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256 snapshot continues from the copied state")
{
  auto const data = ascii("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq");
  Sha256     prefix;
  prefix.update(std::span{data}.first(20));
  Sha256 copy{prefix};
  CHECK(copy.update(std::span{data}.subspan(20)).finish() == sha256(data));
  CHECK(to_hex(sha256(data)) == "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("hex conversion")
{
  Bytes const raw{0x00, 0x0f, 0xa0, 0xff};
  CHECK(to_hex(raw) == "000fa0ff");
  CHECK(from_hex("000FA0ff") == raw);
  CHECK_THROWS_AS(from_hex("abc"), std::invalid_argument);
  CHECK_THROWS_AS(from_hex("zz"), std::invalid_argument);
  CHECK_THROWS_AS(digest_from_hex("00"), std::invalid_argument);
}

TEST_CASE("big-endian writer and reader")
{
  ByteWriter w;
  w.put_u8(1).put_u32(0x01020304).put_u64(0x0102030405060708ULL).put_string("hi").put_f64(-0.0);
  auto const bytes = w.bytes();
  CHECK(to_hex(std::span{bytes}.first(13)) == "01010203040102030405060708");

  ByteReader r{bytes};
  CHECK(r.get_u8() == 1);
  CHECK(r.get_u32() == 0x01020304u);
  CHECK(r.get_u64() == 0x0102030405060708ULL);
  CHECK(r.get_string() == "hi");
  auto const z = r.get_f64();
  CHECK(z == 0.0);
  CHECK_FALSE(std::signbit(z));
  r.expect_end();
}

TEST_CASE("reader reports truncation and bogus counts with offsets")
{
  Bytes const short_buf{0, 0, 0};
  ByteReader  r{short_buf};
  try
  {
    r.get_u32();
    FAIL("expected MalformedBytes");
  }
  catch (MalformedBytes const &e)
  {
    CHECK(e.offset() == 0);
  }

  ByteWriter w;
  w.put_u8(9).put_u32(1'000'000);
  ByteReader counts{w.bytes()};
  counts.get_u8();
  try
  {
    counts.get_count(8);
    FAIL("expected MalformedBytes");
  }
  catch (MalformedBytes const &e)
  {
    CHECK(e.offset() == 1);
  }

  Bytes const extra{1, 2};
  ByteReader  tail{extra};
  tail.get_u8();
  CHECK_THROWS_AS(tail.expect_end(), MalformedBytes);
}
