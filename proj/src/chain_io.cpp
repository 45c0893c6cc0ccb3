#include "orbitledger/chain_io.hpp"

#include <fstream>
#include <sstream>

namespace orbitledger::ledger {
namespace {

std::string hex_u64(std::uint64_t v)
{
  ByteWriter w;
  w.put_u64(v);
  return to_hex(w.bytes());
}

std::string hex_u32(std::uint32_t v)
{
  ByteWriter w;
  w.put_u32(v);
  return to_hex(w.bytes());
}

std::vector<std::string_view> split_fields(std::string_view line)
{
  std::vector<std::string_view> fields;
  std::size_t                   start = 0;
  for (;;)
  {
    auto const bar = line.find('|', start);
    fields.push_back(line.substr(start, bar - start));
    if (bar == std::string_view::npos)
    {
      break;
    }
    start = bar + 1;
  }
  return fields;
}

std::uint64_t parse_fixed(std::string_view field, std::size_t width, char const *name,
                          std::size_t line)
{
  if (field.size() != width)
  {
    throw ChainFormatError{std::string{name} + " must be " + std::to_string(width) + " hex chars",
                           line};
  }
  std::uint64_t v = 0;
  for (auto b : from_hex(field))
  {
    v = (v << 8) | b;
  }
  return v;
}

Block parse_block(std::string_view text, std::size_t line)
{
  auto const fields = split_fields(text);
  if (fields.size() < 7)
  {
    throw ChainFormatError{"expected at least 7 fields", line};
  }

  try
  {
    Block block;
    block.header.index       = parse_fixed(fields[0], 16, "index", line);
    block.header.parent_hash = digest_from_hex(fields[1]);
    block.header.tx_digest   = digest_from_hex(fields[2]);
    block.header.timestamp   = parse_fixed(fields[3], 16, "timestamp", line);
    block.header.difficulty  = static_cast<std::uint32_t>(parse_fixed(fields[4], 8, "difficulty", line));
    block.header.nonce       = parse_fixed(fields[5], 16, "nonce", line);

    auto const count = parse_fixed(fields[6], 8, "tx_count", line);
    if (fields.size() != 7 + count)
    {
      throw ChainFormatError{"tx_count does not match number of transaction fields", line};
    }

    for (std::size_t i = 0; i < count; ++i)
    {
      auto const raw = from_hex(fields[7 + i]);
      ByteReader r{raw};
      Transaction tx;
      tx.tx_id     = r.get_digest();
      tx.timestamp = r.get_u64();
      tx.issuer    = r.get_u64();
      tx.fee       = r.get_u64();
      tx.payload   = r.get_blob();
      r.expect_end();
      block.transactions.push_back(std::move(tx));
    }
    return block;
  }
  catch (std::invalid_argument const &e)
  {
    throw ChainFormatError{e.what(), line};
  }
  catch (MalformedBytes const &e)
  {
    throw ChainFormatError{std::string{"transaction: "} + e.what(), line};
  }
}

}  // namespace

ChainFormatError::ChainFormatError(std::string const &what, std::size_t line)
  : std::runtime_error{"line " + std::to_string(line) + ": " + what}
  , line_{line}
{}

std::string export_chain(std::span<Block const> blocks)
{
  std::string out;
  for (auto const &block : blocks)
  {
    auto const &h = block.header;
    out += hex_u64(h.index);
    out += '|' + to_hex(h.parent_hash);
    out += '|' + to_hex(h.tx_digest);
    out += '|' + hex_u64(h.timestamp);
    out += '|' + hex_u32(h.difficulty);
    out += '|' + hex_u64(h.nonce);
    out += '|' + hex_u32(static_cast<std::uint32_t>(block.transactions.size()));
    for (auto const &tx : block.transactions)
    {
      ByteWriter w;
      w.put_digest(tx.tx_id).put_raw(encode_transaction(tx));
      out += '|' + to_hex(w.bytes());
    }
    out += '\n';
  }
  return out;
}

std::vector<Block> import_chain(std::string_view text)
{
  std::vector<Block> blocks;
  std::size_t        line_no = 0;
  std::size_t        start   = 0;
  while (start < text.size())
  {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos)
    {
      end = text.size();
    }
    auto line = text.substr(start, end - start);
    start     = end + 1;
    ++line_no;

    if (!line.empty() && line.back() == '\r')
    {
      line.remove_suffix(1);
    }
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    blocks.push_back(parse_block(line, line_no));
  }
  return blocks;
}

std::vector<Block> read_chain_file(std::filesystem::path const &path)
{
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    throw std::runtime_error("cannot open chain file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return import_chain(buffer.str());
}

void write_chain_file(std::filesystem::path const &path, std::span<Block const> blocks)
{
  std::ofstream out{path, std::ios::binary | std::ios::trunc};
  if (!out)
  {
    throw std::runtime_error("cannot write chain file " + path.string());
  }
  out << export_chain(blocks);
}

}  // namespace orbitledger::ledger
