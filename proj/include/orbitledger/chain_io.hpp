#pragma once

#include "orbitledger/ledger.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orbitledger::ledger {

/// Text export, one block per line, `|`-separated lowercase hex fields:
///
///   index(16) | parent_hash(64) | tx_digest(64) | timestamp(16) |
///   difficulty(8) | nonce(16) | tx_count(8) | tx_0 | ... | tx_{n-1}
///
/// where each tx field is hex(tx_id || canonical transaction encoding).
/// Empty lines and lines starting with '#' are ignored on import.
std::string export_chain(std::span<Block const> blocks);

class ChainFormatError : public std::runtime_error
{
public:
  ChainFormatError(std::string const &what, std::size_t line);

  std::size_t line() const noexcept
  {
    return line_;
  }

private:
  std::size_t line_;
};

/// Parses an export. Performs no ledger validation beyond structure.
std::vector<Block> import_chain(std::string_view text);

std::vector<Block> read_chain_file(std::filesystem::path const &path);
void write_chain_file(std::filesystem::path const &path, std::span<Block const> blocks);

}  // namespace orbitledger::ledger
