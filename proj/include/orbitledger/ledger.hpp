#pragma once

#include "orbitledger/bytes.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace orbitledger::ledger {

struct DigestHash
{
  std::size_t operator()(Digest const &d) const noexcept
  {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i)
    {
      h = (h << 8) | d[i];
    }
    return h;
  }
};

using TxIdSet = std::unordered_set<Digest, DigestHash>;

struct Transaction
{
  Digest        tx_id{};
  Tick          timestamp{0};
  NodeId        issuer{0};
  std::uint64_t fee{0};
  Bytes         payload;

  friend bool operator==(Transaction const &, Transaction const &) = default;
};

/// timestamp || issuer || fee || payload length || payload. Excludes tx_id.
Bytes  encode_transaction(Transaction const &tx);
Digest compute_tx_id(Transaction const &tx);
/// Builds a transaction with its tx_id filled in.
Transaction make_transaction(Tick timestamp, NodeId issuer, std::uint64_t fee, Bytes payload);

inline constexpr std::size_t HEADER_SIZE   = 92;
inline constexpr unsigned    MAX_DIFFICULTY = 16;

struct BlockHeader
{
  std::uint64_t index{0};
  Digest        parent_hash{};
  Digest        tx_digest{};
  Tick          timestamp{0};
  std::uint32_t difficulty{0};
  std::uint64_t nonce{0};

  friend bool operator==(BlockHeader const &, BlockHeader const &) = default;
};

/// Hashing preimage, big-endian:
/// index(8) || parent_hash(32) || tx_digest(32) || timestamp(8) || difficulty(4) || nonce(8)
std::array<std::uint8_t, HEADER_SIZE> encode_header(BlockHeader const &header);

/// Block hash code: SHA-256 over the canonical header, which binds the
/// transaction digest, the parent hash and the nonce.
Digest block_hash(BlockHeader const &header);

/// SHA-256 of the concatenated canonical transactions in block order.
Digest compute_tx_digest(std::span<Transaction const> transactions);

/// Count of leading '0' characters in the digest's hex string.
unsigned leading_zero_nibbles(Digest const &digest);

inline bool meets_difficulty(Digest const &digest, unsigned difficulty)
{
  return leading_zero_nibbles(digest) >= difficulty;
}

struct Block
{
  BlockHeader              header;
  std::vector<Transaction> transactions;

  Digest hash() const
  {
    return block_hash(header);
  }

  friend bool operator==(Block const &, Block const &) = default;
};

/// Unconfirmed transactions ordered by fee (highest first), ties broken by the
/// smaller tx_id. Insertion is idempotent per tx_id.
class Mempool
{
public:
  bool insert(Transaction tx);
  bool erase(Digest const &tx_id);
  bool contains(Digest const &tx_id) const;

  std::size_t size() const noexcept
  {
    return by_priority_.size();
  }
  bool empty() const noexcept
  {
    return by_priority_.empty();
  }

  /// Up to `capacity` transactions in priority order.
  std::vector<Transaction> select(std::size_t capacity) const;
  std::vector<Transaction> all() const;

private:
  struct Key
  {
    std::uint64_t fee;
    Digest        tx_id;

    bool operator<(Key const &o) const
    {
      if (fee != o.fee)
      {
        return fee > o.fee;
      }
      return tx_id < o.tx_id;
    }
  };

  std::map<Key, Transaction>                            by_priority_;
  std::unordered_map<Digest, std::uint64_t, DigestHash> fee_of_;
};

enum class RejectReason
{
  ParentMismatch,
  IndexMismatch,
  TxDigestMismatch,
  TxIdMismatch,
  InsufficientWork,
  DifficultyMismatch,
  EmptyBlock,
  DuplicateTransaction,
  GenesisParentNonZero,
};

std::string_view to_string(RejectReason reason);

struct VerifyResult
{
  std::optional<RejectReason> reason;

  bool accepted() const noexcept
  {
    return !reason.has_value();
  }
  explicit operator bool() const noexcept
  {
    return accepted();
  }

  static VerifyResult accept()
  {
    return {};
  }
  static VerifyResult reject(RejectReason r)
  {
    return {r};
  }
};

class InvalidBlock : public std::runtime_error
{
public:
  explicit InvalidBlock(RejectReason reason);

  RejectReason reason() const noexcept
  {
    return reason_;
  }

private:
  RejectReason reason_;
};

class NonceExhausted : public std::runtime_error
{
public:
  NonceExhausted();
};

class EmptyBlock : public std::runtime_error
{
public:
  EmptyBlock();
};

class IncompatibleGenesis : public std::runtime_error
{
public:
  IncompatibleGenesis();
};

struct MinedBlock
{
  Block         block;
  std::uint64_t attempts{0};
};

/// Searches nonces start, start + 1, ... until the header hash has `difficulty`
/// leading zero nibbles. Writes the winning nonce into `header` and returns the
/// number of attempts (winning nonce - start + 1).
std::uint64_t search_nonce(BlockHeader &header, std::uint64_t start = 0);

/// Assembles the top-fee `capacity` transactions on top of `parent` and mines
/// the header. Throws EmptyBlock when there is nothing to include.
MinedBlock mine_block(Mempool const &mempool, Block const &parent, unsigned difficulty,
                      std::size_t capacity, Tick timestamp);

/// Mines a genesis block (index 0, zero parent hash) holding `transactions` in
/// the order given.
MinedBlock mine_genesis(std::vector<Transaction> transactions, Tick timestamp, unsigned difficulty);

/// Recompute-and-compare verification of `block` against its claimed parent.
/// `committed` holds tx_ids already in the history the block extends.
VerifyResult verify_block(Block const &block, Block const &parent, unsigned difficulty,
                          TxIdSet const &committed = {});

VerifyResult verify_genesis(Block const &genesis, unsigned difficulty);

struct ChainReport
{
  std::optional<std::size_t>  first_invalid;
  std::optional<RejectReason> reason;

  bool valid() const noexcept
  {
    return !first_invalid.has_value();
  }
};

/// Audits a full block list from genesis, reporting the earliest failure.
ChainReport validate_chain(std::span<Block const> blocks, unsigned difficulty);

/// A replica: blocks from genesis plus the unconfirmed queue.
class Chain
{
public:
  /// Throws InvalidBlock if the genesis does not verify.
  Chain(Block genesis, unsigned difficulty);

  /// Rebuilds a chain by appending every block after the first. Throws
  /// InvalidBlock on the first failure.
  static Chain from_blocks(std::span<Block const> blocks, unsigned difficulty);

  unsigned difficulty() const noexcept
  {
    return difficulty_;
  }
  std::vector<Block> const &blocks() const noexcept
  {
    return blocks_;
  }
  Block const &tip() const noexcept
  {
    return blocks_.back();
  }
  Block const &genesis() const noexcept
  {
    return blocks_.front();
  }
  std::size_t height() const noexcept
  {
    return blocks_.size();
  }
  Mempool const &mempool() const noexcept
  {
    return mempool_;
  }

  VerifyResult verify_next(Block const &block) const;

  /// Verifies and appends; committed transactions leave the mempool.
  void append_block(Block block);

  /// Queues a transaction. Returns false if it is already pending, already
  /// committed, or its tx_id does not recompute.
  bool submit(Transaction tx);

  bool is_committed(Digest const &tx_id) const;

  /// (block index, position within block) of a committed transaction.
  std::optional<std::pair<std::size_t, std::size_t>> locate(Digest const &tx_id) const;

  MinedBlock mine_next(Tick timestamp, std::size_t capacity) const;

  /// mine_next followed by append_block.
  Block const &seal(Tick timestamp, std::size_t capacity = SIZE_MAX);

private:
  unsigned           difficulty_;
  std::vector<Block> blocks_;
  Mempool            mempool_;
  TxIdSet            committed_;
  std::unordered_map<Digest, std::pair<std::size_t, std::size_t>, DigestHash> location_;
};

enum class ForkSide
{
  First,
  Second,
};

/// Longer chain wins; equal lengths go to the lexicographically smaller tip
/// hash. Throws IncompatibleGenesis when the genesis blocks differ.
ForkSide fork_winner(std::span<Block const> a, std::span<Block const> b);

Chain const &resolve_fork(Chain const &a, Chain const &b);

}  // namespace orbitledger::ledger
