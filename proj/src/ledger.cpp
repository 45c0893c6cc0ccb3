#include "orbitledger/ledger.hpp"

#include "orbitledger/sha256.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

namespace orbitledger::ledger {
namespace {

// Bytes of the header preceding the last 64-byte-aligned boundary; everything
// before it is constant while the nonce varies.
constexpr std::size_t HEADER_PREFIX = 64;

}  // namespace

Bytes encode_transaction(Transaction const &tx)
{
  ByteWriter w;
  w.put_u64(tx.timestamp).put_u64(tx.issuer).put_u64(tx.fee).put_blob(tx.payload);
  return std::move(w).take();
}

Digest compute_tx_id(Transaction const &tx)
{
  return sha256(encode_transaction(tx));
}

Transaction make_transaction(Tick timestamp, NodeId issuer, std::uint64_t fee, Bytes payload)
{
  Transaction tx{{}, timestamp, issuer, fee, std::move(payload)};
  tx.tx_id = compute_tx_id(tx);
  return tx;
}

std::array<std::uint8_t, HEADER_SIZE> encode_header(BlockHeader const &header)
{
  ByteWriter w;
  w.put_u64(header.index)
      .put_digest(header.parent_hash)
      .put_digest(header.tx_digest)
      .put_u64(header.timestamp)
      .put_u32(header.difficulty)
      .put_u64(header.nonce);

  std::array<std::uint8_t, HEADER_SIZE> out{};
  std::memcpy(out.data(), w.bytes().data(), HEADER_SIZE);
  return out;
}

Digest block_hash(BlockHeader const &header)
{
  return sha256(encode_header(header));
}

Digest compute_tx_digest(std::span<Transaction const> transactions)
{
  Sha256 hasher;
  for (auto const &tx : transactions)
  {
    hasher.update(encode_transaction(tx));
  }
  return hasher.finish();
}

unsigned leading_zero_nibbles(Digest const &digest)
{
  unsigned count = 0;
  for (auto b : digest)
  {
    if (b == 0)
    {
      count += 2;
      continue;
    }
    if (b < 0x10)
    {
      ++count;
    }
    break;
  }
  return count;
}

bool Mempool::insert(Transaction tx)
{
  if (fee_of_.contains(tx.tx_id))
  {
    return false;
  }
  fee_of_.emplace(tx.tx_id, tx.fee);
  Key key{tx.fee, tx.tx_id};
  by_priority_.emplace(key, std::move(tx));
  return true;
}

bool Mempool::erase(Digest const &tx_id)
{
  auto it = fee_of_.find(tx_id);
  if (it == fee_of_.end())
  {
    return false;
  }
  by_priority_.erase(Key{it->second, tx_id});
  fee_of_.erase(it);
  return true;
}

bool Mempool::contains(Digest const &tx_id) const
{
  return fee_of_.contains(tx_id);
}

std::vector<Transaction> Mempool::select(std::size_t capacity) const
{
  std::vector<Transaction> out;
  out.reserve(std::min(capacity, by_priority_.size()));
  for (auto const &[key, tx] : by_priority_)
  {
    if (out.size() >= capacity)
    {
      break;
    }
    out.push_back(tx);
  }
  return out;
}

std::vector<Transaction> Mempool::all() const
{
  return select(by_priority_.size());
}

std::string_view to_string(RejectReason reason)
{
  switch (reason)
  {
  case RejectReason::ParentMismatch:
    return "parent mismatch";
  case RejectReason::IndexMismatch:
    return "index mismatch";
  case RejectReason::TxDigestMismatch:
    return "tx_digest mismatch";
  case RejectReason::TxIdMismatch:
    return "tx_id mismatch";
  case RejectReason::InsufficientWork:
    return "insufficient work";
  case RejectReason::DifficultyMismatch:
    return "difficulty mismatch";
  case RejectReason::EmptyBlock:
    return "empty block";
  case RejectReason::DuplicateTransaction:
    return "duplicate transaction";
  case RejectReason::GenesisParentNonZero:
    return "genesis parent nonzero";
  }
  return "unknown";
}

InvalidBlock::InvalidBlock(RejectReason reason)
  : std::runtime_error{std::string{"invalid block: "} + std::string{to_string(reason)}}
  , reason_{reason}
{}

NonceExhausted::NonceExhausted()
  : std::runtime_error{"nonce space exhausted"}
{}

EmptyBlock::EmptyBlock()
  : std::runtime_error{"no transactions to include in block"}
{}

IncompatibleGenesis::IncompatibleGenesis()
  : std::runtime_error{"chains do not share a genesis block"}
{}

std::uint64_t search_nonce(BlockHeader &header, std::uint64_t start)
{
  if (header.difficulty > MAX_DIFFICULTY)
  {
    throw std::invalid_argument("difficulty exceeds 16 nibbles");
  }

  auto preimage = encode_header(header);

  Sha256 midstate;
  midstate.update(std::span{preimage}.first(HEADER_PREFIX));
  auto const tail = std::span{preimage}.subspan(HEADER_PREFIX);

  std::uint64_t nonce = start;
  for (;;)
  {
    for (int i = 0; i < 8; ++i)
    {
      preimage[HEADER_SIZE - 1 - static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(nonce >> (8 * i));
    }
    Sha256 attempt{midstate};
    if (meets_difficulty(attempt.update(tail).finish(), header.difficulty))
    {
      header.nonce = nonce;
      return nonce - start + 1;
    }
    if (nonce == std::numeric_limits<std::uint64_t>::max())
    {
      throw NonceExhausted{};
    }
    ++nonce;
  }
}

MinedBlock mine_block(Mempool const &mempool, Block const &parent, unsigned difficulty,
                      std::size_t capacity, Tick timestamp)
{
  auto transactions = mempool.select(capacity);
  if (transactions.empty())
  {
    throw EmptyBlock{};
  }

  BlockHeader header;
  header.index       = parent.header.index + 1;
  header.parent_hash = parent.hash();
  header.tx_digest   = compute_tx_digest(transactions);
  header.timestamp   = timestamp;
  header.difficulty  = difficulty;

  auto const attempts = search_nonce(header);
  return {Block{header, std::move(transactions)}, attempts};
}

MinedBlock mine_genesis(std::vector<Transaction> transactions, Tick timestamp, unsigned difficulty)
{
  BlockHeader header;
  header.tx_digest  = compute_tx_digest(transactions);
  header.timestamp  = timestamp;
  header.difficulty = difficulty;

  auto const attempts = search_nonce(header);
  return {Block{header, std::move(transactions)}, attempts};
}

namespace {

std::optional<RejectReason> check_body(Block const &block, unsigned difficulty)
{
  if (block.header.tx_digest != compute_tx_digest(block.transactions))
  {
    return RejectReason::TxDigestMismatch;
  }

  TxIdSet seen;
  for (auto const &tx : block.transactions)
  {
    if (tx.tx_id != compute_tx_id(tx))
    {
      return RejectReason::TxIdMismatch;
    }
    if (!seen.insert(tx.tx_id).second)
    {
      return RejectReason::DuplicateTransaction;
    }
  }

  if (block.header.difficulty != difficulty)
  {
    return RejectReason::DifficultyMismatch;
  }
  if (!meets_difficulty(block.hash(), difficulty))
  {
    return RejectReason::InsufficientWork;
  }
  return std::nullopt;
}

}  // namespace

VerifyResult verify_block(Block const &block, Block const &parent, unsigned difficulty,
                          TxIdSet const &committed)
{
  for (auto const &tx : block.transactions)
  {
    if (committed.contains(tx.tx_id))
    {
      return VerifyResult::reject(RejectReason::DuplicateTransaction);
    }
  }
  if (block.header.parent_hash != parent.hash())
  {
    return VerifyResult::reject(RejectReason::ParentMismatch);
  }
  if (block.header.index != parent.header.index + 1)
  {
    return VerifyResult::reject(RejectReason::IndexMismatch);
  }
  if (block.transactions.empty())
  {
    return VerifyResult::reject(RejectReason::EmptyBlock);
  }
  if (auto reason = check_body(block, difficulty))
  {
    return VerifyResult::reject(*reason);
  }
  return VerifyResult::accept();
}

VerifyResult verify_genesis(Block const &genesis, unsigned difficulty)
{
  if (genesis.header.index != 0)
  {
    return VerifyResult::reject(RejectReason::IndexMismatch);
  }
  if (genesis.header.parent_hash != ZERO_DIGEST)
  {
    return VerifyResult::reject(RejectReason::GenesisParentNonZero);
  }
  if (auto reason = check_body(genesis, difficulty))
  {
    return VerifyResult::reject(*reason);
  }
  return VerifyResult::accept();
}

ChainReport validate_chain(std::span<Block const> blocks, unsigned difficulty)
{
  if (blocks.empty())
  {
    return {};
  }
  if (auto v = verify_genesis(blocks.front(), difficulty); !v)
  {
    return {0, v.reason};
  }

  TxIdSet committed;
  for (auto const &tx : blocks.front().transactions)
  {
    committed.insert(tx.tx_id);
  }

  for (std::size_t i = 1; i < blocks.size(); ++i)
  {
    if (auto v = verify_block(blocks[i], blocks[i - 1], difficulty, committed); !v)
    {
      return {i, v.reason};
    }
    for (auto const &tx : blocks[i].transactions)
    {
      committed.insert(tx.tx_id);
    }
  }
  return {};
}

Chain::Chain(Block genesis, unsigned difficulty)
  : difficulty_{difficulty}
{
  if (auto v = verify_genesis(genesis, difficulty); !v)
  {
    throw InvalidBlock{*v.reason};
  }
  for (std::size_t i = 0; i < genesis.transactions.size(); ++i)
  {
    committed_.insert(genesis.transactions[i].tx_id);
    location_.emplace(genesis.transactions[i].tx_id, std::pair{std::size_t{0}, i});
  }
  blocks_.push_back(std::move(genesis));
}

Chain Chain::from_blocks(std::span<Block const> blocks, unsigned difficulty)
{
  if (blocks.empty())
  {
    throw std::invalid_argument("chain needs a genesis block");
  }
  Chain chain{blocks.front(), difficulty};
  for (auto const &block : blocks.subspan(1))
  {
    chain.append_block(block);
  }
  return chain;
}

VerifyResult Chain::verify_next(Block const &block) const
{
  return verify_block(block, tip(), difficulty_, committed_);
}

void Chain::append_block(Block block)
{
  if (auto v = verify_next(block); !v)
  {
    throw InvalidBlock{*v.reason};
  }
  auto const index = blocks_.size();
  for (std::size_t i = 0; i < block.transactions.size(); ++i)
  {
    auto const &id = block.transactions[i].tx_id;
    mempool_.erase(id);
    committed_.insert(id);
    location_.emplace(id, std::pair{index, i});
  }
  blocks_.push_back(std::move(block));
}

bool Chain::submit(Transaction tx)
{
  if (committed_.contains(tx.tx_id) || tx.tx_id != compute_tx_id(tx))
  {
    return false;
  }
  return mempool_.insert(std::move(tx));
}

bool Chain::is_committed(Digest const &tx_id) const
{
  return committed_.contains(tx_id);
}

std::optional<std::pair<std::size_t, std::size_t>> Chain::locate(Digest const &tx_id) const
{
  if (auto it = location_.find(tx_id); it != location_.end())
  {
    return it->second;
  }
  return std::nullopt;
}

MinedBlock Chain::mine_next(Tick timestamp, std::size_t capacity) const
{
  return mine_block(mempool_, tip(), difficulty_, capacity, timestamp);
}

Block const &Chain::seal(Tick timestamp, std::size_t capacity)
{
  append_block(mine_next(timestamp, capacity).block);
  return tip();
}

ForkSide fork_winner(std::span<Block const> a, std::span<Block const> b)
{
  if (a.empty() || b.empty() || a.front().hash() != b.front().hash())
  {
    throw IncompatibleGenesis{};
  }
  if (a.size() != b.size())
  {
    return a.size() > b.size() ? ForkSide::First : ForkSide::Second;
  }
  return b.back().hash() < a.back().hash() ? ForkSide::Second : ForkSide::First;
}

Chain const &resolve_fork(Chain const &a, Chain const &b)
{
  return fork_winner(a.blocks(), b.blocks()) == ForkSide::First ? a : b;
}

}  // namespace orbitledger::ledger
