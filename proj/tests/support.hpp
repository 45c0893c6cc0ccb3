#pragma once

#include "orbitledger/ledger.hpp"
#include "orbitledger/tokens.hpp"

#include <random>
#include <string>

namespace orbitledger::testing {

inline ledger::Transaction decision_tx(std::string text, NodeId issuer, std::uint64_t fee,
                                       Tick timestamp = 1)
{
  return tokens::to_transaction(tokens::DecisionToken{std::move(text), 0}, issuer, fee, timestamp);
}

inline ledger::Block empty_genesis(unsigned difficulty = 0)
{
  return ledger::mine_genesis({}, 0, difficulty).block;
}

/// Genesis plus `extra` mined blocks, each holding `per_block` decision txs.
inline ledger::Chain build_chain(std::size_t extra, unsigned difficulty, std::size_t per_block = 2,
                                 std::uint64_t salt = 0)
{
  ledger::Chain chain{empty_genesis(difficulty), difficulty};
  for (std::size_t b = 0; b < extra; ++b)
  {
    for (std::size_t i = 0; i < per_block; ++i)
    {
      chain.submit(decision_tx("entry " + std::to_string(salt) + "/" + std::to_string(b) + "/" +
                                   std::to_string(i),
                               100 + i, 10 + i, b + 1));
    }
    chain.seal(b + 1, per_block);
  }
  return chain;
}

}  // namespace orbitledger::testing
