#include "orbitledger/tdrs.hpp"

#include "orbitledger/sha256.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace orbitledger::tdrs {

NoFollowers::NoFollowers()
  : std::runtime_error{"no follower satellites are attached"}
{}

NotCompleted::NotCompleted(std::uint64_t query_id, Tick now)
  : std::runtime_error{"query " + std::to_string(query_id) + " is not complete at tick " + std::to_string(now)}
{}

UnknownQuery::UnknownQuery(std::uint64_t query_id)
  : std::invalid_argument{"unknown query " + std::to_string(query_id)}
{}

AlreadyDelivered::AlreadyDelivered(std::uint64_t query_id)
  : std::runtime_error{"feedback for query " + std::to_string(query_id) + " was already committed"}
{}

std::string_view to_string(Stage stage)
{
  switch (stage)
  {
  case Stage::Submitted:
    return "submitted";
  case Stage::Committed:
    return "committed";
  case Stage::Uplinked:
    return "uplinked";
  case Stage::Assigned:
    return "assigned";
  case Stage::Delivered:
    return "delivered";
  }
  return "unknown";
}

void validate_query(ImageQuery const &query)
{
  if (query.locations.empty())
  {
    throw InvalidQuery{"query " + std::to_string(query.query_id) + " has no locations"};
  }
  if (query.timeframes.empty())
  {
    throw InvalidQuery{"query " + std::to_string(query.query_id) + " has no timeframes"};
  }
  try
  {
    tokens::validate_token(tokens::UserRequestToken{query.query_id, query.requester, query.locations, query.timeframes});
  }
  catch (tokens::InvalidFields const &e)
  {
    throw InvalidQuery{e.what()};
  }
}

Slot estimate(Follower const &follower, ImageQuery const &query, Tick now)
{
  Tick earliest = query.timeframes.front().begin;
  for (auto const &tf : query.timeframes)
  {
    earliest = std::min(earliest, tf.begin);
  }
  Tick const   start  = std::max({now, follower.available_at, earliest});
  double const travel = angular_distance_deg(follower.position, query.locations.front()) / follower.rate_deg_per_tick;
  return {follower.id, start, start + static_cast<Tick>(std::ceil(travel))};
}

Assignment greedy_assign(std::vector<ImageQuery> queries, std::vector<Follower> &followers, Tick now)
{
  if (followers.empty())
  {
    throw NoFollowers{};
  }
  std::sort(queries.begin(), queries.end(), [](ImageQuery const &a, ImageQuery const &b) {
    return a.fee != b.fee ? a.fee > b.fee : a.query_id < b.query_id;
  });

  Assignment assignment;
  for (auto const &query : queries)
  {
    Follower *best = nullptr;
    Slot      best_slot;
    for (auto &f : followers)
    {
      auto const slot = estimate(f, query, now);
      if (best == nullptr || slot.completion < best_slot.completion ||
          (slot.completion == best_slot.completion && f.id < best->id))
      {
        best      = &f;
        best_slot = slot;
      }
    }
    best->available_at = best_slot.completion;
    best->position     = query.locations.front();
    assignment.emplace(query.query_id, best_slot);
  }
  return assignment;
}

Bytes encode_batch(std::vector<std::uint64_t> const &query_ids)
{
  ByteWriter w;
  w.put_count(query_ids.size());
  for (auto id : query_ids)
  {
    w.put_u64(id);
  }
  return std::move(w).take();
}

std::vector<std::uint64_t> decode_batch(std::span<std::uint8_t const> command)
{
  ByteReader r{command};
  auto const n = r.get_count(8);
  std::vector<std::uint64_t> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    ids.push_back(r.get_u64());
  }
  r.expect_end();
  return ids;
}

TdrsWorkflow::TdrsWorkflow(TdrsConfig config, Tick now)
  : config_{std::move(config)}
  , chain_{[&] {
    std::set<NodeId> ids;
    for (auto const &f : config_.followers)
    {
      if (!(f.rate_deg_per_tick > 0.0) || !std::isfinite(f.rate_deg_per_tick) || !f.position.valid() ||
          !ids.insert(f.id).second)
      {
        throw std::invalid_argument("follower " + std::to_string(f.id) + " has a bad rate, position or id");
      }
    }
    tokens::DecisionToken const opening{"tdrs service tdrs=" + std::to_string(config_.tdrs) +
                                            " ground=" + std::to_string(config_.ground_station),
                                        config_.tdrs};
    auto genesis = ledger::mine_genesis({tokens::to_transaction(opening, config_.tdrs, 0, now)}, now,
                                        config_.difficulty);
    return ledger::Chain{std::move(genesis.block), config_.difficulty};
  }()}
{}

void TdrsWorkflow::submit_image_query(ImageQuery const &query, Tick now)
{
  validate_query(query);
  if (queries_.contains(query.query_id))
  {
    throw InvalidQuery{"query id " + std::to_string(query.query_id) + " already used"};
  }
  tokens::UserRequestToken const request{query.query_id, query.requester, query.locations, query.timeframes};
  tokens::TransactionSessionToken const session{query.query_id, query.requester, config_.ground_station,
                                                "query=" + std::to_string(query.query_id)};
  chain_.submit(tokens::to_transaction(request, query.requester, query.fee, now));
  chain_.submit(tokens::to_transaction(session, query.requester, query.fee, now));
  queries_.emplace(query.query_id, QueryState{query, now, Stage::Submitted, {}});
}

ledger::Block const &TdrsWorkflow::seal(Tick now)
{
  auto const &block = chain_.seal(now);
  for (auto const &tx : block.transactions)
  {
    auto const token = tokens::token_of(tx);
    if (auto const *req = token ? std::get_if<tokens::UserRequestToken>(&*token) : nullptr)
    {
      queries_.at(req->query_id).stage = Stage::Committed;
    }
  }
  return block;
}

ledger::Block const *TdrsWorkflow::commit(Tick now)
{
  if (chain_.mempool().empty())
  {
    return nullptr;
  }
  return &seal(now);
}

std::vector<std::uint64_t> TdrsWorkflow::uplink_to_tdrs(Tick now)
{
  std::vector<std::uint64_t> batch;
  for (auto const &[id, state] : queries_)
  {
    if (state.stage == Stage::Committed)
    {
      batch.push_back(id);
    }
  }
  if (batch.empty())
  {
    return batch;
  }
  commit(now);  // queued requests keep their own block
  tokens::UplinkToken const uplink{config_.ground_station, config_.tdrs, encode_batch(batch)};
  chain_.submit(tokens::to_transaction(uplink, config_.ground_station, 0, now));
  seal(now);
  for (auto id : batch)
  {
    queries_.at(id).stage = Stage::Uplinked;
  }
  return batch;
}

Assignment TdrsWorkflow::reallocate_followers(Tick now)
{
  std::vector<ImageQuery> waiting;
  for (auto const &[id, state] : queries_)
  {
    if (state.stage == Stage::Uplinked)
    {
      waiting.push_back(state.query);
    }
  }
  if (config_.followers.empty())
  {
    throw NoFollowers{};
  }
  auto assignment = greedy_assign(std::move(waiting), config_.followers, now);
  for (auto const &[id, slot] : assignment)
  {
    auto &state = queries_.at(id);
    state.stage = Stage::Assigned;
    state.slot  = slot;
  }
  return assignment;
}

tokens::DownlinkFeedbackToken TdrsWorkflow::downlink_feedback(std::uint64_t query_id, Tick now)
{
  auto it = queries_.find(query_id);
  if (it == queries_.end())
  {
    throw UnknownQuery{query_id};
  }
  auto &state = it->second;
  if (state.stage == Stage::Delivered)
  {
    throw AlreadyDelivered{query_id};
  }
  if (state.stage != Stage::Assigned || now < state.slot.completion)
  {
    throw NotCompleted{query_id, now};
  }

  // Placeholder for the captured image.
  ByteWriter image;
  image.put_string("image").put_u64(query_id).put_u64(state.slot.follower).put_u64(state.slot.completion);

  tokens::DownlinkFeedbackToken const feedback{query_id,
                                               sha256(image.bytes()),
                                               now,
                                               state.slot.start,
                                               state.slot.completion,
                                               "follower=" + std::to_string(state.slot.follower)};
  commit(now);
  chain_.submit(tokens::to_transaction(feedback, config_.tdrs, 0, now));
  seal(now);
  state.stage = Stage::Delivered;
  return feedback;
}

std::vector<std::uint64_t> TdrsWorkflow::due_for_downlink(Tick now) const
{
  std::vector<std::uint64_t> due;
  for (auto const &[id, state] : queries_)
  {
    if (state.stage == Stage::Assigned && state.slot.completion <= now)
    {
      due.push_back(id);
    }
  }
  return due;
}

std::optional<std::pair<std::size_t, tokens::DownlinkFeedbackToken>>
TdrsWorkflow::find_feedback(std::uint64_t query_id) const
{
  for (auto const &block : chain_.blocks())
  {
    for (auto const &tx : block.transactions)
    {
      auto const token = tokens::token_of(tx);
      if (auto const *f = token ? std::get_if<tokens::DownlinkFeedbackToken>(&*token) : nullptr;
          f != nullptr && f->query_id == query_id)
      {
        return std::pair{static_cast<std::size_t>(block.header.index), *f};
      }
    }
  }
  return std::nullopt;
}

}  // namespace orbitledger::tdrs
