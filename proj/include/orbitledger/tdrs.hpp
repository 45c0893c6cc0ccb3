#pragma once

#include "orbitledger/ledger.hpp"
#include "orbitledger/tokens.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace orbitledger::tdrs {

struct ImageQuery
{
  std::uint64_t                     query_id{0};
  NodeId                            requester{0};
  std::vector<GeoPoint>             locations;
  std::vector<tokens::TickInterval> timeframes;
  std::uint64_t                     fee{0};
};

struct Follower
{
  NodeId   id{0};
  GeoPoint position;
  double   rate_deg_per_tick{1.0};
  Tick     available_at{0};  // end of its current capture
};

struct Slot
{
  NodeId follower{0};
  Tick   start{0};
  Tick   completion{0};
};

using Assignment = std::map<std::uint64_t, Slot>;

class InvalidQuery : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class NoFollowers : public std::runtime_error
{
public:
  NoFollowers();
};

class NotCompleted : public std::runtime_error
{
public:
  NotCompleted(std::uint64_t query_id, Tick now);
};

class UnknownQuery : public std::invalid_argument
{
public:
  explicit UnknownQuery(std::uint64_t query_id);
};

class AlreadyDelivered : public std::runtime_error
{
public:
  explicit AlreadyDelivered(std::uint64_t query_id);
};

/// Throws InvalidQuery for missing or malformed locations and timeframes.
void validate_query(ImageQuery const &query);

/// Capture start and completion if `follower` takes `query` at `now`:
/// start = max(now, follower free, earliest timeframe begin) and completion =
/// start + ceil(angular distance to the first location / rate).
Slot estimate(Follower const &follower, ImageQuery const &query, Tick now);

/// Greedy: queries by descending fee (then query id), each to the follower
/// with the earliest completion (then smaller id). Updates the followers'
/// availability and position. Throws NoFollowers. No preemption.
Assignment greedy_assign(std::vector<ImageQuery> queries, std::vector<Follower> &followers, Tick now);

/// Uplink command bytes: count-prefixed big-endian query ids.
Bytes                      encode_batch(std::vector<std::uint64_t> const &query_ids);
std::vector<std::uint64_t> decode_batch(std::span<std::uint8_t const> command);

enum class Stage
{
  Submitted,
  Committed,
  Uplinked,
  Assigned,
  Delivered,
};

std::string_view to_string(Stage stage);

struct QueryState
{
  ImageQuery query;
  Tick       submitted{0};
  Stage      stage{Stage::Submitted};
  Slot       slot;
};

struct TdrsConfig
{
  NodeId                tdrs{0};
  NodeId                ground_station{0};
  std::vector<Follower> followers;
  unsigned              difficulty{1};
};

/// The request -> uplink -> reallocation -> feedback flow on the TDRS
/// service chain.
class TdrsWorkflow
{
public:
  explicit TdrsWorkflow(TdrsConfig config, Tick now = 0);

  /// Queues the request and session tokens (both carry the query fee) for the
  /// next commit. Throws InvalidQuery, also for a reused query id.
  void submit_image_query(ImageQuery const &query, Tick now);

  /// Seals pending transactions into a block. Returns nullptr if none.
  ledger::Block const *commit(Tick now);

  /// One uplink token for every committed query not yet uplinked, committed
  /// in its own block after any queued submissions. Returns the batch; empty
  /// means nothing was done.
  std::vector<std::uint64_t> uplink_to_tdrs(Tick now);

  /// Assigns every uplinked, unassigned query. Throws NoFollowers.
  Assignment reallocate_followers(Tick now);

  /// Commits the feedback token for a finished query in its own block, after
  /// any queued submissions. Throws UnknownQuery, NotCompleted or
  /// AlreadyDelivered.
  tokens::DownlinkFeedbackToken downlink_feedback(std::uint64_t query_id, Tick now);

  /// Assigned queries whose completion tick has been reached.
  std::vector<std::uint64_t> due_for_downlink(Tick now) const;

  /// Block index and token of the query's feedback, if committed.
  std::optional<std::pair<std::size_t, tokens::DownlinkFeedbackToken>> find_feedback(std::uint64_t query_id) const;

  ledger::Chain const &chain() const noexcept
  {
    return chain_;
  }
  TdrsConfig const &config() const noexcept
  {
    return config_;
  }
  std::vector<Follower> const &followers() const noexcept
  {
    return config_.followers;
  }
  std::map<std::uint64_t, QueryState> const &queries() const noexcept
  {
    return queries_;
  }

private:
  ledger::Block const &seal(Tick now);

  TdrsConfig                          config_;
  ledger::Chain                       chain_;
  std::map<std::uint64_t, QueryState> queries_;
};

}  // namespace orbitledger::tdrs
