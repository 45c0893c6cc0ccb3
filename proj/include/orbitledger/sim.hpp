#pragma once

#include "orbitledger/ledger.hpp"
#include "orbitledger/orbital.hpp"
#include "orbitledger/tokens.hpp"

#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace orbitledger::sim {

enum class NodeKind
{
  Satellite,
  GroundStation,
  UserTerminal,
  Tdrs,
};

std::string_view        to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);

struct Roles
{
  bool full_node{false};
  bool miner{false};
  bool reader_only{false};
};

struct NodeSpec
{
  NodeId   id{0};
  NodeKind kind{NodeKind::GroundStation};
  /// Satellites and TDRS only; TDRS defaults to GEO.
  std::optional<OrbitClass> orbit;
  KinematicState            state;
  Roles                     roles;
  /// Virtual zone the satellite belongs to, for inter-satellite latency.
  std::optional<std::uint64_t> zone;
};

using ChainSelector = std::variant<std::uint64_t, Digest>;

struct BlockAnnounce
{
  ledger::Block block;
};

struct TxGossip
{
  ledger::Transaction tx;
  /// Set on the hop from the submitter to its entry node, which then
  /// forwards to every miner.
  bool forward{false};
};

struct ChainQuery
{
  std::uint64_t request_id{0};
  ChainSelector selector;
};

struct ChainResponse
{
  std::uint64_t                request_id{0};
  Tick                         answered_at{0};
  std::size_t                  replica_height{0};
  std::optional<ledger::Block> block;
  std::optional<tokens::SpaceToken> token;

  bool found() const noexcept
  {
    return block.has_value();
  }
};

struct AppMessage
{
  std::string topic;
  Bytes       payload;
};

using Message = std::variant<BlockAnnounce, TxGossip, ChainQuery, ChainResponse, AppMessage>;

std::string_view message_name(Message const &message);

struct Envelope
{
  NodeId  from{0};
  NodeId  to{0};
  Tick    sent{0};
  Message message;
};

struct Deliver
{
  Envelope envelope;
};

struct Timer
{
  std::string   tag;
  std::uint64_t arg{0};
};

struct DebrisSpawn
{
  std::uint64_t debris_id{0};
};

struct QueryArrival
{
  std::uint64_t query_id{0};
};

using EventBody = std::variant<Deliver, Timer, DebrisSpawn, QueryArrival>;

struct Event
{
  Tick          due{0};
  std::uint64_t sequence{0};
  NodeId        node{0};
  EventBody     body;
};

class PastDue : public std::logic_error
{
public:
  PastDue(Tick due, Tick now);
};

class DuplicateId : public std::invalid_argument
{
public:
  explicit DuplicateId(NodeId id);
};

class UnknownNode : public std::invalid_argument
{
public:
  explicit UnknownNode(NodeId id);
};

class InvalidRoles : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Min-queue on (due tick, insertion sequence): equal ticks pop in FIFO order.
class EventQueue
{
public:
  /// Throws PastDue if `due` precedes the current tick.
  void schedule(Tick due, NodeId node, EventBody body);

  bool empty() const noexcept
  {
    return heap_.empty();
  }
  std::size_t size() const noexcept
  {
    return heap_.size();
  }
  Tick now() const noexcept
  {
    return now_;
  }
  std::optional<Tick> next_due() const;

  /// Removes the earliest event and advances the clock to its tick.
  Event pop();

  void advance_to(Tick tick);

private:
  struct Later
  {
    bool operator()(Event const &a, Event const &b) const
    {
      if (a.due != b.due)
      {
        return a.due > b.due;
      }
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t                                          next_sequence_{0};
  Tick                                                   now_{0};
};

/// Latencies in ticks per pair of node classes. Satellites and TDRS talk to
/// the ground with their orbit's latency; satellites talk to each other with
/// the same-zone or cross-zone latency; ground, user and ground-user links are
/// terrestrial.
struct LinkModel
{
  Tick     leo_ground{2};
  Tick     meo_ground{8};
  Tick     geo_ground{12};
  Tick     isl_same_zone{1};
  Tick     isl_cross_zone{4};
  Tick     terrestrial{1};
  double   drop_probability{0.0};
  unsigned max_attempts{3};

  /// Throws std::invalid_argument on latency 0 or drop probability outside [0, 1).
  void validate() const;

  Tick latency(NodeSpec const &a, NodeSpec const &b) const;

  /// Sets one named latency ("leo_ground", "isl_same_zone", ...). Returns false
  /// for unknown names.
  bool set(std::string_view name, Tick ticks);
};

struct WorldConfig
{
  std::uint64_t seed{0};
  unsigned      difficulty{1};
  std::size_t   block_capacity{10};
  LinkModel     links;
};

struct SimNode
{
  NodeSpec                     spec;
  std::optional<ledger::Chain> replica;
  std::vector<Envelope>        inbox;

  bool is_full() const noexcept
  {
    return replica.has_value();
  }
};

struct SubmitAck
{
  bool        accepted{false};
  std::string reason;
};

/// Deterministic discrete-event world. Handlers run one at a time on the
/// caller's thread; every observable effect is appended to the event log.
class World
{
public:
  using TimerHandler   = std::function<void(World &, NodeId, Timer const &)>;
  using IdHandler      = std::function<void(World &, NodeId, std::uint64_t)>;
  using MessageHandler = std::function<void(World &, Envelope const &)>;
  using Fields         = std::vector<std::pair<std::string_view, std::string>>;

  explicit World(WorldConfig config);

  WorldConfig const &config() const noexcept
  {
    return config_;
  }
  Tick now() const noexcept
  {
    return queue_.now();
  }
  ledger::Block const &genesis() const noexcept
  {
    return genesis_;
  }

  /// Full nodes start from the current winning chain. Throws DuplicateId or
  /// InvalidRoles.
  void attach_node(NodeSpec spec);

  bool           has_node(NodeId id) const;
  SimNode const &node(NodeId id) const;
  NodeSpec      &spec(NodeId id);
  std::vector<NodeId> node_ids() const;
  std::vector<NodeId> full_nodes() const;
  std::vector<NodeId> miners() const;

  void schedule(Tick due, NodeId node, EventBody body);
  void schedule_mining(NodeId miner, Tick at);

  /// Processes every event due at or before `tick`, then advances the clock to
  /// `tick`. Returns the number of events processed.
  std::size_t run_until(Tick tick);

  /// Runs until the queue drains. Returns the tick of the last event.
  Tick run_to_quiescence();

  bool idle() const noexcept
  {
    return queue_.empty();
  }

  /// Applies the link model. Returns true if a delivery was scheduled, false
  /// if every attempt was dropped.
  bool send(NodeId from, NodeId to, Message message);

  /// One delivery per peer full node. Returns the number scheduled.
  std::size_t broadcast_block(NodeId origin, ledger::Block const &block);

  /// Mines the miner's mempool onto its tip, appends locally and broadcasts.
  /// Returns nullopt when the mempool is empty.
  std::optional<ledger::MinedBlock> mine(NodeId miner);

  SubmitAck submit_transaction(NodeId origin, ledger::Transaction tx, NodeId via);

  /// Sends a chain query; the response lands in the reader's inbox and in
  /// response(request_id). Returns the request id.
  std::uint64_t read_chain(NodeId reader, NodeId via, ChainSelector selector);

  std::optional<ChainResponse> response(std::uint64_t request_id) const;

  void on_timer(std::string tag, TimerHandler handler);
  void on_message(std::string topic, MessageHandler handler);
  void on_debris_spawn(IdHandler handler);
  void on_query_arrival(IdHandler handler);

  /// Appends `t=<tick> node=<id> kind=<KIND> k=v ...` to the event log.
  void log_event(NodeId node, std::string_view kind, Fields const &fields = {});

  std::vector<std::string> const &event_log() const noexcept
  {
    return log_;
  }
  std::string event_log_text() const;

  /// Best chain over all full replicas by the fork-choice rule.
  std::vector<ledger::Block> const &winning_chain() const;

  /// True when every full replica holds byte-identical blocks.
  bool replicas_converged() const;

  /// Draws a uniform double in [0, 1) from the world RNG.
  double draw_unit();

private:
  struct ReplicaState
  {
    std::map<Digest, ledger::Block>              store;
    std::map<Digest, std::vector<ledger::Block>> orphans;
  };

  SimNode &mutable_node(NodeId id);
  void     dispatch(Event const &event);
  void     deliver(Envelope const &envelope);
  void     receive_block(NodeId node, NodeId from, ledger::Block const &block);
  void     receive_tx(NodeId node, NodeId from, TxGossip const &gossip);
  void     answer_query(NodeId node, Envelope const &envelope, ChainQuery const &query);
  std::vector<ledger::Block> branch_to(ReplicaState const &state, Digest tip) const;

  WorldConfig                                config_;
  ledger::Block                              genesis_;
  EventQueue                                 queue_;
  std::mt19937_64                            rng_;
  std::map<NodeId, SimNode>                  nodes_;
  std::map<NodeId, ReplicaState>             replica_state_;
  std::map<std::pair<NodeId, NodeId>, Tick>  last_delivery_;
  std::map<std::uint64_t, ChainResponse>     responses_;
  std::map<std::string, TimerHandler>        timer_handlers_;
  std::map<std::string, MessageHandler>      message_handlers_;
  IdHandler                                  debris_handler_;
  IdHandler                                  query_handler_;
  std::uint64_t                              next_request_{1};
  std::vector<std::string>                   log_;
};

/// First 16 hex characters of a digest, as used in the event log.
std::string short_hex(Digest const &digest);

}  // namespace orbitledger::sim
