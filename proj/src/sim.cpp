#include "orbitledger/sim.hpp"

#include "orbitledger/sha256.hpp"

#include <algorithm>

namespace orbitledger::sim {
namespace {

bool satellite_like(NodeSpec const &spec)
{
  return spec.kind == NodeKind::Satellite || spec.kind == NodeKind::Tdrs;
}

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string selector_text(ChainSelector const &selector)
{
  if (auto const *index = std::get_if<std::uint64_t>(&selector))
  {
    return "index:" + std::to_string(*index);
  }
  return "token:" + short_hex(std::get<Digest>(selector));
}

}  // namespace

std::string short_hex(Digest const &digest)
{
  return to_hex(std::span<std::uint8_t const>{digest}.first(8));
}

std::string_view to_string(NodeKind kind)
{
  switch (kind)
  {
  case NodeKind::Satellite:
    return "satellite";
  case NodeKind::GroundStation:
    return "ground";
  case NodeKind::UserTerminal:
    return "user";
  case NodeKind::Tdrs:
    return "tdrs";
  }
  return "unknown";
}

std::optional<NodeKind> parse_node_kind(std::string_view text)
{
  for (auto kind : {NodeKind::Satellite, NodeKind::GroundStation, NodeKind::UserTerminal, NodeKind::Tdrs})
  {
    if (to_string(kind) == text)
    {
      return kind;
    }
  }
  return std::nullopt;
}

std::string_view message_name(Message const &message)
{
  return std::visit(Overloaded{
                        [](BlockAnnounce const &) { return std::string_view{"BLOCK"}; },
                        [](TxGossip const &) { return std::string_view{"TX"}; },
                        [](ChainQuery const &) { return std::string_view{"QUERY"}; },
                        [](ChainResponse const &) { return std::string_view{"RESPONSE"}; },
                        [](AppMessage const &) { return std::string_view{"APP"}; },
                    },
                    message);
}

PastDue::PastDue(Tick due, Tick now)
  : std::logic_error{"event due at tick " + std::to_string(due) + " precedes current tick " +
                     std::to_string(now)}
{}

DuplicateId::DuplicateId(NodeId id)
  : std::invalid_argument{"node id " + std::to_string(id) + " already attached"}
{}

UnknownNode::UnknownNode(NodeId id)
  : std::invalid_argument{"unknown node id " + std::to_string(id)}
{}

void EventQueue::schedule(Tick due, NodeId node, EventBody body)
{
  if (due < now_)
  {
    throw PastDue{due, now_};
  }
  heap_.push(Event{due, next_sequence_++, node, std::move(body)});
}

std::optional<Tick> EventQueue::next_due() const
{
  if (heap_.empty())
  {
    return std::nullopt;
  }
  return heap_.top().due;
}

Event EventQueue::pop()
{
  Event event = heap_.top();
  heap_.pop();
  now_ = event.due;
  return event;
}

void EventQueue::advance_to(Tick tick)
{
  if (tick < now_)
  {
    throw PastDue{tick, now_};
  }
  now_ = tick;
}

void LinkModel::validate() const
{
  for (auto t : {leo_ground, meo_ground, geo_ground, isl_same_zone, isl_cross_zone, terrestrial})
  {
    if (t < 1)
    {
      throw std::invalid_argument("link latency must be at least 1 tick");
    }
  }
  if (!(drop_probability >= 0.0 && drop_probability < 1.0))
  {
    throw std::invalid_argument("drop probability must lie in [0, 1)");
  }
  if (max_attempts < 1)
  {
    throw std::invalid_argument("at least one transmission attempt is required");
  }
}

Tick LinkModel::latency(NodeSpec const &a, NodeSpec const &b) const
{
  bool const sa = satellite_like(a);
  bool const sb = satellite_like(b);
  if (sa && sb)
  {
    bool const same_zone = a.zone.has_value() && a.zone == b.zone;
    return same_zone ? isl_same_zone : isl_cross_zone;
  }
  if (!sa && !sb)
  {
    return terrestrial;
  }
  auto const orbit = (sa ? a : b).orbit.value_or(OrbitClass::GEO);
  switch (orbit)
  {
  case OrbitClass::LEO:
    return leo_ground;
  case OrbitClass::MEO:
    return meo_ground;
  case OrbitClass::GEO:
    return geo_ground;
  }
  return geo_ground;
}

bool LinkModel::set(std::string_view name, Tick ticks)
{
  std::pair<std::string_view, Tick *> const fields[] = {
      {"leo_ground", &leo_ground},         {"meo_ground", &meo_ground},
      {"geo_ground", &geo_ground},         {"isl_same_zone", &isl_same_zone},
      {"isl_cross_zone", &isl_cross_zone}, {"terrestrial", &terrestrial},
  };
  for (auto const &[key, field] : fields)
  {
    if (key == name)
    {
      *field = ticks;
      return true;
    }
  }
  return false;
}

World::World(WorldConfig config)
  : config_{std::move(config)}
  , genesis_{ledger::mine_genesis({}, 0, config_.difficulty).block}
  , rng_{config_.seed}
{
  config_.links.validate();
}

void World::attach_node(NodeSpec spec)
{
  if (nodes_.contains(spec.id))
  {
    throw DuplicateId{spec.id};
  }
  auto const &roles = spec.roles;
  if (roles.miner && !roles.full_node)
  {
    throw InvalidRoles{"a miner must be a full node"};
  }
  if (roles.reader_only && (roles.miner || roles.full_node))
  {
    throw InvalidRoles{"a reader-only node cannot hold a replica or mine"};
  }
  if (spec.kind == NodeKind::Satellite && !spec.orbit)
  {
    throw InvalidRoles{"satellites need an orbit class"};
  }
  if (spec.kind == NodeKind::Tdrs && !spec.orbit)
  {
    spec.orbit = OrbitClass::GEO;
  }

  SimNode node{spec, std::nullopt, {}};
  if (roles.full_node)
  {
    auto const &snapshot = winning_chain();
    node.replica.emplace(ledger::Chain::from_blocks(snapshot, config_.difficulty));
    auto &state = replica_state_[spec.id];
    for (auto const &block : snapshot)
    {
      state.store.emplace(block.hash(), block);
    }
  }
  nodes_.emplace(spec.id, std::move(node));

  log_event(spec.id, "ATTACH",
            {{"type", std::string{to_string(spec.kind)}},
             {"full", roles.full_node ? "1" : "0"},
             {"miner", roles.miner ? "1" : "0"}});
}

bool World::has_node(NodeId id) const
{
  return nodes_.contains(id);
}

SimNode const &World::node(NodeId id) const
{
  auto it = nodes_.find(id);
  if (it == nodes_.end())
  {
    throw UnknownNode{id};
  }
  return it->second;
}

SimNode &World::mutable_node(NodeId id)
{
  auto it = nodes_.find(id);
  if (it == nodes_.end())
  {
    throw UnknownNode{id};
  }
  return it->second;
}

NodeSpec &World::spec(NodeId id)
{
  return mutable_node(id).spec;
}

std::vector<NodeId> World::node_ids() const
{
  std::vector<NodeId> ids;
  for (auto const &[id, n] : nodes_)
  {
    ids.push_back(id);
  }
  return ids;
}

std::vector<NodeId> World::full_nodes() const
{
  std::vector<NodeId> ids;
  for (auto const &[id, n] : nodes_)
  {
    if (n.is_full())
    {
      ids.push_back(id);
    }
  }
  return ids;
}

std::vector<NodeId> World::miners() const
{
  std::vector<NodeId> ids;
  for (auto const &[id, n] : nodes_)
  {
    if (n.spec.roles.miner)
    {
      ids.push_back(id);
    }
  }
  return ids;
}

void World::schedule(Tick due, NodeId node, EventBody body)
{
  queue_.schedule(due, node, std::move(body));
}

void World::schedule_mining(NodeId miner, Tick at)
{
  if (!node(miner).spec.roles.miner)
  {
    throw InvalidRoles{"node " + std::to_string(miner) + " is not a miner"};
  }
  schedule(at, miner, Timer{"mine", 0});
}

std::size_t World::run_until(Tick tick)
{
  if (tick < now())
  {
    throw PastDue{tick, now()};
  }
  std::size_t processed = 0;
  while (auto due = queue_.next_due())
  {
    if (*due > tick)
    {
      break;
    }
    dispatch(queue_.pop());
    ++processed;
  }
  queue_.advance_to(tick);
  return processed;
}

Tick World::run_to_quiescence()
{
  while (!queue_.empty())
  {
    dispatch(queue_.pop());
  }
  return now();
}

void World::dispatch(Event const &event)
{
  std::visit(Overloaded{
                 [this](Deliver const &d) { deliver(d.envelope); },
                 [this, &event](Timer const &t) {
                   if (t.tag == "mine")
                   {
                     mine(event.node);
                     return;
                   }
                   auto it = timer_handlers_.find(t.tag);
                   if (it == timer_handlers_.end())
                   {
                     log_event(event.node, "TIMER_UNHANDLED", {{"tag", t.tag}});
                     return;
                   }
                   it->second(*this, event.node, t);
                 },
                 [this, &event](DebrisSpawn const &d) {
                   log_event(event.node, "DEBRIS_SPAWN", {{"debris", std::to_string(d.debris_id)}});
                   if (debris_handler_)
                   {
                     debris_handler_(*this, event.node, d.debris_id);
                   }
                 },
                 [this, &event](QueryArrival const &q) {
                   log_event(event.node, "QUERY_ARRIVAL", {{"query", std::to_string(q.query_id)}});
                   if (query_handler_)
                   {
                     query_handler_(*this, event.node, q.query_id);
                   }
                 },
             },
             event.body);
}

bool World::send(NodeId from, NodeId to, Message message)
{
  auto const &a = node(from).spec;
  auto const &b = node(to).spec;

  if (from == to)
  {
    schedule(now(), to, Deliver{Envelope{from, to, now(), std::move(message)}});
    return true;
  }

  auto const latency = config_.links.latency(a, b);
  auto const name    = std::string{message_name(message)};
  for (unsigned attempt = 1; attempt <= config_.links.max_attempts; ++attempt)
  {
    bool const dropped =
        config_.links.drop_probability > 0.0 && draw_unit() < config_.links.drop_probability;
    if (dropped)
    {
      log_event(from, "DROP",
                {{"to", std::to_string(to)}, {"msg", name}, {"attempt", std::to_string(attempt)}});
      continue;
    }
    // Retransmissions add one latency per attempt; the per-link floor keeps
    // deliveries on a link in send order.
    auto &last = last_delivery_[{from, to}];
    Tick  due  = std::max(now() + latency * attempt, last);
    last       = due;
    schedule(due, to, Deliver{Envelope{from, to, now(), std::move(message)}});
    return true;
  }
  log_event(from, "LOST", {{"to", std::to_string(to)}, {"msg", name}});
  return false;
}

void World::deliver(Envelope const &envelope)
{
  auto &target = mutable_node(envelope.to);
  log_event(envelope.to, "DELIVER",
            {{"from", std::to_string(envelope.from)}, {"msg", std::string{message_name(envelope.message)}}});

  std::visit(Overloaded{
                 [&](BlockAnnounce const &m) {
                   if (target.is_full())
                   {
                     receive_block(envelope.to, envelope.from, m.block);
                   }
                 },
                 [&](TxGossip const &m) { receive_tx(envelope.to, envelope.from, m); },
                 [&](ChainQuery const &m) { answer_query(envelope.to, envelope, m); },
                 [&](ChainResponse const &m) {
                   responses_[m.request_id] = m;
                   target.inbox.push_back(envelope);
                   log_event(envelope.to, "RESPONSE",
                             {{"request", std::to_string(m.request_id)},
                              {"found", m.found() ? "1" : "0"},
                              {"height", std::to_string(m.replica_height)}});
                 },
                 [&](AppMessage const &m) {
                   target.inbox.push_back(envelope);
                   if (auto it = message_handlers_.find(m.topic); it != message_handlers_.end())
                   {
                     it->second(*this, envelope);
                   }
                 },
             },
             envelope.message);
}

std::vector<ledger::Block> World::branch_to(ReplicaState const &state, Digest tip) const
{
  std::vector<ledger::Block> branch;
  for (;;)
  {
    auto const &block = state.store.at(tip);
    branch.push_back(block);
    if (block.header.index == 0)
    {
      break;
    }
    tip = block.header.parent_hash;
  }
  std::reverse(branch.begin(), branch.end());
  return branch;
}

void World::receive_block(NodeId id, NodeId from, ledger::Block const &block)
{
  auto      &state = replica_state_[id];
  auto      &n     = mutable_node(id);
  auto const hash  = block.hash();

  if (state.store.contains(hash))
  {
    log_event(id, "BLOCK_SEEN", {{"hash", short_hex(hash)}});
    return;
  }
  if (!state.store.contains(block.header.parent_hash))
  {
    state.orphans[block.header.parent_hash].push_back(block);
    log_event(id, "ORPHAN", {{"hash", short_hex(hash)}, {"from", std::to_string(from)}});
    return;
  }

  auto            branch = branch_to(state, block.header.parent_hash);
  ledger::TxIdSet committed;
  for (auto const &b : branch)
  {
    for (auto const &tx : b.transactions)
    {
      committed.insert(tx.tx_id);
    }
  }
  if (auto v = ledger::verify_block(block, branch.back(), config_.difficulty, committed); !v)
  {
    log_event(id, "BLOCK_REJECT",
              {{"hash", short_hex(hash)}, {"from", std::to_string(from)},
               {"reason", std::string{ledger::to_string(*v.reason)}}});
    return;
  }

  state.store.emplace(hash, block);
  branch.push_back(block);

  auto &replica = *n.replica;
  if (ledger::fork_winner(replica.blocks(), branch) == ledger::ForkSide::Second)
  {
    if (block.header.parent_hash == replica.tip().hash())
    {
      replica.append_block(block);
      log_event(id, "BLOCK_ACCEPT",
                {{"height", std::to_string(block.header.index)}, {"hash", short_hex(hash)},
                 {"from", std::to_string(from)}});
    }
    else
    {
      // Reorganize: abandoned transactions go back to the queue.
      std::vector<ledger::Transaction> pending = replica.mempool().all();
      for (auto const &old : replica.blocks())
      {
        for (auto const &tx : old.transactions)
        {
          pending.push_back(tx);
        }
      }
      auto next = ledger::Chain::from_blocks(branch, config_.difficulty);
      for (auto &tx : pending)
      {
        next.submit(std::move(tx));
      }
      replica = std::move(next);
      log_event(id, "REORG",
                {{"height", std::to_string(block.header.index)}, {"tip", short_hex(hash)},
                 {"from", std::to_string(from)}});
    }
  }
  else
  {
    log_event(id, "BLOCK_SIDE", {{"height", std::to_string(block.header.index)}, {"hash", short_hex(hash)}});
  }

  if (auto it = state.orphans.find(hash); it != state.orphans.end())
  {
    auto children = std::move(it->second);
    state.orphans.erase(it);
    for (auto const &child : children)
    {
      receive_block(id, from, child);
    }
  }
}

std::size_t World::broadcast_block(NodeId origin, ledger::Block const &block)
{
  auto const &n = node(origin);
  if (!n.is_full() || !replica_state_[origin].store.contains(block.hash()))
  {
    throw std::logic_error("broadcast origin must be a full node holding the block");
  }
  std::size_t scheduled = 0;
  for (auto peer : full_nodes())
  {
    if (peer != origin && send(origin, peer, BlockAnnounce{block}))
    {
      ++scheduled;
    }
  }
  return scheduled;
}

std::optional<ledger::MinedBlock> World::mine(NodeId miner)
{
  auto &n = mutable_node(miner);
  if (!n.spec.roles.miner)
  {
    throw InvalidRoles{"node " + std::to_string(miner) + " is not a miner"};
  }
  if (n.replica->mempool().empty())
  {
    return std::nullopt;
  }
  auto mined = n.replica->mine_next(now(), config_.block_capacity);
  n.replica->append_block(mined.block);
  auto const hash = mined.block.hash();
  replica_state_[miner].store.emplace(hash, mined.block);
  log_event(miner, "MINE",
            {{"height", std::to_string(mined.block.header.index)}, {"hash", short_hex(hash)},
             {"txs", std::to_string(mined.block.transactions.size())},
             {"attempts", std::to_string(mined.attempts)}});
  broadcast_block(miner, mined.block);
  return mined;
}

SubmitAck World::submit_transaction(NodeId origin, ledger::Transaction tx, NodeId via)
{
  node(origin);
  if (!node(via).is_full())
  {
    throw InvalidRoles{"transactions must enter through a full node"};
  }
  if (tx.tx_id != ledger::compute_tx_id(tx) || !tokens::token_of(tx))
  {
    log_event(origin, "TX_REJECT", {{"tx", short_hex(tx.tx_id)}, {"reason", "malformed"}});
    return {false, "malformed"};
  }
  log_event(origin, "TX_SUBMIT", {{"tx", short_hex(tx.tx_id)}, {"via", std::to_string(via)}});
  if (origin == via)
  {
    receive_tx(via, origin, TxGossip{std::move(tx), true});
  }
  else
  {
    send(origin, via, TxGossip{std::move(tx), true});
  }
  return {true, {}};
}

void World::receive_tx(NodeId id, NodeId from, TxGossip const &gossip)
{
  auto &n = mutable_node(id);
  if (!n.is_full())
  {
    return;
  }
  bool const fresh = n.replica->submit(gossip.tx);
  log_event(id, fresh ? "TX_ACCEPT" : "TX_IGNORE",
            {{"tx", short_hex(gossip.tx.tx_id)}, {"fee", std::to_string(gossip.tx.fee)},
             {"from", std::to_string(from)}});
  if (fresh && gossip.forward)
  {
    for (auto peer : miners())
    {
      if (peer != id)
      {
        send(id, peer, TxGossip{gossip.tx, false});
      }
    }
  }
}

std::uint64_t World::read_chain(NodeId reader, NodeId via, ChainSelector selector)
{
  node(reader);
  if (!node(via).is_full())
  {
    throw InvalidRoles{"chain reads must go through a full node"};
  }
  auto const request = next_request_++;
  log_event(reader, "READ",
            {{"request", std::to_string(request)}, {"via", std::to_string(via)},
             {"select", selector_text(selector)}});
  send(reader, via, ChainQuery{request, std::move(selector)});
  return request;
}

void World::answer_query(NodeId id, Envelope const &envelope, ChainQuery const &query)
{
  auto const &n = node(id);
  if (!n.is_full())
  {
    return;
  }
  auto const   &blocks = n.replica->blocks();
  ChainResponse response{query.request_id, now(), blocks.size(), std::nullopt, std::nullopt};

  if (auto const *index = std::get_if<std::uint64_t>(&query.selector))
  {
    if (*index < blocks.size())
    {
      response.block = blocks[*index];
    }
  }
  else
  {
    auto const &wanted = std::get<Digest>(query.selector);
    for (auto const &block : blocks)
    {
      for (auto const &tx : block.transactions)
      {
        if (sha256(tx.payload) == wanted)
        {
          response.block = block;
          response.token = tokens::token_of(tx);
          break;
        }
      }
      if (response.block)
      {
        break;
      }
    }
  }

  log_event(id, "ANSWER",
            {{"request", std::to_string(query.request_id)}, {"to", std::to_string(envelope.from)},
             {"found", response.found() ? "1" : "0"}});
  send(id, envelope.from, std::move(response));
}

std::optional<ChainResponse> World::response(std::uint64_t request_id) const
{
  if (auto it = responses_.find(request_id); it != responses_.end())
  {
    return it->second;
  }
  return std::nullopt;
}

void World::on_timer(std::string tag, TimerHandler handler)
{
  timer_handlers_[std::move(tag)] = std::move(handler);
}

void World::on_message(std::string topic, MessageHandler handler)
{
  message_handlers_[std::move(topic)] = std::move(handler);
}

void World::on_debris_spawn(IdHandler handler)
{
  debris_handler_ = std::move(handler);
}

void World::on_query_arrival(IdHandler handler)
{
  query_handler_ = std::move(handler);
}

void World::log_event(NodeId node, std::string_view kind, Fields const &fields)
{
  std::string line = "t=" + std::to_string(now()) + " node=" + std::to_string(node) + " kind=";
  line += kind;
  for (auto const &[key, value] : fields)
  {
    line += ' ';
    line += key;
    line += '=';
    line += value;
  }
  log_.push_back(std::move(line));
}

std::string World::event_log_text() const
{
  std::string text;
  for (auto const &line : log_)
  {
    text += line;
    text += '\n';
  }
  return text;
}

std::vector<ledger::Block> const &World::winning_chain() const
{
  static thread_local std::vector<ledger::Block> genesis_only;
  std::vector<ledger::Block> const              *best = nullptr;
  for (auto const &[id, n] : nodes_)
  {
    if (!n.is_full())
    {
      continue;
    }
    if (best == nullptr || ledger::fork_winner(*best, n.replica->blocks()) == ledger::ForkSide::Second)
    {
      best = &n.replica->blocks();
    }
  }
  if (best == nullptr)
  {
    genesis_only = {genesis_};
    return genesis_only;
  }
  return *best;
}

bool World::replicas_converged() const
{
  std::vector<ledger::Block> const *first = nullptr;
  for (auto const &[id, n] : nodes_)
  {
    if (!n.is_full())
    {
      continue;
    }
    if (first == nullptr)
    {
      first = &n.replica->blocks();
    }
    else if (n.replica->blocks() != *first)
    {
      return false;
    }
  }
  return true;
}

double World::draw_unit()
{
  // 53 random mantissa bits; avoids the implementation-defined
  // std::uniform_real_distribution so replays match across standard libraries.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

}  // namespace orbitledger::sim
