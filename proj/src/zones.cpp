#include "orbitledger/zones.hpp"

#include <algorithm>

namespace orbitledger::zones {
namespace {

// Zone blocks never reuse a nonce that already appeared on the zone chain, so
// a nonce captured from an old tip cannot become a valid challenge answer again.
ledger::Block mine_zone_block(ledger::Block const *parent, std::vector<ledger::Transaction> txs, Tick now,
                              std::set<std::uint64_t> const &used)
{
  ledger::BlockHeader header;
  if (parent != nullptr)
  {
    header.index       = parent->header.index + 1;
    header.parent_hash = parent->hash();
  }
  header.tx_digest  = ledger::compute_tx_digest(txs);
  header.timestamp  = now;
  header.difficulty = ZONE_DIFFICULTY;
  ledger::search_nonce(header);
  while (used.contains(header.nonce))
  {
    ledger::search_nonce(header, header.nonce + 1);
  }
  return ledger::Block{header, std::move(txs)};
}

}  // namespace

OrbitMismatch::OrbitMismatch(NodeId satellite)
  : std::invalid_argument{"satellite " + std::to_string(satellite) + " is not in the zone's orbit class"}
{}

EmptySwarm::EmptySwarm()
  : std::invalid_argument{"a zone needs at least one satellite"}
{}

AlreadyMember::AlreadyMember(NodeId satellite)
  : std::invalid_argument{"satellite " + std::to_string(satellite) + " is already a zone member"}
{}

NotAMember::NotAMember(NodeId satellite)
  : std::invalid_argument{"satellite " + std::to_string(satellite) + " is not a zone member"}
{}

std::string_view to_string(MfaOutcome outcome)
{
  switch (outcome)
  {
  case MfaOutcome::Established:
    return "established";
  case MfaOutcome::NotMember:
    return "not_member";
  case MfaOutcome::WrongNonce:
    return "wrong_nonce";
  }
  return "unknown";
}

std::string format_zone_status(ZoneStatus const &status)
{
  std::string members;
  for (auto const &m : status.members)
  {
    if (!members.empty())
    {
      members += ',';
    }
    members += std::to_string(m.satellite) + ":" + std::to_string(m.virtual_id);
  }
  std::string intruders;
  for (auto id : status.intruders)
  {
    if (!intruders.empty())
    {
      intruders += ',';
    }
    intruders += std::to_string(id);
  }
  std::string out;
  out += "zone=" + std::to_string(status.zone_id) + "\n";
  out += "orbit=" + std::string{to_string(status.orbit)} + "\n";
  out += "master=" + std::to_string(status.master) + "\n";
  out += "members=" + members + "\n";
  out += "intruders=" + intruders + "\n";
  out += "height=" + std::to_string(status.height) + "\n";
  out += "tip_nonce=" + std::to_string(status.tip_nonce) + "\n";
  out += "tip_hash=" + to_hex(status.tip_hash) + "\n";
  return out;
}

VirtualZone::VirtualZone(ledger::Chain chain, JoinRules rules)
  : chain_{std::move(chain)}
  , rules_{std::move(rules)}
{}

VirtualZone VirtualZone::create(std::uint64_t zone_id, NodeId master, std::span<SatelliteInfo const> satellites,
                                OrbitClass orbit, JoinRules rules, Tick now)
{
  if (satellites.empty())
  {
    throw EmptySwarm{};
  }
  tokens::ZoneRegistrationToken registration{zone_id, orbit, master, {}};
  std::uint64_t                 virtual_id = 1;
  for (auto const &sat : satellites)
  {
    if (sat.orbit != orbit)
    {
      throw OrbitMismatch{sat.id};
    }
    registration.members.push_back({sat.id, virtual_id++});
  }
  // Rejects duplicate satellites.
  tokens::validate_token(registration);

  auto genesis = mine_zone_block(nullptr, {tokens::to_transaction(registration, master, 0, now)}, now, {});
  return replay(std::span{&genesis, 1}).with_rules(std::move(rules));
}

VirtualZone VirtualZone::replay(std::span<ledger::Block const> blocks)
{
  if (blocks.empty())
  {
    throw std::invalid_argument("zone chain is empty");
  }
  auto const &genesis = blocks.front();
  std::optional<tokens::SpaceToken> first;
  if (genesis.transactions.size() == 1)
  {
    first = tokens::token_of(genesis.transactions.front());
  }
  auto const *registration = first ? std::get_if<tokens::ZoneRegistrationToken>(&*first) : nullptr;
  if (registration == nullptr)
  {
    throw std::invalid_argument("zone genesis must hold exactly one registration token");
  }

  VirtualZone zone{ledger::Chain::from_blocks(blocks, ZONE_DIFFICULTY), {}};
  zone.zone_id_ = registration->zone_id;
  zone.orbit_   = registration->orbit;
  zone.master_  = registration->master;
  for (auto const &m : registration->members)
  {
    zone.members_.emplace(m.satellite, m.virtual_id);
    zone.next_virtual_id_ = std::max(zone.next_virtual_id_, m.virtual_id + 1);
  }
  zone.used_nonces_.insert(genesis.header.nonce);

  for (auto const &block : blocks.subspan(1))
  {
    zone.used_nonces_.insert(block.header.nonce);
    for (auto const &tx : block.transactions)
    {
      auto token = tokens::token_of(tx);
      if (!token || std::holds_alternative<tokens::ZoneRegistrationToken>(*token))
      {
        throw std::invalid_argument("unexpected transaction in zone block " +
                                    std::to_string(block.header.index));
      }
      zone.apply(*token);
    }
  }
  return zone;
}

VirtualZone VirtualZone::with_rules(JoinRules rules) &&
{
  rules_ = std::move(rules);
  return std::move(*this);
}

void VirtualZone::apply(tokens::SpaceToken const &token)
{
  if (auto const *m = std::get_if<tokens::ZoneMembershipToken>(&token))
  {
    if (m->verdict == tokens::JoinVerdict::Admitted)
    {
      members_.emplace(m->candidate, m->virtual_id);
      next_virtual_id_ = std::max(next_virtual_id_, m->virtual_id + 1);
    }
    else
    {
      intruders_.insert(m->candidate);
    }
  }
  else if (auto const *s = std::get_if<tokens::TransactionSessionToken>(&token))
  {
    next_session_ = std::max(next_session_, s->session_id + 1);
  }
}

ledger::Block const &VirtualZone::append_token(tokens::SpaceToken const &token, Tick now)
{
  auto tx = tokens::to_transaction(token, master_, 0, now);
  // The same token issued twice in one tick would repeat a tx id.
  for (Tick ts = now + 1; chain_.is_committed(tx.tx_id); ++ts)
  {
    tx = tokens::to_transaction(token, master_, 0, ts);
  }
  auto block = mine_zone_block(&chain_.tip(), {std::move(tx)}, now, used_nonces_);
  used_nonces_.insert(block.header.nonce);
  chain_.append_block(std::move(block));
  apply(token);
  return chain_.tip();
}

MfaResult VirtualZone::mfa_authenticate(NodeId initiator, NodeId responder, std::uint64_t presented_nonce, Tick now)
{
  if (!is_member(responder))
  {
    throw NotAMember{responder};
  }
  if (!is_member(initiator))
  {
    return {MfaOutcome::NotMember, 0};
  }
  if (presented_nonce != expected_nonce())
  {
    return {MfaOutcome::WrongNonce, 0};
  }
  auto const session = next_session_;
  append_token(tokens::TransactionSessionToken{session, initiator, responder, "zone=" + std::to_string(zone_id_)},
               now);
  return {MfaOutcome::Established, session};
}

JoinResult VirtualZone::request_join(SatelliteInfo candidate, Tick now)
{
  if (is_member(candidate.id))
  {
    throw AlreadyMember{candidate.id};
  }
  bool const rules_pass = candidate.orbit == orbit_ && rules_.authorized.contains(candidate.id) &&
                          !intruders_.contains(candidate.id);

  JoinResult result;
  bool       unanimous = true;
  for (auto const &[member, vid] : members_)
  {
    bool approve = rules_pass;
    if (auto it = rules_.scripted_votes.find({member, candidate.id}); it != rules_.scripted_votes.end())
    {
      approve = approve && it->second;
    }
    result.votes.push_back({member, approve});
    unanimous = unanimous && approve;
  }

  if (unanimous)
  {
    result.verdict    = tokens::JoinVerdict::Admitted;
    result.virtual_id = next_virtual_id_;
  }
  append_token(tokens::ZoneMembershipToken{zone_id_, candidate.id, result.verdict, result.virtual_id}, now);
  return result;
}

ZoneStatus VirtualZone::status() const
{
  ZoneStatus s;
  s.zone_id = zone_id_;
  s.orbit   = orbit_;
  s.master  = master_;
  for (auto const &[sat, vid] : members_)
  {
    s.members.push_back({sat, vid});
  }
  s.intruders.assign(intruders_.begin(), intruders_.end());
  s.height    = chain_.height();
  s.tip_nonce = expected_nonce();
  s.tip_hash  = chain_.tip().hash();
  return s;
}

VirtualZone &ZoneDirectory::add(VirtualZone zone)
{
  auto const id = zone.zone_id();
  if (zones_.contains(id))
  {
    throw std::invalid_argument("zone " + std::to_string(id) + " already exists");
  }
  for (auto const &[sat, vid] : zone.members())
  {
    if (zone_of(sat) != nullptr)
    {
      throw std::invalid_argument("satellite " + std::to_string(sat) + " already belongs to a zone");
    }
  }
  return zones_.emplace(id, std::move(zone)).first->second;
}

VirtualZone &ZoneDirectory::at(std::uint64_t zone_id)
{
  auto it = zones_.find(zone_id);
  if (it == zones_.end())
  {
    throw std::invalid_argument("unknown zone " + std::to_string(zone_id));
  }
  return it->second;
}

VirtualZone const &ZoneDirectory::at(std::uint64_t zone_id) const
{
  return const_cast<ZoneDirectory *>(this)->at(zone_id);
}

VirtualZone *ZoneDirectory::zone_of(NodeId satellite)
{
  for (auto &[id, zone] : zones_)
  {
    if (zone.is_member(satellite))
    {
      return &zone;
    }
  }
  return nullptr;
}

MfaResult ZoneDirectory::authenticate(NodeId initiator, NodeId responder, std::uint64_t presented_nonce, Tick now)
{
  auto *zone = zone_of(responder);
  if (zone == nullptr)
  {
    throw NotAMember{responder};
  }
  return zone->mfa_authenticate(initiator, responder, presented_nonce, now);
}

}  // namespace orbitledger::zones
