#include "orbitledger/scenario.hpp"

#include "orbitledger/chain_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace orbitledger::scenario {

ScenarioError::ScenarioError(std::size_t line, std::string field, std::string const &message)
  : std::runtime_error{[&] {
    std::string text = "line " + std::to_string(line) + ": ";
    if (!field.empty())
    {
      text += "field '" + field + "': ";
    }
    return text + message;
  }()}
  , line_{line}
  , field_{std::move(field)}
{}

namespace {

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::string_view> split(std::string_view text, char sep)
{
  std::vector<std::string_view> parts;
  std::size_t                   begin = 0;
  while (true)
  {
    auto const end = text.find(sep, begin);
    parts.push_back(text.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin));
    if (end == std::string_view::npos)
    {
      return parts;
    }
    begin = end + 1;
  }
}

/// One `directive key=value ...` line. Every key must be consumed.
class Line
{
public:
  Line(std::size_t number, std::string_view text)
    : number_{number}
  {
    std::istringstream in{std::string{text}};
    std::string        word;
    in >> directive_;
    while (in >> word)
    {
      auto const eq = word.find('=');
      if (eq == 0 || eq == std::string::npos || eq + 1 == word.size())
      {
        throw ScenarioError{number_, {}, "expected key=value, got '" + word + "'"};
      }
      auto key = word.substr(0, eq);
      if (!fields_.emplace(key, word.substr(eq + 1)).second)
      {
        throw ScenarioError{number_, key, "given twice"};
      }
    }
  }

  std::size_t number() const noexcept
  {
    return number_;
  }
  std::string const &directive() const noexcept
  {
    return directive_;
  }

  bool has(std::string const &key) const
  {
    return fields_.contains(key);
  }

  std::string const &raw(std::string const &key)
  {
    auto it = fields_.find(key);
    if (it == fields_.end())
    {
      throw ScenarioError{number_, key, "missing"};
    }
    used_.insert(key);
    return it->second;
  }

  [[noreturn]] void fail(std::string const &key, std::string const &message) const
  {
    throw ScenarioError{number_, key, message};
  }

  std::uint64_t u64(std::string const &key)
  {
    return parse_u64(key, raw(key));
  }
  std::uint64_t u64(std::string const &key, std::uint64_t fallback)
  {
    return has(key) ? u64(key) : fallback;
  }

  double real(std::string const &key)
  {
    return parse_real(key, raw(key));
  }

  bool flag(std::string const &key, bool fallback)
  {
    if (!has(key))
    {
      return fallback;
    }
    auto const &v = raw(key);
    if (v == "yes" || v == "true" || v == "1")
    {
      return true;
    }
    if (v == "no" || v == "false" || v == "0")
    {
      return false;
    }
    fail(key, "expected yes or no, got '" + v + "'");
  }

  std::vector<std::uint64_t> ids(std::string const &key)
  {
    std::vector<std::uint64_t> out;
    for (auto part : split(raw(key), ','))
    {
      out.push_back(parse_u64(key, part));
    }
    return out;
  }

  Vec3 vec(std::string const &key)
  {
    auto const parts = split(raw(key), ',');
    if (parts.size() != 3)
    {
      fail(key, "expected x,y,z");
    }
    return {parse_real(key, parts[0]), parse_real(key, parts[1]), parse_real(key, parts[2])};
  }

  OrbitClass orbit(std::string const &key)
  {
    auto const &v = raw(key);
    auto        o = parse_orbit_class(v);
    if (!o)
    {
      fail(key, "unknown orbit class '" + v + "'");
    }
    return *o;
  }

  std::uint64_t parse_u64(std::string const &key, std::string_view text) const
  {
    std::uint64_t value = 0;
    auto const [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size())
    {
      fail(key, "expected an unsigned integer, got '" + std::string{text} + "'");
    }
    return value;
  }

  double parse_real(std::string const &key, std::string_view text) const
  {
    double value = 0;
    auto const [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value))
    {
      fail(key, "expected a number, got '" + std::string{text} + "'");
    }
    return value;
  }

  /// Rejects keys nobody asked for.
  void finish() const
  {
    for (auto const &[key, value] : fields_)
    {
      if (!used_.contains(key))
      {
        throw ScenarioError{number_, key, "unknown for '" + directive_ + "'"};
      }
    }
  }

private:
  std::size_t                        number_;
  std::string                        directive_;
  std::map<std::string, std::string> fields_;
  std::set<std::string>              used_;
};

constexpr std::string_view SECTIONS[] = {"world", "links", "nodes", "zones", "mission", "tdrs", "events"};

class Parser
{
public:
  explicit Parser(std::string_view text)
  {
    std::string_view section;
    std::size_t      number = 0;
    for (auto raw : split(text, '\n'))
    {
      ++number;
      if (auto hash = raw.find('#'); hash != std::string_view::npos)
      {
        raw = raw.substr(0, hash);
      }
      auto const first = raw.find_first_not_of(" \t\r");
      if (first == std::string_view::npos)
      {
        continue;
      }
      raw        = raw.substr(first);
      raw        = raw.substr(0, raw.find_last_not_of(" \t\r") + 1);
      if (raw.front() == '[')
      {
        if (raw.back() != ']')
        {
          throw ScenarioError{number, {}, "unterminated section header"};
        }
        auto const name = raw.substr(1, raw.size() - 2);
        auto const it   = std::find(std::begin(SECTIONS), std::end(SECTIONS), name);
        if (it == std::end(SECTIONS))
        {
          throw ScenarioError{number, {}, "unknown section [" + std::string{name} + "]"};
        }
        section = *it;
        continue;
      }
      if (section.empty())
      {
        throw ScenarioError{number, {}, "directive outside any section"};
      }
      lines_[section].emplace_back(number, raw);
    }
  }

  Scenario parse()
  {
    world();
    links();
    nodes();
    zones();
    mission();
    tdrs();
    events();
    return std::move(sc_);
  }

private:
  std::vector<Line> &section(std::string_view name)
  {
    return lines_[name];
  }

  [[noreturn]] static void bad_directive(Line const &line, std::string_view section)
  {
    throw ScenarioError{line.number(), {},
                        "unknown directive '" + line.directive() + "' in [" + std::string{section} + "]"};
  }

  sim::NodeSpec const &node(Line &line, std::string const &key)
  {
    auto const id = line.u64(key);
    auto       it = nodes_.find(id);
    if (it == nodes_.end())
    {
      line.fail(key, "undefined node " + std::to_string(id));
    }
    return sc_.nodes[it->second];
  }

  sim::NodeSpec const &node_of_kind(Line &line, std::string const &key, sim::NodeKind kind)
  {
    auto const &spec = node(line, key);
    if (spec.kind != kind)
    {
      line.fail(key, "node " + std::to_string(spec.id) + " is not a " + std::string{sim::to_string(kind)});
    }
    return spec;
  }

  NodeId full_node(Line &line, std::string const &key)
  {
    auto const &spec = node(line, key);
    if (!spec.roles.full_node)
    {
      line.fail(key, "node " + std::to_string(spec.id) + " is not a full node");
    }
    return spec.id;
  }

  ZoneSpec &zone(Line &line, std::string const &key)
  {
    auto const id = line.u64(key);
    for (auto &z : sc_.zones)
    {
      if (z.id == id)
      {
        return z;
      }
    }
    line.fail(key, "undefined zone " + std::to_string(id));
  }

  void world()
  {
    std::optional<std::size_t> seed_line;
    std::optional<std::size_t> horizon_line;
    for (auto &line : section("world"))
    {
      if (line.directive() != "world")
      {
        bad_directive(line, "world");
      }
      if (line.has("seed"))
      {
        sc_.world.seed = line.u64("seed");
        seed_line      = line.number();
      }
      if (line.has("horizon"))
      {
        sc_.horizon  = line.u64("horizon");
        horizon_line = line.number();
      }
      if (line.has("difficulty"))
      {
        auto const d = line.u64("difficulty");
        if (d > ledger::MAX_DIFFICULTY)
        {
          line.fail("difficulty", "at most " + std::to_string(ledger::MAX_DIFFICULTY));
        }
        sc_.world.difficulty = static_cast<unsigned>(d);
      }
      if (line.has("capacity"))
      {
        sc_.world.block_capacity = line.u64("capacity");
        if (sc_.world.block_capacity == 0)
        {
          line.fail("capacity", "must be positive");
        }
      }
      line.finish();
    }
    if (!seed_line)
    {
      throw ScenarioError{0, "seed", "missing from [world]"};
    }
    if (!horizon_line)
    {
      throw ScenarioError{0, "horizon", "missing from [world]"};
    }
  }

  void links()
  {
    auto &links = sc_.world.links;
    for (auto &line : section("links"))
    {
      if (line.directive() == "latency")
      {
        for (std::string key : {"leo_ground", "meo_ground", "geo_ground", "isl_same_zone", "isl_cross_zone",
                                "terrestrial"})
        {
          if (line.has(key))
          {
            auto const ticks = line.u64(key);
            if (ticks == 0)
            {
              line.fail(key, "latency must be positive");
            }
            links.set(key, ticks);
          }
        }
      }
      else if (line.directive() == "drops")
      {
        if (line.has("probability"))
        {
          links.drop_probability = line.real("probability");
          if (links.drop_probability < 0.0 || links.drop_probability >= 1.0)
          {
            line.fail("probability", "must lie in [0, 1)");
          }
        }
        if (line.has("attempts"))
        {
          auto const attempts = line.u64("attempts");
          if (attempts == 0 || attempts > 16)
          {
            line.fail("attempts", "must lie in 1..16");
          }
          links.max_attempts = static_cast<unsigned>(attempts);
        }
      }
      else
      {
        bad_directive(line, "links");
      }
      line.finish();
    }
  }

  void nodes()
  {
    for (auto &line : section("nodes"))
    {
      if (line.directive() != "node")
      {
        bad_directive(line, "nodes");
      }
      sim::NodeSpec spec;
      spec.id = line.u64("id");
      if (spec.id == 0)
      {
        line.fail("id", "node ids start at 1");
      }
      auto const &kind_text = line.raw("kind");
      auto        kind      = sim::parse_node_kind(kind_text);
      if (!kind)
      {
        line.fail("kind", "unknown node kind '" + kind_text + "'");
      }
      spec.kind = *kind;
      if (line.has("orbit"))
      {
        if (spec.kind != sim::NodeKind::Satellite && spec.kind != sim::NodeKind::Tdrs)
        {
          line.fail("orbit", "only satellites and tdrs have an orbit");
        }
        spec.orbit = line.orbit("orbit");
      }
      else if (spec.kind == sim::NodeKind::Satellite)
      {
        line.fail("orbit", "missing for a satellite");
      }
      spec.roles.full_node   = line.flag("full", false);
      spec.roles.miner       = line.flag("miner", false);
      spec.roles.reader_only = line.flag("reader", false);
      if (spec.roles.miner && !spec.roles.full_node)
      {
        line.fail("miner", "a miner must also be full=yes");
      }
      if (spec.roles.reader_only && spec.roles.full_node)
      {
        line.fail("reader", "a reader-only node cannot be a full node");
      }
      if (line.has("pos"))
      {
        spec.state.position = line.vec("pos");
      }
      if (line.has("vel"))
      {
        spec.state.velocity = line.vec("vel");
      }
      line.finish();
      if (!nodes_.emplace(spec.id, sc_.nodes.size()).second)
      {
        line.fail("id", "node " + std::to_string(spec.id) + " defined twice");
      }
      sc_.nodes.push_back(spec);
    }
  }

  void zones()
  {
    std::map<NodeId, std::uint64_t> zone_of;
    for (auto &line : section("zones"))
    {
      if (line.directive() == "zone")
      {
        ZoneSpec z;
        z.line = line.number();
        z.id   = line.u64("id");
        for (auto const &other : sc_.zones)
        {
          if (other.id == z.id)
          {
            line.fail("id", "zone " + std::to_string(z.id) + " defined twice");
          }
        }
        z.master = node_of_kind(line, "master", sim::NodeKind::GroundStation).id;
        z.orbit  = line.orbit("orbit");
        for (auto id : line.ids("members"))
        {
          auto const &spec = nodes_.contains(id) ? sc_.nodes[nodes_.at(id)] : sim::NodeSpec{};
          if (!nodes_.contains(id) || spec.kind != sim::NodeKind::Satellite)
          {
            line.fail("members", "node " + std::to_string(id) + " is not a defined satellite");
          }
          if (spec.orbit != z.orbit)
          {
            line.fail("members", "satellite " + std::to_string(id) + " is not in the zone's orbit class");
          }
          if (!zone_of.emplace(id, z.id).second)
          {
            line.fail("members", "satellite " + std::to_string(id) + " already belongs to a zone");
          }
          z.members.push_back(id);
        }
        line.finish();
        sc_.zones.push_back(std::move(z));
      }
      else if (line.directive() == "authorize")
      {
        auto &z = zone(line, "zone");
        for (auto id : line.ids("sats"))
        {
          if (!nodes_.contains(id))
          {
            line.fail("sats", "undefined node " + std::to_string(id));
          }
          z.rules.authorized.insert(id);
        }
        line.finish();
      }
      else if (line.directive() == "vote")
      {
        auto &z         = zone(line, "zone");
        auto  member    = node(line, "member").id;
        auto  candidate = node(line, "candidate").id;
        if (std::find(z.members.begin(), z.members.end(), member) == z.members.end())
        {
          line.fail("member", "satellite " + std::to_string(member) + " is not a member of the zone");
        }
        z.rules.scripted_votes[{member, candidate}] = line.flag("approve", true);
        line.finish();
      }
      else
      {
        bad_directive(line, "zones");
      }
    }
  }

  void mission()
  {
    for (auto &line : section("mission"))
    {
      if (line.directive() != "consortium")
      {
        bad_directive(line, "mission");
      }
      if (sc_.mission)
      {
        line.fail({}, "only one consortium per scenario");
      }
      mission::ConsortiumConfig cfg;
      for (auto id : line.ids("members"))
      {
        if (!nodes_.contains(id))
        {
          line.fail("members", "undefined node " + std::to_string(id));
        }
        cfg.members.insert(id);
      }
      for (auto id : line.ids("miners"))
      {
        if (!nodes_.contains(id))
        {
          line.fail("miners", "undefined node " + std::to_string(id));
        }
        cfg.miners.push_back(id);
      }
      cfg.budget      = line.u64("budget");
      cfg.beneficiary = node(line, "beneficiary").id;
      cfg.difficulty  = static_cast<unsigned>(line.u64("difficulty", 1));
      if (cfg.difficulty > ledger::MAX_DIFFICULTY)
      {
        line.fail("difficulty", "at most " + std::to_string(ledger::MAX_DIFFICULTY));
      }
      cfg.fractions = mission::ConsortiumConfig::uniform_fractions();
      if (line.has("fractions"))
      {
        auto const parts = split(line.raw("fractions"), ',');
        if (parts.size() != mission::PHASE_COUNT)
        {
          line.fail("fractions", "expected six fractions");
        }
        for (std::size_t i = 0; i < parts.size(); ++i)
        {
          auto const pq  = split(parts[i], '/');
          auto const num = line.parse_u64("fractions", pq[0]);
          auto const den = pq.size() == 2 ? line.parse_u64("fractions", pq[1]) : 1;
          if (pq.size() > 2 || den == 0 || num > (1u << 30) || den > (1u << 30))
          {
            line.fail("fractions", "bad fraction '" + std::string{parts[i]} + "'");
          }
          cfg.fractions[i] = mission::Fraction{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
        }
      }
      try
      {
        cfg.validate();
      }
      catch (mission::InvalidConfig const &e)
      {
        line.fail({}, e.what());
      }
      line.finish();
      sc_.mission = std::move(cfg);
    }
  }

  void tdrs()
  {
    std::optional<std::size_t> service_line;
    for (auto &line : section("tdrs"))
    {
      if (line.directive() == "service")
      {
        if (sc_.tdrs)
        {
          line.fail({}, "only one tdrs service per scenario");
        }
        tdrs::TdrsConfig cfg;
        cfg.tdrs           = node_of_kind(line, "tdrs", sim::NodeKind::Tdrs).id;
        cfg.ground_station = node_of_kind(line, "ground", sim::NodeKind::GroundStation).id;
        cfg.difficulty     = static_cast<unsigned>(line.u64("difficulty", 1));
        if (cfg.difficulty > ledger::MAX_DIFFICULTY)
        {
          line.fail("difficulty", "at most " + std::to_string(ledger::MAX_DIFFICULTY));
        }
        line.finish();
        sc_.tdrs     = std::move(cfg);
        service_line = line.number();
      }
    }
    for (auto &line : section("tdrs"))
    {
      if (line.directive() == "service")
      {
        continue;
      }
      if (line.directive() != "follower")
      {
        bad_directive(line, "tdrs");
      }
      if (!sc_.tdrs)
      {
        line.fail({}, "follower without a service line");
      }
      tdrs::Follower f;
      f.id                = node_of_kind(line, "id", sim::NodeKind::Satellite).id;
      f.position          = {line.real("lat"), line.real("lon")};
      f.rate_deg_per_tick = line.real("rate");
      if (!f.position.valid())
      {
        line.fail("lat", "position out of range");
      }
      if (!(f.rate_deg_per_tick > 0.0))
      {
        line.fail("rate", "must be positive");
      }
      for (auto const &other : sc_.tdrs->followers)
      {
        if (other.id == f.id)
        {
          line.fail("id", "follower listed twice");
        }
      }
      line.finish();
      sc_.tdrs->followers.push_back(f);
    }
    if (sc_.tdrs && sc_.tdrs->followers.empty())
    {
      throw ScenarioError{*service_line, {}, "a tdrs service needs at least one follower"};
    }
  }

  std::vector<tokens::TickInterval> windows(Line &line)
  {
    std::vector<tokens::TickInterval> out;
    for (auto part : split(line.raw("window"), ','))
    {
      auto const be = split(part, ':');
      if (be.size() != 2)
      {
        line.fail("window", "expected begin:end");
      }
      tokens::TickInterval const tf{line.parse_u64("window", be[0]), line.parse_u64("window", be[1])};
      if (tf.end < tf.begin)
      {
        line.fail("window", "ends before it begins");
      }
      out.push_back(tf);
    }
    return out;
  }

  std::vector<GeoPoint> locations(Line &line)
  {
    std::vector<GeoPoint> out;
    for (auto part : split(line.raw("loc"), ','))
    {
      auto const ll = split(part, ':');
      if (ll.size() != 2)
      {
        line.fail("loc", "expected lat:lon");
      }
      GeoPoint const p{line.parse_real("loc", ll[0]), line.parse_real("loc", ll[1])};
      if (!p.valid())
      {
        line.fail("loc", "position out of range");
      }
      out.push_back(p);
    }
    return out;
  }

  void events()
  {
    std::set<std::uint64_t> query_ids;
    for (auto &line : section("events"))
    {
      Tick const at = line.u64("at");
      if (at > sc_.horizon)
      {
        line.fail("at", "beyond the horizon " + std::to_string(sc_.horizon));
      }
      auto const &d = line.directive();
      auto action = [&](NodeId node, ActionBody body) {
        sc_.actions.push_back(Action{at, node, std::move(body), line.number()});
      };

      if (d == "mine")
      {
        auto const &spec = node(line, "node");
        if (!spec.roles.miner)
        {
          line.fail("node", "node " + std::to_string(spec.id) + " is not a miner");
        }
        action(spec.id, Mine{spec.id});
      }
      else if (d == "tx")
      {
        SubmitTx tx{node(line, "from").id, full_node(line, "via"), line.u64("fee", 0), line.raw("text")};
        action(tx.from, std::move(tx));
      }
      else if (d == "read")
      {
        Read r{node(line, "reader").id, full_node(line, "via"), std::uint64_t{0}};
        if (line.has("height") == line.has("token"))
        {
          line.fail({}, "give exactly one of height= or token=");
        }
        if (line.has("height"))
        {
          r.selector = line.u64("height");
        }
        else
        {
          try
          {
            r.selector = digest_from_hex(line.raw("token"));
          }
          catch (std::exception const &)
          {
            line.fail("token", "expected 64 hex characters");
          }
        }
        action(r.reader, r);
      }
      else if (d == "mfa")
      {
        Mfa m{zone(line, "zone").id, node(line, "initiator").id, node(line, "responder").id, std::nullopt};
        if (line.has("nonce") && line.raw("nonce") != "tip")
        {
          m.nonce = line.u64("nonce");
        }
        action(m.initiator, m);
      }
      else if (d == "join")
      {
        Join j{zone(line, "zone").id, node_of_kind(line, "sat", sim::NodeKind::Satellite).id};
        action(j.satellite, j);
      }
      else if (d == "debris")
      {
        DebrisSpec spec;
        spec.at        = at;
        spec.line      = line.number();
        spec.object.id = line.u64("id");
        spec.zone                  = zone(line, "zone").id;
        spec.sensor                = node_of_kind(line, "sensor", sim::NodeKind::Satellite).id;
        spec.object.state.position = line.vec("pos");
        spec.object.state.velocity = line.vec("vel");
        spec.object.radius_km      = line.real("radius");
        spec.threshold_km          = line.real("threshold");
        if (!(spec.object.radius_km > 0.0))
        {
          line.fail("radius", "must be positive");
        }
        if (!(spec.threshold_km > 0.0))
        {
          line.fail("threshold", "must be positive");
        }
        sc_.debris.push_back(spec);
      }
      else if (d == "phase" || d == "release")
      {
        if (!sc_.mission)
        {
          line.fail({}, "needs a [mission] consortium");
        }
        if (d == "phase")
        {
          auto const n = line.u64("n");
          if (n > 255)
          {
            line.fail("n", "phase ordinal out of range");
          }
          SubmitPhase p{static_cast<std::uint8_t>(n), node(line, "submitter").id, {}};
          if (line.has("omit"))
          {
            p.omit = line.raw("omit");
          }
          action(p.submitter, p);
        }
        else
        {
          auto const n = line.u64("phase");
          if (n > 255)
          {
            line.fail("phase", "phase ordinal out of range");
          }
          action(sc_.mission->beneficiary, ReleaseFunds{static_cast<std::uint8_t>(n)});
        }
      }
      else if (d == "query")
      {
        if (!sc_.tdrs)
        {
          line.fail({}, "needs a [tdrs] service");
        }
        QuerySpec q;
        q.at                   = at;
        q.line                 = line.number();
        q.query.query_id       = line.u64("id");
        q.query.requester      = node(line, "requester").id;
        q.query.locations      = locations(line);
        q.query.timeframes     = windows(line);
        q.query.fee            = line.u64("fee", 0);
        if (!query_ids.insert(q.query.query_id).second)
        {
          line.fail("id", "query id used twice");
        }
        sc_.queries.push_back(std::move(q));
      }
      else if (d == "uplink")
      {
        if (!sc_.tdrs)
        {
          line.fail({}, "needs a [tdrs] service");
        }
        action(sc_.tdrs->ground_station, Uplink{});
      }
      else
      {
        bad_directive(line, "events");
      }
      line.finish();
    }
  }

  std::map<std::string_view, std::vector<Line>> lines_;
  std::map<NodeId, std::size_t>                 nodes_;
  Scenario                                      sc_;
};

// ---------------------------------------------------------------------------

std::string join_ids(auto const &ids)
{
  std::string out;
  for (auto id : ids)
  {
    out += (out.empty() ? "" : ",") + std::to_string(id);
  }
  return out;
}

std::string fixed(double value)
{
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << value;
  return out.str();
}

mission::PhaseRecord phase_record(SubmitPhase const &p)
{
  mission::PhaseRecord record{p.phase, p.submitter, {}};
  for (auto key : mission::required_fields(p.phase))
  {
    if (key != p.omit)
    {
      record.fields[std::string{key}] = std::string{key} + " for phase " + std::to_string(p.phase);
    }
  }
  return record;
}

template <class Pred>
std::optional<std::pair<std::size_t, std::size_t>> first_token(ledger::Chain const &chain, Pred pred)
{
  auto const &blocks = chain.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b)
  {
    for (std::size_t i = 0; i < blocks[b].transactions.size(); ++i)
    {
      if (auto token = tokens::token_of(blocks[b].transactions[i]); token && pred(*token))
      {
        return std::pair{b, i};
      }
    }
  }
  return std::nullopt;
}

class Runner
{
public:
  explicit Runner(Scenario const &sc)
    : sc_{sc}
    , world_{sc.world}
  {}

  RunOutcome run()
  {
    try
    {
      setup();
      world_.run_until(sc_.horizon);
      world_.run_to_quiescence();
      check();
    }
    catch (std::exception const &e)
    {
      violation(std::string{"run aborted: "} + e.what());
    }
    collect();
    return std::move(out_);
  }

private:
  void violation(std::string text)
  {
    out_.violations.push_back(std::move(text));
  }

  void setup()
  {
    std::map<NodeId, std::uint64_t> zone_of;
    for (auto const &z : sc_.zones)
    {
      for (auto id : z.members)
      {
        zone_of[id] = z.id;
      }
    }
    for (auto spec : sc_.nodes)
    {
      if (auto it = zone_of.find(spec.id); it != zone_of.end())
      {
        spec.zone = it->second;
      }
      world_.attach_node(spec);
    }

    for (auto const &z : sc_.zones)
    {
      std::vector<zones::SatelliteInfo> sats;
      for (auto id : z.members)
      {
        sats.push_back({id, *world_.node(id).spec.orbit});
      }
      auto &zone = directory_.add(zones::VirtualZone::create(z.id, z.master, sats, z.orbit, z.rules, 0));
      world_.log_event(z.master, "ZONE_CREATE",
                       {{"zone", std::to_string(z.id)},
                        {"orbit", std::string{to_string(z.orbit)}},
                        {"members", join_ids(z.members)},
                        {"nonce", std::to_string(zone.expected_nonce())}});
    }

    if (sc_.mission)
    {
      mission_.emplace(*sc_.mission, 0);
      world_.log_event(sc_.mission->beneficiary, "MISSION_CHARTER",
                       {{"budget", std::to_string(sc_.mission->budget)},
                        {"miners", join_ids(sc_.mission->miners)}});
    }
    if (sc_.tdrs)
    {
      tdrs_.emplace(*sc_.tdrs, 0);
      world_.log_event(sc_.tdrs->tdrs, "TDRS_SERVICE",
                       {{"ground", std::to_string(sc_.tdrs->ground_station)},
                        {"followers", std::to_string(sc_.tdrs->followers.size())}});
    }

    world_.on_timer("action", [this](sim::World &, NodeId, sim::Timer const &t) { act(sc_.actions[t.arg]); });
    world_.on_timer("tdrs_commit", [this](sim::World &, NodeId node, sim::Timer const &) {
      commit_pending_ = false;
      commit_queries(node);
    });
    world_.on_timer("downlink", [this](sim::World &, NodeId node, sim::Timer const &t) { downlink(node, t.arg); });
    world_.on_debris_spawn([this](sim::World &, NodeId node, std::uint64_t id) { spawn_debris(node, id); });
    world_.on_query_arrival([this](sim::World &, NodeId node, std::uint64_t id) { arrive(node, id); });

    for (std::size_t i = 0; i < sc_.actions.size(); ++i)
    {
      auto const &a = sc_.actions[i];
      if (auto const *m = std::get_if<Mine>(&a.body))
      {
        world_.schedule_mining(m->node, a.at);
      }
      else
      {
        world_.schedule(a.at, a.node, sim::Timer{"action", i});
      }
    }
    for (auto const &d : sc_.debris)
    {
      world_.schedule(d.at, d.sensor, sim::DebrisSpawn{d.object.id});
    }
    for (auto const &q : sc_.queries)
    {
      world_.schedule(q.at, q.query.requester, sim::QueryArrival{q.query.query_id});
    }
  }

  void act(Action const &a)
  {
    std::visit(Overloaded{
                   [](Mine const &) {},
                   [&](SubmitTx const &tx) {
                     auto t = tokens::to_transaction(tokens::DecisionToken{tx.text, 0}, tx.from, tx.fee, world_.now());
                     world_.submit_transaction(tx.from, std::move(t), tx.via);
                   },
                   [&](Read const &r) { world_.read_chain(r.reader, r.via, r.selector); },
                   [&](Mfa const &m) { mfa(a.node, m); },
                   [&](Join const &j) { join(a.node, j); },
                   [&](SubmitPhase const &p) { submit_phase(a.node, p); },
                   [&](ReleaseFunds const &r) { release(a.node, r); },
                   [&](Uplink const &) { uplink(a.node); },
               },
               a.body);
  }

  void mfa(NodeId node, Mfa const &m)
  {
    auto &zone  = directory_.at(m.zone);
    auto  nonce = m.nonce.value_or(zone.expected_nonce());
    std::string outcome;
    std::uint64_t session = 0;
    try
    {
      auto const result = zone.mfa_authenticate(m.initiator, m.responder, nonce, world_.now());
      outcome           = std::string{zones::to_string(result.outcome)};
      session           = result.session_id;
    }
    catch (zones::NotAMember const &)
    {
      outcome = "responder_not_member";
    }
    world_.log_event(node, "MFA",
                     {{"zone", std::to_string(m.zone)},
                      {"initiator", std::to_string(m.initiator)},
                      {"responder", std::to_string(m.responder)},
                      {"outcome", outcome},
                      {"session", std::to_string(session)}});
  }

  void join(NodeId node, Join const &j)
  {
    auto &zone = directory_.at(j.zone);
    try
    {
      auto const result = zone.request_join({j.satellite, *world_.node(j.satellite).spec.orbit}, world_.now());
      auto const approvals =
          std::count_if(result.votes.begin(), result.votes.end(), [](zones::Vote const &v) { return v.approve; });
      if (result.admitted())
      {
        world_.spec(j.satellite).zone = j.zone;
      }
      world_.log_event(node, "JOIN",
                       {{"zone", std::to_string(j.zone)},
                        {"verdict", result.admitted() ? "admitted" : "intruder"},
                        {"vid", std::to_string(result.virtual_id)},
                        {"approvals", std::to_string(approvals) + "/" + std::to_string(result.votes.size())}});
    }
    catch (zones::AlreadyMember const &)
    {
      world_.log_event(node, "JOIN_ERROR", {{"zone", std::to_string(j.zone)}, {"reason", "already_member"}});
    }
  }

  void submit_phase(NodeId node, SubmitPhase const &p)
  {
    std::string reason;
    try
    {
      auto const &block = mission_->submit_phase(phase_record(p), world_.now());
      world_.log_event(node, "PHASE_COMMIT",
                       {{"phase", std::to_string(p.phase)},
                        {"block", std::to_string(block.header.index)},
                        {"miner", std::to_string(mission_->miner_for(block.header.index))}});
      return;
    }
    catch (mission::UnauthorizedSubmitter const &)
    {
      reason = "unauthorized";
    }
    catch (mission::DuplicatePhase const &)
    {
      reason = "duplicate";
    }
    catch (mission::OutOfOrder const &)
    {
      reason = "out_of_order";
    }
    catch (mission::RejectedByMiners const &)
    {
      reason = "rejected_by_miners";
    }
    world_.log_event(node, "PHASE_REJECT", {{"phase", std::to_string(p.phase)}, {"reason", reason}});
  }

  void release(NodeId node, ReleaseFunds const &r)
  {
    std::string reason;
    try
    {
      auto const rel = mission_->release_funds(r.phase, world_.now());
      world_.log_event(node, "RELEASE",
                       {{"phase", std::to_string(r.phase)},
                        {"amount", std::to_string(rel.amount)},
                        {"block", std::to_string(rel.block)},
                        {"released", std::to_string(mission_->status().released)}});
      return;
    }
    catch (mission::PhaseNotCommitted const &)
    {
      reason = "not_committed";
    }
    catch (mission::AlreadyReleased const &)
    {
      reason = "already_released";
    }
    world_.log_event(node, "RELEASE_REJECT", {{"phase", std::to_string(r.phase)}, {"reason", reason}});
  }

  void arrive(NodeId node, std::uint64_t query_id)
  {
    auto const it = std::find_if(sc_.queries.begin(), sc_.queries.end(),
                                 [&](QuerySpec const &q) { return q.query.query_id == query_id; });
    try
    {
      tdrs_->submit_image_query(it->query, world_.now());
    }
    catch (tdrs::InvalidQuery const &)
    {
      world_.log_event(node, "QUERY_REJECT", {{"query", std::to_string(query_id)}});
      return;
    }
    world_.log_event(node, "QUERY_SUBMIT",
                     {{"query", std::to_string(query_id)}, {"fee", std::to_string(it->query.fee)}});
    // One commit per tick, after every arrival already queued for it.
    if (!commit_pending_)
    {
      commit_pending_ = true;
      world_.schedule(world_.now(), sc_.tdrs->ground_station, sim::Timer{"tdrs_commit", 0});
    }
  }

  void commit_queries(NodeId node)
  {
    if (auto const *block = tdrs_->commit(world_.now()))
    {
      world_.log_event(node, "QUERY_COMMIT",
                       {{"block", std::to_string(block->header.index)},
                        {"txs", std::to_string(block->transactions.size())}});
    }
  }

  void uplink(NodeId node)
  {
    commit_queries(sc_.tdrs->ground_station);
    auto const batch = tdrs_->uplink_to_tdrs(world_.now());
    world_.log_event(node, "UPLINK",
                     {{"tdrs", std::to_string(sc_.tdrs->tdrs)}, {"batch", join_ids(batch)}});
    if (batch.empty())
    {
      return;
    }
    for (auto const &[id, slot] : tdrs_->reallocate_followers(world_.now()))
    {
      world_.log_event(sc_.tdrs->tdrs, "ASSIGN",
                       {{"query", std::to_string(id)},
                        {"follower", std::to_string(slot.follower)},
                        {"start", std::to_string(slot.start)},
                        {"completion", std::to_string(slot.completion)}});
      world_.schedule(slot.completion, sc_.tdrs->tdrs, sim::Timer{"downlink", id});
    }
  }

  void downlink(NodeId node, std::uint64_t query_id)
  {
    commit_queries(sc_.tdrs->ground_station);
    auto const fb = tdrs_->downlink_feedback(query_id, world_.now());
    world_.log_event(node, "FEEDBACK",
                     {{"query", std::to_string(query_id)},
                      {"start", std::to_string(fb.start_tick)},
                      {"completion", std::to_string(fb.completion_tick)},
                      {"block", std::to_string(tdrs_->chain().height() - 1)}});
  }

  void spawn_debris(NodeId sensor, std::uint64_t id)
  {
    // Repeated sightings share the debris id; pick this sensor's entry for now.
    auto const &spec = *std::find_if(sc_.debris.begin(), sc_.debris.end(), [&](DebrisSpec const &d) {
      return d.object.id == id && d.sensor == sensor && d.at == world_.now();
    });
    auto       &zone = directory_.at(spec.zone);
    if (!tracker_.accept(id, world_.now()))
    {
      world_.log_event(sensor, "DEBRIS_DUPLICATE", {{"debris", std::to_string(id)}});
      return;
    }
    ledger::Transaction report;
    try
    {
      report = debris::report_debris(zone, sensor, spec.object, world_.now());
    }
    catch (zones::NotAMember const &)
    {
      world_.log_event(sensor, "DEBRIS_REJECT", {{"debris", std::to_string(id)}, {"reason", "not_member"}});
      return;
    }
    auto const &report_block = zone.append_token(*tokens::token_of(report), world_.now());
    world_.log_event(sensor, "DEBRIS_REPORT",
                     {{"debris", std::to_string(id)},
                      {"zone", std::to_string(spec.zone)},
                      {"block", std::to_string(report_block.header.index)}});

    debris::MemberStates states;
    for (auto const &[sat, vid] : zone.members())
    {
      states[sat] = world_.node(sat).spec.state;
    }
    debris::ManeuverPlan plan;
    try
    {
      plan = debris::plan_maneuvers(spec.zone, spec.object, states, spec.threshold_km, world_.now());
    }
    catch (debris::Unavoidable const &e)
    {
      world_.log_event(zone.master(), "DEBRIS_UNAVOIDABLE",
                       {{"debris", std::to_string(id)}, {"sat", std::to_string(e.satellite())}});
      violation("debris " + std::to_string(id) + ": " + e.what());
      return;
    }

    auto const burns = std::count_if(plan.deltas.begin(), plan.deltas.end(), [](tokens::VelocityDelta const &d) {
      return d.delta.x != 0.0 || d.delta.y != 0.0 || d.delta.z != 0.0;
    });
    if (burns > 0)
    {
      auto const &block  = debris::commit_maneuver_plan(zone, plan, world_.now());
      auto const &blocks = zone.chain().blocks();
      if (!debris::apply_maneuver_block(block, blocks[blocks.size() - 2], states))
      {
        violation("maneuver block for debris " + std::to_string(id) + " failed member verification");
      }
      for (auto const &[sat, state] : states)
      {
        world_.spec(sat).state = state;
      }
    }

    double worst = 1e300;
    for (auto const &[sat, state] : states)
    {
      auto const approach = debris::closest_approach(state, spec.object.state);
      worst               = std::min(worst, approach.d_star);
      if (approach.d_star < spec.threshold_km)
      {
        violation("satellite " + std::to_string(sat) + " passes debris " + std::to_string(id) + " at " +
                  fixed(approach.d_star) + " km");
      }
    }
    world_.log_event(zone.master(), "MANEUVER",
                     {{"zone", std::to_string(spec.zone)},
                      {"debris", std::to_string(id)},
                      {"burns", std::to_string(burns)},
                      {"min_km", fixed(worst)}});
  }

  void check_chain(std::string const &name, std::span<ledger::Block const> blocks, unsigned difficulty)
  {
    auto const report = ledger::validate_chain(blocks, difficulty);
    if (!report.valid())
    {
      violation(name + " chain invalid at block " + std::to_string(*report.first_invalid));
    }
  }

  void check()
  {
    if (!world_.replicas_converged())
    {
      violation("global replicas did not converge");
    }
    check_chain("global", world_.winning_chain(), sc_.world.difficulty);

    for (auto const &[id, zone] : directory_.all())
    {
      auto const name = "zone " + std::to_string(id);
      check_chain(name, zone.chain().blocks(), zones::ZONE_DIFFICULTY);
      if (zones::format_zone_status(zones::VirtualZone::replay(zone.chain().blocks()).status()) !=
          zones::format_zone_status(zone.status()))
      {
        violation(name + " replay disagrees with live state");
      }
    }
    if (mission_)
    {
      check_chain("mission", mission_->chain().blocks(), mission_->config().difficulty);
      if (mission::format_lifecycle_status(mission::MissionLedger::replay(mission_->chain().blocks()).status()) !=
          mission::format_lifecycle_status(mission_->status()))
      {
        violation("mission replay disagrees with live state");
      }
    }
    if (tdrs_)
    {
      check_chain("tdrs", tdrs_->chain().blocks(), tdrs_->config().difficulty);
      for (auto const &[id, state] : tdrs_->queries())
      {
        if (state.stage != tdrs::Stage::Delivered)
        {
          continue;
        }
        auto const request = first_token(tdrs_->chain(), [&](tokens::SpaceToken const &t) {
          auto const *r = std::get_if<tokens::UserRequestToken>(&t);
          return r != nullptr && r->query_id == id;
        });
        auto const uplink = first_token(tdrs_->chain(), [&](tokens::SpaceToken const &t) {
          auto const *u = std::get_if<tokens::UplinkToken>(&t);
          if (u == nullptr)
          {
            return false;
          }
          auto const ids = tdrs::decode_batch(u->command);
          return std::find(ids.begin(), ids.end(), id) != ids.end();
        });
        auto const feedback = tdrs_->find_feedback(id);
        if (!request || !uplink || !feedback || !(*request < *uplink) || !(uplink->first < feedback->first) ||
            feedback->second.completion_tick < feedback->second.start_tick ||
            feedback->second.start_tick < state.submitted)
        {
          violation("query " + std::to_string(id) + " breaks request < uplink < feedback ordering");
        }
      }
    }
  }

  void collect()
  {
    auto &files         = out_.files;
    files["events.log"] = world_.event_log_text();
    try
    {
      files["chain_global.txt"] = ledger::export_chain(world_.winning_chain());
    }
    catch (std::exception const &e)
    {
      violation(std::string{"global chain export failed: "} + e.what());
    }
    for (auto const &[id, zone] : directory_.all())
    {
      files["chain_zone_" + std::to_string(id) + ".txt"]  = ledger::export_chain(zone.chain().blocks());
      files["zone_status_" + std::to_string(id) + ".txt"] = zones::format_zone_status(zone.status());
    }
    if (mission_)
    {
      files["chain_mission.txt"]    = ledger::export_chain(mission_->chain().blocks());
      files["lifecycle_status.txt"] = mission::format_lifecycle_status(mission_->status());
    }
    if (tdrs_)
    {
      files["chain_tdrs.txt"] = ledger::export_chain(tdrs_->chain().blocks());
      std::string status;
      for (auto const &[id, state] : tdrs_->queries())
      {
        status += "query=" + std::to_string(id) + " stage=" + std::string{tdrs::to_string(state.stage)} +
                  " submitted=" + std::to_string(state.submitted);
        if (state.stage == tdrs::Stage::Assigned || state.stage == tdrs::Stage::Delivered)
        {
          status += " follower=" + std::to_string(state.slot.follower) + " start=" +
                    std::to_string(state.slot.start) + " completion=" + std::to_string(state.slot.completion);
        }
        status += "\n";
      }
      files["tdrs_status.txt"] = status;
    }
    std::string summary = std::string{"result="} + (out_.ok() ? "ok" : "violation") + "\n";
    summary += "final_tick=" + std::to_string(world_.now()) + "\n";
    summary += "global_height=" + std::to_string(world_.winning_chain().size()) + "\n";
    for (auto const &v : out_.violations)
    {
      summary += "violation=" + v + "\n";
    }
    files["summary.txt"] = summary;
  }

  Scenario const                          &sc_;
  sim::World                               world_;
  zones::ZoneDirectory                     directory_;
  std::optional<mission::MissionLedger>    mission_;
  std::optional<tdrs::TdrsWorkflow>        tdrs_;
  debris::DebrisTracker                    tracker_;
  bool                                     commit_pending_{false};
  RunOutcome                               out_;
};

}  // namespace

Scenario parse_scenario(std::string_view text)
{
  return Parser{text}.parse();
}

Scenario load_scenario(std::filesystem::path const &path)
{
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    throw ScenarioError{0, {}, "cannot read " + path.string()};
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

RunOutcome run_scenario(Scenario const &scenario)
{
  return Runner{scenario}.run();
}

void write_artifacts(RunOutcome const &outcome, std::filesystem::path const &dir)
{
  std::filesystem::create_directories(dir);
  for (auto const &[name, content] : outcome.files)
  {
    std::ofstream out{dir / name, std::ios::binary | std::ios::trunc};
    out << content;
    if (!out)
    {
      throw std::runtime_error{"cannot write " + (dir / name).string()};
    }
  }
}

}  // namespace orbitledger::scenario
