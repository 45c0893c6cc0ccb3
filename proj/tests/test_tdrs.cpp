#include "doctest.h"

#include "orbitledger/tdrs.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace orbitledger;
using namespace orbitledger::tdrs;

namespace {

ImageQuery query(std::uint64_t id, NodeId requester, GeoPoint where, std::uint64_t fee = 1, Tick begin = 0)
{
  return ImageQuery{id, requester, {where}, {{begin, begin + 100}}, fee};
}

TdrsConfig two_followers()
{
  return TdrsConfig{500, 400, {{31, {0, 0}, 1.0, 0}, {32, {0, 90}, 1.0, 0}}, 1};
}

// Position (block index, tx index) of the first token matching `pred`.
template <class Pred>
std::optional<std::pair<std::size_t, std::size_t>> position_of(ledger::Chain const &chain, Pred pred)
{
  for (std::size_t b = 0; b < chain.height(); ++b)
  {
    auto const &txs = chain.blocks()[b].transactions;
    for (std::size_t i = 0; i < txs.size(); ++i)
    {
      if (auto token = tokens::token_of(txs[i]); token && pred(*token))
      {
        return std::pair{b, i};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("submit_image_query")
{
  TdrsWorkflow w{two_followers()};

  SUBCASE("one-location query commits a request and a session token")
  {
    w.submit_image_query(query(1, 900, {10, 10}, 5), 1);
    auto const *block = w.commit(1);
    REQUIRE(block != nullptr);
    REQUIRE(block->transactions.size() == 2);
    std::set<tokens::TokenKind> kinds;
    for (auto const &tx : block->transactions)
    {
      kinds.insert(tokens::kind_of(*tokens::token_of(tx)));
      CHECK(tx.fee == 5);
    }
    CHECK(kinds == std::set{tokens::TokenKind::UserRequest, tokens::TokenKind::TransactionSession});
    CHECK(w.queries().at(1).stage == Stage::Committed);
    CHECK(w.commit(2) == nullptr);
  }

  SUBCASE("invalid queries")
  {
    ImageQuery bad{1, 900, {}, {{0, 1}}, 1};
    CHECK_THROWS_AS(w.submit_image_query(bad, 0), InvalidQuery);
    bad = ImageQuery{1, 900, {{0, 0}}, {}, 1};
    CHECK_THROWS_AS(w.submit_image_query(bad, 0), InvalidQuery);
    bad = ImageQuery{1, 900, {{95, 0}}, {{0, 1}}, 1};
    CHECK_THROWS_AS(w.submit_image_query(bad, 0), InvalidQuery);
    w.submit_image_query(query(1, 900, {0, 0}), 0);
    CHECK_THROWS_AS(w.submit_image_query(query(1, 901, {0, 0}), 0), InvalidQuery);
  }

  SUBCASE("two users in one tick: both commit in fee order, then tx id")
  {
    w.submit_image_query(query(1, 900, {0, 0}, 2), 3);
    w.submit_image_query(query(2, 901, {0, 0}, 9), 3);
    w.submit_image_query(query(3, 902, {0, 0}, 2), 3);
    auto const *block = w.commit(3);
    REQUIRE(block != nullptr);
    REQUIRE(block->transactions.size() == 6);
    for (std::size_t i = 1; i < block->transactions.size(); ++i)
    {
      auto const &a = block->transactions[i - 1];
      auto const &b = block->transactions[i];
      CHECK((a.fee > b.fee || (a.fee == b.fee && a.tx_id < b.tx_id)));
    }
    CHECK(block->transactions[0].fee == 9);
  }
}

TEST_CASE("uplink_to_tdrs")
{
  TdrsWorkflow w{two_followers()};
  CHECK(w.uplink_to_tdrs(0).empty());
  CHECK(w.chain().height() == 1);

  for (std::uint64_t id = 1; id <= 3; ++id)
  {
    w.submit_image_query(query(id, 900 + id, {0, 0}), 1);
  }
  // not committed yet: nothing to uplink
  CHECK(w.uplink_to_tdrs(1).empty());
  w.commit(1);
  auto const batch = w.uplink_to_tdrs(2);
  CHECK(batch == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(w.chain().height() == 3);

  auto const &tip = w.chain().tip();
  REQUIRE(tip.transactions.size() == 1);
  auto const uplink = std::get<tokens::UplinkToken>(*tokens::token_of(tip.transactions.front()));
  CHECK(uplink.tdrs == 500);
  CHECK(uplink.ground_station == 400);
  CHECK(decode_batch(uplink.command) == batch);
  CHECK(w.uplink_to_tdrs(3).empty());

  CHECK_THROWS_AS(decode_batch(Bytes{0, 0, 0, 2, 0}), MalformedBytes);
}

TEST_CASE("reallocate_followers")
{
  SUBCASE("one query goes to the nearer idle follower")
  {
    TdrsWorkflow w{two_followers()};
    w.submit_image_query(query(1, 900, {0, 80}), 0);
    w.commit(0);
    w.uplink_to_tdrs(0);
    auto const a = w.reallocate_followers(0);
    REQUIRE(a.size() == 1);
    CHECK(a.at(1).follower == 32);
    CHECK(a.at(1).completion == 10);
    CHECK(w.reallocate_followers(1).empty());
  }

  SUBCASE("no followers")
  {
    TdrsWorkflow w{TdrsConfig{500, 400, {}, 1}};
    CHECK_THROWS_AS(w.reallocate_followers(0), NoFollowers);
  }

  SUBCASE("single-query instances match the exhaustive optimum")
  {
    std::mt19937_64                        rng{31};
    std::uniform_real_distribution<double> lat{-89, 89};
    std::uniform_real_distribution<double> lon{-179, 179};
    for (int trial = 0; trial < 400; ++trial)
    {
      std::vector<Follower> followers;
      auto const            n = 1 + rng() % 4;
      for (std::size_t i = 0; i < n; ++i)
      {
        followers.push_back({10 + i, {lat(rng), lon(rng)}, 0.5 + static_cast<double>(rng() % 40) / 10.0, rng() % 30});
      }
      auto const q   = query(1, 900, {lat(rng), lon(rng)}, 1, rng() % 20);
      Tick const now = rng() % 10;

      // brute force: every follower, own completion formula
      Tick   best = UINT64_MAX;
      NodeId who  = 0;
      for (auto const &f : followers)
      {
        Tick const start = std::max({now, f.available_at, q.timeframes[0].begin});
        Tick const done  = start + static_cast<Tick>(std::ceil(angular_distance_deg(f.position, q.locations[0]) /
                                                               f.rate_deg_per_tick));
        if (done < best || (done == best && f.id < who))
        {
          best = done;
          who  = f.id;
        }
      }
      auto       copy = followers;
      auto const a    = greedy_assign({q}, copy, now);
      CAPTURE(trial);
      CHECK(a.at(1).completion == best);
      CHECK(a.at(1).follower == who);
    }
  }

  SUBCASE("multi-query greedy is feasible and never overlaps a follower")
  {
    std::mt19937_64       rng{5};
    std::vector<Follower> followers{{1, {0, 0}, 2.0, 0}, {2, {45, 45}, 2.0, 0}, {3, {-45, 120}, 2.0, 0}};
    std::vector<ImageQuery> qs;
    for (std::uint64_t id = 1; id <= 12; ++id)
    {
      qs.push_back(query(id, 900, {static_cast<double>(rng() % 170) - 85, static_cast<double>(rng() % 350) - 175},
                         rng() % 5, rng() % 30));
    }
    auto const a = greedy_assign(qs, followers, 0);
    CHECK(a.size() == qs.size());
    std::map<NodeId, std::vector<Slot>> per;
    for (auto const &[id, slot] : a)
    {
      per[slot.follower].push_back(slot);
      CHECK(slot.completion >= slot.start);
    }
    for (auto &[f, slots] : per)
    {
      std::sort(slots.begin(), slots.end(), [](Slot const &x, Slot const &y) { return x.start < y.start; });
      for (std::size_t i = 1; i < slots.size(); ++i)
      {
        CHECK(slots[i].start >= slots[i - 1].completion);
      }
    }
  }
}

TEST_CASE("downlink_feedback")
{
  TdrsWorkflow w{two_followers()};
  w.submit_image_query(query(1, 900, {0, 30}), 0);
  CHECK_THROWS_AS(w.downlink_feedback(1, 100), NotCompleted);
  w.commit(0);
  w.uplink_to_tdrs(1);
  auto const a = w.reallocate_followers(2);
  REQUIRE(a.at(1).completion == 32);

  CHECK_THROWS_AS(w.downlink_feedback(1, 31), NotCompleted);
  CHECK(w.due_for_downlink(31).empty());
  CHECK(w.due_for_downlink(32) == std::vector<std::uint64_t>{1});
  auto const fb = w.downlink_feedback(1, 33);
  CHECK(fb.start_tick == 2);
  CHECK(fb.completion_tick == 32);
  CHECK(fb.downlink_tick == 33);
  CHECK_THROWS_AS(w.downlink_feedback(1, 40), AlreadyDelivered);
  CHECK_THROWS_AS(w.downlink_feedback(2, 40), UnknownQuery);

  auto const found = w.find_feedback(1);
  REQUIRE(found);
  CHECK(found->first == w.chain().height() - 1);
  CHECK(found->second == fb);
  CHECK(ledger::validate_chain(w.chain().blocks(), 1).valid());
}

TEST_CASE("causality over 50 random query schedules")
{
  for (std::uint64_t seed = 0; seed < 50; ++seed)
  {
    std::mt19937_64 rng{seed};
    TdrsConfig      cfg{500, 400, {}, 1};
    for (NodeId f = 1; f <= 1 + rng() % 3; ++f)
    {
      cfg.followers.push_back({f, {static_cast<double>(rng() % 120) - 60, static_cast<double>(rng() % 300) - 150},
                               1.0 + static_cast<double>(rng() % 5), 0});
    }
    TdrsWorkflow w{cfg};

    std::map<Tick, std::vector<ImageQuery>> arrivals;
    auto const                              count = 1 + rng() % 8;
    for (std::uint64_t id = 1; id <= count; ++id)
    {
      Tick const at = rng() % 40;
      arrivals[at].push_back(query(id, 900 + rng() % 3,
                                   {static_cast<double>(rng() % 120) - 60, static_cast<double>(rng() % 300) - 150},
                                   rng() % 10, at + rng() % 20));
    }

    auto const all_delivered = [&] {
      return w.queries().size() == count && std::all_of(w.queries().begin(), w.queries().end(), [](auto const &kv) {
               return kv.second.stage == Stage::Delivered;
             });
    };
    for (Tick t = 0; t < 5000 && !all_delivered(); ++t)
    {
      for (auto const &q : arrivals[t])
      {
        w.submit_image_query(q, t);
      }
      w.commit(t);
      if (t % 3 == 0)
      {
        w.uplink_to_tdrs(t);
      }
      w.reallocate_followers(t);
      for (auto id : w.due_for_downlink(t))
      {
        w.downlink_feedback(id, t);
      }
    }

    CAPTURE(seed);
    CHECK(ledger::validate_chain(w.chain().blocks(), 1).valid());
    for (auto const &[id, state] : w.queries())
    {
      CAPTURE(id);
      REQUIRE(state.stage == Stage::Delivered);
      auto const req = position_of(w.chain(), [&](tokens::SpaceToken const &t) {
        auto const *r = std::get_if<tokens::UserRequestToken>(&t);
        return r != nullptr && r->query_id == id;
      });
      auto const up = position_of(w.chain(), [&](tokens::SpaceToken const &t) {
        auto const *u = std::get_if<tokens::UplinkToken>(&t);
        if (u == nullptr)
        {
          return false;
        }
        auto const ids = decode_batch(u->command);
        return std::find(ids.begin(), ids.end(), id) != ids.end();
      });
      REQUIRE(req);
      REQUIRE(up);
      CHECK(*req < *up);

      std::size_t feedbacks = 0;
      for (auto const &block : w.chain().blocks())
      {
        for (auto const &tx : block.transactions)
        {
          auto const token = tokens::token_of(tx);
          if (auto const *f = std::get_if<tokens::DownlinkFeedbackToken>(&*token); f && f->query_id == id)
          {
            ++feedbacks;
            CHECK(std::pair<std::size_t, std::size_t>{block.header.index, 0} > *up);
            CHECK(f->completion_tick >= f->start_tick);
            CHECK(f->start_tick >= state.submitted);
          }
        }
      }
      CHECK(feedbacks == 1);
    }
  }
}
