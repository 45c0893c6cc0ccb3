#include "doctest.h"

#include "orbitledger/chain_io.hpp"
#include "orbitledger/scenario.hpp"

#include <filesystem>

using namespace orbitledger;
using namespace orbitledger::scenario;

namespace {

std::filesystem::path const SCENARIOS{ORBITLEDGER_SCENARIO_DIR};

std::string const BASE = R"(
[world]
world seed=1 horizon=50
[nodes]
node id=1 kind=ground full=yes miner=yes
node id=2 kind=ground full=yes
node id=10 kind=satellite orbit=leo
node id=11 kind=satellite orbit=leo
)";

void expect_error(std::string const &text, std::size_t line, std::string const &field)
{
  CAPTURE(text);
  try
  {
    parse_scenario(text);
    FAIL("parsed without error");
  }
  catch (ScenarioError const &e)
  {
    CHECK(e.line() == line);
    CHECK(e.field() == field);
  }
}

}  // namespace

TEST_CASE("parse_scenario accepts the base fixture")
{
  auto const sc = parse_scenario(BASE);
  CHECK(sc.world.seed == 1);
  CHECK(sc.horizon == 50);
  CHECK(sc.nodes.size() == 4);
  CHECK(sc.nodes[0].roles.miner);
  CHECK(sc.nodes[2].orbit == OrbitClass::LEO);
}

TEST_CASE("config errors carry line and field")
{
  expect_error(BASE + "[events]\nmine at=3 node=7\n", 10, "node");
  expect_error(BASE + "[events]\nmine at=3 node=2\n", 10, "node");
  expect_error(BASE + "[events]\ntx at=3 from=1 via=10 text=x\n", 10, "via");
  expect_error(BASE + "[events]\nmine at=99 node=1\n", 10, "at");
  expect_error(BASE + "[events]\nmine at=3 node=1 color=red\n", 10, "color");
  expect_error(BASE + "[events]\nlaunch at=3\n", 10, "");
  expect_error(BASE + "[zones]\nzone id=1 master=10 orbit=leo members=10\n", 10, "master");
  expect_error(BASE + "[zones]\nzone id=1 master=1 orbit=meo members=10\n", 10, "members");
  expect_error(BASE + "[zones]\nzone id=1 master=1 orbit=leo members=10,12\n", 10, "members");
  expect_error(BASE + "[zones]\nzone id=1 master=1 orbit=xeo members=10\n", 10, "orbit");
  expect_error(BASE + "[mission]\nconsortium members=1 miners=2 budget=9 beneficiary=5\n", 10, "beneficiary");
  expect_error(BASE + "[mission]\nconsortium members=1 miners=2 budget=9 beneficiary=1 fractions=1/2,1/2,1/2,0,0,0\n",
               10, "");
  expect_error(BASE + "[events]\nphase at=1 n=1 submitter=1\n", 10, "");
  expect_error("[world]\nworld horizon=5\n", 0, "seed");
  expect_error("node id=1 kind=ground\n", 1, "");
  expect_error("[planets]\n", 1, "");
  expect_error(BASE + "node id=1 kind=user\n", 9, "id");
  expect_error(BASE + "node id=3 kind=comet\n", 9, "kind");
  expect_error(BASE + "node id=3 kind=satellite\n", 9, "orbit");
  expect_error(BASE + "node id=3 kind=ground miner=yes\n", 9, "miner");
  expect_error(BASE + "node id=3 kind=ground pos=1,2\n", 9, "pos");
  expect_error(BASE + "[links]\ndrops probability=1.5\n", 10, "probability");
  expect_error(BASE + "[tdrs]\nservice tdrs=1 ground=2\n", 10, "tdrs");
}

TEST_CASE("later sections may reference earlier-declared sections in any file order")
{
  auto const sc = parse_scenario("[events]\nmine at=2 node=1\n" + BASE);
  REQUIRE(sc.actions.size() == 1);
  CHECK(sc.actions[0].line == 2);
}

TEST_CASE("bundled scenarios run clean and replay byte-identically")
{
  std::size_t count = 0;
  for (auto const &entry : std::filesystem::directory_iterator{SCENARIOS})
  {
    if (entry.path().extension() != ".scn")
    {
      continue;
    }
    ++count;
    CAPTURE(entry.path().string());
    auto const sc    = load_scenario(entry.path());
    auto const first = run_scenario(sc);
    CHECK(first.ok());
    for (auto const &v : first.violations)
    {
      MESSAGE(v);
    }
    auto const second = run_scenario(sc);
    CHECK(first.files == second.files);

    for (auto const &[name, content] : first.files)
    {
      if (name.starts_with("chain_"))
      {
        CAPTURE(name);
        auto const blocks = ledger::import_chain(content);
        CHECK(ledger::export_chain(blocks) == content);
        CHECK(!blocks.empty());
      }
    }
  }
  CHECK(count >= 4);
}

TEST_CASE("demo_zone: zone chain export validates and replays")
{
  auto const outcome = run_scenario(load_scenario(SCENARIOS / "demo_zone.scn"));
  REQUIRE(outcome.ok());
  auto const blocks = ledger::import_chain(outcome.files.at("chain_zone_1.txt"));
  CHECK(ledger::validate_chain(blocks, zones::ZONE_DIFFICULTY).valid());
  CHECK(zones::format_zone_status(zones::VirtualZone::replay(blocks).status()) ==
        outcome.files.at("zone_status_1.txt"));
  auto const &log = outcome.files.at("events.log");
  CHECK(log.find("kind=MFA zone=1 initiator=10 responder=11 outcome=established") != std::string::npos);
  CHECK(log.find("kind=DEBRIS_DUPLICATE debris=900") != std::string::npos);
}

TEST_CASE("seed override changes a lossy run")
{
  auto sc = load_scenario(SCENARIOS / "demo_forks.scn");
  REQUIRE(sc.world.links.drop_probability > 0.0);
  auto const a = run_scenario(sc);
  sc.world.seed += 1;
  auto const b = run_scenario(sc);
  CHECK(a.ok());
  CHECK(b.ok());
  CHECK(a.files.at("events.log") != b.files.at("events.log"));
}

TEST_CASE("runtime violations are reported, not thrown")
{
  // The head-on pass needs more than four doublings of the default burn.
  auto const sc = parse_scenario(BASE + R"(
[zones]
zone id=1 master=1 orbit=leo members=10,11
[events]
debris at=5 id=1 zone=1 sensor=10 pos=10,0,0 vel=-1,0,0 radius=0.1 threshold=2
)");
  auto const outcome = run_scenario(sc);
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.files.at("summary.txt").starts_with("result=violation\n"));
  CHECK(outcome.files.at("events.log").find("DEBRIS_UNAVOIDABLE") != std::string::npos);
}
