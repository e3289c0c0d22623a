#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "opra/cpnet.hpp"
#include "opra/json_io.hpp"
#include "opra/sequential.hpp"
#include "opra/serial_dictatorship.hpp"
#include "oracles/combinatorial.hpp"

using namespace opra;

namespace {

std::vector<Issue> issues(std::initializer_list<const char*> ids) {
  std::vector<Issue> out;
  for (const char* id : ids) out.push_back(Issue{id});
  return out;
}

CPNet parentless(const std::vector<Issue>& is, int preferred) {
  CPNet net(is);
  for (std::size_t i = 0; i < is.size(); ++i) net.set_row(static_cast<int>(i), {}, preferred);
  return net;
}

MultiPollConfig config(const std::vector<Issue>& is) {
  MultiPollConfig c;
  c.issues = is;
  for (const auto& i : is) c.issue_order.push_back(i.id);
  return c;
}

}  // namespace

TEST(CpnetValidation, ParentlessComplete) {
  EXPECT_TRUE(validate_cpnet(parentless(issues({"x", "y"}), 0)).valid);
}

TEST(CpnetValidation, CycleReported) {
  CPNet net(issues({"x", "y"}));
  net.set_parents(0, {1});
  net.set_parents(1, {0});
  for (int i = 0; i < 2; ++i) {
    net.set_row(i, {0}, 0);
    net.set_row(i, {1}, 1);
  }
  const auto r = validate_cpnet(net);
  EXPECT_FALSE(r.valid);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("cycle"), std::string::npos);
}

TEST(CpnetValidation, MissingRow) {
  CPNet net(issues({"x", "y"}));
  net.set_row(0, {}, 0);
  net.set_parents(1, {0});
  net.set_row(1, {0}, 1);
  const auto r = validate_cpnet(net);
  EXPECT_FALSE(r.valid);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("[x=no]"), std::string::npos);
}

TEST(CpnetValidation, SelfParent) {
  CPNet net(issues({"x"}));
  net.set_parents(0, {0});
  net.set_row(0, {0}, 0);
  net.set_row(0, {1}, 0);
  EXPECT_FALSE(validate_cpnet(net).valid);
}

TEST(OrderLegality, Examples) {
  EXPECT_TRUE(is_order_legal(parentless(issues({"x", "y"}), 0), {"y", "x"}));
  CPNet xy(issues({"x", "y"}));
  xy.set_parents(1, {0});
  EXPECT_TRUE(is_order_legal(xy, {"x", "y"}));
  EXPECT_FALSE(is_order_legal(xy, {"y", "x"}));
  CPNet chain(issues({"x", "y", "z"}));
  chain.set_parents(1, {0});
  chain.set_parents(2, {1});
  EXPECT_FALSE(is_order_legal(chain, {"x", "z", "y"}));
  EXPECT_THROW(is_order_legal(chain, {"x", "y"}), Error);
}

TEST(LocalVote, Lookups) {
  const auto net = parse_cpnet(
      "issue x\n"
      "issue y\n"
      "row x []: yes > no\n"
      "parents y: x\n"
      "row y [x=yes]: no > yes\n"
      "row y [x=no]: yes > no\n");
  EXPECT_EQ(local_vote(net, "x", {}), "yes");
  EXPECT_EQ(local_vote(net, "y", {{"x", "yes"}}), "no");
  EXPECT_THROW(local_vote(net, "y", {}), Error);
}

TEST(CpnetFormat, RoundTripAndErrors) {
  const std::string text =
      "issue x\n"
      "issue light: on,off\n"
      "row x []: no > yes\n"
      "parents light: x\n"
      "row light [x=yes]: off > on\n"
      "row light [x=no]: on > off\n";
  const auto net = parse_cpnet(text);
  EXPECT_EQ(parse_cpnet(format_cpnet(net)), net);
  EXPECT_EQ(local_vote(net, "light", {{"x", "no"}}), "on");
  EXPECT_THROW(parse_cpnet("row x []: yes > no\n"), Error);
  EXPECT_THROW(parse_cpnet("issue x\nrow x []: yes > yes\n"), Error);
  EXPECT_THROW(parse_cpnet("issue x\nissue x\n"), Error);
  EXPECT_THROW(parse_cpnet("issue x\nrow x []: yes > no\nrow x []: no > yes\n"), Error);
  EXPECT_THROW(parse_cpnet("issue x\nissue y\nrow y [x=yes]: yes > no\n"), Error);
}

TEST(SequentialVote, UnanimousYes) {
  const auto is = issues({"x", "y"});
  const auto out = sequential_vote({parentless(is, 0), parentless(is, 0)}, config(is));
  EXPECT_EQ(out.assignment, (std::map<std::string, std::string>{{"x", "yes"}, {"y", "yes"}}));
  EXPECT_EQ(out.tallies[0].counts[0], 2);
}

TEST(SequentialVote, TieBreak) {
  const auto is = issues({"x"});
  auto cfg = config(is);
  auto out = sequential_vote({parentless(is, 0), parentless(is, 1)}, cfg);
  EXPECT_EQ(out.assignment.at("x"), "no");
  EXPECT_TRUE(out.tallies[0].tie_broken);
  cfg.tie_break["x"] = "yes";
  out = sequential_vote({parentless(is, 0), parentless(is, 1)}, cfg);
  EXPECT_EQ(out.assignment.at("x"), "yes");
}

TEST(SequentialVote, ConditionalFlipMatchesSimulation) {
  // Two voters want x=yes outright; y's preference flips with x.
  const auto is = issues({"x", "y"});
  std::vector<oracle::RawVoter> raw(3);
  for (int v = 0; v < 3; ++v) {
    raw[static_cast<std::size_t>(v)].parents = {{}, {0}};
    raw[static_cast<std::size_t>(v)].cpt.resize(2);
    raw[static_cast<std::size_t>(v)].cpt[0][{}] = v < 2 ? 0 : 1;
    raw[static_cast<std::size_t>(v)].cpt[1][{0}] = v == 0 ? 0 : 1;
    raw[static_cast<std::size_t>(v)].cpt[1][{1}] = 0;
  }
  std::vector<SequentialVoter> voters;
  for (const auto& r : raw) voters.emplace_back(oracle::to_cpnet(r, is));
  const auto out = sequential_vote(voters, config(is));
  const auto expect = oracle::simulate_sequential(raw, 2, {0, 1}, {1, 1});
  EXPECT_EQ(out.assignment.at("x"), is[0].values[static_cast<std::size_t>(expect[0])]);
  EXPECT_EQ(out.assignment.at("y"), is[1].values[static_cast<std::size_t>(expect[1])]);
  EXPECT_EQ(out.assignment.at("y"), "no");
}

TEST(SequentialVote, RandomFamiliesMatchSimulation) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<Issue> is;
    for (int i = 0; i < p; ++i) is.push_back(Issue{"i" + std::to_string(i)});
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    MultiPollConfig cfg;
    cfg.issues = is;
    for (int i : order) cfg.issue_order.push_back(is[static_cast<std::size_t>(i)].id);
    std::vector<int> tie(static_cast<std::size_t>(p), 1);
    for (int i = 0; i < p; ++i) {
      if (rng() % 2) {
        cfg.tie_break[is[static_cast<std::size_t>(i)].id] = "yes";
        tie[static_cast<std::size_t>(i)] = 0;
      }
    }
    std::vector<oracle::RawVoter> raw;
    std::vector<SequentialVoter> voters;
    for (int v = 0; v < n; ++v) {
      raw.push_back(oracle::random_cpnet_voter(p, order, rng));
      if (rng() % 4 == 0) {
        // Live voter with a fixed vote on every issue.
        raw.back().is_live = true;
        LiveVotes live;
        for (int i = 0; i < p; ++i) {
          const int value = static_cast<int>(rng() % 2);
          raw.back().live[i] = value;
          live.votes[is[static_cast<std::size_t>(i)].id] = is[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(value)];
        }
        voters.emplace_back(live);
      } else {
        voters.emplace_back(oracle::to_cpnet(raw.back(), is));
      }
    }
    const auto out = sequential_vote(voters, cfg);
    const auto expect = oracle::simulate_sequential(raw, p, order, tie);
    for (int i = 0; i < p; ++i) {
      EXPECT_EQ(out.assignment.at(is[static_cast<std::size_t>(i)].id),
                is[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(expect[static_cast<std::size_t>(i)])]);
    }
  }
}

TEST(SequentialVote, RejectsIllegalOrDirtyInput) {
  const auto is = issues({"x", "y"});
  CPNet net(is);
  net.set_row(0, {}, 0);
  net.set_parents(0, {1});
  EXPECT_THROW(sequential_vote({net}, config(is)), Error);
  auto cfg = config(is);
  cfg.issue_order = {"x"};
  EXPECT_THROW(sequential_vote({parentless(is, 0)}, cfg), Error);
  EXPECT_THROW(sequential_vote({LiveVotes{{{"x", "yes"}}}}, config(is)), Error);
}

namespace {

AllocationInstance two_type_instance() {
  return allocation_instance_from_json(nlohmann::json::parse(R"({
    "types": ["room", "slot"],
    "items": {"room": ["r1", "r2", "r3"], "slot": ["am", "pm", "eve"]},
    "agents": ["ann", "bob", "cat"],
    "prefs": {
      "ann": {"room": {"ranking": ["r2", "r1", "r3"]},
              "slot": {"parents": ["room"], "rows": [
                {"when": {"room": "r1"}, "ranking": ["am", "pm", "eve"]},
                {"when": {"room": "r2"}, "ranking": ["eve", "am", "pm"]},
                {"when": {"room": "r3"}, "ranking": ["pm", "am", "eve"]}]}},
      "bob": {"room": {"ranking": ["r2", "r3", "r1"]},
              "slot": {"parents": ["room"], "rows": [
                {"when": {"room": "r1"}, "ranking": ["pm", "am", "eve"]},
                {"when": {"room": "r2"}, "ranking": ["am", "pm", "eve"]},
                {"when": {"room": "r3"}, "ranking": ["eve", "pm", "am"]}]}},
      "cat": {"room": {"ranking": ["r3", "r2", "r1"]},
              "slot": {"ranking": ["eve", "pm", "am"]}}
    }
  })"));
}

}  // namespace

TEST(SerialDictatorship, SingleAgentGetsTopItems) {
  AllocationInstance inst;
  inst.types = {"t"};
  inst.items = {{"t", {"i1"}}};
  inst.agents = {"solo"};
  inst.prefs["solo"]["t"] = TypePreference{{}, {{{}, {"i1"}}}};
  EXPECT_EQ(serial_dictatorship(inst).bundles[0].second.at("t"), "i1");
}

TEST(SerialDictatorship, PriorityDecides) {
  AllocationInstance inst;
  inst.types = {"t"};
  inst.items = {{"t", {"i1", "i2"}}};
  inst.agents = {"first", "second"};
  inst.prefs["first"]["t"] = TypePreference{{}, {{{}, {"i1", "i2"}}}};
  inst.prefs["second"]["t"] = TypePreference{{}, {{{}, {"i1", "i2"}}}};
  const auto out = serial_dictatorship(inst);
  EXPECT_EQ(out.bundles[0], (std::pair<std::string, std::map<std::string, std::string>>{"first", {{"t", "i1"}}}));
  EXPECT_EQ(out.bundles[1].second.at("t"), "i2");
}

TEST(SerialDictatorship, ConditionalRankingsMatchSimulation) {
  const auto inst = two_type_instance();
  const auto out = serial_dictatorship(inst);
  const auto expect = oracle::simulate_serial_dictatorship(inst);
  for (const auto& [agent, bundle] : out.bundles) EXPECT_EQ(bundle, expect.at(agent)) << agent;
  EXPECT_EQ(out.bundles[0].second, (std::map<std::string, std::string>{{"room", "r2"}, {"slot", "eve"}}));
  EXPECT_EQ(out.bundles[1].second, (std::map<std::string, std::string>{{"room", "r3"}, {"slot", "pm"}}));
  EXPECT_EQ(out.bundles[2].second, (std::map<std::string, std::string>{{"room", "r1"}, {"slot", "am"}}));
}

TEST(SerialDictatorship, RandomInstancesArePerfectMatchings) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    AllocationInstance inst;
    inst.types = {"t0", "t1"};
    for (const auto& t : inst.types) {
      for (int i = 0; i < n; ++i) inst.items[t].push_back(t + "_" + std::to_string(i));
    }
    for (int a = 0; a < n; ++a) inst.agents.push_back("a" + std::to_string(a));
    for (const auto& agent : inst.agents) {
      auto r0 = inst.items["t0"];
      std::shuffle(r0.begin(), r0.end(), rng);
      inst.prefs[agent]["t0"] = TypePreference{{}, {{{}, r0}}};
      TypePreference t1{{"t0"}, {}};
      for (const auto& cond : inst.items["t0"]) {
        auto r1 = inst.items["t1"];
        std::shuffle(r1.begin(), r1.end(), rng);
        t1.rows.push_back({{{"t0", cond}}, r1});
      }
      inst.prefs[agent]["t1"] = t1;
    }
    const auto out = serial_dictatorship(inst);
    const auto expect = oracle::simulate_serial_dictatorship(inst);
    std::map<std::string, std::set<std::string>> used;
    for (const auto& [agent, bundle] : out.bundles) {
      EXPECT_EQ(bundle, expect.at(agent));
      EXPECT_EQ(bundle.size(), 2u);
      for (const auto& [t, item] : bundle) EXPECT_TRUE(used[t].insert(item).second);
    }
    for (const auto& t : inst.types) EXPECT_EQ(used[t].size(), static_cast<std::size_t>(n));
  }
}

TEST(SerialDictatorship, Rejections) {
  auto inst = two_type_instance();
  inst.items["room"].pop_back();
  EXPECT_THROW(serial_dictatorship(inst), Error);
  inst = two_type_instance();
  inst.prefs.erase("cat");
  EXPECT_THROW(serial_dictatorship(inst), Error);
  inst = two_type_instance();
  inst.prefs["cat"]["room"].rows[0].ranking.pop_back();
  EXPECT_THROW(serial_dictatorship(inst), Error);
}
