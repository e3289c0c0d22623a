#include <gtest/gtest.h>

#include <random>

#include "opra/profile_format.hpp"
#include "opra/rules.hpp"
#include "oracles/positional.hpp"
#include "oracles/ranked_pairs.hpp"
#include "oracles/stv.hpp"
#include "test_util.hpp"

using namespace opra;

namespace {

PreferenceProfile fig2() { return parse_profile(fixture("fig2.profile")); }

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Positional, ScoreVectors) {
  EXPECT_EQ(ScoreVector::borda(3).top(), Rational(2));
  EXPECT_EQ(ScoreVector::veto(3).bottom(), Rational(0));
  EXPECT_EQ(ScoreVector::k_approval(4, 2).sum(), Rational(2));
  EXPECT_THROW(ScoreVector::k_approval(3, 0), Error);
  EXPECT_THROW(ScoreVector::k_approval(3, 3), Error);
}

TEST(Positional, SingleBallotBorda) {
  auto p = PreferenceProfile::from_ids({"a", "b", "c"});
  p.add(1, {{"a"}, {"b"}, {"c"}});
  const auto s = positional_scores(p, ScoreVector::borda(3));
  EXPECT_EQ(s.at("a"), Rational(2));
  EXPECT_EQ(s.at("b"), Rational(1));
  EXPECT_EQ(s.at("c"), Rational(0));
}

TEST(Positional, TiedGroupTakesMeanOfSpan) {
  auto p = PreferenceProfile::from_ids({"a", "b", "c"});
  p.add(1, {{"a", "b"}, {"c"}});
  const auto s = positional_scores(p, ScoreVector::borda(3));
  EXPECT_EQ(s.at("a"), Rational(3, 2));
  EXPECT_EQ(s.at("b"), Rational(3, 2));
  EXPECT_EQ(s.at("c"), Rational(0));
}

TEST(Positional, ConservationAndOracleAgreement) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 4);
    const auto raw = oracle::random_profile(m, 1 + static_cast<int>(rng() % 9), 0.35, rng);
    const auto idx = index_profile(oracle::to_profile(raw));
    const auto scale = oracle::lcm_upto(m);
    struct Case { ScoreVector s; oracle::Scoring o; int k; };
    std::vector<Case> cases{{ScoreVector::plurality(m), oracle::Scoring::plurality, 0},
                            {ScoreVector::borda(m), oracle::Scoring::borda, 0},
                            {ScoreVector::veto(m), oracle::Scoring::veto, 0}};
    if (m >= 3) cases.push_back({ScoreVector::k_approval(m, 2), oracle::Scoring::k_approval, 2});
    for (const auto& c : cases) {
      const auto got = positional_scores(idx, c.s);
      const auto expect = oracle::scaled_scores(raw, c.o, c.k);
      Rational total;
      for (int a = 0; a < m; ++a) {
        EXPECT_EQ(got[static_cast<std::size_t>(a)] * Rational(scale), Rational(expect[static_cast<std::size_t>(a)]));
        total = total + got[static_cast<std::size_t>(a)];
      }
      EXPECT_EQ(total, Rational(idx.voter_count()) * c.s.sum());
    }
  }
}

TEST(RuleWinners, Unanimity) {
  auto p = PreferenceProfile::from_ids({"a", "b"});
  p.add(5, {{"a"}, {"b"}});
  for (const auto& r : results_table(p)) EXPECT_EQ(r.winners, std::vector<std::string>{"a"}) << r.rule;
}

TEST(RuleWinners, PerfectTie) {
  auto p = PreferenceProfile::from_ids({"a", "b"});
  p.add(1, {{"a"}, {"b"}});
  p.add(1, {{"b"}, {"a"}});
  for (const auto& r : results_table(p)) EXPECT_EQ(r.winners, (std::vector<std::string>{"a", "b"})) << r.rule;
}

TEST(RuleWinners, Figure2) {
  const auto p = fig2();
  const auto raw = [&] {
    oracle::Profile o;
    o.m = 3;
    // apple=0, banana=1, cherry=2
    o.ballots.push_back({3, {{2}, {0}, {1}}});
    o.ballots.push_back({2, {{0}, {1}, {2}}});
    o.ballots.push_back({2, {{1}, {0}, {2}}});
    return o;
  }();
  EXPECT_EQ(oracle::positional_winners(raw, oracle::Scoring::plurality), std::vector<int>{2});
  EXPECT_EQ(oracle::positional_winners(raw, oracle::Scoring::borda), std::vector<int>{0});
  EXPECT_EQ(oracle::positional_winners(raw, oracle::Scoring::veto), std::vector<int>{0});

  EXPECT_EQ(rule_winners(p, Rule::plurality()).winners, std::vector<std::string>{"cherry"});
  EXPECT_EQ(rule_winners(p, Rule::borda()).winners, std::vector<std::string>{"apple"});
  EXPECT_EQ(rule_winners(p, Rule::veto()).winners, std::vector<std::string>{"apple"});

  const auto borda = rule_winners(p, Rule::borda());
  ASSERT_TRUE(borda.scores);
  EXPECT_EQ((*borda.scores)[0], (std::pair<std::string, Rational>{"apple", Rational(9)}));
  EXPECT_EQ((*borda.scores)[1].second, Rational(6));
  EXPECT_EQ((*borda.scores)[2].second, Rational(6));
}

TEST(RuleParsing, NamesAndAliases) {
  EXPECT_EQ(Rule::parse("2_approval").name(), "k_approval:2");
  EXPECT_EQ(Rule::parse("k_approval:3").name(), "k_approval:3");
  EXPECT_EQ(Rule::parse("stv").name(), "stv_put");
  EXPECT_EQ(Rule::parse("ranked_pairs").name(), "ranked_pairs_put");
  EXPECT_THROW(Rule::parse("condorcet"), Error);
  EXPECT_THROW(Rule::parse("0_approval"), Error);
  EXPECT_EQ(parse_rule_list("plurality, borda").size(), 2u);
  EXPECT_THROW(parse_rule_list("plurality,,borda"), Error);
}

TEST(ResultsTable, DefaultOrderAndEmptyConfig) {
  const auto p = fig2();
  const auto table = results_table(p);
  std::vector<std::string> names;
  for (const auto& r : table) names.push_back(r.rule);
  EXPECT_EQ(names, (std::vector<std::string>{"plurality", "borda", "veto", "k_approval:2", "stv_put", "ranked_pairs_put"}));
  EXPECT_EQ(table[0].winners, std::vector<std::string>{"cherry"});
  EXPECT_EQ(table[1].winners, std::vector<std::string>{"apple"});
  EXPECT_EQ(table[2].winners, std::vector<std::string>{"apple"});
  EXPECT_TRUE(results_table(p, {}).empty());
}

TEST(Stv, MajorityInFirstRound) {
  auto p = PreferenceProfile::from_ids({"a", "b", "c"});
  p.add(3, {{"a"}, {"b"}, {"c"}});
  p.add(1, {{"b"}, {"a"}, {"c"}});
  EXPECT_EQ(stv_put_winners(p).winners, std::vector<std::string>{"a"});
}

TEST(Stv, SymmetricTwoCycle) {
  auto p = PreferenceProfile::from_ids({"a", "b"});
  p.add(1, {{"a"}, {"b"}});
  p.add(1, {{"b"}, {"a"}});
  const auto r = stv_put_winners(p);
  EXPECT_EQ(r.winners, (std::vector<std::string>{"a", "b"}));
  ASSERT_TRUE(r.universes_explored);
  EXPECT_GE(*r.universes_explored, 1);
}

TEST(Stv, FractionalMassOfTiedTopGroup) {
  // a=b on top splits one vote; c holds 1 of 2 live votes (no strict
  // majority), then a and b tie at 1/2 each for elimination.
  auto p = PreferenceProfile::from_ids({"a", "b", "c"});
  p.add(1, {{"a", "b"}, {"c"}});
  p.add(1, {{"c"}, {"a"}, {"b"}});
  const auto got = stv_put_winners(p).winners;
  oracle::Profile raw;
  raw.m = 3;
  raw.ballots = {{1, {{0, 1}, {2}}}, {1, {{2}, {0}, {1}}}};
  EXPECT_EQ(got, oracle::names(oracle::stv_put_bruteforce(raw)));
}

TEST(Stv, MatchesEnumerationOnRandomProfiles) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 4);
    const auto raw = oracle::random_profile(m, 1 + static_cast<int>(rng() % 12), 0.25, rng);
    EXPECT_EQ(stv_put_winners(oracle::to_profile(raw)).winners, oracle::names(oracle::stv_put_bruteforce(raw)))
        << serialize_profile(oracle::to_profile(raw));
  }
}

TEST(RankedPairs, CondorcetWinnerAlwaysWins) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto raw = oracle::random_profile(4, 5, 0.2, rng);
    const auto n = oracle::pairwise(raw);
    for (int w = 0; w < 4; ++w) {
      bool beats_all = true;
      for (int y = 0; y < 4; ++y) {
        if (y != w && n[static_cast<std::size_t>(w)][static_cast<std::size_t>(y)] <= n[static_cast<std::size_t>(y)][static_cast<std::size_t>(w)]) beats_all = false;
      }
      if (!beats_all) continue;
      ++checked;
      EXPECT_EQ(ranked_pairs_put_winners(oracle::to_profile(raw)).winners, oracle::names({w}));
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(RankedPairs, SingleBallot) {
  auto p = PreferenceProfile::from_ids({"a", "b", "c"});
  p.add(1, {{"a"}, {"b"}, {"c"}});
  EXPECT_EQ(ranked_pairs_put_winners(p).winners, std::vector<std::string>{"a"});
}

TEST(RankedPairs, CondorcetCycleAllWin) {
  auto p = PreferenceProfile::from_ids({"a", "b", "c"});
  p.add(1, {{"a"}, {"b"}, {"c"}});
  p.add(1, {{"b"}, {"c"}, {"a"}});
  p.add(1, {{"c"}, {"a"}, {"b"}});
  EXPECT_EQ(ranked_pairs_put_winners(p).winners, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(RankedPairs, MatchesEnumerationOnRandomProfiles) {
  std::mt19937_64 rng(4321);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 3);
    const auto raw = oracle::random_profile(m, 1 + static_cast<int>(rng() % 9), 0.2, rng);
    EXPECT_EQ(ranked_pairs_put_winners(oracle::to_profile(raw)).winners,
              oracle::names(oracle::ranked_pairs_put_bruteforce(raw)));
  }
}

TEST(RuleWinners, WinnersAreSortedUniqueAndNonEmpty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::to_profile(oracle::random_profile(4, 6, 0.3, rng));
    for (const auto& r : results_table(p)) {
      EXPECT_FALSE(r.winners.empty());
      EXPECT_EQ(r.winners, sorted(r.winners));
      EXPECT_EQ(std::adjacent_find(r.winners.begin(), r.winners.end()), r.winners.end());
    }
  }
}
