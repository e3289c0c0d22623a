#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opra/error.hpp"
#include "opra/positional.hpp"
#include "opra/preference.hpp"
#include "opra/ranked_pairs.hpp"
#include "opra/stv.hpp"

namespace opra {

enum class RuleKind { plurality, borda, veto, k_approval, stv_put, ranked_pairs_put };

struct Rule {
  RuleKind kind = RuleKind::plurality;
  int k = 0;  // k_approval only

  static Rule plurality() { return {RuleKind::plurality}; }
  static Rule borda() { return {RuleKind::borda}; }
  static Rule veto() { return {RuleKind::veto}; }
  static Rule k_approval(int k) { return {RuleKind::k_approval, k}; }
  static Rule stv_put() { return {RuleKind::stv_put}; }
  static Rule ranked_pairs_put() { return {RuleKind::ranked_pairs_put}; }

  bool positional() const {
    return kind == RuleKind::plurality || kind == RuleKind::borda || kind == RuleKind::veto ||
           kind == RuleKind::k_approval;
  }

  ScoreVector score_vector(int m) const {
    switch (kind) {
      case RuleKind::plurality: return ScoreVector::plurality(m);
      case RuleKind::borda: return ScoreVector::borda(m);
      case RuleKind::veto: return ScoreVector::veto(m);
      case RuleKind::k_approval: return ScoreVector::k_approval(m, k);
      default: fail(ErrorCode::invalid_argument, name() + " is not a positional scoring rule");
    }
  }

  std::string name() const {
    switch (kind) {
      case RuleKind::plurality: return "plurality";
      case RuleKind::borda: return "borda";
      case RuleKind::veto: return "veto";
      case RuleKind::k_approval: return "k_approval:" + std::to_string(k);
      case RuleKind::stv_put: return "stv_put";
      case RuleKind::ranked_pairs_put: return "ranked_pairs_put";
    }
    return "unknown";
  }

  /// Accepts the names produced by name(), plus "<k>_approval" and the
  /// short aliases "stv" and "ranked_pairs".
  static Rule parse(std::string_view text) {
    if (text == "plurality") return plurality();
    if (text == "borda") return borda();
    if (text == "veto") return veto();
    if (text == "stv_put" || text == "stv") return stv_put();
    if (text == "ranked_pairs_put" || text == "ranked_pairs") return ranked_pairs_put();
    std::string_view digits;
    if (text.starts_with("k_approval:")) {
      digits = text.substr(11);
    } else if (text.ends_with("_approval")) {
      digits = text.substr(0, text.size() - 9);
    }
    int k = 0;
    if (!digits.empty()) {
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
      if (ec == std::errc() && ptr == digits.data() + digits.size() && k > 0) return k_approval(k);
    }
    fail(ErrorCode::invalid_argument, "unknown rule '" + std::string(text) + "'");
  }

  friend bool operator==(const Rule&, const Rule&) = default;
};

inline std::vector<Rule> parse_rule_list(std::string_view csv) {
  std::vector<Rule> rules;
  if (csv.find_first_not_of(' ') == std::string_view::npos) return rules;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto end = csv.find(',', start);
    if (end == std::string_view::npos) end = csv.size();
    auto item = csv.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) fail(ErrorCode::invalid_argument, "empty entry in rule list");
    rules.push_back(Rule::parse(item));
    start = end + 1;
  }
  return rules;
}

/// One row of the results table.
struct RuleResult {
  std::string rule;
  std::vector<std::string> winners;  // in alternative declaration order
  std::optional<std::vector<std::pair<std::string, Rational>>> scores;
  std::optional<std::uint64_t> universes_explored;

  friend bool operator==(const RuleResult&, const RuleResult&) = default;
};

/// Indices of the alternatives with maximal total score.
inline std::vector<int> argmax_indices(const std::vector<Rational>& scores) {
  std::vector<int> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (best.empty() || scores[i] > scores[static_cast<std::size_t>(best.front())]) {
      best.assign(1, static_cast<int>(i));
    } else if (scores[i] == scores[static_cast<std::size_t>(best.front())]) {
      best.push_back(static_cast<int>(i));
    }
  }
  return best;
}

/// Winner indices on an already indexed profile; the engine under both the
/// results table and the margin-of-victory search.
inline std::vector<int> winner_indices(const IndexedProfile& profile, const Rule& rule) {
  if (profile.ballots.empty()) fail(ErrorCode::invalid_argument, "profile has no ballots");
  switch (rule.kind) {
    case RuleKind::stv_put: return stv_put(profile).winners;
    case RuleKind::ranked_pairs_put: return ranked_pairs_put(profile).winners;
    default: return argmax_indices(positional_scores(profile, rule.score_vector(profile.m)));
  }
}

inline RuleResult rule_winners(const PreferenceProfile& profile, const Rule& rule) {
  const auto indexed = index_profile(profile);
  if (indexed.ballots.empty()) fail(ErrorCode::invalid_argument, "profile has no ballots");
  RuleResult result;
  result.rule = rule.name();
  std::vector<int> winners;
  if (rule.positional()) {
    const auto totals = positional_scores(indexed, rule.score_vector(indexed.m));
    winners = argmax_indices(totals);
    std::vector<std::pair<std::string, Rational>> scores;
    for (int i = 0; i < indexed.m; ++i) scores.emplace_back(profile.id_at(i), totals[static_cast<std::size_t>(i)]);
    result.scores = std::move(scores);
  } else {
    const auto put = rule.kind == RuleKind::stv_put ? stv_put(indexed) : ranked_pairs_put(indexed);
    winners = put.winners;
    result.universes_explored = put.nodes;
  }
  for (int w : winners) result.winners.push_back(profile.id_at(w));
  return result;
}

inline RuleResult stv_put_winners(const PreferenceProfile& profile) { return rule_winners(profile, Rule::stv_put()); }

inline RuleResult ranked_pairs_put_winners(const PreferenceProfile& profile) {
  return rule_winners(profile, Rule::ranked_pairs_put());
}

/// plurality, borda, veto, 2-approval (only when m >= 3, where it is
/// distinct from plurality and defined), STV-PUT, ranked-pairs-PUT.
inline std::vector<Rule> default_rules(int m) {
  std::vector<Rule> rules{Rule::plurality(), Rule::borda(), Rule::veto()};
  if (m >= 3) rules.push_back(Rule::k_approval(2));
  rules.push_back(Rule::stv_put());
  rules.push_back(Rule::ranked_pairs_put());
  return rules;
}

inline std::vector<RuleResult> results_table(const PreferenceProfile& profile, const std::vector<Rule>& rules) {
  std::vector<RuleResult> table;
  table.reserve(rules.size());
  for (const auto& rule : rules) table.push_back(rule_winners(profile, rule));
  return table;
}

inline std::vector<RuleResult> results_table(const PreferenceProfile& profile) {
  return results_table(profile, default_rules(static_cast<int>(profile.alternative_count())));
}

}  // namespace opra
