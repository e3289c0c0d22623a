#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"
#include "opra/rules.hpp"

namespace opra {

enum class MovMethod { exact_greedy, brute_force, bounds };

inline std::string_view to_string(MovMethod m) {
  switch (m) {
    case MovMethod::exact_greedy: return "exact_greedy";
    case MovMethod::brute_force: return "brute_force";
    case MovMethod::bounds: return "bounds";
  }
  return "unknown";
}

struct MovBounds {
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  friend bool operator==(const MovBounds&, const MovBounds&) = default;
};

/// Margin of victory under ballot replacement: how many ballots must be
/// swapped for arbitrary strict orders before the winner set changes
/// (gaining or losing a co-winner counts). For method `bounds`, `mov` holds
/// the upper bound.
struct MovReport {
  std::string rule;
  std::int64_t mov = 0;
  MovMethod method = MovMethod::exact_greedy;
  std::optional<MovBounds> bounds;

  friend bool operator==(const MovReport&, const MovReport&) = default;
};

struct MovOptions {
  std::int64_t brute_force_max = 6;      // ballots
  int brute_force_max_alternatives = 4;  // m! replacement orders per ballot
};

namespace detail {

/// Per (challenger, winner) pair, the fewest replacements that lift the
/// challenger to the winner's score (or strictly above it, when the
/// challenger is itself a co-winner). A replacement of ballot b can move the
/// difference by at most (s_1 - s_b(c)) + (s_b(w) - s_m), achieved by any
/// order with c first and w last, so taking the largest gains first is
/// optimal.
inline std::int64_t positional_mov(const IndexedProfile& profile, const ScoreVector& s) {
  const auto totals = positional_scores(profile, s);
  const auto winners = argmax_indices(totals);
  std::vector<bool> is_winner(static_cast<std::size_t>(profile.m), false);
  for (int w : winners) is_winner[static_cast<std::size_t>(w)] = true;

  std::vector<std::vector<Rational>> per_ballot;
  per_ballot.reserve(profile.ballots.size());
  for (const auto& b : profile.ballots) per_ballot.push_back(ballot_scores(b.order, s, profile.m));

  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (int w : winners) {
    for (int c = 0; c < profile.m; ++c) {
      if (c == w) continue;
      const bool strict = is_winner[static_cast<std::size_t>(c)];
      Rational diff = totals[static_cast<std::size_t>(c)] - totals[static_cast<std::size_t>(w)];
      std::vector<std::pair<Rational, std::int64_t>> gains;
      for (std::size_t b = 0; b < profile.ballots.size(); ++b) {
        const auto& sc = per_ballot[b];
        Rational g = (s.top() - sc[static_cast<std::size_t>(c)]) + (sc[static_cast<std::size_t>(w)] - s.bottom());
        if (g > Rational(0)) gains.emplace_back(g, profile.ballots[b].weight);
      }
      std::sort(gains.begin(), gains.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      auto satisfied = [&] { return strict ? diff > Rational(0) : diff >= Rational(0); };
      std::int64_t used = 0;
      for (const auto& [gain, count] : gains) {
        if (satisfied() || used >= best) break;
        // Fewest copies of this gain needed, capped by the multiplicity.
        std::int64_t take = 0;
        while (take < count && !satisfied()) {
          diff += gain;
          ++take;
        }
        used += take;
      }
      if (satisfied()) best = std::min(best, used);
    }
  }
  if (best == std::numeric_limits<std::int64_t>::max()) {
    fail(ErrorCode::invalid_argument, "winner set cannot be changed (need at least two alternatives)");
  }
  return best;
}

inline std::vector<IndexOrder> all_strict_orders(int m) {
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<IndexOrder> out;
  do {
    std::vector<IndexOrder::Group> groups;
    for (int x : perm) groups.push_back({x});
    out.emplace_back(std::move(groups));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

/// Smallest k such that replacing some k ballots changes the winner set,
/// searching removal multisets over distinct ballots and replacement
/// multisets over all strict orders.
inline std::int64_t brute_force_mov(const IndexedProfile& profile, const Rule& rule) {
  const auto original = winner_indices(profile, rule);
  const auto orders = all_strict_orders(profile.m);
  const std::int64_t n = profile.voter_count();
  const std::size_t types = profile.ballots.size();

  for (std::int64_t k = 1; k <= n; ++k) {
    std::vector<std::int64_t> removed(types, 0);
    bool changed = false;

    // Replacement multiset as a non-decreasing index sequence into `orders`.
    auto try_replacements = [&]() {
      IndexedProfile base;
      base.m = profile.m;
      for (std::size_t t = 0; t < types; ++t) {
        const auto keep = profile.ballots[t].weight - removed[t];
        if (keep > 0) base.ballots.push_back({profile.ballots[t].order, keep});
      }
      std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
      while (true) {
        IndexedProfile candidate = base;
        for (auto p : pick) candidate.ballots.push_back({orders[p], 1});
        if (winner_indices(candidate, rule) != original) return true;
        // Advance to the next non-decreasing sequence.
        std::size_t i = pick.size();
        while (i > 0 && pick[i - 1] == orders.size() - 1) --i;
        if (i == 0) return false;
        ++pick[i - 1];
        for (std::size_t j = i; j < pick.size(); ++j) pick[j] = pick[i - 1];
      }
    };

    auto choose_removals = [&](auto&& self, std::size_t t, std::int64_t left) -> void {
      if (changed) return;
      if (t == types) {
        if (left == 0 && try_replacements()) changed = true;
        return;
      }
      const auto cap = std::min(left, profile.ballots[t].weight);
      for (std::int64_t r = 0; r <= cap && !changed; ++r) {
        removed[t] = r;
        self(self, t + 1, left - r);
      }
      removed[t] = 0;
    };
    choose_removals(choose_removals, 0, k);
    if (changed) return k;
  }
  fail(ErrorCode::invalid_argument, "winner set cannot be changed (need at least two alternatives)");
}

/// Upper bound from promoting one challenger at a time: ballots are replaced
/// by "challenger first, current winners last", least favourable ballots
/// first, until the winner set moves.
inline std::int64_t greedy_upper_bound(const IndexedProfile& profile, const Rule& rule) {
  const auto original = winner_indices(profile, rule);
  std::vector<bool> is_winner(static_cast<std::size_t>(profile.m), false);
  for (int w : original) is_winner[static_cast<std::size_t>(w)] = true;

  std::vector<IndexOrder> units;
  for (const auto& b : profile.ballots) {
    for (std::int64_t i = 0; i < b.weight; ++i) units.push_back(b.order);
  }

  std::int64_t best = static_cast<std::int64_t>(units.size());
  for (int c = 0; c < profile.m; ++c) {
    if (is_winner[static_cast<std::size_t>(c)] && original.size() == 1) continue;
    std::vector<IndexOrder::Group> target{{c}};
    for (int x = 0; x < profile.m; ++x) {
      if (x != c && !is_winner[static_cast<std::size_t>(x)]) target.push_back({x});
    }
    for (int x = 0; x < profile.m; ++x) {
      if (x != c && is_winner[static_cast<std::size_t>(x)]) target.push_back({x});
    }
    const IndexOrder replacement(std::move(target));

    auto rank_of = [](const IndexOrder& o, int id) { return *o.rank_of(id); };
    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rank_of(units[a], c) > rank_of(units[b], c);
    });

    auto current = units;
    for (std::size_t step = 0; step < order.size() && static_cast<std::int64_t>(step) < best; ++step) {
      current[order[step]] = replacement;
      IndexedProfile candidate;
      candidate.m = profile.m;
      for (const auto& o : current) candidate.ballots.push_back({o, 1});
      if (winner_indices(candidate, rule) != original) {
        best = std::min(best, static_cast<std::int64_t>(step + 1));
        break;
      }
    }
  }
  return best;
}

}  // namespace detail

inline MovReport margin_of_victory(const PreferenceProfile& profile, const Rule& rule, const MovOptions& options = {}) {
  const auto indexed = index_profile(profile);
  const auto n = indexed.voter_count();
  if (n < 1) fail(ErrorCode::invalid_argument, "margin of victory needs at least one ballot");
  if (indexed.m < 2) fail(ErrorCode::invalid_argument, "margin of victory needs at least two alternatives");

  MovReport report;
  report.rule = rule.name();
  if (rule.positional()) {
    report.method = MovMethod::exact_greedy;
    report.mov = detail::positional_mov(indexed, rule.score_vector(indexed.m));
  } else if (n <= options.brute_force_max && indexed.m <= options.brute_force_max_alternatives) {
    report.method = MovMethod::brute_force;
    report.mov = detail::brute_force_mov(indexed, rule);
  } else {
    report.method = MovMethod::bounds;
    const auto upper = detail::greedy_upper_bound(indexed, rule);
    report.bounds = MovBounds{1, upper};
    report.mov = upper;
  }
  return report;
}

}  // namespace opra
