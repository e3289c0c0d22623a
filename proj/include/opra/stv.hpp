#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <unordered_set>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"
#include "opra/rational.hpp"

namespace opra {

using AltMask = std::uint64_t;

inline constexpr AltMask bit_of(int i) { return AltMask{1} << i; }

/// Fractional plurality scores over the `remaining` alternatives. Each ballot
/// gives its weight to the topmost group that still has a remaining member,
/// split equally among the remaining members of that group.
inline std::vector<Rational> stv_tally(const IndexedProfile& profile, AltMask remaining) {
  std::vector<Rational> scores(static_cast<std::size_t>(profile.m));
  for (const auto& ballot : profile.ballots) {
    for (const auto& group : ballot.order.groups()) {
      std::int64_t live = 0;
      for (int id : group) live += (remaining & bit_of(id)) ? 1 : 0;
      if (live == 0) continue;
      const Rational share(ballot.weight, live);
      for (int id : group) {
        if (remaining & bit_of(id)) scores[static_cast<std::size_t>(id)] += share;
      }
      break;
    }
  }
  return scores;
}

struct PutOutcome {
  std::vector<int> winners;  // ascending alternative indices
  std::uint64_t nodes = 0;   // DFS states expanded
};

/// All parallel-universe winners of single-winner STV. Every alternative tied
/// for the lowest score is a branch; each remaining-set is expanded once.
inline PutOutcome stv_put(const IndexedProfile& profile) {
  if (profile.ballots.empty()) fail(ErrorCode::invalid_argument, "STV needs at least one ballot");
  if (profile.m < 1 || profile.m > 63) fail(ErrorCode::invalid_argument, "STV supports 1..63 alternatives");

  const Rational total(profile.voter_count());
  std::unordered_set<AltMask> visited;
  std::set<int> winners;
  PutOutcome out;

  auto visit = [&](auto&& self, AltMask remaining) -> void {
    if (!visited.insert(remaining).second) return;
    ++out.nodes;
    if (std::popcount(remaining) == 1) {
      winners.insert(std::countr_zero(remaining));
      return;
    }
    const auto scores = stv_tally(profile, remaining);
    std::optional<Rational> lowest;
    for (int i = 0; i < profile.m; ++i) {
      if (!(remaining & bit_of(i))) continue;
      const auto& s = scores[static_cast<std::size_t>(i)];
      if (s * Rational(2) > total) {
        winners.insert(i);
        return;
      }
      if (!lowest || s < *lowest) lowest = s;
    }
    for (int i = 0; i < profile.m; ++i) {
      if ((remaining & bit_of(i)) && scores[static_cast<std::size_t>(i)] == *lowest) {
        self(self, remaining & ~bit_of(i));
      }
    }
  };

  visit(visit, bit_of(profile.m) - 1);
  out.winners.assign(winners.begin(), winners.end());
  return out;
}

}  // namespace opra
