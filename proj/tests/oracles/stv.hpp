#pragma once

// STV-PUT by enumeration: every one of the m! priority orders fixes how
// elimination ties are broken (the lowest-priority tied alternative goes
// first); the PUT winner set is the union over all of them.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "oracles/profiles.hpp"

namespace oracle {

/// `priority[i]` is the alternative with the i-th highest priority.
inline int stv_with_priority(const Profile& p, const std::vector<int>& priority) {
  const std::int64_t scale = lcm_upto(p.m);
  std::vector<bool> alive(static_cast<std::size_t>(p.m), true);
  int remaining = p.m;
  while (true) {
    std::vector<std::int64_t> score(static_cast<std::size_t>(p.m), 0);
    std::int64_t live = 0;
    for (const auto& b : p.ballots) {
      for (const auto& g : b.groups) {
        std::vector<int> members;
        for (int a : g) {
          if (alive[static_cast<std::size_t>(a)]) members.push_back(a);
        }
        if (members.empty()) continue;
        for (int a : members) score[static_cast<std::size_t>(a)] += b.weight * scale / static_cast<std::int64_t>(members.size());
        live += b.weight * scale;
        break;
      }
    }
    for (int a = 0; a < p.m; ++a) {
      if (!alive[static_cast<std::size_t>(a)]) continue;
      if (remaining == 1 || 2 * score[static_cast<std::size_t>(a)] > live) return a;
    }
    int victim = -1;
    for (auto it = priority.rbegin(); it != priority.rend(); ++it) {
      const int a = *it;
      if (!alive[static_cast<std::size_t>(a)]) continue;
      if (victim < 0 || score[static_cast<std::size_t>(a)] < score[static_cast<std::size_t>(victim)]) victim = a;
    }
    alive[static_cast<std::size_t>(victim)] = false;
    --remaining;
  }
}

inline std::vector<int> stv_put_bruteforce(const Profile& p) {
  std::vector<int> priority(static_cast<std::size_t>(p.m));
  std::iota(priority.begin(), priority.end(), 0);
  std::set<int> winners;
  do {
    winners.insert(stv_with_priority(p, priority));
  } while (std::next_permutation(priority.begin(), priority.end()));
  return {winners.begin(), winners.end()};
}

}  // namespace oracle
