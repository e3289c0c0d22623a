#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"
#include "opra/stv.hpp"

namespace opra {

struct MajorityEdge {
  int from = 0;
  int to = 0;
  std::int64_t margin = 0;

  friend bool operator==(const MajorityEdge&, const MajorityEdge&) = default;
};

/// Pairs with strictly positive margin, grouped into blocks of equal margin,
/// blocks in descending margin order. Edges inside a block are listed in
/// (from, to) order; the block order itself is what PUT varies.
inline std::vector<std::vector<MajorityEdge>> margin_blocks(const PairwiseMatrix& n) {
  std::vector<MajorityEdge> edges;
  for (std::size_t x = 0; x < n.size(); ++x) {
    for (std::size_t y = 0; y < n.size(); ++y) {
      const auto margin = n.margin(x, y);
      if (margin > 0) edges.push_back({static_cast<int>(x), static_cast<int>(y), margin});
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const MajorityEdge& a, const MajorityEdge& b) { return a.margin > b.margin; });
  std::vector<std::vector<MajorityEdge>> blocks;
  for (const auto& e : edges) {
    if (blocks.empty() || blocks.back().front().margin != e.margin) blocks.emplace_back();
    blocks.back().push_back(e);
  }
  return blocks;
}

/// Locked-edge digraph; row i is the out-neighbour mask of alternative i.
class LockGraph {
 public:
  explicit LockGraph(int m) : out_(static_cast<std::size_t>(m), 0) {}

  bool reaches(int from, int to) const {
    AltMask seen = bit_of(from);
    AltMask frontier = bit_of(from);
    while (frontier) {
      AltMask next = 0;
      for (AltMask f = frontier; f; f &= f - 1) next |= out_[static_cast<std::size_t>(std::countr_zero(f))];
      next &= ~seen;
      if (next & bit_of(to)) return true;
      seen |= next;
      frontier = next;
    }
    return from == to;
  }

  /// Locks from->to unless that closes a cycle. Returns whether it locked.
  bool try_lock(int from, int to) {
    if (reaches(to, from)) return false;
    out_[static_cast<std::size_t>(from)] |= bit_of(to);
    return true;
  }

  /// Alternatives with no incoming locked edge.
  std::vector<int> sources() const {
    AltMask has_in = 0;
    for (auto row : out_) has_in |= row;
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(out_.size()); ++i) {
      if (!(has_in & bit_of(i))) out.push_back(i);
    }
    return out;
  }

  const std::vector<AltMask>& rows() const { return out_; }

 private:
  std::vector<AltMask> out_;
};

/// All parallel-universe winners of ranked pairs. Universes differ only in
/// the order edges of one equal-margin block are locked; a universe's
/// winners are all sources of its final graph. States (block, unprocessed
/// edges of the block, locked edges) are expanded once.
inline PutOutcome ranked_pairs_put(const IndexedProfile& profile) {
  if (profile.ballots.empty()) fail(ErrorCode::invalid_argument, "ranked pairs needs at least one ballot");
  if (profile.m < 1 || profile.m > 63) fail(ErrorCode::invalid_argument, "ranked pairs supports 1..63 alternatives");

  const auto blocks = margin_blocks(pairwise_margins(profile, std::vector<std::string>(static_cast<std::size_t>(profile.m))));
  std::set<int> winners;
  std::unordered_set<std::string> visited;
  PutOutcome out;

  auto key_of = [](std::size_t block, const std::vector<bool>& pending, const LockGraph& g) {
    std::string key;
    key.reserve(16 + pending.size() + g.rows().size() * sizeof(AltMask));
    key.append(reinterpret_cast<const char*>(&block), sizeof(block));
    for (bool p : pending) key.push_back(p ? '1' : '0');
    key.push_back('|');
    for (auto row : g.rows()) key.append(reinterpret_cast<const char*>(&row), sizeof(row));
    return key;
  };

  auto explore = [&](auto&& self, std::size_t block, std::vector<bool> pending, const LockGraph& graph) -> void {
    if (block == blocks.size()) {
      if (!visited.insert(key_of(block, pending, graph)).second) return;
      ++out.nodes;
      for (int s : graph.sources()) winners.insert(s);
      return;
    }
    if (!visited.insert(key_of(block, pending, graph)).second) return;
    ++out.nodes;
    const auto& edges = blocks[block];
    bool any = false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!pending[i]) continue;
      any = true;
      auto next_pending = pending;
      next_pending[i] = false;
      LockGraph next = graph;
      next.try_lock(edges[i].from, edges[i].to);
      const bool block_done = std::none_of(next_pending.begin(), next_pending.end(), [](bool p) { return p; });
      if (block_done) {
        const std::size_t nb = block + 1;
        self(self, nb, nb < blocks.size() ? std::vector<bool>(blocks[nb].size(), true) : std::vector<bool>{}, next);
      } else {
        self(self, block, std::move(next_pending), next);
      }
    }
    if (!any) self(self, block + 1, std::vector<bool>{}, graph);
  };

  std::vector<bool> first = blocks.empty() ? std::vector<bool>{} : std::vector<bool>(blocks.front().size(), true);
  explore(explore, 0, std::move(first), LockGraph(profile.m));
  out.winners.assign(winners.begin(), winners.end());
  return out;
}

}  // namespace opra
