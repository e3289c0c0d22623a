#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "opra/error.hpp"

namespace opra {

/// True for tokens usable as alternative ids: non-empty, no whitespace and
/// none of the profile-format separators.
inline bool is_valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == '>' || c == '=' || c == ':' || c == ',' ||
           static_cast<unsigned char>(c) <= ' ';
  });
}

struct Alternative {
  std::string id;
  std::string label;

  friend bool operator==(const Alternative&, const Alternative&) = default;
};

/// Ordered partition into indifference groups; group 0 is most preferred.
/// Ids not mentioned are unranked. Instantiated over string ids at the API
/// surface and over dense indices inside the rule engines.
template <typename Id>
class BasicWeakOrder {
 public:
  using Group = std::vector<Id>;

  BasicWeakOrder() = default;

  explicit BasicWeakOrder(std::vector<Group> groups) : groups_(std::move(groups)) {
    std::set<Id> seen;
    for (const auto& group : groups_) {
      if (group.empty()) fail(ErrorCode::invalid_argument, "weak order contains an empty group");
      for (const auto& id : group) {
        if (!seen.insert(id).second) {
          if constexpr (std::is_convertible_v<Id, std::string>) {
            fail(ErrorCode::invalid_argument, "duplicate id '" + std::string(id) + "' in weak order");
          } else {
            fail(ErrorCode::invalid_argument, "duplicate id " + std::to_string(id) + " in weak order");
          }
        }
      }
    }
  }

  const std::vector<Group>& groups() const { return groups_; }
  std::size_t size() const { return groups_.size(); }
  bool empty() const { return groups_.empty(); }

  std::size_t ranked_count() const {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.size();
    return n;
  }

  /// Group position of `id`, or nullopt when unranked.
  std::optional<std::size_t> rank_of(const Id& id) const {
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (std::find(groups_[i].begin(), groups_[i].end(), id) != groups_[i].end()) return i;
    }
    return std::nullopt;
  }

  friend bool operator==(const BasicWeakOrder&, const BasicWeakOrder&) = default;

 private:
  std::vector<Group> groups_;
};

using WeakOrder = BasicWeakOrder<std::string>;
using IndexOrder = BasicWeakOrder<int>;

/// Appends every universe member missing from `order` as one final tied
/// group. Orders that already cover the universe come back unchanged.
template <typename Id, typename Universe>
BasicWeakOrder<Id> complete_with_unranked(const BasicWeakOrder<Id>& order, const Universe& universe) {
  std::set<Id> present;
  for (const auto& group : order.groups()) {
    for (const auto& id : group) {
      if (std::find(std::begin(universe), std::end(universe), id) == std::end(universe)) {
        if constexpr (std::is_convertible_v<Id, std::string>) {
          fail(ErrorCode::invalid_argument, "id '" + std::string(id) + "' is outside the universe");
        } else {
          fail(ErrorCode::invalid_argument, "id " + std::to_string(id) + " is outside the universe");
        }
      }
      present.insert(id);
    }
  }
  typename BasicWeakOrder<Id>::Group rest;
  for (const auto& id : universe) {
    if (!present.count(id)) rest.push_back(id);
  }
  if (rest.empty()) return order;
  auto groups = order.groups();
  groups.push_back(std::move(rest));
  return BasicWeakOrder<Id>(std::move(groups));
}

struct Ballot {
  std::string voter;
  WeakOrder order;
  std::int64_t weight = 1;
  std::int64_t submitted_at = 0;  // unix milliseconds; 0 for file-sourced ballots

  friend bool operator==(const Ballot&, const Ballot&) = default;
};

class PreferenceProfile {
 public:
  PreferenceProfile() = default;

  explicit PreferenceProfile(std::vector<Alternative> alternatives) : alternatives_(std::move(alternatives)) {
    for (std::size_t i = 0; i < alternatives_.size(); ++i) {
      const auto& id = alternatives_[i].id;
      if (!is_valid_id(id)) fail(ErrorCode::invalid_argument, "invalid alternative id '" + id + "'");
      if (!index_.emplace(id, static_cast<int>(i)).second) {
        fail(ErrorCode::invalid_argument, "duplicate alternative id '" + id + "'");
      }
    }
  }

  static PreferenceProfile from_ids(const std::vector<std::string>& ids) {
    std::vector<Alternative> alts;
    alts.reserve(ids.size());
    for (const auto& id : ids) alts.push_back({id, id});
    return PreferenceProfile(std::move(alts));
  }

  void add_ballot(Ballot ballot) {
    if (ballot.weight < 1) fail(ErrorCode::invalid_argument, "ballot weight must be positive");
    for (const auto& group : ballot.order.groups()) {
      for (const auto& id : group) {
        if (!index_.count(id)) fail(ErrorCode::invalid_argument, "unknown alternative id '" + id + "'");
      }
    }
    ballots_.push_back(std::move(ballot));
  }

  /// Convenience for fixtures: `add(3, {{"a"}, {"b", "c"}})`.
  void add(std::int64_t weight, std::vector<WeakOrder::Group> groups) {
    add_ballot(Ballot{"", WeakOrder(std::move(groups)), weight, 0});
  }

  const std::vector<Alternative>& alternatives() const { return alternatives_; }
  const std::vector<Ballot>& ballots() const { return ballots_; }
  std::size_t alternative_count() const { return alternatives_.size(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(alternatives_.size());
    for (const auto& a : alternatives_) out.push_back(a.id);
    return out;
  }

  std::optional<int> index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int require_index(const std::string& id) const {
    auto idx = index_of(id);
    if (!idx) fail(ErrorCode::invalid_argument, "unknown alternative id '" + id + "'");
    return *idx;
  }

  const std::string& id_at(int index) const { return alternatives_.at(static_cast<std::size_t>(index)).id; }

  void set_label(const std::string& id, std::string label) {
    alternatives_.at(static_cast<std::size_t>(require_index(id))).label = std::move(label);
  }

  /// Sum of ballot weights.
  std::int64_t voter_count() const {
    std::int64_t n = 0;
    for (const auto& b : ballots_) n += b.weight;
    return n;
  }

  friend bool operator==(const PreferenceProfile& a, const PreferenceProfile& b) {
    return a.alternatives_ == b.alternatives_ && a.ballots_ == b.ballots_;
  }

 private:
  std::vector<Alternative> alternatives_;
  std::vector<Ballot> ballots_;
  std::unordered_map<std::string, int> index_;
};

/// Dense view of a profile: alternatives are 0..m-1 in declaration order and
/// every ballot is completed with its unranked alternatives as a bottom tie.
struct IndexedProfile {
  struct Entry {
    IndexOrder order;
    std::int64_t weight = 1;
  };

  int m = 0;
  std::vector<Entry> ballots;

  std::int64_t voter_count() const {
    std::int64_t n = 0;
    for (const auto& b : ballots) n += b.weight;
    return n;
  }

  std::vector<int> universe() const {
    std::vector<int> u(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) u[static_cast<std::size_t>(i)] = i;
    return u;
  }
};

inline IndexedProfile index_profile(const PreferenceProfile& profile) {
  IndexedProfile out;
  out.m = static_cast<int>(profile.alternative_count());
  const auto universe = out.universe();
  out.ballots.reserve(profile.ballots().size());
  for (const auto& ballot : profile.ballots()) {
    std::vector<IndexOrder::Group> groups;
    for (const auto& group : ballot.order.groups()) {
      IndexOrder::Group g;
      for (const auto& id : group) g.push_back(profile.require_index(id));
      groups.push_back(std::move(g));
    }
    out.ballots.push_back({complete_with_unranked(IndexOrder(std::move(groups)), universe), ballot.weight});
  }
  return out;
}

/// Returns a copy of the profile with every ballot completed.
inline PreferenceProfile normalized(const PreferenceProfile& profile) {
  PreferenceProfile out(profile.alternatives());
  const auto ids = profile.ids();
  for (const auto& ballot : profile.ballots()) {
    Ballot b = ballot;
    b.order = complete_with_unranked(ballot.order, ids);
    out.add_ballot(std::move(b));
  }
  return out;
}

/// N[x][y]: total weight of ballots strictly preferring x to y.
class PairwiseMatrix {
 public:
  PairwiseMatrix() = default;
  explicit PairwiseMatrix(std::vector<std::string> ids)
      : ids_(std::move(ids)), cells_(ids_.size() * ids_.size(), 0) {}

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  std::int64_t& at(std::size_t x, std::size_t y) { return cells_.at(x * ids_.size() + y); }
  std::int64_t at(std::size_t x, std::size_t y) const { return cells_.at(x * ids_.size() + y); }

  std::int64_t at(const std::string& x, const std::string& y) const { return at(position(x), position(y)); }

  /// N[x][y] - N[y][x]
  std::int64_t margin(std::size_t x, std::size_t y) const { return at(x, y) - at(y, x); }

 private:
  std::size_t position(const std::string& id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) fail(ErrorCode::invalid_argument, "unknown alternative id '" + id + "'");
    return static_cast<std::size_t>(it - ids_.begin());
  }

  std::vector<std::string> ids_;
  std::vector<std::int64_t> cells_;
};

inline PairwiseMatrix pairwise_margins(const IndexedProfile& profile, std::vector<std::string> ids) {
  PairwiseMatrix n(std::move(ids));
  std::vector<std::size_t> rank(static_cast<std::size_t>(profile.m));
  for (const auto& ballot : profile.ballots) {
    const auto& groups = ballot.order.groups();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (int id : groups[g]) rank[static_cast<std::size_t>(id)] = g;
    }
    for (std::size_t x = 0; x < rank.size(); ++x) {
      for (std::size_t y = 0; y < rank.size(); ++y) {
        if (rank[x] < rank[y]) n.at(x, y) += ballot.weight;
      }
    }
  }
  return n;
}

/// Pairwise counts over the completed profile (unranked alternatives sit in
/// a tied bottom group, so a ranked alternative beats every unranked one).
inline PairwiseMatrix pairwise_margins(const PreferenceProfile& profile) {
  return pairwise_margins(index_profile(profile), profile.ids());
}

}  // namespace opra
