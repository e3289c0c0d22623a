#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opra/error.hpp"

namespace opra {

/// A ranking over one type's items that applies when the agent's own picks
/// of the parent types match `when`.
struct ConditionalRanking {
  std::map<std::string, std::string> when;  // parent type -> item
  std::vector<std::string> ranking;
};

/// An agent's preferences over one item type. With no parents there is a
/// single row with an empty condition.
struct TypePreference {
  std::vector<std::string> parents;  // types earlier in the instance's order
  std::vector<ConditionalRanking> rows;
};

struct AllocationInstance {
  std::vector<std::string> types;
  std::map<std::string, std::vector<std::string>> items;  // type -> items, |items| == |agents|
  std::vector<std::string> agents;                          // highest priority first
  std::map<std::string, std::map<std::string, TypePreference>> prefs;  // agent -> type -> preference

  void validate_structure() const {
    if (agents.empty()) fail(ErrorCode::invalid_argument, "allocation needs at least one agent");
    std::set<std::string> seen_agents(agents.begin(), agents.end());
    if (seen_agents.size() != agents.size()) fail(ErrorCode::invalid_argument, "duplicate agent");
    std::set<std::string> seen_types(types.begin(), types.end());
    if (seen_types.size() != types.size()) fail(ErrorCode::invalid_argument, "duplicate item type");
    for (const auto& t : types) {
      auto it = items.find(t);
      if (it == items.end()) fail(ErrorCode::invalid_argument, "type '" + t + "' has no items");
      if (it->second.size() != agents.size()) {
        fail(ErrorCode::invalid_argument, "type '" + t + "' has " + std::to_string(it->second.size()) +
                                              " items but there are " + std::to_string(agents.size()) + " agents");
      }
      std::set<std::string> unique(it->second.begin(), it->second.end());
      if (unique.size() != it->second.size()) fail(ErrorCode::invalid_argument, "type '" + t + "' repeats an item");
    }
    for (const auto& [t, _] : items) {
      if (!seen_types.count(t)) fail(ErrorCode::invalid_argument, "items listed for undeclared type '" + t + "'");
    }
  }

  /// Checks one agent's preference document against the instance.
  void validate_preference(const std::string& agent, const std::map<std::string, TypePreference>& pref) const {
    if (std::find(agents.begin(), agents.end(), agent) == agents.end()) {
      fail(ErrorCode::invalid_argument, "unknown agent '" + agent + "'");
    }
    for (const auto& [type, tp] : pref) {
      auto pos = std::find(types.begin(), types.end(), type);
      if (pos == types.end()) fail(ErrorCode::invalid_argument, "unknown item type '" + type + "'");
      for (const auto& parent : tp.parents) {
        auto pp = std::find(types.begin(), types.end(), parent);
        if (pp == types.end() || pp >= pos) {
          fail(ErrorCode::invalid_argument, "type '" + type + "' may only depend on earlier types (got '" + parent + "')");
        }
      }
      const auto& pool = items.at(type);
      const std::set<std::string> pool_set(pool.begin(), pool.end());
      for (const auto& row : tp.rows) {
        std::set<std::string> ranked(row.ranking.begin(), row.ranking.end());
        if (ranked.size() != row.ranking.size() || ranked != pool_set) {
          fail(ErrorCode::invalid_argument,
               "agent '" + agent + "' must rank every item of type '" + type + "' exactly once");
        }
        if (row.when.size() != tp.parents.size()) {
          fail(ErrorCode::invalid_argument, "conditional row for '" + type + "' must fix every parent type");
        }
        for (const auto& parent : tp.parents) {
          auto w = row.when.find(parent);
          if (w == row.when.end()) fail(ErrorCode::invalid_argument, "row is missing parent '" + parent + "'");
          const auto& parent_items = items.at(parent);
          if (std::find(parent_items.begin(), parent_items.end(), w->second) == parent_items.end()) {
            fail(ErrorCode::invalid_argument, "'" + w->second + "' is not an item of type '" + parent + "'");
          }
        }
      }
    }
  }
};

/// agent -> (type -> item), agents listed in priority order.
struct AllocationOutcome {
  std::vector<std::pair<std::string, std::map<std::string, std::string>>> bundles;

  friend bool operator==(const AllocationOutcome&, const AllocationOutcome&) = default;
};

/// Agents pick in priority order; each takes, type by type in the instance's
/// type order, their most preferred remaining item given their own earlier
/// picks.
inline AllocationOutcome serial_dictatorship(const AllocationInstance& instance) {
  instance.validate_structure();
  for (const auto& agent : instance.agents) {
    auto it = instance.prefs.find(agent);
    if (it == instance.prefs.end()) fail(ErrorCode::invalid_argument, "agent '" + agent + "' submitted no preferences");
    instance.validate_preference(agent, it->second);
  }

  std::map<std::string, std::set<std::string>> remaining;
  for (const auto& t : instance.types) {
    const auto& pool = instance.items.at(t);
    remaining[t] = std::set<std::string>(pool.begin(), pool.end());
  }

  AllocationOutcome out;
  for (const auto& agent : instance.agents) {
    std::map<std::string, std::string> bundle;
    const auto& pref = instance.prefs.at(agent);
    for (const auto& type : instance.types) {
      auto tp = pref.find(type);
      if (tp == pref.end()) fail(ErrorCode::invalid_argument, "agent '" + agent + "' did not rank type '" + type + "'");
      const ConditionalRanking* row = nullptr;
      for (const auto& candidate : tp->second.rows) {
        bool match = true;
        for (const auto& [parent, item] : candidate.when) match = match && bundle.at(parent) == item;
        if (match) {
          row = &candidate;
          break;
        }
      }
      if (!row) {
        fail(ErrorCode::invalid_argument,
             "agent '" + agent + "' has no ranking of type '" + type + "' for their earlier picks");
      }
      auto& left = remaining[type];
      auto pick = std::find_if(row->ranking.begin(), row->ranking.end(),
                               [&](const std::string& item) { return left.count(item) > 0; });
      if (pick == row->ranking.end()) {
        fail(ErrorCode::invalid_argument, "agent '" + agent + "' cannot rank any remaining item of type '" + type + "'");
      }
      bundle[type] = *pick;
      left.erase(*pick);
    }
    out.bundles.emplace_back(agent, std::move(bundle));
  }
  return out;
}

}  // namespace opra
