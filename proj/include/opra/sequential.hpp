#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "opra/cpnet.hpp"
#include "opra/error.hpp"

namespace opra {

/// Votes a live voter cast issue by issue (issue id -> value label).
struct LiveVotes {
  std::map<std::string, std::string> votes;
};

using SequentialVoter = std::variant<CPNet, LiveVotes>;

struct MultiPollConfig {
  std::vector<Issue> issues;
  std::vector<std::string> issue_order;
  /// Value chosen on an exact tie; issues without an entry fall back to
  /// their second value ("no" for the default domain).
  std::map<std::string, std::string> tie_break;

  const Issue& issue(std::string_view id) const {
    for (const auto& i : issues) {
      if (i.id == id) return i;
    }
    fail(ErrorCode::invalid_argument, "unknown issue '" + std::string(id) + "'");
  }

  int tie_break_index(const Issue& issue) const {
    auto it = tie_break.find(issue.id);
    return it == tie_break.end() ? 1 : issue.value_index(it->second);
  }

  void validate() const {
    if (issues.empty()) fail(ErrorCode::invalid_argument, "multi-issue poll needs at least one issue");
    std::set<std::string> ids;
    for (const auto& i : issues) {
      if (!is_valid_id(i.id)) fail(ErrorCode::invalid_argument, "invalid issue id '" + i.id + "'");
      if (!ids.insert(i.id).second) fail(ErrorCode::invalid_argument, "duplicate issue '" + i.id + "'");
      if (i.values[0] == i.values[1]) fail(ErrorCode::invalid_argument, "issue '" + i.id + "' needs two distinct values");
    }
    std::set<std::string> ordered(issue_order.begin(), issue_order.end());
    if (ordered.size() != issue_order.size() || ordered != ids) {
      fail(ErrorCode::invalid_argument, "issue_order must list every issue exactly once");
    }
    for (const auto& [id, value] : tie_break) issue(id).value_index(value);
  }
};

struct IssueTally {
  std::string issue;
  std::array<std::int64_t, 2> counts{0, 0};  // aligned with Issue::values
  std::string outcome;
  bool tie_broken = false;

  friend bool operator==(const IssueTally&, const IssueTally&) = default;
};

struct SequentialOutcome {
  std::map<std::string, std::string> assignment;
  std::vector<IssueTally> tallies;  // in decision order

  friend bool operator==(const SequentialOutcome&, const SequentialOutcome&) = default;
};

/// Majority of the value indices in `votes`; exact ties go to the
/// configured tie-break value.
inline IssueTally tally_issue(const MultiPollConfig& config, const Issue& issue, const std::vector<int>& votes) {
  IssueTally t;
  t.issue = issue.id;
  for (int v : votes) ++t.counts.at(static_cast<std::size_t>(v));
  int winner = 0;
  if (t.counts[0] == t.counts[1]) {
    winner = config.tie_break_index(issue);
    t.tie_broken = true;
  } else {
    winner = t.counts[0] > t.counts[1] ? 0 : 1;
  }
  t.outcome = issue.values[static_cast<std::size_t>(winner)];
  return t;
}

/// Checks that a CP-net is over exactly the poll's issues (same ids and
/// domains) and is legal for the issue order.
inline void check_cpnet_voter(const MultiPollConfig& config, const CPNet& net) {
  if (net.size() != config.issues.size()) fail(ErrorCode::invalid_argument, "CP-net does not cover the poll's issues");
  for (const auto& issue : config.issues) {
    const auto idx = net.index_of(issue.id);
    if (!idx) fail(ErrorCode::invalid_argument, "CP-net is missing issue '" + issue.id + "'");
    if (net.issues()[static_cast<std::size_t>(*idx)].values != issue.values) {
      fail(ErrorCode::invalid_argument, "CP-net uses a different domain for issue '" + issue.id + "'");
    }
  }
  const auto report = validate_cpnet(net);
  if (!report.valid) fail(ErrorCode::invalid_argument, "invalid CP-net: " + report.violations.front());
  if (!is_order_legal(net, config.issue_order)) {
    fail(ErrorCode::invalid_argument, "CP-net is not legal for the issue order (a parent is decided after its child)");
  }
}

/// The vote a voter casts on `issue` given the decided prefix, or nullopt
/// for a live voter who has not voted on it.
inline std::optional<std::string> voter_choice(const SequentialVoter& voter, const std::string& issue,
                                               const std::map<std::string, std::string>& decided) {
  if (const auto* net = std::get_if<CPNet>(&voter)) return local_vote(*net, issue, decided);
  const auto& live = std::get<LiveVotes>(voter);
  auto it = live.votes.find(issue);
  if (it == live.votes.end()) return std::nullopt;
  return it->second;
}

/// Decides the issues one at a time in config order. CP-net voters vote the
/// top of the CPT row selected by what has been decided so far; live voters
/// contribute their recorded vote.
inline SequentialOutcome sequential_vote(const std::vector<SequentialVoter>& voters, const MultiPollConfig& config) {
  config.validate();
  for (const auto& voter : voters) {
    if (const auto* net = std::get_if<CPNet>(&voter)) check_cpnet_voter(config, *net);
  }
  SequentialOutcome out;
  for (const auto& id : config.issue_order) {
    const auto& issue = config.issue(id);
    std::vector<int> votes;
    for (std::size_t v = 0; v < voters.size(); ++v) {
      const auto choice = voter_choice(voters[v], id, out.assignment);
      if (!choice) fail(ErrorCode::invalid_argument, "voter " + std::to_string(v) + " has no vote on issue '" + id + "'");
      votes.push_back(issue.value_index(*choice));
    }
    auto tally = tally_issue(config, issue, votes);
    out.assignment[id] = tally.outcome;
    out.tallies.push_back(std::move(tally));
  }
  return out;
}

}  // namespace opra
