#pragma once

// CP-nets over binary issues. Text form, one directive per line:
//
//   issue x                 (domain defaults to yes,no)
//   issue y: on,off
//   parents y: x
//   row x []: yes > no
//   row y [x=yes]: off > on
//   row y [x=no]: on > off
//
// Issues must be declared before they are referenced, and an issue's
// parents line must precede its rows.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"
#include "opra/profile_format.hpp"

namespace opra {

struct Issue {
  std::string id;
  std::array<std::string, 2> values{"yes", "no"};

  int value_index(std::string_view v) const {
    if (v == values[0]) return 0;
    if (v == values[1]) return 1;
    fail(ErrorCode::invalid_argument, "'" + std::string(v) + "' is not a value of issue '" + id + "'");
  }

  friend bool operator==(const Issue&, const Issue&) = default;
};

/// Decided value index per issue; nullopt while undecided.
using IssueAssignment = std::vector<std::optional<int>>;

/// One voter's conditional preferences. Parents are stored as ascending
/// issue indices; a CPT row is keyed by the parents' value indices in that
/// order and stores the preferred value index (domains are binary, so the
/// top value determines the strict order).
class CPNet {
 public:
  CPNet() = default;
  explicit CPNet(std::vector<Issue> issues)
      : issues_(std::move(issues)), parents_(issues_.size()), cpt_(issues_.size()) {
    std::set<std::string> ids;
    for (const auto& issue : issues_) {
      if (!is_valid_id(issue.id)) fail(ErrorCode::invalid_argument, "invalid issue id '" + issue.id + "'");
      if (!ids.insert(issue.id).second) fail(ErrorCode::invalid_argument, "duplicate issue '" + issue.id + "'");
      if (issue.values[0] == issue.values[1]) {
        fail(ErrorCode::invalid_argument, "issue '" + issue.id + "' needs two distinct values");
      }
    }
  }

  const std::vector<Issue>& issues() const { return issues_; }
  std::size_t size() const { return issues_.size(); }

  std::optional<int> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < issues_.size(); ++i) {
      if (issues_[i].id == id) return static_cast<int>(i);
    }
    return std::nullopt;
  }

  int require_index(std::string_view id) const {
    auto i = index_of(id);
    if (!i) fail(ErrorCode::invalid_argument, "unknown issue '" + std::string(id) + "'");
    return *i;
  }

  /// Parents may name the issue itself or form cycles; validate_cpnet
  /// reports those rather than this setter.
  void set_parents(int issue, std::vector<int> parents) {
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    parents_.at(static_cast<std::size_t>(issue)) = std::move(parents);
    cpt_.at(static_cast<std::size_t>(issue)).clear();
  }

  const std::vector<int>& parents(int issue) const { return parents_.at(static_cast<std::size_t>(issue)); }

  void set_row(int issue, std::vector<int> parent_values, int preferred) {
    if (parent_values.size() != parents(issue).size()) {
      fail(ErrorCode::invalid_argument, "row for '" + issues_[static_cast<std::size_t>(issue)].id +
                                            "' must assign exactly its parents");
    }
    if (preferred != 0 && preferred != 1) fail(ErrorCode::invalid_argument, "preferred value index must be 0 or 1");
    cpt_.at(static_cast<std::size_t>(issue))[std::move(parent_values)] = preferred;
  }

  const std::map<std::vector<int>, int>& rows(int issue) const { return cpt_.at(static_cast<std::size_t>(issue)); }

  std::optional<int> preferred(int issue, const std::vector<int>& parent_values) const {
    const auto& table = rows(issue);
    auto it = table.find(parent_values);
    if (it == table.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const CPNet&, const CPNet&) = default;

 private:
  std::vector<Issue> issues_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::map<std::vector<int>, int>> cpt_;
};

struct CpnetValidation {
  bool valid = true;
  std::vector<std::string> violations;
};

inline CpnetValidation validate_cpnet(const CPNet& net) {
  CpnetValidation report;
  auto add = [&](std::string v) {
    report.valid = false;
    report.violations.push_back(std::move(v));
  };
  const int p = static_cast<int>(net.size());

  for (int i = 0; i < p; ++i) {
    for (int parent : net.parents(i)) {
      if (parent == i) add("issue '" + net.issues()[static_cast<std::size_t>(i)].id + "' lists itself as a parent");
      if (parent < 0 || parent >= p) add("issue '" + net.issues()[static_cast<std::size_t>(i)].id + "' has an unknown parent");
    }
  }

  // Cycle detection by DFS colouring; reports each cycle found as a path.
  std::vector<int> colour(static_cast<std::size_t>(p), 0);
  std::vector<int> stack;
  std::set<std::set<int>> reported;
  auto dfs = [&](auto&& self, int v) -> void {
    colour[static_cast<std::size_t>(v)] = 1;
    stack.push_back(v);
    // Edges run parent -> child; walking parents finds the same cycles.
    for (int parent : net.parents(v)) {
      if (parent < 0 || parent >= p || parent == v) continue;
      if (colour[static_cast<std::size_t>(parent)] == 1) {
        auto from = std::find(stack.begin(), stack.end(), parent);
        std::set<int> members(from, stack.end());
        if (reported.insert(members).second) {
          std::string path;
          for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
            path += net.issues()[static_cast<std::size_t>(*it)].id + " <- ";
            if (*it == parent) break;
          }
          path += net.issues()[static_cast<std::size_t>(v)].id;
          add("dependency cycle: " + path);
        }
      } else if (colour[static_cast<std::size_t>(parent)] == 0) {
        self(self, parent);
      }
    }
    stack.pop_back();
    colour[static_cast<std::size_t>(v)] = 2;
  };
  for (int i = 0; i < p; ++i) {
    if (colour[static_cast<std::size_t>(i)] == 0) dfs(dfs, i);
  }

  for (int i = 0; i < p; ++i) {
    const auto& issue = net.issues()[static_cast<std::size_t>(i)];
    const auto& parents = net.parents(i);
    if (parents.size() > 20) {
      add("issue '" + issue.id + "' has too many parents");
      continue;
    }
    const std::size_t rows = std::size_t{1} << parents.size();
    for (std::size_t mask = 0; mask < rows; ++mask) {
      std::vector<int> key;
      for (std::size_t b = 0; b < parents.size(); ++b) key.push_back(static_cast<int>((mask >> b) & 1U));
      if (!net.preferred(i, key)) {
        std::string when;
        for (std::size_t b = 0; b < parents.size(); ++b) {
          const auto& parent = net.issues()[static_cast<std::size_t>(parents[b])];
          if (b) when += ",";
          when += parent.id + "=" + parent.values[static_cast<std::size_t>(key[b])];
        }
        add("issue '" + issue.id + "' is missing the CPT row [" + when + "]");
      }
    }
  }
  return report;
}

/// True iff every issue's parents come before it in `order`.
inline bool is_order_legal(const CPNet& net, const std::vector<std::string>& order) {
  if (order.size() != net.size()) fail(ErrorCode::invalid_argument, "issue order is not a permutation of the issues");
  std::vector<int> position(net.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int idx = net.require_index(order[i]);
    if (position[static_cast<std::size_t>(idx)] != -1) {
      fail(ErrorCode::invalid_argument, "issue order repeats '" + order[i] + "'");
    }
    position[static_cast<std::size_t>(idx)] = static_cast<int>(i);
  }
  for (int i = 0; i < static_cast<int>(net.size()); ++i) {
    for (int parent : net.parents(i)) {
      if (position[static_cast<std::size_t>(parent)] > position[static_cast<std::size_t>(i)]) return false;
    }
  }
  return true;
}

/// Top value of the CPT row selected by the decided parent values.
inline int local_vote(const CPNet& net, int issue, const IssueAssignment& decided) {
  std::vector<int> key;
  for (int parent : net.parents(issue)) {
    const auto& v = decided.at(static_cast<std::size_t>(parent));
    if (!v) {
      fail(ErrorCode::invalid_argument, "parent '" + net.issues()[static_cast<std::size_t>(parent)].id + "' of '" +
                                            net.issues()[static_cast<std::size_t>(issue)].id + "' is undecided");
    }
    key.push_back(*v);
  }
  auto top = net.preferred(issue, key);
  if (!top) {
    fail(ErrorCode::invalid_argument, "CPT of '" + net.issues()[static_cast<std::size_t>(issue)].id + "' has no matching row");
  }
  return *top;
}

/// String-level form: `decided` maps issue id -> value label.
inline std::string local_vote(const CPNet& net, std::string_view issue, const std::map<std::string, std::string>& decided) {
  IssueAssignment assignment(net.size());
  for (const auto& [id, value] : decided) {
    const int i = net.require_index(id);
    assignment[static_cast<std::size_t>(i)] = net.issues()[static_cast<std::size_t>(i)].value_index(value);
  }
  const int i = net.require_index(issue);
  return net.issues()[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(local_vote(net, i, assignment))];
}

inline CPNet parse_cpnet(std::string_view text) {
  using detail::Span;
  std::vector<Issue> issues;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<std::pair<std::size_t, Span>> lines;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const Span line = detail::trim({text.substr(pos, end - pos), 1});
    pos = end + 1;
    if (line.text.empty() || line.text.front() == '#') continue;
    lines.emplace_back(line_no, line);
  }

  auto keyword = [](const Span& line) {
    auto sp = line.text.find_first_of(" \t");
    return line.text.substr(0, sp);
  };

  // Issues first so that the net can be constructed with its final issue set.
  for (const auto& [no, line] : lines) {
    if (keyword(line) != "issue") continue;
    Span rest = detail::trim({line.text.substr(5), line.column + 5});
    Issue issue;
    const auto colon = rest.text.find(':');
    const Span id = detail::trim({rest.text.substr(0, colon), rest.column});
    if (!is_valid_id(id.text)) throw SyntaxError(no, id.column, "invalid issue id");
    issue.id = std::string(id.text);
    if (colon != std::string_view::npos) {
      const auto values = detail::split({rest.text.substr(colon + 1), rest.column + colon + 1}, ',');
      if (values.size() != 2) throw SyntaxError(no, rest.column + colon + 1, "issue domain must have exactly two values");
      for (std::size_t v = 0; v < 2; ++v) {
        const Span val = detail::trim(values[v]);
        if (!is_valid_id(val.text)) throw SyntaxError(no, val.column, "invalid value label");
        issue.values[v] = std::string(val.text);
      }
      if (issue.values[0] == issue.values[1]) throw SyntaxError(no, rest.column, "issue values must differ");
    }
    for (const auto& other : issues) {
      if (other.id == issue.id) throw SyntaxError(no, id.column, "duplicate issue '" + issue.id + "'", ErrorCode::invalid_argument);
    }
    issues.push_back(std::move(issue));
  }

  CPNet net(issues);
  std::vector<bool> has_rows(issues.size(), false);
  std::set<std::pair<int, std::vector<int>>> seen_rows;

  for (const auto& [no, line] : lines) {
    const auto kw = keyword(line);
    if (kw == "issue") continue;
    Span rest = detail::trim({line.text.substr(kw.size()), line.column + kw.size()});
    const auto colon = rest.text.find(':');
    if (colon == std::string_view::npos) throw SyntaxError(no, rest.column, "expected ':'");
    const Span head = detail::trim({rest.text.substr(0, colon), rest.column});
    const Span body = detail::trim({rest.text.substr(colon + 1), rest.column + colon + 1});

    if (kw == "parents") {
      auto issue = net.index_of(head.text);
      if (!issue) throw SyntaxError(no, head.column, "unknown issue '" + std::string(head.text) + "'", ErrorCode::invalid_argument);
      if (has_rows[static_cast<std::size_t>(*issue)]) throw SyntaxError(no, line.column, "parents must precede rows");
      std::vector<int> parents;
      if (!body.text.empty()) {
        for (const auto& raw : detail::split(body, ',')) {
          const Span pid = detail::trim(raw);
          auto p = net.index_of(pid.text);
          if (!p) throw SyntaxError(no, pid.column, "unknown issue '" + std::string(pid.text) + "'", ErrorCode::invalid_argument);
          parents.push_back(*p);
        }
      }
      net.set_parents(*issue, std::move(parents));
    } else if (kw == "row") {
      const auto open = head.text.find('[');
      const auto close = head.text.find(']');
      if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw SyntaxError(no, head.column, "expected 'row <issue> [p=v,...]: v1 > v2'");
      }
      const Span id = detail::trim({head.text.substr(0, open), head.column});
      auto issue = net.index_of(id.text);
      if (!issue) throw SyntaxError(no, id.column, "unknown issue '" + std::string(id.text) + "'", ErrorCode::invalid_argument);
      const auto& parents = net.parents(*issue);
      std::vector<int> key(parents.size(), -1);
      const Span cond = detail::trim({head.text.substr(open + 1, close - open - 1), head.column + open + 1});
      if (!cond.text.empty()) {
        for (const auto& raw : detail::split(cond, ',')) {
          const Span kv = detail::trim(raw);
          const auto eq = kv.text.find('=');
          if (eq == std::string_view::npos) throw SyntaxError(no, kv.column, "expected 'parent=value'");
          const Span pid = detail::trim({kv.text.substr(0, eq), kv.column});
          const Span val = detail::trim({kv.text.substr(eq + 1), kv.column + eq + 1});
          auto p = net.index_of(pid.text);
          auto slot = p ? std::find(parents.begin(), parents.end(), *p) : parents.end();
          if (slot == parents.end()) {
            throw SyntaxError(no, pid.column, "'" + std::string(pid.text) + "' is not a parent of '" + std::string(id.text) + "'",
                              ErrorCode::invalid_argument);
          }
          const auto& parent_issue = net.issues()[static_cast<std::size_t>(*p)];
          int v = -1;
          if (val.text == parent_issue.values[0]) v = 0;
          if (val.text == parent_issue.values[1]) v = 1;
          if (v < 0) throw SyntaxError(no, val.column, "unknown value '" + std::string(val.text) + "'", ErrorCode::invalid_argument);
          key[static_cast<std::size_t>(slot - parents.begin())] = v;
        }
      }
      if (std::find(key.begin(), key.end(), -1) != key.end()) {
        throw SyntaxError(no, cond.column, "row must assign every parent", ErrorCode::invalid_argument);
      }
      const auto order = detail::split(body, '>');
      if (order.size() != 2) throw SyntaxError(no, body.column, "expected 'v1 > v2'");
      const Span top = detail::trim(order[0]);
      const Span bottom = detail::trim(order[1]);
      const auto& own = net.issues()[static_cast<std::size_t>(*issue)];
      int t = -1;
      if (top.text == own.values[0]) t = 0;
      if (top.text == own.values[1]) t = 1;
      if (t < 0) throw SyntaxError(no, top.column, "unknown value '" + std::string(top.text) + "'", ErrorCode::invalid_argument);
      if (bottom.text != own.values[static_cast<std::size_t>(1 - t)]) {
        throw SyntaxError(no, bottom.column, "row must order both values of the issue", ErrorCode::invalid_argument);
      }
      if (!seen_rows.emplace(*issue, key).second) {
        throw SyntaxError(no, line.column, "duplicate row", ErrorCode::invalid_argument);
      }
      has_rows[static_cast<std::size_t>(*issue)] = true;
      net.set_row(*issue, std::move(key), t);
    } else {
      throw SyntaxError(no, line.column, "unknown directive '" + std::string(kw) + "'");
    }
  }
  return net;
}

inline std::string format_cpnet(const CPNet& net) {
  std::ostringstream os;
  for (const auto& issue : net.issues()) {
    os << "issue " << issue.id;
    if (issue.values != std::array<std::string, 2>{"yes", "no"}) os << ": " << issue.values[0] << ',' << issue.values[1];
    os << '\n';
  }
  for (int i = 0; i < static_cast<int>(net.size()); ++i) {
    const auto& parents = net.parents(i);
    const auto& issue = net.issues()[static_cast<std::size_t>(i)];
    if (!parents.empty()) {
      os << "parents " << issue.id << ": ";
      for (std::size_t b = 0; b < parents.size(); ++b) os << (b ? "," : "") << net.issues()[static_cast<std::size_t>(parents[b])].id;
      os << '\n';
    }
    for (const auto& [key, top] : net.rows(i)) {
      os << "row " << issue.id << " [";
      for (std::size_t b = 0; b < parents.size(); ++b) {
        const auto& parent = net.issues()[static_cast<std::size_t>(parents[b])];
        os << (b ? "," : "") << parent.id << '=' << parent.values[static_cast<std::size_t>(key[b])];
      }
      os << "]: " << issue.values[static_cast<std::size_t>(top)] << " > " << issue.values[static_cast<std::size_t>(1 - top)] << '\n';
    }
  }
  return os.str();
}

}  // namespace opra
