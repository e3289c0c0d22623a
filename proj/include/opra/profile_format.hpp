#pragma once

// Line-based profile documents:
//
//   # comment
//   alternatives: apple,banana,cherry
//   label: apple = Granny Smith
//   3: cherry > apple = banana
//   1: apple
//
// `>` separates indifference groups, `=` separates tied members, ids left
// out of a ballot line are unranked.

#include <charconv>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"

namespace opra {

namespace detail {

struct Span {
  std::string_view text;
  std::size_t column = 1;  // 1-based column of text[0]
};

inline Span trim(Span s) {
  std::size_t b = 0;
  while (b < s.text.size() && (s.text[b] == ' ' || s.text[b] == '\t')) ++b;
  std::size_t e = s.text.size();
  while (e > b && (s.text[e - 1] == ' ' || s.text[e - 1] == '\t' || s.text[e - 1] == '\r')) --e;
  return {s.text.substr(b, e - b), s.column + b};
}

inline std::vector<Span> split(Span s, char sep) {
  std::vector<Span> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.text.size(); ++i) {
    if (i == s.text.size() || s.text[i] == sep) {
      out.push_back({s.text.substr(start, i - start), s.column + start});
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

inline PreferenceProfile parse_profile(std::string_view text) {
  using detail::Span;
  std::optional<PreferenceProfile> profile;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const Span line = detail::trim({text.substr(pos, end - pos), 1});
    pos = end + 1;
    if (line.text.empty() || line.text.front() == '#') continue;

    const auto colon = line.text.find(':');
    if (colon == std::string_view::npos) {
      throw SyntaxError(line_no, line.column, "expected '<key>:'");
    }
    const Span key = detail::trim({line.text.substr(0, colon), line.column});
    const Span body = detail::trim({line.text.substr(colon + 1), line.column + colon + 1});

    if (!profile) {
      if (key.text != "alternatives") {
        throw SyntaxError(line_no, key.column, "first line must be 'alternatives: ...'");
      }
      std::vector<Alternative> alts;
      for (const auto& raw : detail::split(body, ',')) {
        const Span id = detail::trim(raw);
        if (!is_valid_id(id.text)) throw SyntaxError(line_no, id.column, "invalid alternative id");
        for (const auto& a : alts) {
          if (a.id == id.text) {
            throw SyntaxError(line_no, id.column, "duplicate alternative id '" + std::string(id.text) + "'",
                              ErrorCode::invalid_argument);
          }
        }
        alts.push_back({std::string(id.text), std::string(id.text)});
      }
      profile.emplace(std::move(alts));
      continue;
    }

    if (key.text == "alternatives") {
      throw SyntaxError(line_no, key.column, "repeated alternatives header");
    }

    if (key.text == "label") {
      const auto eq = body.text.find('=');
      if (eq == std::string_view::npos) throw SyntaxError(line_no, body.column, "expected 'label: id = text'");
      const Span id = detail::trim({body.text.substr(0, eq), body.column});
      const Span label = detail::trim({body.text.substr(eq + 1), body.column + eq + 1});
      if (!profile->index_of(std::string(id.text))) {
        throw SyntaxError(line_no, id.column, "unknown alternative id '" + std::string(id.text) + "'",
                          ErrorCode::invalid_argument);
      }
      profile->set_label(std::string(id.text), std::string(label.text));
      continue;
    }

    std::int64_t count = 0;
    const char* first = key.text.data();
    const char* last = first + key.text.size();
    const bool negative = !key.text.empty() && key.text.front() == '-';
    auto [ptr, ec] = std::from_chars(negative ? first + 1 : first, last, count);
    if (ec != std::errc() || ptr != last || key.text.empty()) {
      throw SyntaxError(line_no, key.column, "expected a ballot count");
    }
    if (negative || count < 1) {
      throw SyntaxError(line_no, key.column, "ballot count must be positive", ErrorCode::invalid_argument);
    }

    std::vector<WeakOrder::Group> groups;
    std::set<std::string> seen;
    if (!body.text.empty()) {
      for (const auto& raw_group : detail::split(body, '>')) {
        WeakOrder::Group group;
        for (const auto& raw_id : detail::split(raw_group, '=')) {
          const Span id = detail::trim(raw_id);
          if (id.text.empty()) throw SyntaxError(line_no, id.column, "empty alternative id");
          if (!is_valid_id(id.text)) throw SyntaxError(line_no, id.column, "invalid alternative id");
          std::string sid(id.text);
          if (!profile->index_of(sid)) {
            throw SyntaxError(line_no, id.column, "unknown alternative id '" + sid + "'", ErrorCode::invalid_argument);
          }
          if (!seen.insert(sid).second) {
            throw SyntaxError(line_no, id.column, "duplicate id '" + sid + "' within one ballot",
                              ErrorCode::invalid_argument);
          }
          group.push_back(std::move(sid));
        }
        groups.push_back(std::move(group));
      }
    }
    profile->add_ballot(Ballot{"", WeakOrder(std::move(groups)), count, 0});
  }

  if (!profile) throw SyntaxError(line_no, 1, "missing 'alternatives:' header");
  return std::move(*profile);
}

inline std::string format_weak_order(const WeakOrder& order) {
  std::string out;
  for (std::size_t g = 0; g < order.groups().size(); ++g) {
    if (g) out += " > ";
    const auto& group = order.groups()[g];
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (i) out += " = ";
      out += group[i];
    }
  }
  return out;
}

/// Inverse of parse_profile. Identical orders are merged into one line whose
/// count is the summed weight; lines appear in order of first occurrence.
/// Voter tokens and timestamps are not part of the format.
inline std::string serialize_profile(const PreferenceProfile& profile) {
  std::ostringstream os;
  os << "alternatives: ";
  for (std::size_t i = 0; i < profile.alternatives().size(); ++i) {
    if (i) os << ',';
    os << profile.alternatives()[i].id;
  }
  os << '\n';
  for (const auto& alt : profile.alternatives()) {
    if (alt.label != alt.id && !alt.label.empty()) os << "label: " << alt.id << " = " << alt.label << '\n';
  }
  std::vector<std::pair<WeakOrder, std::int64_t>> merged;
  for (const auto& ballot : profile.ballots()) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& e) { return e.first == ballot.order; });
    if (it == merged.end()) {
      merged.emplace_back(ballot.order, ballot.weight);
    } else {
      it->second += ballot.weight;
    }
  }
  for (const auto& [order, count] : merged) {
    os << count << ':';
    if (!order.empty()) os << ' ' << format_weak_order(order);
    os << '\n';
  }
  return os.str();
}

}  // namespace opra
