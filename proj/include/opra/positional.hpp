#pragma once

#include <map>
#include <string>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"
#include "opra/rational.hpp"

namespace opra {

/// Position scores s_1 >= s_2 >= ... >= s_m.
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::vector<Rational> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      if (entries_[i] > entries_[i - 1]) fail(ErrorCode::invalid_argument, "score vector must be non-increasing");
    }
  }

  static ScoreVector plurality(int m) { return approval(m, m > 0 ? 1 : 0); }
  static ScoreVector veto(int m) { return approval(m, m > 0 ? m - 1 : 0); }
  static ScoreVector borda(int m) {
    std::vector<Rational> s;
    for (int i = m - 1; i >= 0; --i) s.emplace_back(i);
    return ScoreVector(std::move(s));
  }
  static ScoreVector k_approval(int m, int k) {
    if (k < 1 || k > m - 1) {
      fail(ErrorCode::invalid_argument,
           "k-approval needs 1 <= k <= m-1 (k=" + std::to_string(k) + ", m=" + std::to_string(m) + ")");
    }
    return approval(m, k);
  }

  std::size_t size() const { return entries_.size(); }
  const Rational& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Rational>& entries() const { return entries_; }
  const Rational& top() const { return entries_.front(); }
  const Rational& bottom() const { return entries_.back(); }

  Rational sum() const {
    Rational total;
    for (const auto& e : entries_) total += e;
    return total;
  }

  /// Mean of s_first..s_last (0-based, inclusive), the score every member of
  /// a tied group spanning those positions receives.
  Rational mean(std::size_t first, std::size_t last) const {
    Rational total;
    for (std::size_t i = first; i <= last; ++i) total += entries_[i];
    return total / Rational(static_cast<std::int64_t>(last - first + 1));
  }

 private:
  static ScoreVector approval(int m, int k) {
    std::vector<Rational> s(static_cast<std::size_t>(m), Rational(0));
    for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = Rational(1);
    return ScoreVector(std::move(s));
  }

  std::vector<Rational> entries_;
};

/// Score each completed ballot contributes to every alternative (unweighted).
inline std::vector<Rational> ballot_scores(const IndexOrder& order, const ScoreVector& s, int m) {
  std::vector<Rational> out(static_cast<std::size_t>(m));
  std::size_t position = 0;
  for (const auto& group : order.groups()) {
    const Rational share = s.mean(position, position + group.size() - 1);
    for (int id : group) out[static_cast<std::size_t>(id)] = share;
    position += group.size();
  }
  return out;
}

inline std::vector<Rational> positional_scores(const IndexedProfile& profile, const ScoreVector& s) {
  if (s.size() != static_cast<std::size_t>(profile.m)) {
    fail(ErrorCode::invalid_argument, "score vector has length " + std::to_string(s.size()) + " but there are " +
                                          std::to_string(profile.m) + " alternatives");
  }
  std::vector<Rational> totals(static_cast<std::size_t>(profile.m));
  for (const auto& ballot : profile.ballots) {
    const auto per = ballot_scores(ballot.order, s, profile.m);
    for (std::size_t i = 0; i < per.size(); ++i) totals[i] += per[i] * Rational(ballot.weight);
  }
  return totals;
}

inline std::map<std::string, Rational> positional_scores(const PreferenceProfile& profile, const ScoreVector& s) {
  const auto totals = positional_scores(index_profile(profile), s);
  std::map<std::string, Rational> out;
  for (std::size_t i = 0; i < totals.size(); ++i) out.emplace(profile.alternatives()[i].id, totals[i]);
  return out;
}

}  // namespace opra
