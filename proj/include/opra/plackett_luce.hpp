#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "opra/error.hpp"
#include "opra/preference.hpp"

namespace opra {

/// One strict, complete ranking (indices into RankingData::ids) with a
/// non-negative multiplicity.
struct Ranking {
  std::vector<int> order;
  double weight = 1.0;
};

struct RankingData {
  std::vector<std::string> ids;
  std::vector<Ranking> rankings;

  int m() const { return static_cast<int>(ids.size()); }

  double total_weight() const {
    double w = 0.0;
    for (const auto& r : rankings) w += r.weight;
    return w;
  }
};

/// Plackett-Luce strengths, normalized to sum to one.
struct PLParameters {
  std::vector<std::string> ids;
  std::vector<double> gamma;

  double operator[](const std::string& id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) fail(ErrorCode::invalid_argument, "unknown alternative id '" + id + "'");
    return gamma[static_cast<std::size_t>(it - ids.begin())];
  }
};

struct PLOptions {
  double tol = 1e-8;
  int max_iters = 500;
};

struct PLFit {
  PLParameters params;
  int iterations = 0;
  bool converged = false;
};

/// Breaks every tied group of every (completed) ballot into a uniformly
/// random order. One linearization per ballot; the ballot weight carries
/// over. Reproducible for a fixed seed.
inline RankingData linearize(const PreferenceProfile& profile, std::uint64_t seed) {
  RankingData data;
  data.ids = profile.ids();
  std::mt19937_64 rng(seed);
  for (const auto& entry : index_profile(profile).ballots) {
    Ranking r;
    r.weight = static_cast<double>(entry.weight);
    for (auto group : entry.order.groups()) {
      std::shuffle(group.begin(), group.end(), rng);
      r.order.insert(r.order.end(), group.begin(), group.end());
    }
    data.rankings.push_back(std::move(r));
  }
  return data;
}

namespace pl {

inline void check_rankings(const RankingData& data) {
  const auto m = static_cast<std::size_t>(data.m());
  for (const auto& r : data.rankings) {
    if (r.order.size() != m) fail(ErrorCode::invalid_argument, "Plackett-Luce needs complete rankings");
    std::vector<bool> seen(m, false);
    for (int x : r.order) {
      if (x < 0 || static_cast<std::size_t>(x) >= m || seen[static_cast<std::size_t>(x)]) {
        fail(ErrorCode::invalid_argument, "ranking is not a permutation of the alternatives");
      }
      seen[static_cast<std::size_t>(x)] = true;
    }
    if (!(r.weight >= 0.0)) fail(ErrorCode::invalid_argument, "ranking weight must be non-negative");
  }
}

/// log P(order | gamma) = sum_t log gamma_{o_t} - log sum_{s>=t} gamma_{o_s}
inline double log_likelihood(const std::vector<int>& order, const std::vector<double>& gamma) {
  double suffix = 0.0;
  for (int x : order) suffix += gamma[static_cast<std::size_t>(x)];
  double ll = 0.0;
  for (std::size_t t = 0; t + 1 < order.size(); ++t) {
    const double g = gamma[static_cast<std::size_t>(order[t])];
    ll += std::log(g) - std::log(suffix);
    suffix -= g;
  }
  return ll;
}

/// One minorize-maximize update with per-ranking weights `w`:
///   gamma_i <- wins_i / sum_j w_j sum_{t : i still unchosen at stage t} 1 / (remaining mass at t)
/// followed by normalization and a positivity floor.
inline std::vector<double> mm_step(const RankingData& data, const std::vector<double>& w,
                                   const std::vector<double>& gamma, double floor = 1e-12) {
  const auto m = static_cast<std::size_t>(data.m());
  std::vector<double> wins(m, 0.0);
  std::vector<double> denom(m, 0.0);
  std::vector<double> suffix;
  for (std::size_t j = 0; j < data.rankings.size(); ++j) {
    const double weight = w[j];
    if (weight == 0.0) continue;
    const auto& order = data.rankings[j].order;
    const std::size_t len = order.size();
    suffix.assign(len + 1, 0.0);
    for (std::size_t t = len; t-- > 0;) suffix[t] = suffix[t + 1] + gamma[static_cast<std::size_t>(order[t])];
    double cumulative = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      if (t + 1 < len) {
        cumulative += 1.0 / suffix[t];
        wins[static_cast<std::size_t>(order[t])] += weight;
      }
      denom[static_cast<std::size_t>(order[t])] += weight * cumulative;
    }
  }
  std::vector<double> next(m, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    next[i] = denom[i] > 0.0 ? wins[i] / denom[i] : gamma[i];
    total += next[i];
  }
  double renorm = 0.0;
  for (auto& g : next) {
    g = std::max(g / total, floor);
    renorm += g;
  }
  for (auto& g : next) g /= renorm;
  return next;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Throws ErrorCode::degenerate when the "ranked above" relation is not
/// strongly connected, naming the offending alternatives.
inline void check_connected(const RankingData& data) {
  const auto m = static_cast<std::size_t>(data.m());
  std::vector<std::vector<bool>> beats(m, std::vector<bool>(m, false));
  for (const auto& r : data.rankings) {
    if (r.weight <= 0.0) continue;
    for (std::size_t t = 0; t < r.order.size(); ++t) {
      for (std::size_t s = t + 1; s < r.order.size(); ++s) {
        beats[static_cast<std::size_t>(r.order[t])][static_cast<std::size_t>(r.order[s])] = true;
      }
    }
  }
  auto reach = beats;
  for (std::size_t i = 0; i < m; ++i) reach[i][i] = true;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < m; ++j)
          if (reach[k][j]) reach[i][j] = true;

  bool connected = true;
  for (std::size_t i = 0; i < m && connected; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (!reach[i][j]) {
        connected = false;
        break;
      }
  if (connected) return;

  std::string never_beats;
  std::string never_loses;
  for (std::size_t i = 0; i < m; ++i) {
    bool wins = false;
    bool loses = false;
    for (std::size_t j = 0; j < m; ++j) {
      wins = wins || beats[i][j];
      loses = loses || beats[j][i];
    }
    if (!wins) never_beats += (never_beats.empty() ? "" : ",") + data.ids[i];
    if (!loses) never_loses += (never_loses.empty() ? "" : ",") + data.ids[i];
  }
  std::string msg = "comparison graph is not strongly connected";
  if (!never_beats.empty()) msg += "; never ranked above another: " + never_beats;
  if (!never_loses.empty()) msg += "; never ranked below another: " + never_loses;
  fail(ErrorCode::degenerate, msg);
}

}  // namespace pl

/// Maximum-likelihood Plackett-Luce strengths by MM iteration from uniform
/// strengths. Stops when max |delta gamma| < tol or after max_iters updates.
inline PLFit fit_plackett_luce(const RankingData& data, const PLOptions& options = {}) {
  if (data.m() < 1) fail(ErrorCode::invalid_argument, "no alternatives");
  if (data.rankings.empty()) fail(ErrorCode::invalid_argument, "no rankings");
  pl::check_rankings(data);
  pl::check_connected(data);

  std::vector<double> weights;
  weights.reserve(data.rankings.size());
  for (const auto& r : data.rankings) weights.push_back(r.weight);

  PLFit fit;
  std::vector<double> gamma(static_cast<std::size_t>(data.m()), 1.0 / data.m());
  while (fit.iterations < options.max_iters) {
    auto next = pl::mm_step(data, weights, gamma);
    ++fit.iterations;
    const double delta = pl::max_abs_diff(next, gamma);
    gamma = std::move(next);
    if (delta < options.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.params = {data.ids, std::move(gamma)};
  return fit;
}

}  // namespace opra
