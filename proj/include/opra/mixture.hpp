#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "opra/error.hpp"
#include "opra/plackett_luce.hpp"

namespace opra {

struct MixtureOptions {
  int k = 2;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int max_iters = 500;
  int restarts = 5;
};

/// Fitted k-component Plackett-Luce mixture (EM with one MM step per M-step).
struct PLMixture {
  int k = 1;
  std::vector<double> weights;
  std::vector<PLParameters> components;
  std::vector<std::vector<double>> responsibilities;  // per ranking, length k
  std::vector<double> ranking_weights;                // multiplicity of each ranking
  double loglik = 0.0;
  std::vector<double> loglik_trace;  // one entry per E-step of the kept restart
  std::vector<std::vector<double>> restart_traces;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::string estimator = "em_mm";
};

namespace pl {

struct EStep {
  std::vector<std::vector<double>> resp;
  double loglik = 0.0;
};

inline EStep expectation(const RankingData& data, const std::vector<double>& weights,
                         const std::vector<std::vector<double>>& gammas) {
  const auto k = weights.size();
  EStep out;
  out.resp.assign(data.rankings.size(), std::vector<double>(k, 0.0));
  std::vector<double> a(k);
  for (std::size_t j = 0; j < data.rankings.size(); ++j) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < k; ++z) {
      a[z] = std::log(weights[z]) + log_likelihood(data.rankings[j].order, gammas[z]);
      top = std::max(top, a[z]);
    }
    double sum = 0.0;
    for (std::size_t z = 0; z < k; ++z) sum += std::exp(a[z] - top);
    const double lse = top + std::log(sum);
    for (std::size_t z = 0; z < k; ++z) out.resp[j][z] = std::exp(a[z] - lse);
    out.loglik += data.rankings[j].weight * lse;
  }
  return out;
}

}  // namespace pl

/// EM for a k-component mixture. Each restart draws the component strengths
/// from a symmetric Dirichlet(1) (uniform strengths when k == 1, which makes
/// k == 1 coincide with fit_plackett_luce) and starts from uniform mixing
/// weights. The restart with the highest final log-likelihood is kept.
inline PLMixture fit_pl_mixture(const RankingData& data, const MixtureOptions& options = {}) {
  if (data.rankings.empty()) fail(ErrorCode::invalid_argument, "no rankings");
  if (options.k < 1) fail(ErrorCode::invalid_argument, "mixture needs k >= 1");
  const double n = data.total_weight();
  if (static_cast<double>(options.k) > n) {
    fail(ErrorCode::invalid_argument,
         "mixture with k=" + std::to_string(options.k) + " needs at least k ballots (have " +
             std::to_string(static_cast<std::int64_t>(n)) + ")");
  }
  pl::check_rankings(data);

  const auto m = static_cast<std::size_t>(data.m());
  const auto k = static_cast<std::size_t>(options.k);
  std::mt19937_64 rng(options.seed);
  std::gamma_distribution<double> gamma_draw(1.0, 1.0);

  PLMixture best;
  bool have_best = false;
  std::vector<std::vector<double>> traces;

  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    std::vector<std::vector<double>> gammas(k, std::vector<double>(m, 1.0 / static_cast<double>(m)));
    if (k > 1) {
      for (auto& g : gammas) {
        double total = 0.0;
        for (auto& x : g) {
          x = std::max(gamma_draw(rng), 1e-12);
          total += x;
        }
        for (auto& x : g) x /= total;
      }
    }
    std::vector<double> weights(k, 1.0 / static_cast<double>(k));

    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
    std::vector<double> rw(data.rankings.size());
    while (iterations < options.max_iters) {
      const auto e = pl::expectation(data, weights, gammas);
      trace.push_back(e.loglik);

      double delta = 0.0;
      std::vector<double> next_weights(k, 0.0);
      for (std::size_t j = 0; j < data.rankings.size(); ++j) {
        for (std::size_t z = 0; z < k; ++z) next_weights[z] += data.rankings[j].weight * e.resp[j][z];
      }
      for (std::size_t z = 0; z < k; ++z) {
        next_weights[z] = std::max(next_weights[z] / n, 1e-300);
        delta = std::max(delta, std::abs(next_weights[z] - weights[z]));
        for (std::size_t j = 0; j < data.rankings.size(); ++j) rw[j] = data.rankings[j].weight * e.resp[j][z];
        auto next = pl::mm_step(data, rw, gammas[z]);
        delta = std::max(delta, pl::max_abs_diff(next, gammas[z]));
        gammas[z] = std::move(next);
      }
      weights = std::move(next_weights);
      ++iterations;
      if (delta < options.tol) {
        converged = true;
        break;
      }
    }
    const auto final_e = pl::expectation(data, weights, gammas);
    trace.push_back(final_e.loglik);
    traces.push_back(trace);

    if (!have_best || final_e.loglik > best.loglik) {
      have_best = true;
      best.k = options.k;
      best.weights = weights;
      best.components.clear();
      for (auto& g : gammas) best.components.push_back({data.ids, g});
      best.responsibilities = final_e.resp;
      best.loglik = final_e.loglik;
      best.loglik_trace = std::move(trace);
      best.iterations = iterations;
      best.converged = converged;
    }
  }
  best.ranking_weights.clear();
  for (const auto& r : data.rankings) best.ranking_weights.push_back(r.weight);
  best.restart_traces = std::move(traces);
  best.seed = options.seed;
  return best;
}

struct ClusterReport {
  int component = 0;
  double size = 0.0;    // summed weight of the ballots hard-assigned here
  double weight = 0.0;  // mixing weight
  std::vector<std::pair<std::string, double>> top;  // up to three strongest alternatives
};

/// Hard assignment by largest responsibility, ties to the lower component.
inline std::vector<ClusterReport> cluster_summary(const PLMixture& mixture) {
  std::vector<ClusterReport> out(static_cast<std::size_t>(mixture.k));
  for (int z = 0; z < mixture.k; ++z) {
    auto& c = out[static_cast<std::size_t>(z)];
    c.component = z;
    c.weight = mixture.weights[static_cast<std::size_t>(z)];
    const auto& comp = mixture.components[static_cast<std::size_t>(z)];
    std::vector<std::size_t> idx(comp.gamma.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return comp.gamma[a] > comp.gamma[b]; });
    for (std::size_t i = 0; i < idx.size() && i < 3; ++i) c.top.emplace_back(comp.ids[idx[i]], comp.gamma[idx[i]]);
  }
  for (std::size_t j = 0; j < mixture.responsibilities.size(); ++j) {
    const auto& r = mixture.responsibilities[j];
    std::size_t arg = 0;
    for (std::size_t z = 1; z < r.size(); ++z) {
      if (r[z] > r[arg]) arg = z;
    }
    out[arg].size += j < mixture.ranking_weights.size() ? mixture.ranking_weights[j] : 1.0;
  }
  return out;
}

}  // namespace opra
