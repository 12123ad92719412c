#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fadegp/errors.hpp"
#include "fadegp/normal.hpp"
#include "fadegp/sampler.hpp"

namespace fadegp {

namespace {

constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Halve every chain; odd lengths drop the middle draw.
std::vector<Vector> split_halves(const std::vector<Vector>& chains) {
  std::vector<Vector> halves;
  for (const auto& c : chains) {
    const Index n = c.size() / 2;
    if (n < 1) continue;
    halves.push_back(c.head(n));
    halves.push_back(c.tail(n));
  }
  return halves;
}

double chain_mean(const Vector& v) { return v.mean(); }

double chain_var(const Vector& v) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(n - 1);
}

// Fractional ranks with ties averaged, then inverse-normal transform.
std::vector<Vector> rank_normalize(const std::vector<Vector>& halves) {
  const Index m = static_cast<Index>(halves.size());
  const Index n = halves.front().size();
  const Index total = m * n;
  std::vector<std::pair<double, Index>> order;
  order.reserve(static_cast<std::size_t>(total));
  for (Index c = 0; c < m; ++c) {
    for (Index i = 0; i < n; ++i) order.emplace_back(halves[c][i], c * n + i);
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> rank(static_cast<std::size_t>(total));
  Index i = 0;
  while (i < total) {
    Index j = i;
    while (j + 1 < total && order[j + 1].first == order[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (Index k = i; k <= j; ++k) rank[static_cast<std::size_t>(order[k].second)] = avg;
    i = j + 1;
  }
  std::vector<Vector> z(static_cast<std::size_t>(m), Vector(n));
  const double denom = static_cast<double>(total) + 0.25;
  for (Index c = 0; c < m; ++c) {
    for (Index k = 0; k < n; ++k) {
      const double p = (rank[static_cast<std::size_t>(c * n + k)] - 0.375) / denom;
      z[static_cast<std::size_t>(c)][k] = norm_quantile(p);
    }
  }
  return z;
}

// Biased (1/n) autocovariance at one lag.
double autocov(const Vector& v, Index lag, double mean) {
  const Index n = v.size();
  double s = 0.0;
  for (Index i = 0; i + lag < n; ++i) s += (v[i] - mean) * (v[i + lag] - mean);
  return s / static_cast<double>(n);
}

double rhat_from_halves(const std::vector<Vector>& halves) {
  const Index m = static_cast<Index>(halves.size());
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const Index n = halves.front().size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  Vector means(m), vars(m);
  for (Index c = 0; c < m; ++c) {
    means[c] = chain_mean(halves[c]);
    vars[c] = chain_var(halves[c]);
  }
  const double w = vars.mean();
  const double mean_of_means = means.mean();
  const double b_over_n = (means.array() - mean_of_means).square().sum() / static_cast<double>(m - 1);
  if (w <= 0.0) {
    // Zero within-chain variance: identical constants are converged, chains
    // stuck at different values are maximally unconverged.
    return b_over_n <= 0.0 ? 1.0 : pos_inf;
  }
  const double var_plus = (static_cast<double>(n - 1) / n) * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double ess_from_halves(const std::vector<Vector>& halves) {
  const Index m = static_cast<Index>(halves.size());
  if (m < 1) return 0.0;
  const Index n = halves.front().size();
  if (n < 4) return 0.0;
  bool constant = true;
  const double first = halves[0][0];
  for (const auto& h : halves) {
    if ((h.array() != first).any()) { constant = false; break; }
  }
  if (constant) return 0.0;

  std::vector<Vector> z = rank_normalize(halves);
  Vector means(m), vars(m);
  for (Index c = 0; c < m; ++c) {
    means[c] = chain_mean(z[static_cast<std::size_t>(c)]);
    vars[c] = chain_var(z[static_cast<std::size_t>(c)]);
  }
  const double mean_var = vars.mean();  // W
  double var_plus = mean_var * static_cast<double>(n - 1) / n;
  if (m > 1) {
    const double mm = means.mean();
    var_plus += (means.array() - mm).square().sum() / static_cast<double>(m - 1);
  }
  if (!(var_plus > 0.0)) return 0.0;

  auto mean_acov = [&](Index lag) {
    double s = 0.0;
    for (Index c = 0; c < m; ++c) s += autocov(z[static_cast<std::size_t>(c)], lag, means[c]);
    return s / static_cast<double>(m);
  };

  // Geyer initial monotone positive sequence on paired correlations.
  double rho_prev_pair = pos_inf;
  double pair_sum = 0.0;
  for (Index k = 0; 2 * k + 1 < n - 2; ++k) {
    const double rho_even =
        k == 0 ? 1.0 : 1.0 - (mean_var - mean_acov(2 * k)) / var_plus;
    const double rho_odd = 1.0 - (mean_var - mean_acov(2 * k + 1)) / var_plus;
    double pair = rho_even + rho_odd;
    if (pair <= 0.0) break;
    pair = std::min(pair, rho_prev_pair);
    rho_prev_pair = pair;
    pair_sum += pair;
  }
  const double tau = std::max(2.0 * pair_sum - 1.0, 1.0 / std::log10(static_cast<double>(m * n) + 10.0));
  return static_cast<double>(m * n) / tau;
}

}  // namespace

double split_rhat_1(const std::vector<Vector>& chains) {
  return rhat_from_halves(split_halves(chains));
}

double ess_bulk_1(const std::vector<Vector>& chains) {
  auto halves = split_halves(chains);
  if (halves.empty()) return 0.0;
  return ess_from_halves(halves);
}

namespace {
std::vector<Vector> extract_param(const std::vector<Matrix>& chains, Index j) {
  std::vector<Vector> out;
  out.reserve(chains.size());
  for (const auto& c : chains) out.push_back(c.col(j));
  return out;
}
}  // namespace

Vector split_rhat(const std::vector<Matrix>& chains) {
  if (chains.empty()) throw ValidationError("split_rhat: no chains");
  const Index p = chains.front().cols();
  Vector out(p);
  for (Index j = 0; j < p; ++j) out[j] = split_rhat_1(extract_param(chains, j));
  return out;
}

Vector ess_bulk(const std::vector<Matrix>& chains) {
  if (chains.empty()) throw ValidationError("ess_bulk: no chains");
  const Index p = chains.front().cols();
  Vector out(p);
  for (Index j = 0; j < p; ++j) out[j] = ess_bulk_1(extract_param(chains, j));
  return out;
}

double mcse_mean(const std::vector<Vector>& chains) {
  const double ess = ess_bulk_1(chains);
  if (!(ess > 0.0)) return pos_inf;
  Index total = 0;
  double mean = 0.0;
  for (const auto& c : chains) {
    total += c.size();
    mean += c.sum();
  }
  if (total < 2) return pos_inf;
  mean /= static_cast<double>(total);
  double ss = 0.0;
  for (const auto& c : chains) ss += (c.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(total - 1));
  return sd / std::sqrt(ess);
}

}  // namespace fadegp
