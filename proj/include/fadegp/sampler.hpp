#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fadegp/rng.hpp"
#include "fadegp/types.hpp"

namespace fadegp {

struct SamplerConfig {
  int chains = 3;
  int warmup = 1000;
  int samples = 1000;
  double target_accept = 0.8;
  int max_treedepth = 10;
  std::uint64_t seed = 1;
  bool nuts = true;        // false: static-length HMC with the same adaptation
  int static_steps = 32;   // leapfrog steps per static-HMC proposal
  // Adapt a full covariance metric instead of a diagonal one. The spline
  // blocks are strongly collinear, which a diagonal metric cannot absorb.
  bool dense_metric = true;
  double divergence_threshold = 1000.0;
  bool parallel_chains = true;  // off when an outer loop already owns the threads
  int max_init_retries = 100;
};

// Log density and gradient; must return -inf (not throw) on invalid states.
using TargetFn = std::function<double(const Vector& q, Vector& grad)>;
using InitFn = std::function<Vector(Rng&)>;

struct ChainStats {
  double mean_accept = 0.0;
  int divergences = 0;
  int max_depth_hits = 0;
  double step_size = 0.0;
  Vector inv_mass;  // diagonal
};

struct PosteriorDraws {
  std::vector<Matrix> chains;  // one samples x dim matrix per chain
  std::vector<std::string> param_names;
  std::vector<ChainStats> stats;
  Vector rhat;  // per parameter, split chains
  Vector ess;   // per parameter, rank-normalized bulk ESS

  Index n_chains() const { return static_cast<Index>(chains.size()); }
  Index n_samples() const { return chains.empty() ? 0 : chains.front().rows(); }
  Index n_params() const { return chains.empty() ? 0 : chains.front().cols(); }
  int total_divergences() const;
  double max_rhat() const;
  double min_ess() const;
  Matrix stacked() const;  // all chains concatenated row-wise
};

// Runs `cfg.chains` independent chains (OpenMP across chains when enabled)
// and fills convergence diagnostics. Initial states come from `init`
// (re-drawn until the target is finite) or standard normal jitter without it.
PosteriorDraws run_sampler(const TargetFn& target, Index dim, const SamplerConfig& cfg,
                           const InitFn& init = {});

// Split-Rhat over halved chains. Returns +inf when the within variance
// collapses to zero while draws differ, 1 when the draws are all identical.
double split_rhat_1(const std::vector<Vector>& chains);
Vector split_rhat(const std::vector<Matrix>& chains);

// Rank-normalized bulk effective sample size (split chains, Geyer initial
// monotone sequence).
double ess_bulk_1(const std::vector<Vector>& chains);
Vector ess_bulk(const std::vector<Matrix>& chains);

// Monte Carlo standard error of a posterior mean via bulk ESS.
double mcse_mean(const std::vector<Vector>& chains);

}  // namespace fadegp
