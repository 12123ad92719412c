#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fadegp/model.hpp"
#include "fadegp/predict.hpp"
#include "fadegp/sampler.hpp"
#include "fadegp/types.hpp"

namespace fadegp {

struct InputStats {
  // Defaults follow the survey summary of the study inputs.
  Vector mean = (Vector(5) << 5.255, 9.704, 5.155, 3.549, 4.969).finished();
  Vector sd = (Vector(5) << 1.0, 1.0, 1.0, 0.732, 0.674).finished();
};

struct SyntheticTruth {
  Hyperparams hyper;
  Matrix b;       // K x N
  Matrix beta;    // 2 x N after elimination
  Matrix f;       // T x N noiseless curves
  int attempts = 1;  // monotone rejection rounds used
};

struct SyntheticConfig {
  Index n_locations = 13;
  Index n_times = 11;
  int knots = 3;
  double penalty_power = 2.0;
  bool monotone = true;       // keep resampling surfaces until every slope >= 0
  int max_attempts = 100000;
  InputStats inputs;
};

// Draws inputs, GP coefficient surfaces, and noisy monotone-saturating
// curves from the generative model itself. Deterministic in (cfg, truth, seed).
std::pair<Dataset, SyntheticTruth> generate_synthetic(const Hyperparams& truth,
                                                      const SyntheticConfig& cfg,
                                                      std::uint64_t seed);

struct CvFold {
  Index t = -1;       // held-out time (observation scheme only)
  Index loc = -1;     // held-out location
  std::string id;
  bool converged = true;
  double max_rhat = 0.0;
  double elpd = 0.0;     // log predictive density of the held-out data
  double sq_err = 0.0;   // squared error of the predictive mean
  double pit = 0.0;      // fraction of predictive draws at or below the truth
  double width = 0.0;    // central 95% predictive interval width
  bool covered = false;  // truth inside the central 95% interval
};

struct CvReport {
  std::string scheme;  // "cv1" or "cv2"
  bool with_derivatives = true;
  std::vector<CvFold> folds;  // converged folds only
  Index requested_folds = 0;
  Index excluded_folds = 0;   // folds dropped by the convergence gate
  double elpd_mean = 0.0, elpd_sum = 0.0;
  double mse = 0.0;
  double mean_width = 0.0;
  double coverage = 0.0;

  void finalize();
  std::string to_json() const;
};

struct CvConfig {
  SamplerConfig sampler;
  std::uint64_t seed = 1;
  Index max_folds = 0;  // 0: every fold; else a seeded subsample
  double rhat_gate = 1.05;
  bool parallel_folds = true;
};

// Leave-one-observation-out: each fold masks a single (t, i) cell, t >= 2,
// refits, and scores the held-out value. ELPD uses the mixture of per-draw
// Gaussians; PIT is the literal fraction of sampled replicates <= y.
CvReport cv1(const Dataset& data, const ModelConfig& mc, const CvConfig& cfg);

// Leave-one-location-out: each fold drops a location, refits from scratch
// (standardization included), and predicts the whole held-out series.
CvReport cv2(const Dataset& data, const ModelConfig& mc, const CvConfig& cfg);

// Normalized posterior moments on a dense midpoint-rule grid centered at the
// posterior mode; box half widths default to 10 Laplace standard deviations
// per dimension. The quadrature oracle for tiny fixed-hyperparameter
// instances. Refuses dimensions above 2.
struct GridPosterior {
  Vector mean;
  Matrix cov;
  double log_norm = 0.0;  // log of the quadrature mass
};

GridPosterior grid_posterior_oracle(const PosteriorModel& model, Index points_per_dim = 400,
                                    double half_width = 0.0);

// One-sample Kolmogorov-Smirnov test against U(0, 1).
double ks_statistic_uniform(std::vector<double> values);
double ks_pvalue_uniform(std::vector<double> values);

}  // namespace fadegp
