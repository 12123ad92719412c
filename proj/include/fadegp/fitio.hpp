#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fadegp/model.hpp"
#include "fadegp/predict.hpp"
#include "fadegp/sampler.hpp"

namespace fadegp {

struct FitResult {
  std::vector<Matrix> natural_chains;  // samples x dim, hypers on natural scale
  std::vector<std::string> param_names;
  Vector rhat, ess;
  std::vector<ChainStats> stats;
  Index total_draws = 0;
  Index retained_draws = 0;  // after the monotonicity screen
  double retention_rate = 1.0;

  double max_rhat() const;
  double min_ess() const;
  int total_divergences() const;
  double divergence_rate() const;
};

FitResult run_fit(const PosteriorModel& model, const SamplerConfig& sc);

// Throws ConvergenceError naming the worst offenders when any split-Rhat
// reaches the gate or diverging transitions exceed the allowed rate.
void check_convergence(const FitResult& fit, double rhat_gate = 1.05,
                       double max_divergence_rate = 0.01);

DrawSet screened_set(const PosteriorModel& model, const FitResult& fit);

// Directory layout: manifest.json, draws_chain<c>.csv, diagnostics.csv.
// Outputs are deterministic byte-for-byte for a given data/config/seed.
void save_fit(const std::string& dir, const FitResult& fit, const PosteriorModel& model,
              const std::string& data_file, const SamplerConfig& sc);

struct LoadedFit {
  std::shared_ptr<PosteriorModel> model;
  FitResult fit;
  std::string data_file;
};

// Rebuilds the model from the manifest (re-reading the data file) and loads
// the persisted chains. `data_override` replaces the recorded data path.
LoadedFit load_fit(const std::string& dir, const std::string& data_override = "");

}  // namespace fadegp
