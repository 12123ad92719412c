#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fadegp/dataset.hpp"
#include "fadegp/kernel.hpp"
#include "fadegp/rng.hpp"
#include "fadegp/spline.hpp"
#include "fadegp/types.hpp"

namespace fadegp {

struct ConstraintConfig {
  bool anchor = true;        // f(t_1, i) = 0, eliminated exactly unless soft
  bool saturation = true;    // f'(t_T, i) = 0, eliminated exactly unless soft
  bool monotonicity = true;  // probit penalty log Phi(f'/v) over the whole grid
  double v = 1e-4;           // probit sharpness
};

struct PriorConfig {
  double alpha_scale = 1.0;  // half-normal sd on each GP scale
  double sigma_scale = 1.0;  // half-normal sd on the noise sd
  double rho_shape = 1.0;    // gamma prior on each length scale
  double rho_rate = 0.1;
  double beta_scale = 1.0;   // normal sd on non-eliminated trend coefficients
};

struct ModelConfig {
  int knots = 3;
  double penalty_power = 2.0;
  bool per_knot_alpha = false;   // one GP scale per knot instead of one shared
  bool soft_constraints = false; // replace exact eliminations by narrow Gaussians
  double sigma_eps = 1e-3;       // sd of the soft constraint Gaussians
  bool center_inputs = false;
  ConstraintConfig constraints;
  PriorConfig priors;
  // When set, hyperparameters are held at these values and leave the state.
  std::optional<Hyperparams> fixed_hypers;
};

// Trend coefficients implied by exact constraint elimination, both rows:
//   saturation: beta2_i = -dw(t_T) . b_i
//   anchor:     beta1_i = -t_1 beta2_i - w(t_1) . b_i
Matrix eliminate_constraints(const Matrix& b, const SplineBasis& basis);

struct ModelState {
  Matrix b;      // K x N spline coefficients
  Vector beta1;  // length N when free, empty when eliminated
  Vector beta2;
  Hyperparams hyper;
};

// Joint log posterior of the constrained penalized-spline GP model on the
// unconstrained scale (positives log-transformed, Jacobians included).
class PosteriorModel {
 public:
  PosteriorModel(Dataset data, ModelConfig cfg);

  // Removes one response cell from the Gaussian likelihood (leave-one-
  // observation-out). The anchor row cannot be held out.
  void hold_out(Index t, Index i);

  Index dim() const { return dim_; }
  Index n_knots() const { return basis_.n_knots(); }
  bool beta1_free() const { return beta1_free_; }
  bool beta2_free() const { return beta2_free_; }
  bool hypers_sampled() const { return !cfg_.fixed_hypers.has_value(); }

  double value(const Vector& q) const;
  // Returns the log posterior and fills grad (same length as q). Non-finite
  // states return -inf with a zero gradient.
  double value_grad(const Vector& q, Vector& grad) const;

  // State packing. Unconstrained vector layout:
  //   [vec(b) column-major] [beta1 if free] [beta2 if free] [log hypers]
  Vector pack(const ModelState& state) const;
  ModelState unpack(const Vector& q) const;

  // Draw persistence uses natural scale: identical to q except the hyper
  // block is exponentiated.
  Vector to_natural(const Vector& q) const;
  ModelState state_from_natural(const Vector& row) const;
  std::vector<std::string> param_names() const;

  // Full 2 x N trend coefficients with eliminated rows materialized.
  Matrix beta_full(const ModelState& state) const;
  Matrix latent_f(const ModelState& state) const;       // T x N
  Matrix latent_fprime(const ModelState& state) const;  // T x N

  // Jittered start: hypers from their priors (clamped to a moderate range),
  // coefficients small-scale normal with a per-series sign fix so monotone
  // runs do not start in a vanishing-density corner.
  Vector initial_point(Rng& rng) const;

  const Dataset& data() const { return data_; }
  const ModelConfig& config() const { return cfg_; }
  const SplineBasis& basis() const { return basis_; }
  const StandardizedInputs& inputs() const { return inputs_; }
  const Matrix& design_f() const { return wf_; }    // f = design_f * b (+ free trend)
  const Matrix& design_df() const { return wd_; }   // f' = design_df * b (+ free trend)

 private:
  double evaluate(const Vector& q, Vector* grad) const;
  void rebuild_masks();

  Dataset data_;
  ModelConfig cfg_;
  SplineBasis basis_;
  StandardizedInputs inputs_;
  Matrix wf_, wd_;    // effective designs after elimination
  Vector tcol_;       // coefficient of beta2 in f when beta2 is free
  bool anchor_hard_ = false, sat_hard_ = false;
  bool beta1_free_ = false, beta2_free_ = false;
  Index dim_ = 0;
  Index b_count_ = 0, beta1_off_ = -1, beta2_off_ = -1, hyper_off_ = -1;
  Index alpha_count_ = 0;
  std::vector<char> gauss_mask_;  // T*N, column-major; cells in the Gaussian term
  Index gauss_count_ = 0;
  std::vector<Matrix> sqdist_;    // per length scale, N x N squared distances
  // Fixed-hyper cache
  CovMatrix fixed_cov_;
  Matrix fixed_cinv_;
};

// Convenience evaluators matching the generative story directly; used by
// tests as an independent check on the packed fast path.
double log_likelihood(const Matrix& y, const ModelState& state, const SplineBasis& basis,
                      const ConstraintConfig& constraints);
double log_prior(const ModelState& state, const CovMatrix& cov, const PriorConfig& priors);

}  // namespace fadegp
