#pragma once

#include "fadegp/types.hpp"

namespace fadegp {

// Penalized quadratic radial basis on a shared time grid.
//   f(t)  = beta1 + beta2 * t + sum_k w_k(t) b_k
//   w row = z row * omega^{-1/2},  z[t,k] = (t - knot_k)^2
struct SplineBasis {
  Vector times;           // T
  Vector knots;           // K, strictly inside (t_min, t_max)
  Matrix h;               // T x 2, columns (1, t)
  Matrix z;               // T x K
  Matrix dz;              // T x K, 2 (t - knot_k)
  Matrix omega;           // K x K, |knot_l - knot_k|^penalty_power
  Matrix omega_inv_sqrt;  // K x K symmetric-orthogonalizing factor
  Matrix w;               // z * omega_inv_sqrt
  Matrix dw;              // dz * omega_inv_sqrt

  Index n_times() const { return times.size(); }
  Index n_knots() const { return knots.size(); }
};

// Equispaced interior knots: t_min + k (t_max - t_min) / (K + 1), k = 1..K.
Vector make_knots(const Vector& times, int k_count);

// U diag(s^{-1/2}) V^T from the SVD of omega, singular values below
// 1e-10 * s_max truncated. Omega itself is indefinite, so this is an
// orthogonalizer in the singular-value sense, not a literal inverse root;
// all singular values of M*omega*M equal 1 on the retained subspace.
// Throws NumericalError when every singular value is truncated.
Matrix penalty_inverse_sqrt(const Matrix& omega);

// K = 1 gives a single-entry zero omega; the basis falls back to the raw
// z column there instead of failing.
SplineBasis build_basis(const Vector& times, const Vector& knots, double penalty_power = 2.0);

Vector eval_function(const Eigen::Vector2d& beta, const Vector& b, const SplineBasis& basis);
Vector eval_derivative(const Eigen::Vector2d& beta, const Vector& b, const SplineBasis& basis);

}  // namespace fadegp
