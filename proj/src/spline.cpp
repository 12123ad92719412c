#include "fadegp/spline.hpp"

#include <cmath>
#include <iostream>

#include "fadegp/errors.hpp"

namespace fadegp {

Vector make_knots(const Vector& times, int k_count) {
  if (times.size() < 3) throw ValidationError("make_knots: need at least 3 time points");
  if (k_count < 1) throw ValidationError("make_knots: need at least 1 knot");
  if (k_count >= times.size()) {
    std::cerr << "warning: " << k_count << " knots for " << times.size()
              << " time points; fit may be unstable\n";
  }
  const double lo = times[0], hi = times[times.size() - 1];
  Vector knots(k_count);
  for (int k = 0; k < k_count; ++k) {
    knots[k] = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(k_count + 1);
  }
  return knots;
}

Matrix penalty_inverse_sqrt(const Matrix& omega) {
  Eigen::JacobiSVD<Matrix> svd(omega, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double s_max = s.size() > 0 ? s[0] : 0.0;
  const double cut = 1e-10 * s_max;
  Vector inv_root = Vector::Zero(s.size());
  Index kept = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut && s[i] > 0.0) {
      inv_root[i] = 1.0 / std::sqrt(s[i]);
      ++kept;
    }
  }
  if (kept == 0) throw NumericalError("penalty_inverse_sqrt: penalty matrix is entirely singular");
  return svd.matrixU() * inv_root.asDiagonal() * svd.matrixV().transpose();
}

SplineBasis build_basis(const Vector& times, const Vector& knots, double penalty_power) {
  const Index t_count = times.size(), k_count = knots.size();
  if (t_count < 3) throw ValidationError("build_basis: need at least 3 time points");
  if (k_count < 1) throw ValidationError("build_basis: need at least 1 knot");
  for (Index t = 1; t < t_count; ++t) {
    if (!(times[t] > times[t - 1])) throw ValidationError("build_basis: times must be increasing");
  }
  for (Index k = 0; k < k_count; ++k) {
    if (!(knots[k] > times[0] && knots[k] < times[t_count - 1])) {
      throw ValidationError("build_basis: knots must lie strictly inside the time range");
    }
    if (k > 0 && !(knots[k] > knots[k - 1])) {
      throw ValidationError("build_basis: knots must be strictly increasing");
    }
  }

  SplineBasis basis;
  basis.times = times;
  basis.knots = knots;
  basis.h.resize(t_count, 2);
  basis.h.col(0).setOnes();
  basis.h.col(1) = times;
  basis.z.resize(t_count, k_count);
  basis.dz.resize(t_count, k_count);
  for (Index t = 0; t < t_count; ++t) {
    for (Index k = 0; k < k_count; ++k) {
      const double d = times[t] - knots[k];
      basis.z(t, k) = d * d;
      basis.dz(t, k) = 2.0 * d;
    }
  }
  basis.omega.resize(k_count, k_count);
  for (Index l = 0; l < k_count; ++l) {
    for (Index k = 0; k < k_count; ++k) {
      basis.omega(l, k) = std::pow(std::fabs(knots[l] - knots[k]), penalty_power);
    }
  }
  if (k_count == 1) {
    basis.omega_inv_sqrt = Matrix::Identity(1, 1);
  } else {
    basis.omega_inv_sqrt = penalty_inverse_sqrt(basis.omega);
  }
  basis.w = basis.z * basis.omega_inv_sqrt;
  basis.dw = basis.dz * basis.omega_inv_sqrt;
  return basis;
}

Vector eval_function(const Eigen::Vector2d& beta, const Vector& b, const SplineBasis& basis) {
  if (b.size() != basis.n_knots()) throw ValidationError("eval_function: coefficient size mismatch");
  return basis.h * beta + basis.w * b;
}

Vector eval_derivative(const Eigen::Vector2d& beta, const Vector& b, const SplineBasis& basis) {
  if (b.size() != basis.n_knots()) throw ValidationError("eval_derivative: coefficient size mismatch");
  return Vector::Constant(basis.n_times(), beta[1]) + basis.dw * b;
}

}  // namespace fadegp
