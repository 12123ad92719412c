#pragma once

#include "fadegp/types.hpp"

namespace fadegp {

struct Hyperparams {
  Vector alpha;  // GP prior scales, one shared entry or one per knot; > 0
  Vector rho;    // 4 length scales (H, S, I, spatial); > 0
  double sigma = 1.0;  // observation noise sd; > 0

  void validate(Index n_knots) const;
  double alpha_for(Index k) const { return alpha.size() == 1 ? alpha[0] : alpha[k]; }
};

// Squared-exponential ARD correlation on standardized inputs; Sx and Sy share
// the fourth length scale. Entries exp(-0.5 sum_d dist_d^2 / rho_d^2).
Matrix se_ard_corr(const Matrix& x, const Vector& rho);
Matrix cross_corr(const Matrix& xa, const Matrix& xb, const Vector& rho);

namespace detail {
Matrix se_ard_corr_serial(const Matrix& x, const Vector& rho);
Matrix se_ard_corr_omp(const Matrix& x, const Vector& rho);
Matrix cross_corr_serial(const Matrix& xa, const Matrix& xb, const Vector& rho);
Matrix cross_corr_omp(const Matrix& xa, const Matrix& xb, const Vector& rho);
}  // namespace detail

// Correlation matrix plus the Cholesky factor of c + jitter*I. Jitter starts
// at 1e-8 and escalates tenfold up to 1e-4 before giving up.
struct CovMatrix {
  Matrix c;       // correlation, no jitter on the diagonal
  double jitter = 0.0;
  Matrix chol_l;  // lower factor of c + jitter*I

  Vector solve(const Vector& rhs) const;
  Matrix solve_mat(const Matrix& rhs) const;
  Matrix inverse() const;
  double log_det() const;  // of c + jitter*I

  static CovMatrix from_correlation(Matrix c, double jitter0 = 1e-8, double jitter_max = 1e-4);
};

CovMatrix se_ard_cov(const Matrix& x, const Vector& rho);

struct GpConditional {
  Vector mean;  // length M
  Matrix cov;   // M x M, clipped to be PSD
};

// Conditional of alpha * C over new points given coefficients b_k at the
// observed points. cstar is M x N cross-correlation, cstarstar M x M.
GpConditional gp_conditional(const CovMatrix& c, const Matrix& cstar, const Matrix& cstarstar,
                             const Vector& b_k, double alpha);

}  // namespace fadegp
