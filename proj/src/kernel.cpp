#include "fadegp/kernel.hpp"

#include <cmath>

#include "fadegp/dataset.hpp"
#include "fadegp/errors.hpp"

namespace fadegp {

void Hyperparams::validate(Index n_knots) const {
  if (alpha.size() != 1 && alpha.size() != n_knots) {
    throw ValidationError("hyperparams: alpha must be shared or one per knot");
  }
  for (Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0) || !std::isfinite(alpha[k])) {
      throw ValidationError("hyperparams: alpha must be positive and finite");
    }
  }
  if (rho.size() != n_length_scales) throw ValidationError("hyperparams: expected 4 length scales");
  for (Index d = 0; d < rho.size(); ++d) {
    if (!(rho[d] > 0.0) || !std::isfinite(rho[d])) {
      throw ValidationError("hyperparams: length scales must be positive and finite");
    }
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("hyperparams: sigma must be positive and finite");
  }
}

namespace {

inline double pair_corr(const Matrix& xa, Index i, const Matrix& xb, Index j, const Vector& rho) {
  double q = 0.0;
  for (int d = 0; d < n_inputs; ++d) {
    const double diff = xa(i, d) - xb(j, d);
    const double r = rho[rho_index[d]];
    q += diff * diff / (r * r);
  }
  return std::exp(-0.5 * q);
}

void check_rho(const Vector& rho) {
  if (rho.size() != n_length_scales) throw ValidationError("kernel: expected 4 length scales");
  for (Index d = 0; d < rho.size(); ++d) {
    if (!(rho[d] > 0.0)) throw ValidationError("kernel: length scales must be positive");
  }
}

}  // namespace

namespace detail {

Matrix se_ard_corr_serial(const Matrix& x, const Vector& rho) {
  check_rho(rho);
  const Index n = x.rows();
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double v = pair_corr(x, i, x, j, rho);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Matrix se_ard_corr_omp(const Matrix& x, const Vector& rho) {
  check_rho(rho);
  const Index n = x.rows();
  Matrix c(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Index i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double v = pair_corr(x, i, x, j, rho);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Matrix cross_corr_serial(const Matrix& xa, const Matrix& xb, const Vector& rho) {
  check_rho(rho);
  const Index m = xa.rows(), n = xb.rows();
  Matrix c(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) c(i, j) = pair_corr(xa, i, xb, j, rho);
  }
  return c;
}

Matrix cross_corr_omp(const Matrix& xa, const Matrix& xb, const Vector& rho) {
  check_rho(rho);
  const Index m = xa.rows(), n = xb.rows();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) c(i, j) = pair_corr(xa, i, xb, j, rho);
  }
  return c;
}

}  // namespace detail

Matrix se_ard_corr(const Matrix& x, const Vector& rho) {
  // Parallel pays off only for large point sets; fits use N small, maps large.
  if (x.rows() >= 256) return detail::se_ard_corr_omp(x, rho);
  return detail::se_ard_corr_serial(x, rho);
}

Matrix cross_corr(const Matrix& xa, const Matrix& xb, const Vector& rho) {
  if (xa.rows() * xb.rows() >= 4096) return detail::cross_corr_omp(xa, xb, rho);
  return detail::cross_corr_serial(xa, xb, rho);
}

CovMatrix CovMatrix::from_correlation(Matrix c, double jitter0, double jitter_max) {
  if (c.rows() != c.cols()) throw ValidationError("CovMatrix: matrix must be square");
  CovMatrix out;
  out.c = std::move(c);
  for (double j = jitter0; j <= jitter_max * (1.0 + 1e-12); j *= 10.0) {
    Matrix a = out.c;
    a.diagonal().array() += j;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) {
      out.jitter = j;
      out.chol_l = llt.matrixL();
      return out;
    }
  }
  throw NumericalError("covariance matrix indefinite even at jitter " +
                       std::to_string(jitter_max) + "; inputs may contain duplicate locations");
}

Vector CovMatrix::solve(const Vector& rhs) const {
  Vector y = chol_l.triangularView<Eigen::Lower>().solve(rhs);
  return chol_l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix CovMatrix::solve_mat(const Matrix& rhs) const {
  Matrix y = chol_l.triangularView<Eigen::Lower>().solve(rhs);
  return chol_l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix CovMatrix::inverse() const { return solve_mat(Matrix::Identity(c.rows(), c.cols())); }

double CovMatrix::log_det() const {
  return 2.0 * chol_l.diagonal().array().log().sum();
}

CovMatrix se_ard_cov(const Matrix& x, const Vector& rho) {
  return CovMatrix::from_correlation(se_ard_corr(x, rho));
}

GpConditional gp_conditional(const CovMatrix& c, const Matrix& cstar, const Matrix& cstarstar,
                             const Vector& b_k, double alpha) {
  if (cstar.cols() != c.c.rows()) throw ValidationError("gp_conditional: cross shape mismatch");
  if (cstarstar.rows() != cstar.rows() || cstarstar.cols() != cstar.rows()) {
    throw ValidationError("gp_conditional: prior shape mismatch");
  }
  if (b_k.size() != c.c.rows()) throw ValidationError("gp_conditional: coefficient size mismatch");
  if (!(alpha > 0.0)) throw ValidationError("gp_conditional: alpha must be positive");

  GpConditional out;
  out.mean = cstar * c.solve(b_k);
  Matrix cov = alpha * (cstarstar - cstar * c.solve_mat(cstar.transpose()));
  cov = 0.5 * (cov + cov.transpose());
  // Subtraction can leave slightly negative eigenvalues; clip to PSD.
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("gp_conditional: eigendecomposition failed");
  Vector lam = es.eigenvalues().cwiseMax(0.0);
  out.cov = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

}  // namespace fadegp
