#include "fadegp/model.hpp"

#include <cmath>
#include <limits>

#include "fadegp/errors.hpp"
#include "fadegp/normal.hpp"

namespace fadegp {

namespace {
constexpr double log_2pi = 1.8378770664093454836;
constexpr double neg_inf = -std::numeric_limits<double>::infinity();
// Beyond this the exp of a log-hyperparameter is numerically meaningless.
constexpr double u_bound = 40.0;

double log_half_normal(double x, double scale) {
  return std::log(2.0) - 0.5 * log_2pi - std::log(scale) - 0.5 * x * x / (scale * scale);
}

double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}
}  // namespace

Matrix eliminate_constraints(const Matrix& b, const SplineBasis& basis) {
  if (b.rows() != basis.n_knots()) throw ValidationError("eliminate_constraints: knot mismatch");
  const Index n = b.cols();
  const Vector w1 = basis.w.row(0).transpose();
  const Vector dwt = basis.dw.row(basis.n_times() - 1).transpose();
  const double t1 = basis.times[0];
  Matrix beta(2, n);
  beta.row(1) = -(dwt.transpose() * b);
  beta.row(0) = -t1 * beta.row(1) - w1.transpose() * b;
  return beta;
}

PosteriorModel::PosteriorModel(Dataset data, ModelConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)) {
  data_.validate();
  if (cfg_.knots < 1) throw ValidationError("model: need at least 1 knot");
  if (!(cfg_.constraints.v > 0.0)) throw ValidationError("model: probit sharpness must be positive");
  if (cfg_.soft_constraints && !(cfg_.sigma_eps > 0.0)) {
    throw ValidationError("model: soft constraint sd must be positive");
  }
  const PriorConfig& pr = cfg_.priors;
  if (!(pr.alpha_scale > 0.0 && pr.sigma_scale > 0.0 && pr.rho_shape > 0.0 &&
        pr.rho_rate > 0.0 && pr.beta_scale > 0.0)) {
    throw ValidationError("model: prior scales must be positive");
  }

  inputs_ = standardize_inputs(data_.x_raw, cfg_.center_inputs);
  basis_ = build_basis(data_.times, make_knots(data_.times, cfg_.knots), cfg_.penalty_power);

  const Index t_count = data_.n_times(), n = data_.n_locations(), k_count = basis_.n_knots();
  anchor_hard_ = cfg_.constraints.anchor && !cfg_.soft_constraints;
  sat_hard_ = cfg_.constraints.saturation && !cfg_.soft_constraints;
  beta1_free_ = !anchor_hard_;
  beta2_free_ = !sat_hard_;

  const double t1 = data_.times[0];
  tcol_ = anchor_hard_ ? Vector(data_.times.array() - t1) : data_.times;
  const Vector w1 = basis_.w.row(0).transpose();
  const Vector dwt = basis_.dw.row(t_count - 1).transpose();
  wf_ = basis_.w;
  wd_ = basis_.dw;
  if (sat_hard_) {
    wf_.noalias() -= tcol_ * dwt.transpose();
    wd_.rowwise() -= dwt.transpose();
  }
  if (anchor_hard_) wf_.rowwise() -= w1.transpose();

  b_count_ = k_count * n;
  Index off = b_count_;
  if (beta1_free_) { beta1_off_ = off; off += n; }
  if (beta2_free_) { beta2_off_ = off; off += n; }
  alpha_count_ = cfg_.per_knot_alpha ? k_count : 1;
  if (cfg_.fixed_hypers) {
    cfg_.fixed_hypers->validate(k_count);
    fixed_cov_ = se_ard_cov(inputs_.x, cfg_.fixed_hypers->rho);
    fixed_cinv_ = fixed_cov_.inverse();
  } else {
    hyper_off_ = off;
    off += alpha_count_ + n_length_scales + 1;
  }
  dim_ = off;

  sqdist_.assign(n_length_scales, Matrix::Zero(n, n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (int d = 0; d < n_inputs; ++d) {
        const double diff = inputs_.x(i, d) - inputs_.x(j, d);
        sqdist_[rho_index[d]](i, j) += diff * diff;
      }
    }
  }
  rebuild_masks();
}

void PosteriorModel::rebuild_masks() {
  const Index t_count = data_.n_times(), n = data_.n_locations();
  gauss_mask_.assign(static_cast<std::size_t>(t_count * n), 1);
  if (cfg_.constraints.anchor) {
    // Anchor handling owns the first row: a Dirac when hard, a narrow
    // Gaussian when soft; either way it leaves the noise likelihood.
    for (Index i = 0; i < n; ++i) gauss_mask_[static_cast<std::size_t>(t_count * i)] = 0;
  }
  gauss_count_ = 0;
  for (char m : gauss_mask_) gauss_count_ += m;
}

void PosteriorModel::hold_out(Index t, Index i) {
  const Index t_count = data_.n_times(), n = data_.n_locations();
  if (t < 0 || t >= t_count || i < 0 || i >= n) throw ValidationError("hold_out: index out of range");
  if (t == 0 && cfg_.constraints.anchor) {
    throw ValidationError("hold_out: the anchor row is not part of the noise likelihood");
  }
  auto& cell = gauss_mask_[static_cast<std::size_t>(t + t_count * i)];
  if (cell) { cell = 0; --gauss_count_; }
}

Vector PosteriorModel::pack(const ModelState& state) const {
  const Index k_count = basis_.n_knots(), n = data_.n_locations();
  if (state.b.rows() != k_count || state.b.cols() != n) throw ValidationError("pack: b shape mismatch");
  Vector q(dim_);
  Eigen::Map<Matrix>(q.data(), k_count, n) = state.b;
  if (beta1_free_) {
    if (state.beta1.size() != n) throw ValidationError("pack: beta1 must be length N");
    q.segment(beta1_off_, n) = state.beta1;
  }
  if (beta2_free_) {
    if (state.beta2.size() != n) throw ValidationError("pack: beta2 must be length N");
    q.segment(beta2_off_, n) = state.beta2;
  }
  if (hypers_sampled()) {
    state.hyper.validate(k_count);
    if (state.hyper.alpha.size() != alpha_count_) {
      throw ValidationError("pack: alpha count does not match the model configuration");
    }
    Index h = hyper_off_;
    for (Index k = 0; k < alpha_count_; ++k) q[h++] = std::log(state.hyper.alpha[k]);
    for (Index d = 0; d < n_length_scales; ++d) q[h++] = std::log(state.hyper.rho[d]);
    q[h] = std::log(state.hyper.sigma);
  }
  return q;
}

ModelState PosteriorModel::unpack(const Vector& q) const {
  if (q.size() != dim_) throw ValidationError("unpack: state size mismatch");
  const Index k_count = basis_.n_knots(), n = data_.n_locations();
  ModelState st;
  st.b = Eigen::Map<const Matrix>(q.data(), k_count, n);
  if (beta1_free_) st.beta1 = q.segment(beta1_off_, n);
  if (beta2_free_) st.beta2 = q.segment(beta2_off_, n);
  if (hypers_sampled()) {
    Index h = hyper_off_;
    st.hyper.alpha.resize(alpha_count_);
    for (Index k = 0; k < alpha_count_; ++k) st.hyper.alpha[k] = std::exp(q[h++]);
    st.hyper.rho.resize(n_length_scales);
    for (Index d = 0; d < n_length_scales; ++d) st.hyper.rho[d] = std::exp(q[h++]);
    st.hyper.sigma = std::exp(q[h]);
  } else {
    st.hyper = *cfg_.fixed_hypers;
  }
  return st;
}

Vector PosteriorModel::to_natural(const Vector& q) const {
  if (q.size() != dim_) throw ValidationError("to_natural: state size mismatch");
  Vector out = q;
  if (hypers_sampled()) {
    out.tail(dim_ - hyper_off_) = q.tail(dim_ - hyper_off_).array().exp();
  }
  return out;
}

ModelState PosteriorModel::state_from_natural(const Vector& row) const {
  if (row.size() != dim_) throw ValidationError("state_from_natural: size mismatch");
  const Index k_count = basis_.n_knots(), n = data_.n_locations();
  ModelState st;
  st.b = Eigen::Map<const Matrix>(row.data(), k_count, n);
  if (beta1_free_) st.beta1 = row.segment(beta1_off_, n);
  if (beta2_free_) st.beta2 = row.segment(beta2_off_, n);
  if (hypers_sampled()) {
    Index h = hyper_off_;
    st.hyper.alpha = row.segment(h, alpha_count_);
    h += alpha_count_;
    st.hyper.rho = row.segment(h, n_length_scales);
    h += n_length_scales;
    st.hyper.sigma = row[h];
  } else {
    st.hyper = *cfg_.fixed_hypers;
  }
  return st;
}

std::vector<std::string> PosteriorModel::param_names() const {
  const Index k_count = basis_.n_knots(), n = data_.n_locations();
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(dim_));
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < k_count; ++k) {
      names.push_back("b.k" + std::to_string(k + 1) + "." + data_.ids[i]);
    }
  }
  if (beta1_free_) {
    for (Index i = 0; i < n; ++i) names.push_back("beta1." + data_.ids[i]);
  }
  if (beta2_free_) {
    for (Index i = 0; i < n; ++i) names.push_back("beta2." + data_.ids[i]);
  }
  if (hypers_sampled()) {
    if (alpha_count_ == 1) {
      names.push_back("alpha");
    } else {
      for (Index k = 0; k < alpha_count_; ++k) names.push_back("alpha.k" + std::to_string(k + 1));
    }
    names.push_back("rho.H");
    names.push_back("rho.S");
    names.push_back("rho.I");
    names.push_back("rho.sp");
    names.push_back("sigma");
  }
  return names;
}

Matrix PosteriorModel::beta_full(const ModelState& state) const {
  const Index n = data_.n_locations();
  Matrix beta(2, n);
  Matrix elim;
  if (anchor_hard_ || sat_hard_) elim = eliminate_constraints(state.b, basis_);
  if (sat_hard_) {
    beta.row(1) = elim.row(1);
  } else {
    if (state.beta2.size() != n) throw ValidationError("beta_full: beta2 missing");
    beta.row(1) = state.beta2.transpose();
  }
  if (anchor_hard_) {
    // Anchor elimination must use the actual beta2 row, whichever source.
    const Vector w1 = basis_.w.row(0).transpose();
    const double t1 = data_.times[0];
    beta.row(0) = -t1 * beta.row(1) - w1.transpose() * state.b;
  } else {
    if (state.beta1.size() != n) throw ValidationError("beta_full: beta1 missing");
    beta.row(0) = state.beta1.transpose();
  }
  return beta;
}

Matrix PosteriorModel::latent_f(const ModelState& state) const {
  Matrix f = wf_ * state.b;
  if (beta2_free_) f.noalias() += tcol_ * state.beta2.transpose();
  if (beta1_free_) f.rowwise() += state.beta1.transpose();
  return f;
}

Matrix PosteriorModel::latent_fprime(const ModelState& state) const {
  Matrix fp = wd_ * state.b;
  if (beta2_free_) fp.rowwise() += state.beta2.transpose();
  return fp;
}

Vector PosteriorModel::initial_point(Rng& rng) const {
  const Index k_count = basis_.n_knots(), n = data_.n_locations();
  ModelState st;
  if (hypers_sampled()) {
    const PriorConfig& pr = cfg_.priors;
    st.hyper.alpha.resize(alpha_count_);
    for (Index k = 0; k < alpha_count_; ++k) {
      st.hyper.alpha[k] = std::clamp(std::fabs(draw_normal(rng) * pr.alpha_scale), 0.1, 3.0);
    }
    st.hyper.rho.resize(n_length_scales);
    for (Index d = 0; d < n_length_scales; ++d) {
      // Tight clamp: starts far out on the length-scale plateau give chains
      // a nearly flat, nearly singular region to escape from.
      st.hyper.rho[d] = std::clamp(draw_gamma(rng, pr.rho_shape, pr.rho_rate), 0.5, 2.5);
    }
    st.hyper.sigma = std::clamp(std::fabs(draw_normal(rng) * pr.sigma_scale), 0.1, 2.0);
  } else {
    st.hyper = *cfg_.fixed_hypers;
  }
  st.b.resize(k_count, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < k_count; ++k) st.b(k, i) = 0.1 * draw_normal(rng);
  }
  if (beta1_free_) {
    st.beta1.resize(n);
    for (Index i = 0; i < n; ++i) st.beta1[i] = 0.1 * draw_normal(rng);
  }
  if (beta2_free_) {
    st.beta2.resize(n);
    for (Index i = 0; i < n; ++i) st.beta2[i] = 0.1 * draw_normal(rng);
  }
  if (cfg_.constraints.monotonicity) {
    // Keep every starting series out of the vanishing-density region: flip
    // the sign when the derivative is mostly negative (exact fix when the
    // saturation constraint makes f' one-signed), then shrink until the
    // worst violation is a few probit widths at most.
    Matrix fp = latent_fprime(st);
    const double tol = -20.0 * cfg_.constraints.v;
    for (Index i = 0; i < n; ++i) {
      if (fp.col(i).sum() < 0.0) {
        st.b.col(i) = -st.b.col(i);
        if (beta2_free_) st.beta2[i] = -st.beta2[i];
        fp.col(i) = -fp.col(i);
      }
      for (int tries = 0; tries < 12 && fp.col(i).minCoeff() < tol; ++tries) {
        st.b.col(i) *= 0.3;
        if (beta2_free_) st.beta2[i] *= 0.3;
        fp.col(i) *= 0.3;
      }
    }
  }
  return pack(st);
}

double PosteriorModel::value(const Vector& q) const { return evaluate(q, nullptr); }

double PosteriorModel::value_grad(const Vector& q, Vector& grad) const {
  grad.setZero(dim_);
  return evaluate(q, &grad);
}

double PosteriorModel::evaluate(const Vector& q, Vector* grad) const {
  const Index k_count = basis_.n_knots(), n = data_.n_locations(), t_count = data_.n_times();
  if (q.size() != dim_) throw ValidationError("evaluate: state size mismatch");
  if (!q.allFinite()) return neg_inf;

  Eigen::Map<const Matrix> b(q.data(), k_count, n);
  Vector alpha, rho;
  double sigma;
  if (hypers_sampled()) {
    const auto u = q.tail(alpha_count_ + n_length_scales + 1);
    if (u.cwiseAbs().maxCoeff() > u_bound) return neg_inf;
    alpha = u.head(alpha_count_).array().exp();
    rho = u.segment(alpha_count_, n_length_scales).array().exp();
    sigma = std::exp(u[alpha_count_ + n_length_scales]);
  } else {
    alpha = cfg_.fixed_hypers->alpha;
    rho = cfg_.fixed_hypers->rho;
    sigma = cfg_.fixed_hypers->sigma;
  }
  auto alpha_for = [&](Index k) { return alpha.size() == 1 ? alpha[0] : alpha[k]; };

  CovMatrix local_cov;
  const CovMatrix* cov = &fixed_cov_;
  if (hypers_sampled()) {
    try {
      local_cov = se_ard_cov(inputs_.x, rho);
    } catch (const NumericalError&) {
      return neg_inf;  // reject rather than abort when jitter is exhausted mid-run
    }
    cov = &local_cov;
  }

  // Latent curves and slopes.
  Matrix f = wf_ * b;
  Vector beta1, beta2;
  if (beta2_free_) {
    beta2 = q.segment(beta2_off_, n);
    f.noalias() += tcol_ * beta2.transpose();
  }
  if (beta1_free_) {
    beta1 = q.segment(beta1_off_, n);
    f.rowwise() += beta1.transpose();
  }
  Matrix fp = wd_ * b;
  if (beta2_free_) fp.rowwise() += beta2.transpose();

  double val = 0.0;
  Matrix gf, gd;
  if (grad) {
    gf.setZero(t_count, n);
    gd.setZero(t_count, n);
  }

  // Gaussian noise likelihood over unmasked cells.
  const double inv_s2 = 1.0 / (sigma * sigma);
  double ssr = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < t_count; ++t) {
      if (!gauss_mask_[static_cast<std::size_t>(t + t_count * i)]) continue;
      const double r = data_.y(t, i) - f(t, i);
      ssr += r * r;
      if (grad) gf(t, i) = r * inv_s2;
    }
  }
  const double m_obs = static_cast<double>(gauss_count_);
  val += -0.5 * m_obs * log_2pi - m_obs * std::log(sigma) - 0.5 * ssr * inv_s2;

  if (cfg_.soft_constraints) {
    const double se = cfg_.sigma_eps;
    const double inv_e2 = 1.0 / (se * se);
    if (cfg_.constraints.anchor) {
      for (Index i = 0; i < n; ++i) {
        val += -0.5 * log_2pi - std::log(se) - 0.5 * f(0, i) * f(0, i) * inv_e2;
        if (grad) gf(0, i) += -f(0, i) * inv_e2;
      }
    }
    if (cfg_.constraints.saturation) {
      for (Index i = 0; i < n; ++i) {
        const double d = fp(t_count - 1, i);
        val += -0.5 * log_2pi - std::log(se) - 0.5 * d * d * inv_e2;
        if (grad) gd(t_count - 1, i) += -d * inv_e2;
      }
    }
  }

  if (cfg_.constraints.monotonicity) {
    const double v = cfg_.constraints.v;
    for (Index i = 0; i < n; ++i) {
      for (Index t = 0; t < t_count; ++t) {
        const double a = fp(t, i) / v;
        val += log_norm_cdf(a);
        if (grad) gd(t, i) += inverse_mills(a) / v;
      }
    }
  }

  // GP prior across space, one independent surface per knot.
  const double logdet = cov->log_det();
  Matrix u_cols(n, k_count);
  Vector quad(k_count);
  const bool need_cinv = grad != nullptr && hypers_sampled();
  Matrix cinv;
  if (need_cinv) cinv = cov->inverse();
  for (Index k = 0; k < k_count; ++k) {
    const Vector bk = b.row(k).transpose();
    u_cols.col(k) = need_cinv ? Vector(cinv * bk)
                              : (hypers_sampled() ? cov->solve(bk) : Vector(fixed_cinv_ * bk));
    quad[k] = bk.dot(u_cols.col(k));
    const double ak = alpha_for(k);
    val += -0.5 * n * (log_2pi + std::log(ak)) - 0.5 * logdet - 0.5 * quad[k] / ak;
  }

  const PriorConfig& pr = cfg_.priors;
  const double bs2 = pr.beta_scale * pr.beta_scale;
  if (beta1_free_) {
    for (Index i = 0; i < n; ++i) {
      val += -0.5 * log_2pi - std::log(pr.beta_scale) - 0.5 * beta1[i] * beta1[i] / bs2;
    }
  }
  if (beta2_free_) {
    for (Index i = 0; i < n; ++i) {
      val += -0.5 * log_2pi - std::log(pr.beta_scale) - 0.5 * beta2[i] * beta2[i] / bs2;
    }
  }

  if (hypers_sampled()) {
    // Log-scale sampling: natural-scale prior plus the log|dtheta/du| Jacobian.
    for (Index k = 0; k < alpha_count_; ++k) {
      val += log_half_normal(alpha[k], pr.alpha_scale) + std::log(alpha[k]);
    }
    for (Index d = 0; d < n_length_scales; ++d) {
      val += log_gamma_pdf(rho[d], pr.rho_shape, pr.rho_rate) + std::log(rho[d]);
    }
    val += log_half_normal(sigma, pr.sigma_scale) + std::log(sigma);
  }

  if (!std::isfinite(val)) {
    if (grad) grad->setZero();
    return neg_inf;
  }
  if (!grad) return val;

  Eigen::Map<Matrix> gb(grad->data(), k_count, n);
  gb = wf_.transpose() * gf + wd_.transpose() * gd;
  for (Index k = 0; k < k_count; ++k) {
    gb.row(k) -= (u_cols.col(k) / alpha_for(k)).transpose();
  }
  if (beta1_free_) {
    for (Index i = 0; i < n; ++i) {
      (*grad)[beta1_off_ + i] = gf.col(i).sum() - beta1[i] / bs2;
    }
  }
  if (beta2_free_) {
    for (Index i = 0; i < n; ++i) {
      (*grad)[beta2_off_ + i] = tcol_.dot(gf.col(i)) + gd.col(i).sum() - beta2[i] / bs2;
    }
  }
  if (hypers_sampled()) {
    Index h = hyper_off_;
    if (alpha_count_ == 1) {
      const double a = alpha[0];
      (*grad)[h++] = -0.5 * k_count * n + 0.5 * quad.sum() / a - a * a / (pr.alpha_scale * pr.alpha_scale) + 1.0;
    } else {
      for (Index k = 0; k < alpha_count_; ++k) {
        const double a = alpha[k];
        (*grad)[h++] = -0.5 * n + 0.5 * quad[k] / a - a * a / (pr.alpha_scale * pr.alpha_scale) + 1.0;
      }
    }
    // d val / d u_rho = sum_ij E_ij dC_ij, dC_ij/du = C_ij sqdist_ij / rho^2.
    Matrix e = -0.5 * k_count * cinv;
    for (Index k = 0; k < k_count; ++k) {
      e.noalias() += (0.5 / alpha_for(k)) * (u_cols.col(k) * u_cols.col(k).transpose());
    }
    for (Index d = 0; d < n_length_scales; ++d) {
      const double r2 = rho[d] * rho[d];
      const double dot = (e.array() * cov->c.array() * sqdist_[d].array()).sum();
      (*grad)[h++] = dot / r2 + pr.rho_shape - pr.rho_rate * rho[d];
    }
    (*grad)[h] = -m_obs + ssr * inv_s2 - sigma * sigma / (pr.sigma_scale * pr.sigma_scale) + 1.0;
  }
  if (!grad->allFinite()) {
    grad->setZero();
    return neg_inf;
  }
  return val;
}

double log_likelihood(const Matrix& y, const ModelState& state, const SplineBasis& basis,
                      const ConstraintConfig& constraints) {
  const Index t_count = y.rows(), n = y.cols();
  if (state.b.cols() != n) throw ValidationError("log_likelihood: location count mismatch");
  Matrix beta;
  if (state.beta1.size() == n && state.beta2.size() == n) {
    beta.resize(2, n);
    beta.row(0) = state.beta1.transpose();
    beta.row(1) = state.beta2.transpose();
  } else {
    beta = eliminate_constraints(state.b, basis);
  }
  const double sigma = state.hyper.sigma;
  double val = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vector f = eval_function(beta.col(i), state.b.col(i), basis);
    const Vector fp = eval_derivative(beta.col(i), state.b.col(i), basis);
    for (Index t = 0; t < t_count; ++t) {
      if (!(t == 0 && constraints.anchor)) {
        const double r = y(t, i) - f[t];
        val += -0.5 * log_2pi - std::log(sigma) - 0.5 * r * r / (sigma * sigma);
      }
      if (constraints.monotonicity) val += log_norm_cdf(fp[t] / constraints.v);
    }
  }
  return val;
}

double log_prior(const ModelState& state, const CovMatrix& cov, const PriorConfig& priors) {
  const Index k_count = state.b.rows(), n = state.b.cols();
  double val = 0.0;
  const double logdet = cov.log_det();
  for (Index k = 0; k < k_count; ++k) {
    const Vector bk = state.b.row(k).transpose();
    const double ak = state.hyper.alpha.size() == 1 ? state.hyper.alpha[0] : state.hyper.alpha[k];
    val += -0.5 * n * (log_2pi + std::log(ak)) - 0.5 * logdet - 0.5 * bk.dot(cov.solve(bk)) / ak;
  }
  for (Index k = 0; k < state.hyper.alpha.size(); ++k) {
    val += log_half_normal(state.hyper.alpha[k], priors.alpha_scale);
  }
  for (Index d = 0; d < state.hyper.rho.size(); ++d) {
    val += log_gamma_pdf(state.hyper.rho[d], priors.rho_shape, priors.rho_rate);
  }
  val += log_half_normal(state.hyper.sigma, priors.sigma_scale);
  const double bs2 = priors.beta_scale * priors.beta_scale;
  for (Index i = 0; i < state.beta1.size(); ++i) {
    val += -0.5 * log_2pi - std::log(priors.beta_scale) - 0.5 * state.beta1[i] * state.beta1[i] / bs2;
  }
  for (Index i = 0; i < state.beta2.size(); ++i) {
    val += -0.5 * log_2pi - std::log(priors.beta_scale) - 0.5 * state.beta2[i] * state.beta2[i] / bs2;
  }
  return val;
}

}  // namespace fadegp
