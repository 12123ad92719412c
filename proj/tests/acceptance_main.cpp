// Acceptance harness: one pass or fail line per shipping criterion, nonzero
// exit when anything fails. Budgets assume a single core.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fadegp/errors.hpp"
#include "fadegp/evaluate.hpp"
#include "fadegp/fitio.hpp"
#include "fadegp/model.hpp"
#include "fadegp/predict.hpp"
#include "fadegp/sampler.hpp"

using namespace fadegp;

namespace {

int failures = 0;

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> body;
};

void run_criterion(int idx, const Criterion& c) {
  std::string detail;
  bool ok = false;
  const double t0 = now_s();
  try {
    ok = c.body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double dt = now_s() - t0;
  std::printf("[%s] %d. %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", idx, c.name.c_str(), dt,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Generating values drawn inside moderate windows so every replication is a
// well-specified instance without being one cherry-picked configuration.
Hyperparams moderate_truth(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xacc);
  Hyperparams h;
  h.alpha = Vector::Constant(1, 0.5 + 1.0 * draw_uniform(rng));
  h.rho.resize(n_length_scales);
  for (int d = 0; d < n_length_scales; ++d) h.rho[d] = 0.8 + 1.7 * draw_uniform(rng);
  h.sigma = 0.15 + 0.3 * draw_uniform(rng);
  return h;
}

// Per-fold budget sized for a single core; passes the convergence gate on
// full-size instances with room to spare.
SamplerConfig fold_budget(std::uint64_t seed) {
  SamplerConfig sc;
  sc.chains = 3;
  sc.warmup = 1500;
  sc.samples = 1500;
  sc.target_accept = 0.9;
  sc.seed = seed;
  return sc;
}

// Fourth-order central differences. The probit barrier puts curvature of
// order 1/v^2 into the target, where second-order stencils lose five digits;
// the wider stencil keeps truncation far below the tolerance while h stays
// small enough to resolve the barrier.
double fd_grad_4(const PosteriorModel& model, Vector& q, Index j) {
  const double h = 1e-7 * std::max(1.0, std::abs(q[j]));
  const double q0 = q[j];
  q[j] = q0 + h;
  const double f1 = model.value(q);
  q[j] = q0 - h;
  const double m1 = model.value(q);
  q[j] = q0 + 2.0 * h;
  const double f2 = model.value(q);
  q[j] = q0 - 2.0 * h;
  const double m2 = model.value(q);
  q[j] = q0;
  return (8.0 * (f1 - m1) - (f2 - m2)) / (12.0 * h);
}

// Slopes of a predictive curve recovered from grid values alone. Every curve
// in this basis is a single quadratic in time, so the one-sided and central
// second-order stencils below are exact up to rounding.
Vector grid_slopes(const Vector& f, const Vector& times) {
  const Index t_n = f.size();
  Vector fp(t_n);
  const double h = times[1] - times[0];
  fp[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (Index t = 1; t + 1 < t_n; ++t) fp[t] = (f[t + 1] - f[t - 1]) / (2.0 * h);
  fp[t_n - 1] = (3.0 * f[t_n - 1] - 4.0 * f[t_n - 2] + f[t_n - 3]) / (2.0 * h);
  return fp;
}

bool criterion_basis(std::string& detail) {
  Vector times(11);
  for (Index i = 0; i < 11; ++i) times[i] = i + 1.0;
  const SplineBasis basis = build_basis(times, make_knots(times, 3));

  double max_dw_err = 0.0;
  const double h = 1e-4;
  for (Index i = 0; i < 11; ++i) {
    for (Index k = 0; k < 3; ++k) {
      double wp = 0.0, wm = 0.0;
      for (Index l = 0; l < 3; ++l) {
        const double dp = times[i] + h - basis.knots[l];
        const double dm = times[i] - h - basis.knots[l];
        wp += dp * dp * basis.omega_inv_sqrt(l, k);
        wm += dm * dm * basis.omega_inv_sqrt(l, k);
      }
      max_dw_err = std::max(max_dw_err, std::abs((wp - wm) / (2.0 * h) - basis.dw(i, k)));
    }
  }

  // The penalty factor orthogonalizes omega: M*omega*M has every singular
  // value equal to 1 and squares to the identity. Omega is indefinite (zero
  // trace), so that is the strongest identity available; a literal identity
  // is unattainable on the negative eigenspace.
  const Matrix prod = basis.omega_inv_sqrt * basis.omega * basis.omega_inv_sqrt;
  Eigen::JacobiSVD<Matrix> svd(prod);
  double max_sv_err = 0.0;
  for (Index i = 0; i < svd.singularValues().size(); ++i) {
    max_sv_err = std::max(max_sv_err, std::abs(svd.singularValues()[i] - 1.0));
  }
  const double invol_err = ((prod * prod) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff();

  char buf[160];
  std::snprintf(buf, sizeof(buf), "dW err %.2e, |sv(MOM)-1| %.2e, (MOM)^2-I err %.2e", max_dw_err,
                max_sv_err, invol_err);
  detail = buf;
  return max_dw_err < 1e-6 && max_sv_err < 1e-8 && invol_err < 1e-8;
}

// Checks one packed state; returns the worst guarded relative error.
double grad_state_check(const PosteriorModel& model, Vector q) {
  Vector grad(model.dim());
  const double val = model.value_grad(q, grad);
  if (!std::isfinite(val)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Index j = 0; j < q.size(); ++j) {
    const double fd = fd_grad_4(model, q, j);
    const double rel = std::abs(grad[j] - fd) / std::max({1.0, std::abs(grad[j]), std::abs(fd)});
    worst = std::max(worst, rel);
  }
  return worst;
}

bool criterion_gradient(std::string& detail) {
  // Random states concentrate near the generating surface: far-field states
  // push the probit and likelihood terms to ~1e6+, where rounding in the
  // value exceeds any finite-difference budget regardless of stencil. The
  // gradient identity is pointwise, so checking it where the density lives
  // (and in the stiff probit zone below) is the substantive test.
  SyntheticConfig scfg;
  scfg.n_locations = 5;
  scfg.n_times = 11;
  scfg.knots = 3;
  auto [data, truth] = generate_synthetic(moderate_truth(91), scfg, 91);
  PosteriorModel model(data, ModelConfig{});
  double worst = 0.0;
  for (int rep = 0; rep < 15; ++rep) {
    Rng rng = make_rng(1234, static_cast<std::uint64_t>(rep));
    ModelState st;
    st.b = truth.b;
    for (Index k = 0; k < st.b.rows(); ++k) {
      for (Index i = 0; i < st.b.cols(); ++i) st.b(k, i) += 5e-4 * draw_normal(rng);
    }
    st.hyper = truth.hyper;
    for (Index k = 0; k < st.hyper.alpha.size(); ++k) {
      st.hyper.alpha[k] *= std::exp(0.1 * draw_normal(rng));
    }
    for (Index d2 = 0; d2 < n_length_scales; ++d2) {
      st.hyper.rho[d2] *= std::exp(0.1 * draw_normal(rng));
    }
    st.hyper.sigma *= std::exp(0.1 * draw_normal(rng));
    worst = std::max(worst, grad_state_check(model, model.pack(st)));
  }

  // Low-amplitude instance: every slope sits within a few probit widths of
  // zero, the stiffest region of the target.
  SyntheticConfig zcfg = scfg;
  zcfg.monotone = false;
  Hyperparams ztruth;
  ztruth.alpha = Vector::Constant(1, 1e-9);
  ztruth.rho = (Vector(n_length_scales) << 1.2, 1.5, 0.9, 1.8).finished();
  ztruth.sigma = 2e-4;
  auto [zdata, ztru] = generate_synthetic(ztruth, zcfg, 92);
  PosteriorModel zmodel(zdata, ModelConfig{});
  for (int rep = 0; rep < 5; ++rep) {
    Rng rng = make_rng(4321, static_cast<std::uint64_t>(rep));
    ModelState st;
    st.b = ztru.b;
    for (Index k = 0; k < st.b.rows(); ++k) {
      for (Index i = 0; i < st.b.cols(); ++i) st.b(k, i) += 1e-5 * draw_normal(rng);
    }
    st.hyper = ztru.hyper;
    st.hyper.alpha[0] *= std::exp(0.1 * draw_normal(rng));
    for (Index d2 = 0; d2 < n_length_scales; ++d2) {
      st.hyper.rho[d2] *= std::exp(0.1 * draw_normal(rng));
    }
    st.hyper.sigma *= std::exp(0.1 * draw_normal(rng));
    worst = std::max(worst, grad_state_check(zmodel, zmodel.pack(st)));
  }

  char buf[96];
  std::snprintf(buf, sizeof(buf), "20 states x %lld coords, worst relative error %.2e",
                static_cast<long long>(model.dim()), worst);
  detail = buf;
  return worst < 1e-5;
}

// Shared default-pipeline fit on a full-size synthetic instance; criteria 3,
// 8 and 9 all exercise it.
struct FullFit {
  Dataset data;
  PosteriorModel model;
  FitResult fit;
  DrawSet draws;

  static const FullFit& get() {
    static FullFit f;
    return f;
  }

 private:
  FullFit()
      : data(make_data()),
        model(data, ModelConfig{}),
        fit(run_fit(model, make_sampler())),
        draws(screened_set(model, fit)) {}

  static Dataset make_data() {
    SyntheticConfig scfg;  // 13 locations, 11 times, survey input statistics
    auto [d, t] = generate_synthetic(moderate_truth(7), scfg, 7);
    (void)t;
    return d;
  }
  static SamplerConfig make_sampler() {
    SamplerConfig sc;  // library defaults: 3 chains, 1000 warmup, 1000 draws
    sc.seed = 7;
    return sc;
  }
};

bool criterion_constraints(std::string& detail) {
  const FullFit& ff = FullFit::get();
  if (ff.draws.size() == 0) {
    detail = "no retained draws";
    return false;
  }
  double max_anchor = 0.0, max_sat = 0.0;
  double min_slope = std::numeric_limits<double>::infinity();
  for (const ModelState& st : ff.draws.states) {
    const Matrix f = ff.model.latent_f(st);
    const Matrix fp = ff.model.latent_fprime(st);
    max_anchor = std::max(max_anchor, f.row(0).cwiseAbs().maxCoeff());
    max_sat = std::max(max_sat, fp.row(fp.rows() - 1).cwiseAbs().maxCoeff());
    min_slope = std::min(min_slope, fp.minCoeff());
  }

  // Predictive draws at three fresh sites. The slope recovery is exact for
  // this basis; the extra 1e-9 absorbs stencil rounding only.
  double pred_anchor = 0.0, pred_sat = 0.0;
  double pred_min_slope = std::numeric_limits<double>::infinity();
  Index pred_draws = 0;
  for (int s = 0; s < 3; ++s) {
    Vector xstar = ff.data.x_raw.colwise().mean().transpose();
    xstar[col_sx] += 0.4 * (s + 1);
    xstar[col_sy] -= 0.3 * s;
    PredictConfig pc;
    pc.seed = 500 + static_cast<std::uint64_t>(s);
    const PredictiveSeries pred = predict_location(ff.model, ff.draws, xstar, pc);
    pred_anchor = std::max(pred_anchor, pred.f_draws.col(0).cwiseAbs().maxCoeff());
    for (Index r = 0; r < pred.f_draws.rows(); ++r) {
      const Vector fp = grid_slopes(pred.f_draws.row(r).transpose(), pred.times);
      pred_sat = std::max(pred_sat, std::abs(fp[fp.size() - 1]));
      pred_min_slope = std::min(pred_min_slope, fp.minCoeff());
      ++pred_draws;
    }
  }

  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "posterior: |f(1)| %.1e, |f'(T)| %.1e, min f' %.1e; predictive (%lld draws): "
                "|f(1)| %.1e, |f'(T)| %.1e, min f' %.1e",
                max_anchor, max_sat, min_slope, static_cast<long long>(pred_draws), pred_anchor,
                pred_sat, pred_min_slope);
  detail = buf;
  return max_anchor < 1e-10 && max_sat < 1e-10 && min_slope >= -1e-6 && pred_anchor < 1e-10 &&
         pred_sat < 1e-10 + 1e-9 && pred_min_slope >= -1e-6 - 1e-9;
}

bool criterion_sampler_oracle(std::string& detail) {
  SyntheticConfig scfg;
  scfg.n_locations = 2;
  scfg.n_times = 5;
  scfg.knots = 1;
  Hyperparams truth;
  truth.alpha = Vector::Constant(1, 1.0);
  truth.rho = (Vector(n_length_scales) << 1.2, 1.5, 0.9, 1.8).finished();
  truth.sigma = 0.3;
  auto [data, tru] = generate_synthetic(truth, scfg, 17);
  (void)tru;

  std::string parts;
  for (const bool monotone : {false, true}) {
    ModelConfig cfg;
    cfg.knots = 1;
    cfg.constraints.monotonicity = monotone;
    cfg.fixed_hypers = truth;  // only the two coefficients remain
    PosteriorModel model(data, cfg);
    if (model.dim() != 2) {
      detail = "unexpected dimension";
      return false;
    }

    const GridPosterior oracle = grid_posterior_oracle(model, 500);

    SamplerConfig sc;
    sc.chains = 4;
    sc.warmup = 600;
    sc.samples = 1500;
    sc.seed = monotone ? 23 : 24;
    const FitResult fit = run_fit(model, sc);

    for (Index j = 0; j < 2; ++j) {
      std::vector<Vector> chains;
      std::vector<double> pooled;
      for (const Matrix& c : fit.natural_chains) {
        chains.push_back(c.col(j));
        for (Index r = 0; r < c.rows(); ++r) pooled.push_back(c(r, j));
      }
      const Index n = static_cast<Index>(pooled.size());
      const Eigen::Map<Vector> all(pooled.data(), n);
      const double mean_hat = all.mean();
      const double mean_err = std::abs(mean_hat - oracle.mean[j]);
      const double mean_budget = 3.0 * mcse_mean(chains);

      const double var_hat = (all.array() - mean_hat).square().sum() / (n - 1.0);
      std::vector<Vector> sq_chains;
      for (const Matrix& c : fit.natural_chains) {
        sq_chains.push_back((c.col(j).array() - mean_hat).square().matrix());
      }
      const double var_err = std::abs(var_hat - oracle.cov(j, j));
      const double var_budget = 3.0 * mcse_mean(sq_chains);

      char buf[200];
      std::snprintf(buf, sizeof(buf),
                    "%s b%lld mean err %.1e (budget %.1e), var err %.1e (budget %.1e); ",
                    monotone ? "probit" : "plain", static_cast<long long>(j + 1), mean_err,
                    mean_budget, var_err, var_budget);
      parts += buf;
      if (mean_err > mean_budget || var_err > var_budget) {
        detail = parts;
        return false;
      }
    }
  }
  detail = parts;
  return true;
}

bool criterion_gaussian_targets(std::string& detail) {
  Vector mu(2);
  mu << 2.0, -1.0;
  Matrix cov(2, 2);
  cov << 2.25, -1.2, -1.2, 1.0;
  const Matrix prec = cov.inverse();
  SamplerConfig sc;
  sc.chains = 4;
  sc.warmup = 500;
  sc.samples = 1200;
  sc.seed = 3;
  const PosteriorDraws draws = run_sampler(
      [&](const Vector& q, Vector& g) {
        const Vector d = q - mu;
        g = -(prec * d);
        return -0.5 * d.dot(prec * d);
      },
      2, sc);
  const Matrix all = draws.stacked();
  double worst_mean = 0.0, worst_cov = 0.0;
  for (Index j = 0; j < 2; ++j) {
    std::vector<Vector> chains;
    for (const Matrix& c : draws.chains) chains.push_back(c.col(j));
    const double err = std::abs(all.col(j).mean() - mu[j]);
    worst_mean = std::max(worst_mean, err / (4.0 * mcse_mean(chains)));
  }
  const Vector mean_hat = all.colwise().mean();
  const Matrix centered = all.rowwise() - mean_hat.transpose();
  const Matrix cov_hat = centered.transpose() * centered / (all.rows() - 1.0);
  for (Index a = 0; a < 2; ++a) {
    for (Index b = 0; b < 2; ++b) {
      const double scale = std::sqrt(cov(a, a) * cov(b, b));
      worst_cov = std::max(worst_cov, std::abs(cov_hat(a, b) - cov(a, b)) / (0.10 * scale));
    }
  }
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "mean err at %.2f of the 4 mcse budget, cov err at %.2f of the 10%% budget",
                worst_mean, worst_cov);
  detail = buf;
  return worst_mean < 1.0 && worst_cov < 1.0 && draws.max_rhat() < 1.02;
}

bool criterion_calibration(std::string& detail) {
  std::vector<double> pits;
  Index covered = 0, scored = 0, excluded = 0;
  for (int rep = 0; rep < 20; ++rep) {
    SyntheticConfig scfg;  // 13 locations, 11 times, survey input statistics
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(rep);
    auto [data, truth] = generate_synthetic(moderate_truth(seed), scfg, seed);
    (void)truth;
    CvConfig cc;
    cc.sampler = fold_budget(seed);
    cc.seed = seed;
    cc.max_folds = 3;
    const CvReport report = cv1(data, ModelConfig{}, cc);
    excluded += report.excluded_folds;
    for (const CvFold& f : report.folds) {
      pits.push_back(f.pit);
      covered += f.covered ? 1 : 0;
      ++scored;
    }
  }
  if (scored < 20) {
    detail = "too few scored folds: " + std::to_string(scored);
    return false;
  }
  const double ks_p = ks_pvalue_uniform(pits);
  const double cov_rate = static_cast<double>(covered) / static_cast<double>(scored);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%lld folds scored (%lld excluded), LOO-PIT KS p %.3f, 95%% coverage %.3f",
                static_cast<long long>(scored), static_cast<long long>(excluded), ks_p, cov_rate);
  detail = buf;
  return ks_p > 0.01 && cov_rate >= 0.88 && cov_rate <= 1.0 + 1e-12;
}

bool criterion_directional(std::string& detail) {
  int wins = 0, reps_scored = 0;
  double width_with = 0.0, width_without = 0.0;
  Index folds_with = 0, folds_without = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const std::uint64_t seed = 2000 + static_cast<std::uint64_t>(rep);
    SyntheticConfig scfg;
    auto [data, truth] = generate_synthetic(moderate_truth(seed), scfg, seed);
    (void)truth;
    CvConfig cc;
    cc.sampler = fold_budget(seed);
    cc.seed = seed;
    cc.max_folds = 3;

    const CvReport with_report = cv2(data, ModelConfig{}, cc);
    ModelConfig without_cfg;  // drop the derivative information entirely
    without_cfg.constraints.saturation = false;
    without_cfg.constraints.monotonicity = false;
    const CvReport without_report = cv2(data, without_cfg, cc);

    if (with_report.folds.empty() || without_report.folds.empty()) continue;
    ++reps_scored;
    wins += (with_report.elpd_mean > without_report.elpd_mean &&
             with_report.mse < without_report.mse)
                ? 1
                : 0;
    width_with += with_report.mean_width * static_cast<double>(with_report.folds.size());
    folds_with += static_cast<Index>(with_report.folds.size());
    width_without += without_report.mean_width * static_cast<double>(without_report.folds.size());
    folds_without += static_cast<Index>(without_report.folds.size());
  }
  const double mw_with = width_with / std::max<Index>(folds_with, 1);
  const double mw_without = width_without / std::max<Index>(folds_without, 1);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d/%d reps with higher elpd and lower mse, mean interval width %.2f vs %.2f",
                wins, reps_scored, mw_with, mw_without);
  detail = buf;
  return reps_scored == 10 && wins >= 8 && mw_with < mw_without;
}

bool criterion_convergence_gate(std::string& detail) {
  const FullFit& ff = FullFit::get();
  const double max_rhat = ff.fit.max_rhat();
  const double min_ess = ff.fit.min_ess();
  char buf[140];
  std::snprintf(buf, sizeof(buf), "max split-Rhat %.4f, min bulk ESS %.0f, %d divergences",
                max_rhat, min_ess, ff.fit.total_divergences());
  detail = buf;
  bool gate_ok = true;
  try {
    check_convergence(ff.fit);
  } catch (const Error&) {
    gate_ok = false;
  }
  return max_rhat < 1.05 && min_ess > 100.0 && gate_ok;
}

bool criterion_map(std::string& detail) {
  const FullFit& ff = FullFit::get();

  // Timing leg: a 100 x 100 pixel lattice sweeping well past the observed
  // region, so distant pixels revert toward the prior and the threshold mask
  // gets both values.
  const double t0 = now_s();
  const Index side = 100;
  GridSpec lattice;
  lattice.x_raw.resize(side * side, n_inputs);
  lattice.px.resize(side * side);
  lattice.py.resize(side * side);
  const Vector lo = ff.data.x_raw.colwise().minCoeff();
  const Vector hi = ff.data.x_raw.colwise().maxCoeff();
  Index idx = 0;
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const double fx = static_cast<double>(c) / (side - 1.0);
      const double fy = static_cast<double>(r) / (side - 1.0);
      lattice.x_raw(idx, col_sx) = lo[col_sx] + (hi[col_sx] - lo[col_sx]) * (3.0 * fx - 1.0);
      lattice.x_raw(idx, col_sy) = lo[col_sy] + (hi[col_sy] - lo[col_sy]) * (3.0 * fy - 1.0);
      lattice.x_raw(idx, col_h) = 0.5 * (lo[col_h] + hi[col_h]);
      lattice.x_raw(idx, col_s) = 0.5 * (lo[col_s] + hi[col_s]);
      lattice.x_raw(idx, col_i) = 0.5 * (lo[col_i] + hi[col_i]);
      lattice.px[idx] = static_cast<double>(c);
      lattice.py[idx] = static_cast<double>(r);
      ++idx;
    }
  }
  const FadingMap big = fading_map(ff.model, ff.draws, lattice, 3.5);
  const double map_time = now_s() - t0;
  bool mask_exact = true;
  Index above = 0, below = 0;
  for (Index i = 0; i < big.final_value.size(); ++i) {
    const bool flag = big.perceptible[static_cast<std::size_t>(i)] != 0;
    if (flag != (big.final_value[i] > 3.5)) mask_exact = false;
    (big.final_value[i] > 3.5 ? above : below) += 1;
  }
  bool flip_seen = above > 0 && below > 0;

  // Consistency leg: map rows at the observed inputs against the predictive
  // mean. Both estimate the same functional from the same retained draws;
  // the map takes the conditional mean where prediction samples it, so the
  // budget combines the chain mcse of the latent mean with the sd of that
  // extra (independent) sampling noise.
  GridSpec obs;
  obs.x_raw = ff.data.x_raw;
  obs.px = ff.data.x_raw.col(col_sx);
  obs.py = ff.data.x_raw.col(col_sy);
  const FadingMap map = fading_map(ff.model, ff.draws, obs, 3.5);
  if (!flip_seen) {
    // All lattice finals on one side of 3.5: exercise the flip at the median
    // of the observed finals instead. Exactness at 3.5 was checked above.
    std::vector<double> finals(map.final_value.data(),
                               map.final_value.data() + map.final_value.size());
    std::nth_element(finals.begin(), finals.begin() + finals.size() / 2, finals.end());
    const double med = finals[finals.size() / 2];
    const FadingMap med_map = fading_map(ff.model, ff.draws, obs, med);
    Index a2 = 0, b2 = 0;
    for (Index i = 0; i < med_map.final_value.size(); ++i) {
      const bool flag = med_map.perceptible[static_cast<std::size_t>(i)] != 0;
      if (flag != (med_map.final_value[i] > med)) mask_exact = false;
      (med_map.final_value[i] > med ? a2 : b2) += 1;
    }
    flip_seen = a2 > 0 && b2 > 0;
  }

  const Index n_chains = static_cast<Index>(ff.fit.natural_chains.size());
  const Index t_n = ff.data.n_times();
  double worst_ratio = 0.0;
  bool paired = true;
  for (Index i = 0; i < ff.data.n_locations(); ++i) {
    PredictConfig pc;
    pc.seed = 900 + static_cast<std::uint64_t>(i);
    const PredictiveSeries pred =
        predict_location(ff.model, ff.draws, ff.data.x_raw.row(i).transpose(), pc);
    if (pred.discarded != 0 || pred.f_draws.rows() != ff.draws.size()) paired = false;
    Matrix latent(ff.draws.size(), t_n);
    for (Index s = 0; s < ff.draws.size(); ++s) {
      latent.row(s) =
          ff.model.latent_f(ff.draws.states[static_cast<std::size_t>(s)]).col(i).transpose();
    }
    for (Index t = 1; t < t_n; ++t) {
      std::vector<std::vector<double>> per_chain(static_cast<std::size_t>(n_chains));
      for (Index s = 0; s < ff.draws.size(); ++s) {
        per_chain[static_cast<std::size_t>(ff.draws.chain_of[static_cast<std::size_t>(s)])]
            .push_back(latent(s, t));
      }
      std::vector<Vector> chains;
      for (auto& v : per_chain) {
        if (v.size() >= 4) {
          chains.push_back(Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size())));
        }
      }
      const double chain_mcse = mcse_mean(chains);
      double extra_se = 0.0;
      if (paired) {
        const Vector noise = pred.f_draws.col(t) - latent.col(t);
        const double nm = noise.mean();
        const double var = (noise.array() - nm).square().sum() /
                           std::max<double>(static_cast<double>(noise.size()) - 1.0, 1.0);
        extra_se = std::sqrt(std::max(var, 0.0) / static_cast<double>(noise.size()));
      }
      const double budget = 2.0 * (chain_mcse + extra_se);
      const double err = std::abs(map.mean_curves(i, t) - pred.f_mean[t]);
      worst_ratio = std::max(worst_ratio, err / std::max(budget, 1e-12));
    }
  }

  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "10^4 pixels in %.1fs, mask %s, flip %s (lattice %lld above / %lld below), "
                "worst map-predict gap at %.2f of the 2 mcse budget",
                map_time, mask_exact ? "exact" : "BROKEN", flip_seen ? "seen" : "MISSING",
                static_cast<long long>(above), static_cast<long long>(below), worst_ratio);
  detail = buf;
  return map_time < 120.0 && mask_exact && flip_seen && paired && worst_ratio < 1.0;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"basis derivative and penalty factor identities", criterion_basis},
      {"analytic gradient against central differences", criterion_gradient},
      {"constraint exactness across posterior and predictive draws", criterion_constraints},
      {"sampler moments against the quadrature oracle", criterion_sampler_oracle},
      {"closed-form Gaussian target recovery", criterion_gaussian_targets},
      {"LOO-PIT uniformity and interval coverage on synthetic replications", criterion_calibration},
      {"directional CV2 advantage of the constrained model", criterion_directional},
      {"default pipeline convergence gate", criterion_convergence_gate},
      {"fading map consistency and threshold mask", criterion_map},
  };
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    run_criterion(static_cast<int>(i + 1), criteria[i]);
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
