#include "fadegp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "fadegp/errors.hpp"
#include "fadegp/normal.hpp"
#include "fadegp/textio.hpp"

namespace fadegp {

namespace {

constexpr double log_2pi = 1.8378770664093454836;

double log_normal_pdf(double y, double mu, double sd) {
  const double z = (y - mu) / sd;
  return -0.5 * log_2pi - std::log(sd) - 0.5 * z * z;
}

double log_mean_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

double quantile_sorted(const std::vector<double>& v, double p) {
  const double h = p * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = h - std::floor(h);
  return (1.0 - w) * v[lo] + w * v[hi];
}

DrawSet screened_draws_of(const PosteriorModel& model, const PosteriorDraws& draws) {
  std::vector<Matrix> natural;
  natural.reserve(draws.chains.size());
  for (const auto& chain : draws.chains) {
    Matrix nat(chain.rows(), chain.cols());
    for (Index s = 0; s < chain.rows(); ++s) {
      nat.row(s) = model.to_natural(chain.row(s).transpose()).transpose();
    }
    natural.push_back(std::move(nat));
  }
  return screen_draws(model, natural);
}

}  // namespace

std::pair<Dataset, SyntheticTruth> generate_synthetic(const Hyperparams& truth,
                                                      const SyntheticConfig& cfg,
                                                      std::uint64_t seed) {
  if (cfg.n_locations < 2) throw ValidationError("generate_synthetic: need at least 2 locations");
  if (cfg.n_times < 3) throw ValidationError("generate_synthetic: need at least 3 times");
  Rng rng = make_rng(seed, 0x73796eu);

  Dataset data;
  const Index n = cfg.n_locations, t_count = cfg.n_times;
  data.times.resize(t_count);
  for (Index t = 0; t < t_count; ++t) data.times[t] = static_cast<double>(t + 1);
  data.x_raw.resize(n, n_inputs);
  for (Index i = 0; i < n; ++i) {
    for (int j = 0; j < n_inputs; ++j) {
      data.x_raw(i, j) = cfg.inputs.mean[j] + cfg.inputs.sd[j] * draw_normal(rng);
    }
  }
  data.ids.reserve(n);
  for (Index i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%03d", static_cast<int>(i + 1));
    data.ids.emplace_back(buf);
  }

  const SplineBasis basis =
      build_basis(data.times, make_knots(data.times, cfg.knots), cfg.penalty_power);
  truth.validate(basis.n_knots());
  const StandardizedInputs std_in = standardize_inputs(data.x_raw);
  const CovMatrix cov = se_ard_cov(std_in.x, truth.rho);

  SyntheticTruth out;
  out.hyper = truth;
  const Index k_count = basis.n_knots();
  out.b.resize(k_count, n);
  int attempt = 1;
  for (;; ++attempt) {
    if (attempt > cfg.max_attempts) {
      throw NumericalError(
          "generate_synthetic: no monotone surface after " + std::to_string(cfg.max_attempts) +
          " attempts; lower alpha or raise the length scales");
    }
    for (Index k = 0; k < k_count; ++k) {
      Vector z(n);
      for (Index i = 0; i < n; ++i) z[i] = draw_normal(rng);
      const Vector lz = cov.chol_l.triangularView<Eigen::Lower>() * z;
      out.b.row(k) = std::sqrt(truth.alpha_for(k)) * lz.transpose();
    }
    out.beta = eliminate_constraints(out.b, basis);
    out.f = basis.h * out.beta + basis.w * out.b;
    if (!cfg.monotone) break;
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) {
      ok = eval_derivative(out.beta.col(i), out.b.col(i), basis).minCoeff() >= 0.0;
    }
    if (ok) break;
  }
  out.attempts = attempt;

  data.y.resize(t_count, n);
  for (Index i = 0; i < n; ++i) {
    data.y(0, i) = 0.0;  // the anchor observation is recorded exactly
    for (Index t = 1; t < t_count; ++t) {
      data.y(t, i) = out.f(t, i) + truth.sigma * draw_normal(rng);
    }
  }
  data.validate();
  return {std::move(data), std::move(out)};
}

void CvReport::finalize() {
  const Index m = static_cast<Index>(folds.size());
  elpd_mean = elpd_sum = mse = mean_width = coverage = 0.0;
  if (m == 0) return;
  for (const auto& f : folds) {
    elpd_sum += f.elpd;
    mse += f.sq_err;
    mean_width += f.width;
    coverage += f.covered ? 1.0 : 0.0;
  }
  elpd_mean = elpd_sum / static_cast<double>(m);
  mse /= static_cast<double>(m);
  mean_width /= static_cast<double>(m);
  coverage /= static_cast<double>(m);
}

std::string CvReport::to_json() const {
  nlohmann::json j;
  j["scheme"] = scheme;
  j["with_derivatives"] = with_derivatives;
  j["requested_folds"] = requested_folds;
  j["scored_folds"] = folds.size();
  j["excluded_folds"] = excluded_folds;
  j["elpd_mean"] = elpd_mean;
  j["elpd_sum"] = elpd_sum;
  j["mse"] = mse;
  j["mean_interval_width"] = mean_width;
  j["coverage95"] = coverage;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json e;
    e["id"] = f.id;
    if (f.t >= 0) e["time"] = f.t + 1;
    e["converged"] = f.converged;
    e["max_rhat"] = f.max_rhat;
    e["elpd"] = f.elpd;
    e["sq_err"] = f.sq_err;
    e["pit"] = f.pit;
    e["width"] = f.width;
    e["covered"] = f.covered;
    arr.push_back(std::move(e));
  }
  j["folds"] = std::move(arr);
  return j.dump(2) + "\n";
}

namespace {

struct FoldOutcome {
  CvFold fold;
  bool converged = false;
};

// Seeded subsample of fold indices when max_folds trims the schedule.
std::vector<Index> select_folds(Index total, Index max_folds, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (max_folds > 0 && max_folds < total) {
    Rng rng = make_rng(seed, 0xf01d5u);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(max_folds));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

PosteriorDraws fit_fold(PosteriorModel& model, const CvConfig& cfg, std::uint64_t stream) {
  SamplerConfig sc = cfg.sampler;
  sc.seed = mix_seed(cfg.seed, stream);
  sc.parallel_chains = false;  // folds own the thread pool
  TargetFn target = [&model](const Vector& q, Vector& g) { return model.value_grad(q, g); };
  InitFn init = [&model](Rng& r) { return model.initial_point(r); };
  return run_sampler(target, model.dim(), sc, init);
}

}  // namespace

CvReport cv1(const Dataset& data, const ModelConfig& mc, const CvConfig& cfg) {
  data.validate();
  const Index t_count = data.n_times(), n = data.n_locations();
  struct Cell { Index t, i; };
  std::vector<Cell> cells;
  for (Index i = 0; i < n; ++i) {
    for (Index t = 1; t < t_count; ++t) cells.push_back({t, i});
  }
  const auto chosen = select_folds(static_cast<Index>(cells.size()), cfg.max_folds, cfg.seed);
  const Index m = static_cast<Index>(chosen.size());

  std::vector<FoldOutcome> results(static_cast<std::size_t>(m));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel_folds)
  for (Index f = 0; f < m; ++f) {
    try {
      const Cell cell = cells[static_cast<std::size_t>(chosen[static_cast<std::size_t>(f)])];
      PosteriorModel model(data, mc);
      model.hold_out(cell.t, cell.i);
      PosteriorDraws draws = fit_fold(model, cfg, 1000 + static_cast<std::uint64_t>(f));

      FoldOutcome& out = results[static_cast<std::size_t>(f)];
      out.fold.t = cell.t;
      out.fold.loc = cell.i;
      out.fold.id = data.ids[static_cast<std::size_t>(cell.i)] + "@t" + std::to_string(cell.t + 1);
      out.fold.max_rhat = draws.max_rhat();
      out.fold.converged = std::isfinite(out.fold.max_rhat) && out.fold.max_rhat < cfg.rhat_gate;
      out.converged = out.fold.converged;
      if (!out.converged) continue;

      DrawSet ds = screened_draws_of(model, draws);
      if (ds.size() == 0) { out.converged = out.fold.converged = false; continue; }
      const double y_true = data.y(cell.t, cell.i);
      Rng rng = make_rng(cfg.seed, 0x9177u + static_cast<std::uint64_t>(f));
      std::vector<double> logp, reps;
      logp.reserve(static_cast<std::size_t>(ds.size()));
      reps.reserve(static_cast<std::size_t>(ds.size()));
      double fsum = 0.0;
      Index below = 0;
      for (const ModelState& st : ds.states) {
        const double fval = model.latent_f(st)(cell.t, cell.i);
        fsum += fval;
        logp.push_back(log_normal_pdf(y_true, fval, st.hyper.sigma));
        const double rep = fval + st.hyper.sigma * draw_normal(rng);
        reps.push_back(rep);
        if (rep <= y_true) ++below;
      }
      out.fold.elpd = log_mean_exp(logp);
      const double fmean = fsum / static_cast<double>(ds.size());
      out.fold.sq_err = (y_true - fmean) * (y_true - fmean);
      out.fold.pit = static_cast<double>(below) / static_cast<double>(ds.size());
      std::sort(reps.begin(), reps.end());
      const double lo = quantile_sorted(reps, 0.025), hi = quantile_sorted(reps, 0.975);
      out.fold.width = hi - lo;
      out.fold.covered = y_true >= lo && y_true <= hi;
    } catch (const ConvergenceError&) {
      results[static_cast<std::size_t>(f)].converged = false;
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CvReport report;
  report.scheme = "cv1";
  report.with_derivatives = mc.constraints.saturation;
  report.requested_folds = m;
  for (auto& r : results) {
    if (r.converged) {
      report.folds.push_back(std::move(r.fold));
    } else {
      ++report.excluded_folds;
    }
  }
  report.finalize();
  return report;
}

CvReport cv2(const Dataset& data, const ModelConfig& mc, const CvConfig& cfg) {
  data.validate();
  const Index n = data.n_locations();
  if (n < 3) throw ValidationError("cv2: need at least 3 locations");
  const auto chosen = select_folds(n, cfg.max_folds, cfg.seed);
  const Index m = static_cast<Index>(chosen.size());

  std::vector<FoldOutcome> results(static_cast<std::size_t>(m));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel_folds)
  for (Index f = 0; f < m; ++f) {
    try {
      const Index loc = chosen[static_cast<std::size_t>(f)];
      // Full refit on the reduced data, standardization recomputed inside.
      PosteriorModel model(data.without_location(loc), mc);
      PosteriorDraws draws = fit_fold(model, cfg, 2000 + static_cast<std::uint64_t>(f));

      FoldOutcome& out = results[static_cast<std::size_t>(f)];
      out.fold.loc = loc;
      out.fold.id = data.ids[static_cast<std::size_t>(loc)];
      out.fold.max_rhat = draws.max_rhat();
      out.fold.converged = std::isfinite(out.fold.max_rhat) && out.fold.max_rhat < cfg.rhat_gate;
      out.converged = out.fold.converged;
      if (!out.converged) continue;

      DrawSet ds = screened_draws_of(model, draws);
      if (ds.size() == 0) { out.converged = out.fold.converged = false; continue; }
      PredictConfig pc;
      pc.seed = mix_seed(cfg.seed, 0xc2000u + static_cast<std::uint64_t>(f));
      const PredictiveSeries pred =
          predict_location(model, ds, data.x_raw.row(loc).transpose(), pc);

      const Index t_count = data.n_times();
      const Index s_kept = pred.f_draws.rows();
      double elpd = 0.0, mse = 0.0, width = 0.0;
      for (Index t = 1; t < t_count; ++t) {
        const double y_true = data.y(t, loc);
        std::vector<double> logp(static_cast<std::size_t>(s_kept));
        for (Index s = 0; s < s_kept; ++s) {
          logp[static_cast<std::size_t>(s)] =
              log_normal_pdf(y_true, pred.f_draws(s, t), pred.sigma_draws[s]);
        }
        elpd += log_mean_exp(logp);
        const double e = y_true - pred.f_mean[t];
        mse += e * e;
        width += pred.upper[t] - pred.lower[t];
      }
      out.fold.elpd = elpd;
      out.fold.sq_err = mse / static_cast<double>(t_count - 1);
      out.fold.width = width / static_cast<double>(t_count - 1);
      const Index t_last = t_count - 1;
      const double y_last = data.y(t_last, loc);
      Index below = 0;
      for (Index s = 0; s < s_kept; ++s) {
        if (pred.y_draws(s, t_last) <= y_last) ++below;
      }
      out.fold.pit = static_cast<double>(below) / static_cast<double>(s_kept);
      out.fold.covered = y_last >= pred.lower[t_last] && y_last <= pred.upper[t_last];
    } catch (const ConvergenceError&) {
      results[static_cast<std::size_t>(f)].converged = false;
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CvReport report;
  report.scheme = "cv2";
  report.with_derivatives = mc.constraints.saturation;
  report.requested_folds = m;
  for (auto& r : results) {
    if (r.converged) {
      report.folds.push_back(std::move(r.fold));
    } else {
      ++report.excluded_folds;
    }
  }
  report.finalize();
  return report;
}

namespace {

Matrix fd_hessian(const PosteriorModel& model, const Vector& q) {
  const Index dim = q.size();
  Matrix h(dim, dim);
  Vector gp(dim), gm(dim), qt = q;
  for (Index j = 0; j < dim; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(q[j]));
    qt[j] = q[j] + step;
    model.value_grad(qt, gp);
    qt[j] = q[j] - step;
    model.value_grad(qt, gm);
    qt[j] = q[j];
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

// Newton ascent with halving line search; these posteriors are smooth and at
// most two-dimensional, so a handful of steps reaches the mode.
Vector find_mode(const PosteriorModel& model) {
  const Index dim = model.dim();
  Vector q = Vector::Zero(dim), grad(dim);
  double val = model.value_grad(q, grad);
  if (!std::isfinite(val)) {
    throw NumericalError("grid_posterior_oracle: zero state has vanishing density");
  }
  for (int iter = 0; iter < 200; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, std::abs(val))) break;
    Vector dir;
    const Eigen::LLT<Matrix> llt(Matrix(-fd_hessian(model, q)));
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(grad);
    } else {
      dir = grad / std::max(1.0, grad.norm());
    }
    bool moved = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Vector qn = q + t * dir;
      Vector gn(dim);
      const double vn = model.value_grad(qn, gn);
      if (std::isfinite(vn) && vn > val) {
        q = qn;
        val = vn;
        grad = gn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return q;
}

}  // namespace

GridPosterior grid_posterior_oracle(const PosteriorModel& model, Index points_per_dim,
                                    double half_width) {
  const Index dim = model.dim();
  if (dim > 2) {
    throw ValidationError("grid_posterior_oracle: refusing dimensions above 2");
  }
  if (points_per_dim < 10) throw ValidationError("grid_posterior_oracle: grid too coarse");

  // Center the box on the mode and size it from the local curvature; a fixed
  // prior-scale box cannot resolve likelihood-dominated posteriors.
  const Vector mode = find_mode(model);
  Vector hw(dim);
  if (half_width > 0.0) {
    hw.setConstant(half_width);
  } else {
    double prior_sd = 1.0;
    if (model.config().fixed_hypers) {
      prior_sd = std::sqrt(model.config().fixed_hypers->alpha.maxCoeff());
    }
    const Matrix curv = fd_hessian(model, mode);
    Matrix lap = Matrix::Zero(dim, dim);
    const Eigen::LLT<Matrix> llt(Matrix(-curv));
    if (llt.info() == Eigen::Success) {
      lap = llt.solve(Matrix::Identity(dim, dim));
    }
    for (Index j = 0; j < dim; ++j) {
      double sd = lap(j, j) > 0.0 ? std::sqrt(lap(j, j)) : prior_sd;
      if (!std::isfinite(sd) || sd <= 0.0) sd = prior_sd;
      hw[j] = 10.0 * sd + 1e-3;
    }
  }
  Vector step(dim);
  for (Index j = 0; j < dim; ++j) step[j] = 2.0 * hw[j] / static_cast<double>(points_per_dim);

  const Index total = dim == 1 ? points_per_dim : points_per_dim * points_per_dim;
  std::vector<double> logv(static_cast<std::size_t>(total));
  std::vector<Vector> pts(static_cast<std::size_t>(total));
  Vector q(dim);
  Index idx = 0;
  for (Index a = 0; a < points_per_dim; ++a) {
    q[0] = mode[0] - hw[0] + (static_cast<double>(a) + 0.5) * step[0];
    if (dim == 1) {
      logv[static_cast<std::size_t>(idx)] = model.value(q);
      pts[static_cast<std::size_t>(idx)] = q;
      ++idx;
    } else {
      for (Index b = 0; b < points_per_dim; ++b) {
        q[1] = mode[1] - hw[1] + (static_cast<double>(b) + 0.5) * step[1];
        logv[static_cast<std::size_t>(idx)] = model.value(q);
        pts[static_cast<std::size_t>(idx)] = q;
        ++idx;
      }
    }
  }
  const double vmax = *std::max_element(logv.begin(), logv.end());
  if (!std::isfinite(vmax)) throw NumericalError("grid_posterior_oracle: density vanished everywhere");
  double mass = 0.0;
  Vector mean = Vector::Zero(dim);
  Matrix second = Matrix::Zero(dim, dim);
  for (Index i = 0; i < total; ++i) {
    const double w = std::exp(logv[static_cast<std::size_t>(i)] - vmax);
    mass += w;
    mean += w * pts[static_cast<std::size_t>(i)];
    second += w * pts[static_cast<std::size_t>(i)] * pts[static_cast<std::size_t>(i)].transpose();
  }
  GridPosterior out;
  out.mean = mean / mass;
  out.cov = second / mass - out.mean * out.mean.transpose();
  double log_steps = 0.0;
  for (Index j = 0; j < dim; ++j) log_steps += std::log(step[j]);
  out.log_norm = vmax + std::log(mass) + log_steps;
  return out;
}

double ks_statistic_uniform(std::vector<double> values) {
  if (values.empty()) throw ValidationError("ks test: no values");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("ks test: values must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = values[i];
    d = std::max(d, u - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - u);
  }
  return d;
}

double ks_pvalue_uniform(std::vector<double> values) {
  const double d = ks_statistic_uniform(values);
  const double n = static_cast<double>(values.size());
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace fadegp
