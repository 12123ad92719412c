#include "fadegp/predict.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fadegp/errors.hpp"
#include "fadegp/rng.hpp"
#include "fadegp/textio.hpp"

namespace fadegp {

DrawSet screen_draws(const PosteriorModel& model, const std::vector<Matrix>& natural_chains) {
  DrawSet out;
  const bool mono = model.config().constraints.monotonicity;
  for (Index c = 0; c < static_cast<Index>(natural_chains.size()); ++c) {
    const Matrix& chain = natural_chains[static_cast<std::size_t>(c)];
    for (Index s = 0; s < chain.rows(); ++s) {
      ++out.total_draws;
      ModelState st = model.state_from_natural(chain.row(s).transpose());
      if (mono) {
        const Matrix fp = model.latent_fprime(st);
        if (fp.minCoeff() < slope_screen_tol) continue;
      }
      out.states.push_back(std::move(st));
      out.chain_of.push_back(c);
    }
  }
  out.retention_rate =
      out.total_draws > 0 ? static_cast<double>(out.size()) / static_cast<double>(out.total_draws)
                          : 1.0;
  return out;
}

namespace {

double empirical_quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = p * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = h - std::floor(h);
  return (1.0 - w) * v[lo] + w * v[hi];
}

struct NewSiteCurve {
  Vector f, fp;
};

// Curve at a new site from its coefficient draw, honoring the model's
// elimination mode. Free trend coefficients arrive in beta1/beta2.
NewSiteCurve curve_from_coeffs(const PosteriorModel& model, const Vector& bstar, double beta1_free,
                               double beta2_free) {
  const SplineBasis& basis = model.basis();
  double beta2, beta1;
  if (model.beta2_free()) {
    beta2 = beta2_free;
  } else {
    beta2 = -basis.dw.row(basis.n_times() - 1).dot(bstar);
  }
  if (model.beta1_free()) {
    beta1 = beta1_free;
  } else {
    beta1 = -basis.times[0] * beta2 - basis.w.row(0).dot(bstar);
  }
  NewSiteCurve out;
  Eigen::Vector2d beta(beta1, beta2);
  out.f = eval_function(beta, bstar, basis);
  out.fp = eval_derivative(beta, bstar, basis);
  return out;
}

}  // namespace

PredictiveSeries predict_location(const PosteriorModel& model, const DrawSet& draws,
                                  const Vector& xstar_raw, const PredictConfig& cfg) {
  if (xstar_raw.size() != n_inputs) {
    throw ValidationError("predict_location: expected 5 input values");
  }
  if (draws.size() == 0) throw ValidationError("predict_location: no retained draws");
  Matrix xr(1, n_inputs);
  xr.row(0) = xstar_raw.transpose();
  const Matrix xs = apply_standardization(xr, model.inputs());
  const Matrix& x_obs = model.inputs().x;
  const Index t_count = model.basis().n_times();
  const Index k_count = model.basis().n_knots();
  const bool mono = model.config().constraints.monotonicity;
  const double beta_sd = model.config().priors.beta_scale;
  const Matrix cstarstar = Matrix::Identity(1, 1);

  Rng rng = make_rng(cfg.seed, 0x70726564u);  // prediction stream

  std::vector<Vector> f_rows, y_rows;
  std::vector<double> sig_rows;
  long resamples = 0;
  Index discarded = 0;
  for (Index s = 0; s < draws.size(); ++s) {
    const ModelState& st = draws.states[s];
    const CovMatrix cov = se_ard_cov(x_obs, st.hyper.rho);
    const Matrix cstar = cross_corr(xs, x_obs, st.hyper.rho);
    // Conditional mean and variance per knot surface; the correlation part
    // is shared, only alpha differs.
    const Vector csol = cov.solve(cstar.row(0).transpose());
    const double qf = std::max(0.0, 1.0 - cstar.row(0).dot(csol));
    Vector mean_k(k_count), sd_k(k_count);
    for (Index k = 0; k < k_count; ++k) {
      mean_k[k] = csol.dot(st.b.row(k).transpose());
      sd_k[k] = std::sqrt(st.hyper.alpha_for(k) * qf);
    }

    bool kept = false;
    NewSiteCurve curve;
    for (int attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
      Vector bstar(k_count);
      for (Index k = 0; k < k_count; ++k) bstar[k] = mean_k[k] + sd_k[k] * draw_normal(rng);
      const double b1 = model.beta1_free() ? beta_sd * draw_normal(rng) : 0.0;
      const double b2 = model.beta2_free() ? beta_sd * draw_normal(rng) : 0.0;
      curve = curve_from_coeffs(model, bstar, b1, b2);
      if (!mono || curve.fp.minCoeff() >= slope_screen_tol) {
        kept = true;
        if (attempt > 0) resamples += attempt;
        break;
      }
    }
    if (!kept) {
      resamples += cfg.max_resamples;
      ++discarded;
      continue;
    }
    Vector y(t_count);
    for (Index t = 0; t < t_count; ++t) y[t] = curve.f[t] + st.hyper.sigma * draw_normal(rng);
    if (model.config().constraints.anchor) y[0] = 0.0;
    f_rows.push_back(curve.f);
    y_rows.push_back(std::move(y));
    sig_rows.push_back(st.hyper.sigma);
  }
  if (f_rows.empty()) {
    throw NumericalError("predict_location: every draw failed the slope screen");
  }

  PredictiveSeries out;
  out.times = model.basis().times;
  const Index s_kept = static_cast<Index>(f_rows.size());
  out.f_draws.resize(s_kept, t_count);
  out.y_draws.resize(s_kept, t_count);
  out.sigma_draws.resize(s_kept);
  for (Index s = 0; s < s_kept; ++s) {
    out.f_draws.row(s) = f_rows[static_cast<std::size_t>(s)].transpose();
    out.y_draws.row(s) = y_rows[static_cast<std::size_t>(s)].transpose();
    out.sigma_draws[s] = sig_rows[static_cast<std::size_t>(s)];
  }
  out.f_mean = out.f_draws.colwise().mean();
  out.y_mean = out.y_draws.colwise().mean();
  out.lower.resize(t_count);
  out.upper.resize(t_count);
  for (Index t = 0; t < t_count; ++t) {
    std::vector<double> col(out.y_draws.col(t).data(), out.y_draws.col(t).data() + s_kept);
    out.lower[t] = empirical_quantile(col, cfg.lower_prob);
    out.upper[t] = empirical_quantile(std::move(col), cfg.upper_prob);
  }
  out.resample_rate = s_kept > 0 ? static_cast<double>(resamples) / static_cast<double>(s_kept) : 0.0;
  out.discarded = discarded;
  return out;
}

GridSpec load_grid(const std::string& path) {
  CsvTable table = read_csv(path);
  const char* want[5] = {"px", "py", "H", "S", "I"};
  if (table.header.size() != 5) throw ValidationError(path + ": expected header px,py,H,S,I");
  for (int j = 0; j < 5; ++j) {
    if (table.header[j] != want[j]) {
      throw ValidationError(path + ": column " + std::to_string(j + 1) + " must be '" + want[j] + "'");
    }
  }
  const Index m = static_cast<Index>(table.rows.size());
  if (m < 1) throw ValidationError(path + ": no pixels");
  GridSpec grid;
  grid.x_raw.resize(m, n_inputs);
  grid.px.resize(m);
  grid.py.resize(m);
  for (Index i = 0; i < m; ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = path + " row " + std::to_string(i + 2);
    grid.px[i] = parse_double(row[0], ctx + " px");
    grid.py[i] = parse_double(row[1], ctx + " py");
    grid.x_raw(i, col_h) = parse_double(row[2], ctx + " H");
    grid.x_raw(i, col_s) = parse_double(row[3], ctx + " S");
    grid.x_raw(i, col_i) = parse_double(row[4], ctx + " I");
    // Pixel inputs carry the pixel's own map coordinates.
    grid.x_raw(i, col_sx) = grid.px[i];
    grid.x_raw(i, col_sy) = grid.py[i];
  }
  return grid;
}

namespace detail {

namespace {

// Per-draw solves C^{-1} B^T shared by both kernels.
std::vector<Matrix> precompute_asolves(const PosteriorModel& model, const DrawSet& draws) {
  std::vector<Matrix> a(static_cast<std::size_t>(draws.size()));
  const Matrix& x_obs = model.inputs().x;
  for (Index s = 0; s < draws.size(); ++s) {
    const ModelState& st = draws.states[s];
    const CovMatrix cov = se_ard_cov(x_obs, st.hyper.rho);
    a[static_cast<std::size_t>(s)] = cov.solve_mat(st.b.transpose());  // N x K
  }
  return a;
}

void accumulate_block(const PosteriorModel& model, const DrawSet& draws,
                      const std::vector<Matrix>& asolve, const Matrix& xstar_std, Index row0,
                      Index rows, Matrix& acc) {
  const Matrix& x_obs = model.inputs().x;
  const Matrix block = xstar_std.middleRows(row0, rows);
  for (Index s = 0; s < draws.size(); ++s) {
    const Matrix cs = detail::cross_corr_serial(block, x_obs, draws.states[s].hyper.rho);
    acc.middleRows(row0, rows).noalias() += cs * asolve[static_cast<std::size_t>(s)];
  }
}

}  // namespace

Matrix map_mean_coeffs_serial(const PosteriorModel& model, const DrawSet& draws,
                              const Matrix& xstar_std) {
  if (draws.size() == 0) throw ValidationError("fading_map: no retained draws");
  const auto asolve = precompute_asolves(model, draws);
  Matrix acc = Matrix::Zero(xstar_std.rows(), model.basis().n_knots());
  constexpr Index block = 256;
  for (Index r = 0; r < xstar_std.rows(); r += block) {
    accumulate_block(model, draws, asolve, xstar_std, r, std::min(block, xstar_std.rows() - r), acc);
  }
  return acc / static_cast<double>(draws.size());
}

Matrix map_mean_coeffs_omp(const PosteriorModel& model, const DrawSet& draws,
                           const Matrix& xstar_std) {
  if (draws.size() == 0) throw ValidationError("fading_map: no retained draws");
  const auto asolve = precompute_asolves(model, draws);
  Matrix acc = Matrix::Zero(xstar_std.rows(), model.basis().n_knots());
  constexpr Index block = 256;
  const Index n_blocks = (xstar_std.rows() + block - 1) / block;
#pragma omp parallel for schedule(dynamic, 1)
  for (Index bi = 0; bi < n_blocks; ++bi) {
    const Index r = bi * block;
    accumulate_block(model, draws, asolve, xstar_std, r, std::min(block, xstar_std.rows() - r), acc);
  }
  return acc / static_cast<double>(draws.size());
}

}  // namespace detail

FadingMap fading_map(const PosteriorModel& model, const DrawSet& draws, const GridSpec& grid,
                     double threshold) {
  const Matrix xs = apply_standardization(grid.x_raw, model.inputs());
  const Matrix mean_b =
      xs.rows() >= 512 ? detail::map_mean_coeffs_omp(model, draws, xs)
                       : detail::map_mean_coeffs_serial(model, draws, xs);

  const SplineBasis& basis = model.basis();
  const Index m = xs.rows(), t_count = basis.n_times();
  FadingMap out;
  out.grid = grid;
  out.threshold = threshold;
  out.mean_curves.resize(m, t_count);
  out.final_value.resize(m);
  out.perceptible.assign(static_cast<std::size_t>(m), 0);
  for (Index j = 0; j < m; ++j) {
    const Vector bbar = mean_b.row(j).transpose();
    // Free trend coefficients have zero predictive mean (prior-centered), so
    // the mean curve needs only the eliminated rows.
    const NewSiteCurve c = curve_from_coeffs(model, bbar, 0.0, 0.0);
    out.mean_curves.row(j) = c.f.transpose();
    out.final_value[j] = c.f[t_count - 1];
    out.perceptible[static_cast<std::size_t>(j)] = out.final_value[j] > threshold ? 1 : 0;
  }
  return out;
}

void write_pgm(const std::string& path, const FadingMap& map, double vmax) {
  const Index m = map.final_value.size();
  std::vector<double> xs(map.grid.px.data(), map.grid.px.data() + m);
  std::vector<double> ys(map.grid.py.data(), map.grid.py.data() + m);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  const Index w = static_cast<Index>(xs.size()), h = static_cast<Index>(ys.size());

  std::map<std::pair<double, double>, double> cell;
  for (Index j = 0; j < m; ++j) {
    auto key = std::make_pair(map.grid.px[j], map.grid.py[j]);
    if (!cell.emplace(key, map.final_value[j]).second) {
      throw ValidationError("write_pgm: duplicate pixel coordinates");
    }
  }
  double top = vmax > 0.0 ? vmax : (m > 0 ? map.final_value.maxCoeff() : 1.0);
  if (!(top > 0.0)) top = 1.0;

  std::ostringstream out;
  out << "P2\n";
  out << "# gray = round(255 * clamp(value, 0, " << fmt_double(top) << ") / " << fmt_double(top)
      << "), rows from py high to low\n";
  out << w << " " << h << "\n255\n";
  for (Index r = h; r-- > 0;) {
    for (Index c = 0; c < w; ++c) {
      auto it = cell.find(std::make_pair(xs[static_cast<std::size_t>(c)], ys[static_cast<std::size_t>(r)]));
      int gray = 0;
      if (it != cell.end()) {
        const double v = std::clamp(it->second, 0.0, top);
        gray = static_cast<int>(std::lround(255.0 * v / top));
      }
      out << gray << (c + 1 == w ? "" : " ");
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

void save_map_csv(const std::string& path, const FadingMap& map, const Vector& times) {
  CsvTable table;
  table.header = {"px", "py", "final", "perceptible"};
  for (Index t = 0; t < times.size(); ++t) table.header.push_back("f" + std::to_string(t + 1));
  for (Index j = 0; j < map.final_value.size(); ++j) {
    std::vector<std::string> row;
    row.push_back(fmt_double(map.grid.px[j]));
    row.push_back(fmt_double(map.grid.py[j]));
    row.push_back(fmt_double(map.final_value[j]));
    row.push_back(map.perceptible[static_cast<std::size_t>(j)] ? "1" : "0");
    for (Index t = 0; t < times.size(); ++t) row.push_back(fmt_double(map.mean_curves(j, t)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

}  // namespace fadegp
