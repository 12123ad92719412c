// Command line front end: fit, predict, map, cv, simulate, basis.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "fadegp/config.hpp"
#include "fadegp/errors.hpp"
#include "fadegp/evaluate.hpp"
#include "fadegp/fitio.hpp"
#include "fadegp/model.hpp"
#include "fadegp/predict.hpp"
#include "fadegp/rng.hpp"
#include "fadegp/textio.hpp"

namespace {

using namespace fadegp;

struct CommonOpts {
  std::string config_path;
  int threads = 0;
  bool force = false;
  // Flag overrides recorded separately so they win over the config file.
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, warmup, samples, max_treedepth;
  std::optional<double> target_accept;
  bool no_derivatives = false;
  bool unconstrained = false;
  bool soft = false;
  bool static_hmc = false;
  std::optional<int> knots;
};

void add_sampler_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "TOML-style configuration file");
  cmd->add_option("--threads", o.threads, "OpenMP thread count (0 = library default)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--chains", o.chains, "number of chains");
  cmd->add_option("--warmup", o.warmup, "warmup iterations per chain");
  cmd->add_option("--samples", o.samples, "posterior draws per chain");
  cmd->add_option("--target-accept", o.target_accept, "dual-averaging target acceptance");
  cmd->add_option("--max-treedepth", o.max_treedepth, "trajectory doubling limit");
  cmd->add_option("--knots", o.knots, "number of interior spline knots");
  cmd->add_flag("--no-derivatives", o.no_derivatives,
                "drop the saturation and monotonicity constraints");
  cmd->add_flag("--unconstrained", o.unconstrained, "drop every shape constraint");
  cmd->add_flag("--soft", o.soft, "replace exact constraints by narrow Gaussians");
  cmd->add_flag("--static-hmc", o.static_hmc, "static-length HMC instead of the adaptive sampler");
  cmd->add_flag("--force", o.force, "continue past the convergence gate");
}

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig rc;
  if (!o.config_path.empty()) rc = run_config_from(ConfigFile::parse_file(o.config_path));
  if (o.seed) rc.sampler.seed = *o.seed;
  if (o.chains) rc.sampler.chains = *o.chains;
  if (o.warmup) rc.sampler.warmup = *o.warmup;
  if (o.samples) rc.sampler.samples = *o.samples;
  if (o.target_accept) rc.sampler.target_accept = *o.target_accept;
  if (o.max_treedepth) rc.sampler.max_treedepth = *o.max_treedepth;
  if (o.knots) rc.model.knots = *o.knots;
  if (o.static_hmc) rc.sampler.nuts = false;
  if (o.no_derivatives) {
    rc.model.constraints.saturation = false;
    rc.model.constraints.monotonicity = false;
  }
  if (o.unconstrained) {
    rc.model.constraints.saturation = false;
    rc.model.constraints.monotonicity = false;
    rc.model.constraints.anchor = false;
  }
  if (o.soft) rc.model.soft_constraints = true;
  if (o.threads > 0) omp_set_num_threads(o.threads);
  return rc;
}

void print_fit_summary(const FitResult& fit) {
  std::cerr << "fit: max split-Rhat " << fit.max_rhat() << ", min bulk ESS " << fit.min_ess()
            << ", divergences " << fit.total_divergences() << "/" << fit.total_draws
            << ", retention " << fit.retention_rate << "\n";
}

int cmd_fit(const std::string& data_path, const std::string& out_dir, const CommonOpts& o) {
  const RunConfig rc = resolve_config(o);
  const Dataset data = load_dataset(data_path);
  PosteriorModel model(data, rc.model);
  const FitResult fit = run_fit(model, rc.sampler);
  save_fit(out_dir, fit, model, data_path, rc.sampler);
  print_fit_summary(fit);
  if (!o.force) check_convergence(fit, rc.cv_rhat_gate);
  return 0;
}

int cmd_predict(const std::string& fit_dir, const std::string& at_path, const std::string& out_path,
                const std::string& data_override, const CommonOpts& o) {
  const RunConfig rc = resolve_config(o);
  LoadedFit lf = load_fit(fit_dir, data_override);
  if (!o.force) check_convergence(lf.fit, rc.cv_rhat_gate);
  const DrawSet draws = screened_set(*lf.model, lf.fit);

  // New-site inputs reuse the dataset schema minus the responses.
  CsvTable table = read_csv(at_path);
  const char* want[6] = {"id", "Sx", "Sy", "H", "S", "I"};
  if (table.header.size() != 6) throw ValidationError(at_path + ": expected header id,Sx,Sy,H,S,I");
  for (int j = 0; j < 6; ++j) {
    if (table.header[j] != want[j]) {
      throw ValidationError(at_path + ": column " + std::to_string(j + 1) + " must be '" + want[j] + "'");
    }
  }
  CsvTable out;
  out.header = {"id", "time", "f_mean", "y_mean", "lower95", "upper95"};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Vector x(n_inputs);
    x[col_sx] = parse_double(row[1], at_path + " Sx");
    x[col_sy] = parse_double(row[2], at_path + " Sy");
    x[col_h] = parse_double(row[3], at_path + " H");
    x[col_s] = parse_double(row[4], at_path + " S");
    x[col_i] = parse_double(row[5], at_path + " I");
    PredictConfig pc;
    pc.seed = mix_seed(rc.sampler.seed, 0xa7000u + r);
    pc.max_resamples = rc.predict_max_resamples;
    const PredictiveSeries pred = predict_location(*lf.model, draws, x, pc);
    for (Index t = 0; t < pred.times.size(); ++t) {
      out.rows.push_back({row[0], std::to_string(t + 1), fmt_double(pred.f_mean[t]),
                          fmt_double(pred.y_mean[t]), fmt_double(pred.lower[t]),
                          fmt_double(pred.upper[t])});
    }
    if (pred.discarded > 0) {
      std::cerr << "predict: " << row[0] << ": " << pred.discarded
                << " draws discarded by the slope screen\n";
    }
  }
  write_csv(out_path, out);
  return 0;
}

int cmd_map(const std::string& fit_dir, const std::string& grid_path, const std::string& out_path,
            const std::string& pgm_path, const std::string& data_override, double threshold_flag,
            double vmax, const CommonOpts& o) {
  const RunConfig rc = resolve_config(o);
  LoadedFit lf = load_fit(fit_dir, data_override);
  if (!o.force) check_convergence(lf.fit, rc.cv_rhat_gate);
  const DrawSet draws = screened_set(*lf.model, lf.fit);
  const GridSpec grid = load_grid(grid_path);
  const double threshold = threshold_flag > 0.0 ? threshold_flag : rc.map_threshold;
  const FadingMap map = fading_map(*lf.model, draws, grid, threshold);
  save_map_csv(out_path, map, lf.model->basis().times);
  if (!pgm_path.empty()) write_pgm(pgm_path, map, vmax);
  Index n_vis = 0;
  for (char p : map.perceptible) n_vis += p;
  std::cerr << "map: " << n_vis << "/" << map.final_value.size()
            << " pixels past the perceptibility threshold " << threshold << "\n";
  return 0;
}

int cmd_cv(const std::string& data_path, const std::string& scheme, const std::string& out_path,
           const CommonOpts& o, long max_folds_flag) {
  const RunConfig rc = resolve_config(o);
  const Dataset data = load_dataset(data_path);
  CvConfig cc;
  cc.sampler = rc.sampler;
  cc.seed = rc.sampler.seed;
  cc.max_folds = max_folds_flag >= 0 ? max_folds_flag : rc.cv_max_folds;
  cc.rhat_gate = rc.cv_rhat_gate;
  CvReport report;
  if (scheme == "cv1") {
    report = cv1(data, rc.model, cc);
  } else if (scheme == "cv2") {
    report = cv2(data, rc.model, cc);
  } else {
    throw ValidationError("cv: scheme must be cv1 or cv2");
  }
  write_text_file(out_path, report.to_json());
  std::cerr << "cv: " << report.scheme << " scored " << report.folds.size() << " folds ("
            << report.excluded_folds << " excluded), elpd mean " << report.elpd_mean << ", mse "
            << report.mse << "\n";
  if (report.folds.empty()) {
    throw ConvergenceError("cv: every fold failed the convergence gate");
  }
  return 0;
}

int cmd_simulate(const std::string& out_path, const std::string& truth_out, long n, long t,
                 double alpha, double sigma, const std::string& rho_csv, const CommonOpts& o) {
  const RunConfig rc = resolve_config(o);
  Hyperparams truth;
  truth.alpha = Vector::Constant(1, alpha);
  truth.sigma = sigma;
  const auto parts = split(rho_csv, ',');
  if (parts.size() != static_cast<std::size_t>(n_length_scales)) {
    throw ValidationError("simulate: --rho needs 4 comma-separated values");
  }
  truth.rho.resize(n_length_scales);
  for (int d = 0; d < n_length_scales; ++d) {
    truth.rho[d] = parse_double(parts[static_cast<std::size_t>(d)], "simulate --rho");
  }
  SyntheticConfig sc;
  sc.n_locations = n;
  sc.n_times = t;
  sc.knots = rc.model.knots;
  sc.penalty_power = rc.model.penalty_power;
  sc.monotone = rc.model.constraints.monotonicity;
  auto [data, tru] = generate_synthetic(truth, sc, rc.sampler.seed);
  save_dataset(out_path, data);
  if (!truth_out.empty()) {
    nlohmann::json j;
    j["alpha"] = std::vector<double>(tru.hyper.alpha.data(),
                                     tru.hyper.alpha.data() + tru.hyper.alpha.size());
    j["rho"] = std::vector<double>(tru.hyper.rho.data(), tru.hyper.rho.data() + tru.hyper.rho.size());
    j["sigma"] = tru.hyper.sigma;
    j["attempts"] = tru.attempts;
    nlohmann::json b = nlohmann::json::array();
    for (Index k = 0; k < tru.b.rows(); ++k) {
      b.push_back(std::vector<double>(tru.b.row(k).data(), tru.b.row(k).data() + tru.b.cols()));
    }
    j["b"] = std::move(b);
    write_text_file(truth_out, j.dump(2) + "\n");
  }
  std::cerr << "simulate: wrote " << data.n_locations() << " series of length " << data.n_times()
            << " (" << tru.attempts << " monotone attempts)\n";
  return 0;
}

int cmd_basis_dump(long t_count, long knots, double penalty_power, const std::string& out_dir) {
  Vector times(t_count);
  for (Index i = 0; i < t_count; ++i) times[i] = static_cast<double>(i + 1);
  const SplineBasis basis =
      build_basis(times, make_knots(times, static_cast<int>(knots)), penalty_power);
  auto dump = [&](const std::string& name, const Matrix& m) {
    CsvTable table;
    for (Index j = 0; j < m.cols(); ++j) table.header.push_back(name + std::to_string(j + 1));
    for (Index i = 0; i < m.rows(); ++i) {
      std::vector<std::string> row;
      for (Index j = 0; j < m.cols(); ++j) row.push_back(fmt_double(m(i, j)));
      table.rows.push_back(std::move(row));
    }
    write_csv(out_dir + "/" + name + ".csv", table);
  };
  dump("z", basis.z);
  dump("omega", basis.omega);
  dump("omega_inv_sqrt", basis.omega_inv_sqrt);
  dump("w", basis.w);
  dump("dw", basis.dw);
  dump("knots", basis.knots.transpose());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatially correlated shape-constrained fading curves"};
  app.require_subcommand(1);

  CommonOpts fit_o, pred_o, map_o, cv_o, sim_o;
  std::string data_path, out_dir, fit_dir, at_path, out_path, grid_path, pgm_path, data_override;
  std::string scheme, truth_out, rho_csv = "1.1,20.0,0.8,8.9";
  long sim_n = 13, sim_t = 11, basis_t = 11, basis_k = 3, max_folds_flag = -1;
  double sim_alpha = 1.0, sim_sigma = 0.3, map_vmax = 0.0, threshold_flag = 0.0;
  double basis_power = 2.0;

  auto* fit = app.add_subcommand("fit", "sample the posterior for a dataset");
  fit->add_option("--data", data_path, "input curves CSV")->required();
  fit->add_option("--out", out_dir, "output directory")->required();
  add_sampler_flags(fit, fit_o);

  auto* predict = app.add_subcommand("predict", "complete curves at new locations");
  predict->add_option("--fit", fit_dir, "fit output directory")->required();
  predict->add_option("--at", at_path, "CSV of new locations (id,Sx,Sy,H,S,I)")->required();
  predict->add_option("--out", out_path, "output CSV")->required();
  predict->add_option("--data", data_override, "override the recorded data file path");
  add_sampler_flags(predict, pred_o);

  auto* mapcmd = app.add_subcommand("map", "posterior mean fading map over a pixel grid");
  mapcmd->add_option("--fit", fit_dir, "fit output directory")->required();
  mapcmd->add_option("--grid", grid_path, "pixel grid CSV (px,py,H,S,I)")->required();
  mapcmd->add_option("--out", out_path, "output CSV")->required();
  mapcmd->add_option("--pgm", pgm_path, "also write an ASCII PGM image");
  mapcmd->add_option("--data", data_override, "override the recorded data file path");
  mapcmd->add_option("--threshold", threshold_flag, "perceptibility threshold");
  mapcmd->add_option("--vmax", map_vmax, "gray-scale saturation value");
  add_sampler_flags(mapcmd, map_o);

  auto* cv = app.add_subcommand("cv", "cross-validated predictive scores");
  cv->add_option("--data", data_path, "input curves CSV")->required();
  cv->add_option("--scheme", scheme, "cv1 (observations) or cv2 (locations)")->required();
  cv->add_option("--out", out_path, "report JSON path")->required();
  cv->add_option("--max-folds", max_folds_flag, "seeded fold subsample (-1: config/all)");
  add_sampler_flags(cv, cv_o);

  auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset from the model");
  sim->add_option("--out", out_path, "output curves CSV")->required();
  sim->add_option("--truth-out", truth_out, "also record the generating state as JSON");
  sim->add_option("--n", sim_n, "number of locations");
  sim->add_option("--times", sim_t, "number of time points");
  sim->add_option("--alpha", sim_alpha, "GP scale");
  sim->add_option("--sigma", sim_sigma, "noise sd");
  sim->add_option("--rho", rho_csv, "4 length scales, comma separated");
  add_sampler_flags(sim, sim_o);

  auto* basis = app.add_subcommand("basis", "spline basis utilities");
  auto* basis_dump = basis->add_subcommand("dump", "write the basis matrices as CSV");
  basis_dump->add_option("--times", basis_t, "number of time points");
  basis_dump->add_option("--knots", basis_k, "number of interior knots");
  basis_dump->add_option("--penalty-power", basis_power, "penalty distance exponent");
  basis_dump->add_option("--out", out_dir, "output directory")->required();
  basis->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(data_path, out_dir, fit_o);
    if (predict->parsed()) return cmd_predict(fit_dir, at_path, out_path, data_override, pred_o);
    if (mapcmd->parsed()) {
      return cmd_map(fit_dir, grid_path, out_path, pgm_path, data_override, threshold_flag,
                     map_vmax, map_o);
    }
    if (cv->parsed()) return cmd_cv(data_path, scheme, out_path, cv_o, max_folds_flag);
    if (sim->parsed()) {
      return cmd_simulate(out_path, truth_out, sim_n, sim_t, sim_alpha, sim_sigma, rho_csv, sim_o);
    }
    if (basis->parsed()) return cmd_basis_dump(basis_t, basis_k, basis_power, out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
