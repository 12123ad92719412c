#include "fadegp/fitio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "fadegp/errors.hpp"
#include "fadegp/textio.hpp"

namespace fadegp {

namespace {

using nlohmann::json;

json hyper_to_json(const Hyperparams& h) {
  json j;
  j["alpha"] = std::vector<double>(h.alpha.data(), h.alpha.data() + h.alpha.size());
  j["rho"] = std::vector<double>(h.rho.data(), h.rho.data() + h.rho.size());
  j["sigma"] = h.sigma;
  return j;
}

Hyperparams hyper_from_json(const json& j) {
  Hyperparams h;
  const auto a = j.at("alpha").get<std::vector<double>>();
  const auto r = j.at("rho").get<std::vector<double>>();
  h.alpha = Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size()));
  h.rho = Eigen::Map<const Vector>(r.data(), static_cast<Index>(r.size()));
  h.sigma = j.at("sigma").get<double>();
  return h;
}

json model_to_json(const ModelConfig& mc) {
  json j;
  j["knots"] = mc.knots;
  j["penalty_power"] = mc.penalty_power;
  j["per_knot_alpha"] = mc.per_knot_alpha;
  j["soft_constraints"] = mc.soft_constraints;
  j["sigma_eps"] = mc.sigma_eps;
  j["center_inputs"] = mc.center_inputs;
  j["constraints"] = {{"anchor", mc.constraints.anchor},
                      {"saturation", mc.constraints.saturation},
                      {"monotonicity", mc.constraints.monotonicity},
                      {"v", mc.constraints.v}};
  j["priors"] = {{"alpha_scale", mc.priors.alpha_scale},
                 {"sigma_scale", mc.priors.sigma_scale},
                 {"rho_shape", mc.priors.rho_shape},
                 {"rho_rate", mc.priors.rho_rate},
                 {"beta_scale", mc.priors.beta_scale}};
  if (mc.fixed_hypers) j["fixed_hypers"] = hyper_to_json(*mc.fixed_hypers);
  return j;
}

ModelConfig model_from_json(const json& j) {
  ModelConfig mc;
  mc.knots = j.at("knots").get<int>();
  mc.penalty_power = j.at("penalty_power").get<double>();
  mc.per_knot_alpha = j.at("per_knot_alpha").get<bool>();
  mc.soft_constraints = j.at("soft_constraints").get<bool>();
  mc.sigma_eps = j.at("sigma_eps").get<double>();
  mc.center_inputs = j.at("center_inputs").get<bool>();
  const json& c = j.at("constraints");
  mc.constraints.anchor = c.at("anchor").get<bool>();
  mc.constraints.saturation = c.at("saturation").get<bool>();
  mc.constraints.monotonicity = c.at("monotonicity").get<bool>();
  mc.constraints.v = c.at("v").get<double>();
  const json& p = j.at("priors");
  mc.priors.alpha_scale = p.at("alpha_scale").get<double>();
  mc.priors.sigma_scale = p.at("sigma_scale").get<double>();
  mc.priors.rho_shape = p.at("rho_shape").get<double>();
  mc.priors.rho_rate = p.at("rho_rate").get<double>();
  mc.priors.beta_scale = p.at("beta_scale").get<double>();
  if (j.contains("fixed_hypers")) mc.fixed_hypers = hyper_from_json(j.at("fixed_hypers"));
  return mc;
}

json sampler_to_json(const SamplerConfig& sc) {
  json j;
  j["chains"] = sc.chains;
  j["warmup"] = sc.warmup;
  j["samples"] = sc.samples;
  j["target_accept"] = sc.target_accept;
  j["max_treedepth"] = sc.max_treedepth;
  j["seed"] = sc.seed;
  j["nuts"] = sc.nuts;
  j["static_steps"] = sc.static_steps;
  j["dense_metric"] = sc.dense_metric;
  return j;
}

}  // namespace

double FitResult::max_rhat() const { return rhat.size() ? rhat.maxCoeff() : 0.0; }

double FitResult::min_ess() const { return ess.size() ? ess.minCoeff() : 0.0; }

int FitResult::total_divergences() const {
  int n = 0;
  for (const auto& s : stats) n += s.divergences;
  return n;
}

double FitResult::divergence_rate() const {
  return total_draws > 0 ? static_cast<double>(total_divergences()) / total_draws : 0.0;
}

FitResult run_fit(const PosteriorModel& model, const SamplerConfig& sc) {
  TargetFn target = [&model](const Vector& q, Vector& g) { return model.value_grad(q, g); };
  InitFn init = [&model](Rng& r) { return model.initial_point(r); };
  PosteriorDraws draws = run_sampler(target, model.dim(), sc, init);

  FitResult fit;
  fit.param_names = model.param_names();
  fit.rhat = draws.rhat;
  fit.ess = draws.ess;
  fit.stats = draws.stats;
  fit.natural_chains.reserve(draws.chains.size());
  for (const auto& chain : draws.chains) {
    Matrix nat(chain.rows(), chain.cols());
    for (Index s = 0; s < chain.rows(); ++s) {
      nat.row(s) = model.to_natural(chain.row(s).transpose()).transpose();
    }
    fit.natural_chains.push_back(std::move(nat));
  }
  const DrawSet ds = screen_draws(model, fit.natural_chains);
  fit.total_draws = ds.total_draws;
  fit.retained_draws = ds.size();
  fit.retention_rate = ds.retention_rate;
  return fit;
}

void check_convergence(const FitResult& fit, double rhat_gate, double max_divergence_rate) {
  std::ostringstream bad;
  int count = 0;
  for (Index j = 0; j < fit.rhat.size(); ++j) {
    if (!(fit.rhat[j] < rhat_gate)) {
      if (count < 5) {
        bad << (count ? ", " : "") << fit.param_names[static_cast<std::size_t>(j)] << " ("
            << fit.rhat[j] << ")";
      }
      ++count;
    }
  }
  if (count > 0) {
    throw ConvergenceError("convergence gate: " + std::to_string(count) +
                           " parameters with split-Rhat >= " + std::to_string(rhat_gate) + ": " +
                           bad.str());
  }
  if (fit.divergence_rate() > max_divergence_rate) {
    throw ConvergenceError("convergence gate: divergence rate " +
                           std::to_string(fit.divergence_rate()) + " exceeds " +
                           std::to_string(max_divergence_rate));
  }
}

DrawSet screened_set(const PosteriorModel& model, const FitResult& fit) {
  return screen_draws(model, fit.natural_chains);
}

void save_fit(const std::string& dir, const FitResult& fit, const PosteriorModel& model,
              const std::string& data_file, const SamplerConfig& sc) {
  std::filesystem::create_directories(dir);

  json manifest;
  manifest["format"] = "fadegp-fit/1";
  manifest["data_file"] = data_file;
  manifest["model"] = model_to_json(model.config());
  manifest["sampler"] = sampler_to_json(sc);
  manifest["chains"] = fit.natural_chains.size();
  manifest["samples"] = fit.natural_chains.empty() ? 0 : fit.natural_chains.front().rows();
  json diag;
  diag["max_rhat"] = fit.max_rhat();
  diag["min_ess"] = fit.min_ess();
  diag["divergences"] = fit.total_divergences();
  diag["divergence_rate"] = fit.divergence_rate();
  diag["total_draws"] = fit.total_draws;
  diag["retained_draws"] = fit.retained_draws;
  diag["retention_rate"] = fit.retention_rate;
  json per_chain = json::array();
  for (const auto& s : fit.stats) {
    per_chain.push_back({{"mean_accept", s.mean_accept},
                         {"divergences", s.divergences},
                         {"max_depth_hits", s.max_depth_hits},
                         {"step_size", s.step_size}});
  }
  diag["chains"] = std::move(per_chain);
  manifest["diagnostics"] = std::move(diag);
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");

  for (std::size_t c = 0; c < fit.natural_chains.size(); ++c) {
    const Matrix& chain = fit.natural_chains[c];
    CsvTable table;
    table.header = fit.param_names;
    table.rows.reserve(static_cast<std::size_t>(chain.rows()));
    for (Index s = 0; s < chain.rows(); ++s) {
      std::vector<std::string> row;
      row.reserve(static_cast<std::size_t>(chain.cols()));
      for (Index j = 0; j < chain.cols(); ++j) row.push_back(fmt_double(chain(s, j)));
      table.rows.push_back(std::move(row));
    }
    write_csv(dir + "/draws_chain" + std::to_string(c + 1) + ".csv", table);
  }

  // Per-parameter summary on the natural scale.
  CsvTable diag_table;
  diag_table.header = {"param", "mean", "sd", "rhat", "ess", "mcse"};
  const Index p = fit.rhat.size();
  for (Index j = 0; j < p; ++j) {
    std::vector<Vector> per_chain_draws;
    for (const auto& chain : fit.natural_chains) per_chain_draws.push_back(chain.col(j));
    Index total = 0;
    double mean = 0.0;
    for (const auto& v : per_chain_draws) {
      total += v.size();
      mean += v.sum();
    }
    mean /= static_cast<double>(total);
    double ss = 0.0;
    for (const auto& v : per_chain_draws) ss += (v.array() - mean).square().sum();
    const double sd = total > 1 ? std::sqrt(ss / static_cast<double>(total - 1)) : 0.0;
    diag_table.rows.push_back({fit.param_names[static_cast<std::size_t>(j)], fmt_double(mean),
                               fmt_double(sd), fmt_double(fit.rhat[j]), fmt_double(fit.ess[j]),
                               fmt_double(mcse_mean(per_chain_draws))});
  }
  write_csv(dir + "/diagnostics.csv", diag_table);
}

LoadedFit load_fit(const std::string& dir, const std::string& data_override) {
  const std::string manifest_path = dir + "/manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  if (manifest.value("format", "") != "fadegp-fit/1") {
    throw ValidationError(manifest_path + ": not a fit directory (bad format tag)");
  }

  LoadedFit out;
  try {
    out.data_file = data_override.empty() ? manifest.at("data_file").get<std::string>()
                                          : data_override;
    const ModelConfig mc = model_from_json(manifest.at("model"));
    out.model = std::make_shared<PosteriorModel>(load_dataset(out.data_file), mc);

    const auto n_chains = manifest.at("chains").get<std::size_t>();
    out.fit.param_names = out.model->param_names();
    for (std::size_t c = 0; c < n_chains; ++c) {
      const std::string path = dir + "/draws_chain" + std::to_string(c + 1) + ".csv";
      CsvTable table = read_csv(path);
      if (table.header != out.fit.param_names) {
        throw ValidationError(path + ": parameter columns do not match the model");
      }
      Matrix chain(static_cast<Index>(table.rows.size()), out.model->dim());
      for (std::size_t s = 0; s < table.rows.size(); ++s) {
        for (Index j = 0; j < out.model->dim(); ++j) {
          chain(static_cast<Index>(s), j) =
              parse_double(table.rows[s][static_cast<std::size_t>(j)], path);
        }
      }
      out.fit.natural_chains.push_back(std::move(chain));
    }
    const json& diag = manifest.at("diagnostics");
    out.fit.total_draws = diag.at("total_draws").get<Index>();
    out.fit.retained_draws = diag.at("retained_draws").get<Index>();
    out.fit.retention_rate = diag.at("retention_rate").get<double>();
    ChainStats agg;
    agg.divergences = diag.at("divergences").get<int>();
    out.fit.stats.push_back(agg);

    const std::string diag_path = dir + "/diagnostics.csv";
    CsvTable diag_table = read_csv(diag_path);
    const std::size_t col_rhat = diag_table.require_column("rhat", diag_path);
    const std::size_t col_ess = diag_table.require_column("ess", diag_path);
    const std::size_t col_param = diag_table.require_column("param", diag_path);
    if (diag_table.rows.size() != out.fit.param_names.size()) {
      throw ValidationError(diag_path + ": row count does not match the model parameters");
    }
    out.fit.rhat.resize(out.model->dim());
    out.fit.ess.resize(out.model->dim());
    for (std::size_t r = 0; r < diag_table.rows.size(); ++r) {
      if (diag_table.rows[r][col_param] != out.fit.param_names[r]) {
        throw ValidationError(diag_path + ": parameter order does not match the model");
      }
      out.fit.rhat[static_cast<Index>(r)] = parse_double(diag_table.rows[r][col_rhat], diag_path);
      out.fit.ess[static_cast<Index>(r)] = parse_double(diag_table.rows[r][col_ess], diag_path);
    }
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  return out;
}

}  // namespace fadegp
