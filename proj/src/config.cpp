#include "fadegp/config.hpp"

#include <set>

#include "fadegp/errors.hpp"
#include "fadegp/textio.hpp"

namespace fadegp {

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cf;
  cf.origin_ = origin;
  std::string section;
  std::size_t lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (!cf.values_.emplace(full, value).second) {
      throw ValidationError(where + ": duplicate key '" + full + "'");
    }
  }
  return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  return parse_string(read_text_file(path), path);
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second, origin_ + " " + key);
}

long ConfigFile::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_long(it->second, origin_ + " " + key);
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw ValidationError(origin_ + " " + key + ": expected true or false, got '" + it->second + "'");
}

RunConfig run_config_from(const ConfigFile& file) {
  static const std::set<std::string> known = {
      "model.knots", "model.penalty_power", "model.per_knot_alpha", "model.soft_constraints",
      "model.sigma_eps", "model.center_inputs",
      "constraints.anchor", "constraints.saturation", "constraints.monotonicity", "constraints.v",
      "priors.alpha_scale", "priors.sigma_scale", "priors.rho_shape", "priors.rho_rate",
      "priors.beta_scale",
      "sampler.chains", "sampler.warmup", "sampler.samples", "sampler.target_accept",
      "sampler.max_treedepth", "sampler.seed", "sampler.nuts", "sampler.static_steps",
      "cv.max_folds", "cv.rhat_gate",
      "map.threshold",
      "predict.max_resamples",
  };
  for (const auto& [key, value] : file.values()) {
    if (!known.count(key)) throw ValidationError("config: unknown key '" + key + "'");
  }

  RunConfig rc;
  rc.model.knots = static_cast<int>(file.get_long("model.knots", rc.model.knots));
  rc.model.penalty_power = file.get_double("model.penalty_power", rc.model.penalty_power);
  rc.model.per_knot_alpha = file.get_bool("model.per_knot_alpha", rc.model.per_knot_alpha);
  rc.model.soft_constraints = file.get_bool("model.soft_constraints", rc.model.soft_constraints);
  rc.model.sigma_eps = file.get_double("model.sigma_eps", rc.model.sigma_eps);
  rc.model.center_inputs = file.get_bool("model.center_inputs", rc.model.center_inputs);
  rc.model.constraints.anchor = file.get_bool("constraints.anchor", rc.model.constraints.anchor);
  rc.model.constraints.saturation =
      file.get_bool("constraints.saturation", rc.model.constraints.saturation);
  rc.model.constraints.monotonicity =
      file.get_bool("constraints.monotonicity", rc.model.constraints.monotonicity);
  rc.model.constraints.v = file.get_double("constraints.v", rc.model.constraints.v);
  rc.model.priors.alpha_scale = file.get_double("priors.alpha_scale", rc.model.priors.alpha_scale);
  rc.model.priors.sigma_scale = file.get_double("priors.sigma_scale", rc.model.priors.sigma_scale);
  rc.model.priors.rho_shape = file.get_double("priors.rho_shape", rc.model.priors.rho_shape);
  rc.model.priors.rho_rate = file.get_double("priors.rho_rate", rc.model.priors.rho_rate);
  rc.model.priors.beta_scale = file.get_double("priors.beta_scale", rc.model.priors.beta_scale);
  rc.sampler.chains = static_cast<int>(file.get_long("sampler.chains", rc.sampler.chains));
  rc.sampler.warmup = static_cast<int>(file.get_long("sampler.warmup", rc.sampler.warmup));
  rc.sampler.samples = static_cast<int>(file.get_long("sampler.samples", rc.sampler.samples));
  rc.sampler.target_accept = file.get_double("sampler.target_accept", rc.sampler.target_accept);
  rc.sampler.max_treedepth =
      static_cast<int>(file.get_long("sampler.max_treedepth", rc.sampler.max_treedepth));
  rc.sampler.seed = static_cast<std::uint64_t>(
      file.get_long("sampler.seed", static_cast<long>(rc.sampler.seed)));
  rc.sampler.nuts = file.get_bool("sampler.nuts", rc.sampler.nuts);
  rc.sampler.static_steps =
      static_cast<int>(file.get_long("sampler.static_steps", rc.sampler.static_steps));
  rc.cv_max_folds = file.get_long("cv.max_folds", rc.cv_max_folds);
  rc.cv_rhat_gate = file.get_double("cv.rhat_gate", rc.cv_rhat_gate);
  rc.map_threshold = file.get_double("map.threshold", rc.map_threshold);
  rc.predict_max_resamples =
      static_cast<int>(file.get_long("predict.max_resamples", rc.predict_max_resamples));
  return rc;
}

}  // namespace fadegp
