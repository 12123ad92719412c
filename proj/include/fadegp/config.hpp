#pragma once

#include <map>
#include <string>

#include "fadegp/evaluate.hpp"
#include "fadegp/model.hpp"
#include "fadegp/sampler.hpp"

namespace fadegp {

// Minimal TOML-style config: [section] headers, key = value lines, #
// comments. Values are numbers, true/false, or unquoted strings.
class ConfigFile {
 public:
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "config");
  static ConfigFile parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> raw value
  std::string origin_;
};

struct RunConfig {
  ModelConfig model;
  SamplerConfig sampler;
  Index cv_max_folds = 0;
  double cv_rhat_gate = 1.05;
  double map_threshold = 3.5;
  int predict_max_resamples = 50;
};

// Applies a parsed file on top of defaults; unknown keys are validation
// errors so typos cannot silently fall back.
RunConfig run_config_from(const ConfigFile& file);

}  // namespace fadegp
