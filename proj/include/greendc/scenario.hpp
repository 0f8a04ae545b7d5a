#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "greendc/errors.hpp"
#include "greendc/policy.hpp"
#include "greendc/power.hpp"

namespace greendc {

// A scenario is one flat key = value file naming the cluster and trace
// files (relative to its own directory) plus every tunable the engine
// honors. Any key can be overridden from the command line.
struct ScenarioConfig {
  std::string name;  // output labeling, defaults to the file stem

  std::string cluster_file;
  std::string interactive_file;
  std::string batch_file;
  std::string solar_file;

  std::string policy = "gsa";        // gsa | hs
  std::string predictor = "oracle";  // oracle | persistence | svr

  double dt_s = 300.0;
  int horizon = 288;
  double panel_kw = 1.63;
  double panel_efficiency = 1.0;
  unsigned long seed = 42;

  PowerModelConfig power;  // t_sup_c, standby_watts
  PolicyParams policy_params;

  double service_rate = 60.0;  // requests/s per utilization unit
  double target_rt_s = 0.5;
  int interactive_vms = 8;
  int microservices = 16;
  double optional_fraction = 0.3;
  int batch_vms = 6;
  double migration_wh = 0.0;
  double saturation_penalty = 10.0;  // response-time multiplier when saturated

  void set(const std::string& key, const std::string& raw_value,
           const std::filesystem::path& base_dir) {
    auto value = raw_value;
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    auto as_path = [&]() {
      std::filesystem::path p(value);
      return (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
    };
    auto as_double = [&]() {
      try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
      }
    };
    auto as_int = [&]() {
      double v = as_double();
      if (v != static_cast<long>(v))
        throw ConfigError("expected an integer for " + key + ": '" + value + "'");
      return static_cast<int>(v);
    };

    if (key == "name") name = value;
    else if (key == "cluster") cluster_file = as_path();
    else if (key == "interactive") interactive_file = as_path();
    else if (key == "batch") batch_file = as_path();
    else if (key == "solar") solar_file = as_path();
    else if (key == "policy") policy = value;
    else if (key == "predictor") predictor = value;
    else if (key == "dt_s") dt_s = as_double();
    else if (key == "horizon") horizon = as_int();
    else if (key == "panel_kw") panel_kw = as_double();
    else if (key == "panel_efficiency") panel_efficiency = as_double();
    else if (key == "seed") seed = static_cast<unsigned long>(as_double());
    else if (key == "t_sup_c") power.t_sup_c = as_double();
    else if (key == "standby_watts") power.standby_watts = as_double();
    else if (key == "tu_up") policy_params.tu_up = as_double();
    else if (key == "tu_low") policy_params.tu_low = as_double();
    else if (key == "epsilon_batch") policy_params.epsilon_batch = as_double();
    else if (key == "num_thr") policy_params.num_thr = as_double();
    else if (key == "scaling_cadence") policy_params.scaling_cadence = as_int();
    else if (key == "service_rate") service_rate = as_double();
    else if (key == "target_rt_s") target_rt_s = as_double();
    else if (key == "interactive_vms") interactive_vms = as_int();
    else if (key == "microservices") microservices = as_int();
    else if (key == "optional_fraction") optional_fraction = as_double();
    else if (key == "batch_vms") batch_vms = as_int();
    else if (key == "migration_wh") migration_wh = as_double();
    else if (key == "saturation_penalty") saturation_penalty = as_double();
    else throw ConfigError("unknown scenario key: " + key);
  }

  static ScenarioConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::filesystem::path p(path);
    ScenarioConfig cfg;
    cfg.name = p.stem().string();
    std::filesystem::path base = p.has_parent_path() ? p.parent_path() : ".";
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = line;
      if (auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
      auto trim = [](std::string v) {
        std::size_t b = v.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        std::size_t e = v.find_last_not_of(" \t\r");
        return v.substr(b, e - b + 1);
      };
      s = trim(s);
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ParseError(path + ": expected key = value", lineno);
      try {
        cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)), base);
      } catch (const ConfigError& e) {
        throw ParseError(std::string(e.what()), lineno);
      }
    }
    return cfg;
  }

  // key=value as passed to --set; paths resolve against the working dir.
  void apply_override(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must look like key=value: " + assignment);
    set(assignment.substr(0, eq), assignment.substr(eq + 1),
        std::filesystem::current_path());
  }

  void validate() const {
    if (cluster_file.empty() || interactive_file.empty() || batch_file.empty() ||
        solar_file.empty())
      throw ConfigError("scenario must name cluster, interactive, batch, and solar files");
    if (dt_s <= 0.0) throw ConfigError("dt_s must be positive");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (panel_kw <= 0.0) throw ConfigError("panel_kw must be positive");
    if (panel_efficiency <= 0.0 || panel_efficiency > 1.0)
      throw ConfigError("panel_efficiency must lie in (0, 1]");
    if (policy != "gsa" && policy != "hs")
      throw ConfigError("policy must be gsa or hs, got '" + policy + "'");
    if (predictor != "oracle" && predictor != "persistence" && predictor != "svr")
      throw ConfigError("predictor must be oracle, persistence, or svr, got '" + predictor +
                        "'");
    policy_params.validate();
    if (service_rate <= 0.0 || target_rt_s <= 0.0 || service_rate <= 1.0 / target_rt_s)
      throw ConfigError("service_rate must exceed 1/target_rt_s");
    if (interactive_vms < 1 || batch_vms < 1) throw ConfigError("vm counts must be positive");
    if (microservices < interactive_vms)
      throw ConfigError("need at least one microservice per interactive vm");
    if (optional_fraction < 0.0 || optional_fraction > 1.0)
      throw ConfigError("optional_fraction must lie in [0, 1]");
    if (migration_wh < 0.0) throw ConfigError("migration_wh must be non-negative");
    if (saturation_penalty < 1.0) throw ConfigError("saturation_penalty must be >= 1");
  }
};

}  // namespace greendc
