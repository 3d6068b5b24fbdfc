#pragma once

#include "penreg/harness/csv.hpp"
#include "penreg/harness/methods.hpp"
#include "penreg/simgen/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace penreg {

struct DataTarget {
  std::string path;
  std::string outcome;
  csv::OutcomeType type = csv::OutcomeType::continuous;
};

struct NamedPrior {
  std::string name;
  PriorConfig prior;
};

/// One experiment: a simulation scenario or a CSV dataset, a method list,
/// one or more priors and per-method settings.
struct RunConfig {
  std::optional<ScenarioConfig> scenario;
  std::optional<DataTarget> data;
  std::vector<Method> methods;
  std::vector<NamedPrior> priors{{"reg_hs_df3", PriorConfig::make_regularized_horseshoe(3.0)}};
  Parameterization parameterization = Parameterization::noncentered;
  int replications = 1;
  int folds = 5;
  std::uint64_t seed = 0;
  MethodSettings settings;
  std::map<Method, MethodSettings> overrides;
  int n_workers = 1;

  bool cross_validation() const { return data.has_value(); }

  std::string target_name() const {
    if (scenario) return scenario->name;
    if (data) {
      const auto slash = data->path.find_last_of('/');
      std::string stem = slash == std::string::npos ? data->path : data->path.substr(slash + 1);
      const auto dot = stem.rfind('.');
      return dot == std::string::npos || dot == 0 ? stem : stem.substr(0, dot);
    }
    return "";
  }

  const MethodSettings& settings_for(Method m) const {
    const auto it = overrides.find(m);
    return it == overrides.end() ? settings : it->second;
  }

  void validate() const {
    require(scenario.has_value() != data.has_value(), ErrorKind::ConfigError,
            "config needs exactly one of scenario or data");
    require(!methods.empty(), ErrorKind::ConfigError, "config lists no methods");
    require(!priors.empty(), ErrorKind::ConfigError, "config lists no priors");
    require(replications >= 1, ErrorKind::ConfigError, "replications must be at least 1");
    require(n_workers >= 1, ErrorKind::ConfigError, "n_workers must be at least 1");
    if (data) {
      require(folds >= 2, ErrorKind::ConfigError, "cross-validation needs at least 2 folds");
      require(!data->path.empty() && !data->outcome.empty(), ErrorKind::ConfigError,
              "data target needs a path and an outcome column");
    }
    if (scenario) {
      try {
        scenario->validate();
      } catch (const Error& e) {
        fail(ErrorKind::ConfigError, e.what());
      }
    }
  }
};

inline int default_workers() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

namespace config_json {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::ConfigError, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(known, ErrorKind::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    fail(ErrorKind::ConfigError, std::string("bad value for '") + key + "'");
  }
}

inline PriorConfig prior_from_json(const json& j) {
  check_keys(j,
             {"name", "kind", "scale", "df", "spike_sd", "slab_sd", "inclusion", "sigma_tau", "df_local", "p0",
              "slab_df", "slab_scale"},
             "prior");
  PriorConfig p;
  std::string kind = std::string(to_string(p.kind));
  read(j, "kind", kind);
  p.kind = penreg::prior_kind_from_string(kind);
  read(j, "scale", p.scale);
  read(j, "df", p.df);
  read(j, "spike_sd", p.spike_sd);
  read(j, "slab_sd", p.slab_sd);
  read(j, "inclusion", p.inclusion);
  read(j, "sigma_tau", p.sigma_tau);
  read(j, "df_local", p.df_local);
  read(j, "p0", p.p0);
  read(j, "slab_df", p.slab_df);
  read(j, "slab_scale", p.slab_scale);
  return p;
}

inline json prior_to_json(const PriorConfig& p) {
  json j{{"kind", std::string(to_string(p.kind))}};
  switch (p.kind) {
    case PriorKind::normal: j["scale"] = p.scale; break;
    case PriorKind::student_t:
      j["df"] = p.df;
      j["scale"] = p.scale;
      break;
    case PriorKind::spike_slab:
      j["spike_sd"] = p.spike_sd;
      j["slab_sd"] = p.slab_sd;
      j["inclusion"] = p.inclusion;
      break;
    case PriorKind::horseshoe: j["sigma_tau"] = p.sigma_tau; break;
    case PriorKind::regularized_horseshoe:
      j["df_local"] = p.df_local;
      j["slab_df"] = p.slab_df;
      j["slab_scale"] = p.slab_scale;
      if (p.p0 > 0.0) j["p0"] = p.p0;
      break;
  }
  return j;
}

inline ScenarioConfig scenario_from_json(const json& j) {
  if (j.is_string()) return find_scenario(j.get<std::string>());
  check_keys(j,
             {"name", "base", "n_train", "n_test", "p", "sparsity", "correlation", "r2", "cov_structure",
              "coef_pattern"},
             "scenario");
  ScenarioConfig c;
  if (j.contains("base")) c = find_scenario(j.at("base").get<std::string>());
  read(j, "name", c.name);
  read(j, "n_train", c.n_train);
  read(j, "n_test", c.n_test);
  read(j, "p", c.p);
  read(j, "sparsity", c.sparsity);
  read(j, "correlation", c.correlation);
  read(j, "r2", c.r2);
  if (j.contains("cov_structure")) {
    const std::string s = j.at("cov_structure").get<std::string>();
    require(s == "partial" || s == "full", ErrorKind::ConfigError, "cov_structure must be partial or full");
    c.cov_structure = s == "partial" ? CovStructure::partial : CovStructure::full;
  }
  if (j.contains("coef_pattern")) {
    const std::string s = j.at("coef_pattern").get<std::string>();
    require(s == "equal" || s == "different", ErrorKind::ConfigError, "coef_pattern must be equal or different");
    c.coef_pattern = s == "equal" ? CoefPattern::equal : CoefPattern::different;
  }
  return c;
}

inline json scenario_to_json(const ScenarioConfig& c) {
  return json{{"name", c.name},
              {"n_train", c.n_train},
              {"n_test", c.n_test},
              {"p", c.p},
              {"sparsity", c.sparsity},
              {"correlation", c.correlation},
              {"r2", c.r2},
              {"cov_structure", to_string(c.cov_structure)},
              {"coef_pattern", to_string(c.coef_pattern)}};
}

inline MethodSettings settings_from_json(const json& j, MethodSettings s) {
  check_keys(j,
             {"chains", "warmup", "draws", "hybrid_warmup", "max_leapfrog", "vi_max_iter", "approx_draws",
              "laplace_budget", "pathfinder_paths", "pathfinder_max_iter", "pathfinder_draws", "psis_resample",
              "ridge_prior_scale", "alpha"},
             "method_settings");
  read(j, "chains", s.chains);
  read(j, "warmup", s.warmup);
  read(j, "draws", s.draws);
  read(j, "hybrid_warmup", s.hybrid_warmup);
  read(j, "max_leapfrog", s.max_leapfrog);
  read(j, "vi_max_iter", s.vi_max_iter);
  read(j, "approx_draws", s.approx_draws);
  read(j, "laplace_budget", s.laplace_budget);
  read(j, "pathfinder_paths", s.pathfinder.n_paths);
  read(j, "pathfinder_max_iter", s.pathfinder.max_lbfgs_iter);
  read(j, "pathfinder_draws", s.pathfinder.n_final_draws);
  read(j, "psis_resample", s.pathfinder.psis_resample);
  read(j, "ridge_prior_scale", s.ridge_prior_scale);
  read(j, "alpha", s.alpha);
  require(s.chains >= 1 && s.draws >= 1 && s.warmup >= 0 && s.hybrid_warmup >= 0 && s.max_leapfrog >= 1 &&
              s.vi_max_iter >= 1 && s.approx_draws >= 1 && s.laplace_budget >= 1,
          ErrorKind::ConfigError, "method settings must be positive counts");
  require(s.alpha > 0.0 && s.alpha < 1.0, ErrorKind::ConfigError, "alpha must lie in (0, 1)");
  require(s.ridge_prior_scale > 0.0, ErrorKind::ConfigError, "ridge_prior_scale must be positive");
  return s;
}

inline std::vector<NamedPrior> prior_preset(const std::string& name) {
  if (name == "default") return {{"reg_hs_df3", PriorConfig::make_regularized_horseshoe(3.0)}};
  if (name == "sensitivity") {
    std::vector<NamedPrior> out;
    for (auto& [n, p] : sensitivity_priors()) out.push_back({n, p});
    return out;
  }
  fail(ErrorKind::ConfigError, "unknown prior preset " + name);
}

}  // namespace config_json

/// Parses the JSON run configuration. Every error is a ConfigError.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace config_json;
  check_keys(j,
             {"scenario", "data", "methods", "prior", "priors", "preset", "parameterization", "replications",
              "folds", "seed", "method_settings", "n_workers"},
             "config");
  RunConfig c;
  c.n_workers = default_workers();
  if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"path", "outcome", "outcome_type"}, "data");
    DataTarget t;
    read(d, "path", t.path);
    read(d, "outcome", t.outcome);
    std::string type = "continuous";
    read(d, "outcome_type", type);
    require(type == "continuous" || type == "binary", ErrorKind::ConfigError,
            "outcome_type must be continuous or binary");
    t.type = type == "binary" ? csv::OutcomeType::binary : csv::OutcomeType::continuous;
    c.data = t;
  }
  if (j.contains("methods")) {
    require(j.at("methods").is_array(), ErrorKind::ConfigError, "methods must be an array");
    for (const auto& m : j.at("methods")) {
      require(m.is_string(), ErrorKind::ConfigError, "method names must be strings");
      c.methods.push_back(method_from_string(m.get<std::string>()));
    }
  }
  const int prior_sources = int(j.contains("prior")) + int(j.contains("priors")) + int(j.contains("preset"));
  require(prior_sources <= 1, ErrorKind::ConfigError, "use only one of prior, priors and preset");
  if (j.contains("preset")) c.priors = prior_preset(j.at("preset").get<std::string>());
  if (j.contains("prior")) {
    const json& p = j.at("prior");
    c.priors = {{p.value("name", std::string(to_string(prior_from_json(p).kind))), prior_from_json(p)}};
  }
  if (j.contains("priors")) {
    require(j.at("priors").is_array(), ErrorKind::ConfigError, "priors must be an array");
    c.priors.clear();
    for (const auto& p : j.at("priors")) {
      const PriorConfig pc = prior_from_json(p);
      c.priors.push_back({p.value("name", std::string(to_string(pc.kind))), pc});
    }
  }
  if (j.contains("parameterization")) {
    const std::string s = j.at("parameterization").get<std::string>();
    require(s == "centered" || s == "noncentered", ErrorKind::ConfigError,
            "parameterization must be centered or noncentered");
    c.parameterization = s == "centered" ? Parameterization::centered : Parameterization::noncentered;
  }
  read(j, "replications", c.replications);
  read(j, "folds", c.folds);
  read(j, "seed", c.seed);
  read(j, "n_workers", c.n_workers);
  if (j.contains("method_settings")) {
    const json& ms = j.at("method_settings");
    require(ms.is_object(), ErrorKind::ConfigError, "method_settings must be an object");
    if (ms.contains("default")) c.settings = settings_from_json(ms.at("default"), c.settings);
    for (const auto& [key, val] : ms.items()) {
      if (key == "default") continue;
      c.overrides[method_from_string(key)] = settings_from_json(val, c.settings);
    }
  }
  c.validate();
  return c;
}

inline RunConfig parse_run_config(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

inline RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::ConfigError, "cannot open config " + path);
  return parse_run_config(in);
}

}  // namespace penreg
