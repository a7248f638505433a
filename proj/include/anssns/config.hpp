#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anssns/covariate.hpp"
#include "anssns/errors.hpp"
#include "anssns/mcmc.hpp"
#include "anssns/model.hpp"

namespace anssns {

using Json = nlohmann::ordered_json;

/// One run's worth of settings: model, covariates, priors, proposals,
/// initial values, chain schedule, seeds and test options.
///
/// Parameter-keyed maps (truth, priors, proposals, init) use chain
/// coordinate names, see chain_parameters().
struct RunConfig {
  Window window{0.0, 1.0, 0.0, 1.0};
  Window window_ext{-0.2, 1.2, -0.2, 1.2};
  SigmaScale sigma_scale = SigmaScale::Natural;
  std::optional<double> lambda;  // kappa = lambda / alpha
  std::optional<double> kappa;
  std::map<std::string, double> truth;

  std::vector<std::string> sigma_x_covariates;
  std::vector<std::string> sigma_y_covariates;
  std::vector<std::string> theta_covariates;

  PriorSet priors;
  std::map<std::string, double> proposal_sd;
  double move_sd = 0.025;

  std::map<std::string, double> init;
  std::optional<double> init_center_scale;
  std::optional<double> init_bandwidth;

  std::size_t n_steps = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 100;
  std::size_t center_updates = 1;
  double p_birth = 1.0 / 3.0;
  double p_death = 1.0 / 3.0;
  double p_move = 1.0 / 3.0;

  std::uint64_t seed = 1;

  double level = 0.95;
  std::size_t envelope_grid = 32;
  std::optional<Point2> test_at;

  std::string base_dir;  // resolves relative raster paths; not serialized

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("section '" + section + "' must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in section '" + section + "'");
  }
}

inline double number(const Json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError("'" + what + "' must be a number");
  return v.get<double>();
}

inline std::size_t count(const Json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError("'" + what + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

inline Window window_from_json(const Json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("'" + what + "' must be [x_min, x_max, y_min, y_max]");
  Window w{number(v[0], what), number(v[1], what), number(v[2], what), number(v[3], what)};
  w.validate();
  return w;
}

inline Json window_to_json(const Window& w) { return Json::array({w.x_min, w.x_max, w.y_min, w.y_max}); }

inline std::map<std::string, double> named_numbers(const Json& obj, const std::string& section) {
  if (!obj.is_object()) throw ConfigError("section '" + section + "' must be an object");
  std::map<std::string, double> out;
  for (const auto& item : obj.items()) out[item.key()] = number(item.value(), section + "." + item.key());
  return out;
}

inline std::vector<std::string> token_list(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError("'" + what + "' must be a list of covariate tokens");
  std::vector<std::string> out;
  for (const auto& t : v) {
    if (!t.is_string()) throw ConfigError("'" + what + "' entries must be strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

inline Prior prior_from_json(const Json& v, const std::string& name) {
  const std::string where = "priors." + name;
  if (!v.is_object() || !v.contains("family")) throw ConfigError("'" + where + "' needs a family");
  const std::string family = v.at("family").is_string() ? v.at("family").get<std::string>() : "";
  if (family == "uniform" || family == "log_uniform") {
    check_keys(v, where, {"family", "a", "b"});
    if (!v.contains("a") || !v.contains("b")) throw ConfigError("'" + where + "' needs a and b");
    const double a = number(v.at("a"), where + ".a");
    const double b = number(v.at("b"), where + ".b");
    return family == "uniform" ? Prior::uniform(a, b) : Prior::log_uniform(a, b);
  }
  if (family == "lognormal") {
    check_keys(v, where, {"family", "mean", "var"});
    if (!v.contains("mean") || !v.contains("var")) throw ConfigError("'" + where + "' needs mean and var");
    return Prior::lognormal_mean_var(number(v.at("mean"), where + ".mean"), number(v.at("var"), where + ".var"));
  }
  throw ConfigError("'" + where + "': unknown prior family '" + family + "'");
}

inline Json prior_to_json(const Prior& p) {
  switch (p.kind) {
    case Prior::Kind::Uniform:
      return Json{{"family", "uniform"}, {"a", p.a}, {"b", p.b}};
    case Prior::Kind::LogUniform:
      return Json{{"family", "log_uniform"}, {"a", p.a}, {"b", p.b}};
    case Prior::Kind::LogNormalMeanVar:
      break;
  }
  return Json{{"family", "lognormal"}, {"mean", p.a}, {"var", p.b}};
}

inline std::string scale_name(SigmaScale s) { return s == SigmaScale::Natural ? "natural" : "log"; }

}  // namespace detail

/// Omega with the coefficient counts implied by the covariate lists; all zero.
inline OmegaParams zero_omega(const RunConfig& cfg) {
  OmegaParams o;
  o.sigma_x_coefs.assign(cfg.sigma_x_covariates.size() + 1, 0.0);
  o.sigma_y_coefs.assign(cfg.sigma_y_covariates.size() + 1, 0.0);
  o.theta_coefs.assign(cfg.theta_covariates.size() + 1, 0.0);
  return o;
}

inline std::vector<ParameterInfo> config_parameters(const RunConfig& cfg) {
  return chain_parameters(zero_omega(cfg), cfg.sigma_scale);
}

/// Checks that `values` names exactly the chain coordinates.
inline void check_named(const RunConfig& cfg, const std::map<std::string, double>& values,
                        const std::string& section) {
  const auto params = config_parameters(cfg);
  for (const auto& p : params)
    if (!values.count(p.name)) throw ConfigError("section '" + section + "' is missing '" + p.name + "'");
  for (const auto& [name, v] : values) {
    if (std::none_of(params.begin(), params.end(), [&](const auto& p) { return p.name == name; }))
      throw ConfigError("section '" + section + "': unknown parameter '" + name + "'");
    if (!std::isfinite(v)) throw ConfigError("section '" + section + "': '" + name + "' must be finite");
  }
}

/// (alpha, omega) from chain-coordinate values.
inline std::pair<double, OmegaParams> named_to_omega(const RunConfig& cfg, const std::map<std::string, double>& values,
                                                     const std::string& section) {
  check_named(cfg, values, section);
  OmegaParams omega = zero_omega(cfg);
  double alpha = 0.0;
  for (const auto& p : config_parameters(cfg)) {
    const double v = values.at(p.name);
    if (p.target.kind == ParamTarget::Kind::Alpha) {
      alpha = v;
      continue;
    }
    if (p.exp_scale && !(v > 0.0)) throw ConfigError("section '" + section + "': '" + p.name + "' must be positive");
    coefficient(omega, p.target) = p.exp_scale ? std::log(v) : v;
  }
  return {alpha, omega};
}

inline Covariate resolve_covariate(const std::string& token, const std::string& base_dir) {
  const std::string prefix = "raster:";
  try {
    if (token.rfind(prefix, 0) == 0 && !base_dir.empty()) {
      std::filesystem::path p = token.substr(prefix.size());
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      return load_raster(p.string());
    }
    return Covariate::parse(token);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("covariate '") + token + "': " + e.what());
  }
}

inline std::shared_ptr<const CovariateSet> build_covariates(const RunConfig& cfg) {
  auto set = std::make_shared<CovariateSet>();
  for (const auto& t : cfg.sigma_x_covariates) set->sigma_x.push_back(resolve_covariate(t, cfg.base_dir));
  for (const auto& t : cfg.sigma_y_covariates) set->sigma_y.push_back(resolve_covariate(t, cfg.base_dir));
  for (const auto& t : cfg.theta_covariates) set->theta.push_back(resolve_covariate(t, cfg.base_dir));
  return set;
}

struct TruthModel {
  ModelSpec spec;
  double kappa = 0.0;
};

/// Generating model from the `truth` entries and lambda or kappa.
inline TruthModel truth_model(const RunConfig& cfg, std::shared_ptr<const CovariateSet> covariates) {
  if (cfg.truth.empty()) throw ConfigError("section 'model' has no truth values");
  const auto [alpha, omega] = named_to_omega(cfg, cfg.truth, "model.truth");
  TruthModel t;
  t.spec.window = cfg.window;
  t.spec.window_ext = cfg.window_ext;
  t.spec.alpha = alpha;
  t.spec.field = AnisotropyField(omega, std::move(covariates));
  t.spec.validate();
  if (cfg.kappa) t.kappa = *cfg.kappa;
  else if (cfg.lambda) t.kappa = *cfg.lambda / alpha;
  else throw ConfigError("section 'model' needs lambda or kappa");
  if (!(t.kappa > 0.0) || !std::isfinite(t.kappa)) throw ConfigError("kappa must be positive");
  return t;
}

/// Starting model of the chain: initial (alpha, omega), data count n.
inline ModelSpec initial_model(const RunConfig& cfg, std::shared_ptr<const CovariateSet> covariates,
                               std::size_t n_observed) {
  const auto [alpha, omega] = named_to_omega(cfg, cfg.init, "init");
  ModelSpec spec;
  spec.window = cfg.window;
  spec.window_ext = cfg.window_ext;
  spec.alpha = alpha;
  spec.field = AnisotropyField(omega, std::move(covariates));
  spec.n_observed = n_observed;
  spec.validate();
  return spec;
}

inline McmcConfig mcmc_config(const RunConfig& cfg, std::uint64_t seed) {
  McmcConfig m;
  m.n_steps = cfg.n_steps;
  m.burn_in = cfg.burn_in;
  m.thin = cfg.thin;
  m.proposal_sd = cfg.proposal_sd;
  m.move_sd = cfg.move_sd;
  m.p_birth = cfg.p_birth;
  m.p_death = cfg.p_death;
  m.p_move = cfg.p_move;
  m.seed = seed;
  m.center_updates = cfg.center_updates;
  m.sigma_scale = cfg.sigma_scale;
  m.init_center_scale = cfg.init_center_scale;
  m.init_bandwidth = cfg.init_bandwidth;
  m.validate(config_parameters(cfg), cfg.priors);
  return m;
}

/// Parses a config document. Unknown sections or keys are errors.
inline RunConfig config_from_json(const Json& doc, const std::string& base_dir = "") {
  using namespace detail;
  RunConfig cfg;
  cfg.base_dir = base_dir;
  try {
    check_keys(doc, "<root>", {"model", "covariates", "priors", "proposals", "init", "schedule", "seeds", "tests"});
    for (const char* required : {"model", "priors", "proposals", "init"})
      if (!doc.contains(required)) throw ConfigError(std::string("missing section '") + required + "'");

    const Json& model = doc.at("model");
    check_keys(model, "model", {"window", "window_ext", "sigma_scale", "lambda", "kappa", "truth"});
    if (model.contains("window")) cfg.window = window_from_json(model.at("window"), "model.window");
    if (model.contains("window_ext")) cfg.window_ext = window_from_json(model.at("window_ext"), "model.window_ext");
    if (!cfg.window_ext.contains(cfg.window)) throw ConfigError("model.window must lie inside model.window_ext");
    if (model.contains("sigma_scale")) {
      const auto& s = model.at("sigma_scale");
      if (s == "natural") cfg.sigma_scale = SigmaScale::Natural;
      else if (s == "log") cfg.sigma_scale = SigmaScale::Log;
      else throw ConfigError("model.sigma_scale must be \"natural\" or \"log\"");
    }
    if (model.contains("lambda") && model.contains("kappa"))
      throw ConfigError("model: give lambda or kappa, not both");
    if (model.contains("lambda")) cfg.lambda = number(model.at("lambda"), "model.lambda");
    if (model.contains("kappa")) cfg.kappa = number(model.at("kappa"), "model.kappa");
    if (model.contains("truth")) cfg.truth = named_numbers(model.at("truth"), "model.truth");

    if (doc.contains("covariates")) {
      const Json& c = doc.at("covariates");
      check_keys(c, "covariates", {"sigma_x", "sigma_y", "theta"});
      if (c.contains("sigma_x")) cfg.sigma_x_covariates = token_list(c.at("sigma_x"), "covariates.sigma_x");
      if (c.contains("sigma_y")) cfg.sigma_y_covariates = token_list(c.at("sigma_y"), "covariates.sigma_y");
      if (c.contains("theta")) cfg.theta_covariates = token_list(c.at("theta"), "covariates.theta");
    }

    const Json& priors = doc.at("priors");
    if (!priors.is_object()) throw ConfigError("section 'priors' must be an object");
    for (const auto& item : priors.items()) cfg.priors[item.key()] = prior_from_json(item.value(), item.key());

    auto proposals = named_numbers(doc.at("proposals"), "proposals");
    if (proposals.count("move")) {
      cfg.move_sd = proposals.at("move");
      proposals.erase("move");
    }
    cfg.proposal_sd = proposals;

    const Json& init = doc.at("init");
    if (!init.is_object()) throw ConfigError("section 'init' must be an object");
    for (const auto& item : init.items()) {
      if (item.key() == "center_scale") cfg.init_center_scale = number(item.value(), "init.center_scale");
      else if (item.key() == "bandwidth") cfg.init_bandwidth = number(item.value(), "init.bandwidth");
      else cfg.init[item.key()] = number(item.value(), "init." + item.key());
    }

    if (doc.contains("schedule")) {
      const Json& s = doc.at("schedule");
      check_keys(s, "schedule", {"n_steps", "burn_in", "thin", "center_updates", "p_birth", "p_death", "p_move"});
      if (s.contains("n_steps")) cfg.n_steps = count(s.at("n_steps"), "schedule.n_steps");
      if (s.contains("burn_in")) cfg.burn_in = count(s.at("burn_in"), "schedule.burn_in");
      if (s.contains("thin")) cfg.thin = count(s.at("thin"), "schedule.thin");
      if (s.contains("center_updates")) cfg.center_updates = count(s.at("center_updates"), "schedule.center_updates");
      if (s.contains("p_birth")) cfg.p_birth = number(s.at("p_birth"), "schedule.p_birth");
      if (s.contains("p_death")) cfg.p_death = number(s.at("p_death"), "schedule.p_death");
      if (s.contains("p_move")) cfg.p_move = number(s.at("p_move"), "schedule.p_move");
    }

    if (doc.contains("seeds")) {
      const Json& s = doc.at("seeds");
      check_keys(s, "seeds", {"master"});
      if (s.contains("master")) {
        if (!s.at("master").is_number_unsigned()) throw ConfigError("'seeds.master' must be a nonnegative integer");
        cfg.seed = s.at("master").get<std::uint64_t>();
      }
    }

    if (doc.contains("tests")) {
      const Json& t = doc.at("tests");
      check_keys(t, "tests", {"level", "envelope_grid", "at"});
      if (t.contains("level")) cfg.level = number(t.at("level"), "tests.level");
      if (t.contains("envelope_grid")) cfg.envelope_grid = count(t.at("envelope_grid"), "tests.envelope_grid");
      if (t.contains("at")) {
        const auto& a = t.at("at");
        if (!a.is_array() || a.size() != 2) throw ConfigError("'tests.at' must be [x, y]");
        cfg.test_at = Point2{number(a[0], "tests.at"), number(a[1], "tests.at")};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(cfg.level > 0.0 && cfg.level <= 1.0)) throw ConfigError("tests.level must lie in (0, 1]");
  if (cfg.envelope_grid == 0) throw ConfigError("tests.envelope_grid must be positive");
  named_to_omega(cfg, cfg.init, "init");
  if (!cfg.truth.empty()) named_to_omega(cfg, cfg.truth, "model.truth");
  mcmc_config(cfg, cfg.seed);
  for (const auto& [name, v] : cfg.init)
    if (log_prior_density(cfg.priors.at(name), v) == -std::numeric_limits<double>::infinity())
      throw ConfigError("init." + name + " lies outside the support of its prior");
  return cfg;
}

/// Serializes in a fixed order; parameter maps follow chain coordinate order.
inline Json config_to_json(const RunConfig& cfg) {
  using namespace detail;
  const auto params = config_parameters(cfg);
  const auto ordered = [&](const auto& map, auto convert) {
    Json out = Json::object();
    for (const auto& p : params)
      if (const auto it = map.find(p.name); it != map.end()) out[p.name] = convert(it->second);
    return out;
  };
  const auto same = [](double v) { return Json(v); };

  Json doc;
  Json& model = doc["model"];
  model["window"] = window_to_json(cfg.window);
  model["window_ext"] = window_to_json(cfg.window_ext);
  model["sigma_scale"] = scale_name(cfg.sigma_scale);
  if (cfg.lambda) model["lambda"] = *cfg.lambda;
  if (cfg.kappa) model["kappa"] = *cfg.kappa;
  if (!cfg.truth.empty()) model["truth"] = ordered(cfg.truth, same);

  doc["covariates"] = Json{{"sigma_x", cfg.sigma_x_covariates},
                           {"sigma_y", cfg.sigma_y_covariates},
                           {"theta", cfg.theta_covariates}};
  doc["priors"] = ordered(cfg.priors, [](const Prior& p) { return prior_to_json(p); });
  Json proposals = ordered(cfg.proposal_sd, same);
  proposals["move"] = cfg.move_sd;
  doc["proposals"] = proposals;
  Json init = ordered(cfg.init, same);
  if (cfg.init_center_scale) init["center_scale"] = *cfg.init_center_scale;
  if (cfg.init_bandwidth) init["bandwidth"] = *cfg.init_bandwidth;
  doc["init"] = init;
  doc["schedule"] = Json{{"n_steps", cfg.n_steps}, {"burn_in", cfg.burn_in},       {"thin", cfg.thin},
                         {"center_updates", cfg.center_updates}, {"p_birth", cfg.p_birth},
                         {"p_death", cfg.p_death}, {"p_move", cfg.p_move}};
  doc["seeds"] = Json{{"master", cfg.seed}};
  Json tests{{"level", cfg.level}, {"envelope_grid", cfg.envelope_grid}};
  if (cfg.test_at) tests["at"] = Json::array({cfg.test_at->x, cfg.test_at->y});
  doc["tests"] = tests;
  return doc;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline RunConfig load_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return config_from_json(read_json_file(path), dir.empty() ? "." : dir);
}

}  // namespace anssns
