#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "anssns/config.hpp"
#include "anssns/errors.hpp"
#include "anssns/io.hpp"
#include "anssns/mcmc.hpp"
#include "anssns/posterior.hpp"
#include "anssns/rng.hpp"
#include "anssns/simulate.hpp"
#include "anssns/svg.hpp"

namespace anssns {

enum class PriorChoice { Uniform, Informative };

inline std::string prior_choice_name(PriorChoice p) { return p == PriorChoice::Uniform ? "uniform" : "informative"; }

inline PriorChoice parse_prior_choice(const std::string& s) {
  if (s == "uniform") return PriorChoice::Uniform;
  if (s == "informative") return PriorChoice::Informative;
  throw ConfigError("prior set must be \"uniform\" or \"informative\", got '" + s + "'");
}

using NamedValues = std::vector<std::pair<std::string, double>>;

struct ModelRow {
  int index = 1;
  NamedValues design;  // model parameters shown in the tables
  RunConfig config;
};

struct ExperimentSpec {
  int experiment = 1;
  PriorChoice priors = PriorChoice::Uniform;
  bool paper = false;
  std::size_t replicates = 5;
  std::uint64_t master_seed = 1;
  bool rerun_label_switch = true;
  std::vector<ModelRow> models;
};

inline constexpr std::uint64_t kDefaultMasterSeed = 20240101;

struct Schedule {
  std::size_t replicates, n_steps, burn_in, thin;
};

inline Schedule desk_schedule() { return {5, 20000, 10000, 100}; }
inline Schedule paper_schedule() { return {20, 50000, 25000, 100}; }

namespace detail {

inline RunConfig base_config(const Schedule& s, std::uint64_t master) {
  RunConfig c;
  c.n_steps = s.n_steps;
  c.burn_in = s.burn_in;
  c.thin = s.thin;
  c.seed = master;
  return c;
}

inline void stationary_priors(RunConfig& c) {
  c.priors["alpha"] = Prior::uniform(1.0, 30.0);
  c.priors["sigma_x"] = Prior::uniform(0.002, 0.2);
  c.priors["sigma_y"] = Prior::uniform(0.002, 0.2);
  c.priors["theta_0"] = Prior::uniform(0.0, 0.5 * std::numbers::pi);
}

inline void stationary_init(RunConfig& c) {
  c.init = {{"alpha", 7.0}, {"sigma_x", 0.05}, {"sigma_y", 0.01}, {"theta_0", std::numbers::pi / 3.0}};
}

/// Experiments 1 and 2 share the (lambda, alpha, sigma) grid; models 5-8 repeat 1-4 with sigma = 0.04.
inline std::vector<ModelRow> stationary_rows(int experiment, PriorChoice priors, const Schedule& s,
                                             std::uint64_t master) {
  const double lambdas[] = {100.0, 200.0, 100.0, 200.0};
  const double alphas[] = {5.0, 5.0, 10.0, 10.0};
  std::vector<ModelRow> rows;
  for (int m = 1; m <= 8; ++m) {
    const bool weak = m > 4;
    const double lambda = lambdas[(m - 1) % 4], alpha = alphas[(m - 1) % 4], sigma = weak ? 0.04 : 0.02;
    ModelRow row;
    row.index = m;
    row.design = {{"lambda", lambda}, {"alpha", alpha}, {"sigma", sigma}};
    RunConfig c = base_config(s, master);
    c.lambda = lambda;
    if (experiment == 1)
      c.truth = {{"alpha", alpha}, {"sigma_x", sigma / 0.7}, {"sigma_y", 0.7 * sigma}, {"theta_0", std::numbers::pi / 4.0}};
    else
      c.truth = {{"alpha", alpha}, {"sigma_x", sigma}, {"sigma_y", sigma}, {"theta_0", 0.0}};
    stationary_priors(c);
    if (priors == PriorChoice::Informative) {
      c.priors["sigma_x"] = weak ? Prior::lognormal_mean_var(0.06, 8e-5) : Prior::lognormal_mean_var(0.03, 4e-5);
      c.priors["sigma_y"] = weak ? Prior::lognormal_mean_var(0.03, 8e-5) : Prior::lognormal_mean_var(0.01, 4e-5);
    }
    c.proposal_sd = {{"alpha", 4.0}, {"sigma_x", weak ? 0.02 : 0.01}, {"sigma_y", weak ? 0.01 : 0.005}, {"theta_0", 0.2}};
    c.move_sd = 0.025;
    stationary_init(c);
    row.config = std::move(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<ModelRow> direction_rows(const Schedule& s, std::uint64_t master) {
  const double alphas[] = {5.0, 10.0, 5.0, 10.0};
  const double theta1[] = {0.5, 0.5, 1.0, 1.0};
  const double sigma = 0.02;
  std::vector<ModelRow> rows;
  for (int m = 1; m <= 4; ++m) {
    ModelRow row;
    row.index = m;
    row.design = {{"lambda", 200.0}, {"alpha", alphas[m - 1]}, {"sigma", sigma}, {"theta_1", theta1[m - 1]}};
    RunConfig c = base_config(s, master);
    c.lambda = 200.0;
    c.theta_covariates = {"x"};
    c.truth = {{"alpha", alphas[m - 1]}, {"sigma_x", sigma / 0.5}, {"sigma_y", 0.5 * sigma},
               {"theta_0", std::numbers::pi / 4.0}, {"theta_1", theta1[m - 1]}};
    stationary_priors(c);
    c.priors["theta_1"] = Prior::uniform(-1.0, 2.0);
    c.proposal_sd = {{"alpha", 3.0}, {"sigma_x", 0.01}, {"sigma_y", 0.002}, {"theta_0", 0.1}, {"theta_1", 0.1}};
    c.move_sd = 0.25;
    stationary_init(c);
    c.init["theta_1"] = 0.75;
    row.config = std::move(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<ModelRow> spread_rows(const Schedule& s, std::uint64_t master) {
  const double alphas[] = {5.0, 10.0, 5.0, 10.0};
  const double slopes[] = {1.0, 1.0, 1.5, 1.5};
  const double s0 = std::log(0.01);
  std::vector<ModelRow> rows;
  for (int m = 1; m <= 4; ++m) {
    ModelRow row;
    row.index = m;
    row.design = {{"lambda", 200.0}, {"alpha", alphas[m - 1]}, {"sigma_0x", s0}, {"sigma_1x", slopes[m - 1]}};
    RunConfig c = base_config(s, master);
    c.lambda = 200.0;
    c.sigma_scale = SigmaScale::Log;
    c.sigma_x_covariates = {"x"};
    c.sigma_y_covariates = {"x"};
    c.truth = {{"alpha", alphas[m - 1]}, {"sigma_x_0", s0}, {"sigma_x_1", slopes[m - 1]},
               {"sigma_y_0", s0}, {"sigma_y_1", slopes[m - 1]}, {"theta_0", 0.0}};
    c.priors["alpha"] = Prior::uniform(1.0, 30.0);
    c.priors["sigma_x_0"] = Prior::uniform(std::log(0.002), std::log(0.2));
    c.priors["sigma_x_1"] = Prior::uniform(-5.0, 5.0);
    c.priors["sigma_y_0"] = Prior::uniform(std::log(0.002), std::log(0.2));
    c.priors["sigma_y_1"] = Prior::uniform(-5.0, 5.0);
    c.priors["theta_0"] = Prior::uniform(0.0, 0.5 * std::numbers::pi);
    c.proposal_sd = {{"alpha", 3.0}, {"sigma_x_0", 0.1}, {"sigma_x_1", 0.1},
                     {"sigma_y_0", 0.1}, {"sigma_y_1", 0.1}, {"theta_0", 0.1}};
    c.move_sd = 0.25;
    c.init = {{"alpha", 7.0}, {"sigma_x_0", std::log(0.015)}, {"sigma_x_1", 1.25},
              {"sigma_y_0", std::log(0.015)}, {"sigma_y_1", 1.25}, {"theta_0", 0.0}};
    row.config = std::move(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Experiment 1 (stationary anisotropic), 2 (stationary isotropic),
/// 3 (covariate-driven orientation) or 4 (covariate-driven isotropic spread).
/// Desk scale unless `paper`.
inline ExperimentSpec make_experiment(int experiment, PriorChoice priors = PriorChoice::Uniform, bool paper = false,
                                      std::uint64_t master_seed = kDefaultMasterSeed) {
  if (experiment < 1 || experiment > 4) throw ConfigError("experiment id must be 1, 2, 3 or 4");
  if (priors == PriorChoice::Informative && experiment != 1)
    throw ConfigError("informative priors are defined for experiment 1 only");
  const Schedule s = paper ? paper_schedule() : desk_schedule();
  ExperimentSpec spec;
  spec.experiment = experiment;
  spec.priors = priors;
  spec.paper = paper;
  spec.replicates = s.replicates;
  spec.master_seed = master_seed;
  // Orientation is a nuisance in experiments 2 and 4, where sigma_x = sigma_y.
  spec.rerun_label_switch = experiment == 1 || experiment == 3;
  if (experiment <= 2) spec.models = detail::stationary_rows(experiment, priors, s, master_seed);
  else if (experiment == 3) spec.models = detail::direction_rows(s, master_seed);
  else spec.models = detail::spread_rows(s, master_seed);
  return spec;
}

inline Json spec_to_json(const ExperimentSpec& spec) {
  Json j;
  j["experiment"] = spec.experiment;
  j["priors"] = prior_choice_name(spec.priors);
  j["paper"] = spec.paper;
  j["replicates"] = spec.replicates;
  j["master_seed"] = spec.master_seed;
  j["rerun_label_switch"] = spec.rerun_label_switch;
  Json models = Json::array();
  for (const auto& row : spec.models) {
    Json design = Json::object();
    for (const auto& [k, v] : row.design) design[k] = v;
    models.push_back(Json{{"index", row.index}, {"design", design}, {"config", config_to_json(row.config)}});
  }
  j["models"] = models;
  return j;
}

inline ExperimentSpec spec_from_json(const Json& j, const std::string& base_dir = "") {
  ExperimentSpec spec;
  try {
    detail::check_keys(j, "<experiment>", {"experiment", "priors", "paper", "replicates", "master_seed",
                                           "rerun_label_switch", "models"});
    for (const char* k : {"experiment", "replicates", "master_seed", "models"})
      if (!j.contains(k)) throw ConfigError(std::string("experiment spec is missing '") + k + "'");
    spec.experiment = j.at("experiment").get<int>();
    if (spec.experiment < 1 || spec.experiment > 4) throw ConfigError("experiment id must be 1, 2, 3 or 4");
    if (j.contains("priors")) spec.priors = parse_prior_choice(j.at("priors").get<std::string>());
    if (j.contains("paper")) spec.paper = j.at("paper").get<bool>();
    spec.replicates = detail::count(j.at("replicates"), "replicates");
    if (spec.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (!j.at("master_seed").is_number_unsigned()) throw ConfigError("master_seed must be a nonnegative integer");
    spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("rerun_label_switch")) spec.rerun_label_switch = j.at("rerun_label_switch").get<bool>();
    for (const auto& m : j.at("models")) {
      detail::check_keys(m, "models[]", {"index", "design", "config"});
      ModelRow row;
      row.index = m.at("index").get<int>();
      if (m.contains("design"))
        for (const auto& item : m.at("design").items())
          row.design.emplace_back(item.key(), detail::number(item.value(), "design." + item.key()));
      row.config = config_from_json(m.at("config"), base_dir);
      if (row.config.truth.empty()) throw ConfigError("model " + std::to_string(row.index) + " has no truth values");
      spec.models.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  if (spec.models.empty()) throw ConfigError("experiment spec has no models");
  return spec;
}

/// Seed of the realization and of chain attempt `attempt` for one replicate.
inline std::uint64_t simulation_seed(const ExperimentSpec& s, int model, std::size_t rep) {
  return derive_seed(s.master_seed, {static_cast<std::uint64_t>(s.experiment), static_cast<std::uint64_t>(model), rep, 0});
}
inline std::uint64_t chain_seed(const ExperimentSpec& s, int model, std::size_t rep, std::size_t attempt) {
  return derive_seed(s.master_seed,
                     {static_cast<std::uint64_t>(s.experiment), static_cast<std::uint64_t>(model), rep, 1 + attempt});
}

/// A reported quantity of one experiment.
struct Estimand {
  enum class Kind { Scalar, Axial, Ratio, Envelope };
  std::string name;
  Kind kind = Kind::Scalar;
  double truth = 0.0;
  bool error_stats = true;
};

inline std::vector<Estimand> estimands(int experiment, const RunConfig& cfg) {
  const auto& t = cfg.truth;
  std::vector<Estimand> out{{"alpha", Estimand::Kind::Scalar, t.at("alpha"), true}};
  if (experiment == 4) {
    for (const char* n : {"sigma_x_0", "sigma_x_1", "sigma_y_0", "sigma_y_1"})
      out.push_back({n, Estimand::Kind::Scalar, t.at(n), true});
    out.push_back({"circularity", Estimand::Kind::Envelope, 1.0, false});
    return out;
  }
  out.push_back({"sigma_x", Estimand::Kind::Scalar, t.at("sigma_x"), true});
  out.push_back({"sigma_y", Estimand::Kind::Scalar, t.at("sigma_y"), true});
  if (experiment != 2) out.push_back({"theta_0", Estimand::Kind::Axial, t.at("theta_0"), true});
  if (experiment == 3) out.push_back({"theta_1", Estimand::Kind::Scalar, t.at("theta_1"), true});
  out.push_back({"sigma_x/sigma_y", Estimand::Kind::Ratio, t.at("sigma_x") / t.at("sigma_y"), false});
  return out;
}

/// Hypothesis tests run per replicate: isotropy via the circularity interval
/// or envelope, and the constant-direction test when theta has a covariate.
inline std::vector<std::string> test_names(int experiment) {
  if (experiment == 4) return {"isotropy_envelope"};
  if (experiment == 3) return {"isotropy", "direction"};
  return {"isotropy"};
}

struct RerunRecord {
  int model = 0;
  std::size_t replicate = 0;
  std::uint64_t first_seed = 0;
  std::uint64_t second_seed = 0;
  std::size_t first_flags = 0;
  std::size_t second_flags = 0;
};

struct ReplicateResult {
  int model = 0;
  std::size_t replicate = 0;
  std::uint64_t sim_seed = 0;
  std::uint64_t chain_seed = 0;
  std::size_t n_points = 0;
  std::optional<std::string> error;
  std::vector<std::pair<std::string, CredibleInterval>> intervals;
  std::vector<std::pair<std::string, bool>> covered;
  std::vector<std::pair<std::string, bool>> rejected;
  std::vector<std::size_t> envelope_exits;
  std::optional<std::string> warning;
  std::optional<RerunRecord> rerun;
  NamedValues acceptance;
  double mean_centers = 0.0;

  bool ok() const { return !error.has_value(); }
};

struct TestSummary {
  std::string name;
  std::size_t rejected = 0;
  std::size_t total = 0;
  double reject_fraction = 0.0;
  double accept_fraction = 0.0;
};

struct ModelSummary {
  int index = 0;
  NamedValues design;
  std::size_t replicates = 0;
  std::size_t succeeded = 0;
  NamedValues coverage;
  std::vector<std::pair<std::string, RelativeError>> errors;
  std::vector<TestSummary> tests;
  NamedValues mean_acceptance;
  std::vector<RerunRecord> reruns;
  std::vector<std::pair<std::size_t, std::string>> failures;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ModelSummary> models;
  std::vector<ReplicateResult> replicates;  // ordered by (model row, replicate)
};

namespace detail {

inline std::string pad_index(std::size_t i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

inline Json replicate_json(const ReplicateResult& r) {
  Json j;
  j["model"] = r.model;
  j["replicate"] = r.replicate;
  j["simulation_seed"] = r.sim_seed;
  j["chain_seed"] = r.chain_seed;
  j["n_points"] = r.n_points;
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  Json iv = Json::object();
  for (const auto& [n, ci] : r.intervals) iv[n] = interval_json(ci);
  j["intervals"] = iv;
  Json cov = Json::object();
  for (const auto& [n, c] : r.covered) cov[n] = c;
  j["covered"] = cov;
  Json rej = Json::object();
  for (const auto& [n, c] : r.rejected) rej[n] = c;
  j["rejected"] = rej;
  if (!r.envelope_exits.empty() || r.warning) j["envelope_exits"] = r.envelope_exits;
  if (r.warning) j["warning"] = *r.warning;
  if (r.rerun)
    j["rerun"] = Json{{"first_seed", r.rerun->first_seed}, {"second_seed", r.rerun->second_seed},
                      {"first_flags", r.rerun->first_flags}, {"second_flags", r.rerun->second_flags}};
  Json acc = Json::object();
  for (const auto& [n, v] : r.acceptance) acc[n] = v;
  j["acceptance_rate"] = acc;
  j["mean_centers"] = r.mean_centers;
  return j;
}

}  // namespace detail

/// simulate -> fit (with at most one label-switch re-seed) -> summarize -> test.
/// Writes the replicate's files into `dir` when it is nonempty.
inline ReplicateResult run_replicate(const ExperimentSpec& spec, const ModelRow& row, std::size_t rep,
                                     const std::string& dir = "", bool plots = false) {
  ReplicateResult r;
  r.model = row.index;
  r.replicate = rep;
  r.sim_seed = simulation_seed(spec, row.index, rep);
  r.chain_seed = chain_seed(spec, row.index, rep, 0);
  try {
    const RunConfig& cfg = row.config;
    if (!dir.empty()) std::filesystem::create_directories(dir);
    const auto covs = build_covariates(cfg);
    const auto truth = truth_model(cfg, covs);
    const auto [pattern, sim] = simulate(truth.spec, truth.kappa, r.sim_seed);
    r.n_points = pattern.size();
    if (!dir.empty()) {
      write_pattern_csv(pattern, dir + "/pattern.csv");
      write_text_file(dir + "/truth.json", dump_json(sim_truth_json(sim, cfg)));
    }
    if (pattern.empty()) throw NumericalError("simulated pattern is empty");

    const auto init = initial_model(cfg, covs, pattern.size());
    PosteriorSamples samples = run_chain(pattern, init, cfg.priors, mcmc_config(cfg, r.chain_seed));
    auto flags = spec.rerun_label_switch ? detect_label_switch(samples) : std::vector<std::size_t>{};
    if (!flags.empty()) {
      if (!dir.empty() && plots) emit_trace_panels(samples, dir + "/trace_first.svg", flags);
      RerunRecord rec{row.index, rep, r.chain_seed, chain_seed(spec, row.index, rep, 1), flags.size(), 0};
      r.chain_seed = rec.second_seed;
      samples = run_chain(pattern, init, cfg.priors, mcmc_config(cfg, r.chain_seed));
      flags = detect_label_switch(samples);
      rec.second_flags = flags.size();
      r.rerun = rec;
    }

    std::optional<EnvelopeTest> envelope;
    for (const auto& e : estimands(spec.experiment, cfg)) {
      switch (e.kind) {
        case Estimand::Kind::Scalar:
        case Estimand::Kind::Axial: {
          const auto col = samples.column(e.name);
          const auto ci = e.kind == Estimand::Kind::Axial ? circular_interval_axial(col, cfg.level)
                                                          : summarize_scalar(col, cfg.level);
          r.intervals.emplace_back(e.name, ci);
          r.covered.emplace_back(e.name, ci.contains(e.truth));
          break;
        }
        case Estimand::Kind::Ratio: {
          const auto t = circularity_test(samples, std::nullopt, cfg.level);
          r.intervals.emplace_back(e.name, t.interval);
          r.covered.emplace_back(e.name, t.interval.contains(e.truth));
          break;
        }
        case Estimand::Kind::Envelope: {
          envelope = circularity_envelope(samples, cfg.envelope_grid, cfg.level);
          const auto& env = envelope->envelope;
          bool inside = true;
          for (std::size_t k = 0; k < env.grid.size(); ++k) {
            const double ratio = truth.spec.field.sigma_x_at(env.grid[k]) / truth.spec.field.sigma_y_at(env.grid[k]);
            inside = inside && env.lower[k] <= ratio && ratio <= env.upper[k];
          }
          r.covered.emplace_back(e.name, inside);
          r.envelope_exits = envelope->exits;
          r.warning = envelope->warning;
          break;
        }
      }
    }
    for (const auto& name : test_names(spec.experiment)) {
      bool reject = false;
      if (name == "isotropy") reject = circularity_test(samples, std::nullopt, cfg.level).reject;
      else if (name == "direction") reject = direction_test(samples, cfg.level).reject;
      else reject = envelope->reject;
      r.rejected.emplace_back(name, reject);
    }
    for (const char* k : {"birth", "death", "move"}) r.acceptance.emplace_back(k, samples.acceptance.at(k).rate());
    for (const auto& p : samples.parameters) r.acceptance.emplace_back(p.name, samples.acceptance.at(p.name).rate());
    double centers = 0.0;
    for (auto n : samples.n_centers) centers += static_cast<double>(n);
    r.mean_centers = samples.empty() ? 0.0 : centers / static_cast<double>(samples.size());

    if (!dir.empty()) {
      write_samples_csv(samples, dir + "/samples.csv");
      write_text_file(dir + "/summary.json", dump_json(detail::replicate_json(r)));
      if (plots) {
        emit_trace_panels(samples, dir + "/trace.svg", flags);
        if (envelope) {
          write_envelope_csv(*envelope, dir + "/envelope.csv");
          emit_envelope_heatmap(*envelope, cfg.window, dir + "/envelope.svg", &pattern);
        }
      }
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    if (!dir.empty()) {
      try {
        write_text_file(dir + "/summary.json", dump_json(detail::replicate_json(r)));
      } catch (const std::exception&) {
      }
    }
  }
  return r;
}

/// Aggregates one model row's replicates.
inline ModelSummary summarize_model(const ExperimentSpec& spec, const ModelRow& row,
                                    const std::vector<const ReplicateResult*>& reps) {
  ModelSummary m;
  m.index = row.index;
  m.design = row.design;
  m.replicates = reps.size();
  std::vector<const ReplicateResult*> ok;
  for (const auto* r : reps) {
    if (r->ok()) ok.push_back(r);
    else m.failures.emplace_back(r->replicate, *r->error);
    if (r->rerun) m.reruns.push_back(*r->rerun);
  }
  m.succeeded = ok.size();
  if (ok.empty()) return m;
  const double n = static_cast<double>(ok.size());
  for (const auto& e : estimands(spec.experiment, row.config)) {
    std::size_t hits = 0;
    std::vector<double> est;
    for (const auto* r : ok) {
      for (const auto& [name, c] : r->covered)
        if (name == e.name && c) ++hits;
      for (const auto& [name, ci] : r->intervals)
        if (name == e.name) est.push_back(ci.point_estimate);
    }
    m.coverage.emplace_back(e.name, static_cast<double>(hits) / n);
    if (e.error_stats)
      m.errors.emplace_back(e.name, e.kind == Estimand::Kind::Axial ? relative_error_stats_axial(est, e.truth)
                                                                    : relative_error_stats(est, e.truth));
  }
  for (const auto& t : test_names(spec.experiment)) {
    TestSummary s;
    s.name = t;
    s.total = ok.size();
    for (const auto* r : ok)
      for (const auto& [name, rej] : r->rejected)
        if (name == t && rej) ++s.rejected;
    s.reject_fraction = static_cast<double>(s.rejected) / n;
    s.accept_fraction = static_cast<double>(s.total - s.rejected) / n;
    m.tests.push_back(s);
  }
  for (std::size_t k = 0; k < ok.front()->acceptance.size(); ++k) {
    double s = 0.0;
    for (const auto* r : ok) s += r->acceptance[k].second;
    m.mean_acceptance.emplace_back(ok.front()->acceptance[k].first, s / n);
  }
  return m;
}

struct RunOptions {
  std::string out_dir;  // empty: nothing written
  std::size_t jobs = 1;
  bool plots = false;
  std::vector<int> models;  // empty: all rows
  std::function<void(const ReplicateResult&)> on_done;
};

/// Runs every (model row, replicate) in a work pool. The reduction is in
/// (model row, replicate) order, so the report does not depend on `jobs`.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& opt = {}) {
  if (spec.replicates < 1) throw ConfigError("replicates must be >= 1");
  std::vector<const ModelRow*> rows;
  for (const auto& row : spec.models)
    if (opt.models.empty() || std::find(opt.models.begin(), opt.models.end(), row.index) != opt.models.end())
      rows.push_back(&row);
  if (rows.empty()) throw ConfigError("no model rows selected");

  const std::size_t n_tasks = rows.size() * spec.replicates;
  std::vector<ReplicateResult> results(n_tasks);
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;
  const auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const ModelRow& row = *rows[t / spec.replicates];
      const std::size_t rep = t % spec.replicates;
      const std::string dir = opt.out_dir.empty() ? std::string()
                                                  : opt.out_dir + "/model" + std::to_string(row.index) + "/rep" +
                                                        detail::pad_index(rep);
      results[t] = run_replicate(spec, row, rep, dir, opt.plots);
      if (opt.on_done) {
        std::lock_guard<std::mutex> lock(done_mutex);
        opt.on_done(results[t]);
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(opt.jobs, 1, n_tasks);
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ExperimentReport report;
  report.spec = spec;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<const ReplicateResult*> reps;
    for (std::size_t r = 0; r < spec.replicates; ++r) reps.push_back(&results[i * spec.replicates + r]);
    report.models.push_back(summarize_model(spec, *rows[i], reps));
  }
  report.replicates = std::move(results);
  return report;
}

struct CoverageRow {
  int model = 0;
  NamedValues design;
  NamedValues coverage;
};

/// Coverage fractions per model row. Errors when any row has no successful replicate.
inline std::vector<CoverageRow> coverage_table(const ExperimentReport& report) {
  if (report.models.empty()) throw UsageError("coverage table of an empty report");
  std::vector<CoverageRow> rows;
  for (const auto& m : report.models) {
    if (m.succeeded == 0)
      throw UsageError("model " + std::to_string(m.index) + " has no successful replicates");
    rows.push_back({m.index, m.design, m.coverage});
  }
  return rows;
}

inline Json report_json(const ExperimentReport& report) {
  Json j;
  j["experiment"] = report.spec.experiment;
  j["priors"] = prior_choice_name(report.spec.priors);
  j["paper"] = report.spec.paper;
  j["replicates"] = report.spec.replicates;
  j["master_seed"] = report.spec.master_seed;
  Json models = Json::array();
  Json rerun_log = Json::array();
  for (const auto& m : report.models) {
    Json mj;
    mj["model"] = m.index;
    Json design = Json::object();
    for (const auto& [k, v] : m.design) design[k] = v;
    mj["design"] = design;
    mj["replicates"] = m.replicates;
    mj["succeeded"] = m.succeeded;
    Json cov = Json::object();
    for (const auto& [k, v] : m.coverage) cov[k] = v;
    mj["coverage"] = cov;
    Json bias = Json::object(), mse = Json::object();
    for (const auto& [k, v] : m.errors) {
      bias[k] = v.bias;
      mse[k] = v.mse;
    }
    mj["relative_bias"] = bias;
    mj["relative_mse"] = mse;
    Json tests = Json::object();
    for (const auto& t : m.tests)
      tests[t.name] = Json{{"rejected", t.rejected}, {"total", t.total},
                           {"reject_fraction", t.reject_fraction}, {"accept_fraction", t.accept_fraction}};
    mj["tests"] = tests;
    Json acc = Json::object();
    for (const auto& [k, v] : m.mean_acceptance) acc[k] = v;
    mj["mean_acceptance_rate"] = acc;
    Json fails = Json::array();
    for (const auto& [rep, msg] : m.failures) fails.push_back(Json{{"replicate", rep}, {"error", msg}});
    mj["failures"] = fails;
    models.push_back(mj);
    for (const auto& rr : m.reruns)
      rerun_log.push_back(Json{{"model", rr.model}, {"replicate", rr.replicate}, {"first_seed", rr.first_seed},
                               {"second_seed", rr.second_seed}, {"first_flags", rr.first_flags},
                               {"second_flags", rr.second_flags}});
  }
  j["models"] = models;
  j["rerun_log"] = rerun_log;
  Json reps = Json::array();
  for (const auto& r : report.replicates) reps.push_back(detail::replicate_json(r));
  j["replicate_results"] = reps;
  return j;
}

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  return s == "-0.000" ? "0.000" : s;
}

inline std::string design_cell(double v) { return format_double(std::round(v * 1e6) / 1e6); }

inline void markdown_header(std::ostringstream& s, const ModelSummary& first, const std::vector<std::string>& cols) {
  s << "| Model |";
  for (const auto& [k, v] : first.design) s << ' ' << k << " |";
  for (const auto& c : cols) s << ' ' << c << " |";
  s << "\n|---|";
  for (std::size_t k = 0; k < first.design.size() + cols.size(); ++k) s << "---|";
  s << '\n';
}

inline void markdown_row_start(std::ostringstream& s, const ModelSummary& m) {
  s << "| " << m.index << " |";
  for (const auto& [k, v] : m.design) s << ' ' << design_cell(v) << " |";
}

}  // namespace detail

/// Rendered tables: coverage, relative bias, relative MSE, test rejections, reruns, failures.
inline std::string report_markdown(const ExperimentReport& report) {
  using namespace detail;
  std::ostringstream s;
  const auto& spec = report.spec;
  s << "# Experiment " << spec.experiment << " (" << prior_choice_name(spec.priors) << " priors, "
    << (spec.paper ? "full" : "desk") << " scale)\n\n";
  s << "Replicates per model: " << spec.replicates << ". Master seed: " << spec.master_seed << ".\n\n";
  const auto* first = [&]() -> const ModelSummary* {
    for (const auto& m : report.models)
      if (m.succeeded) return &m;
    return nullptr;
  }();
  if (first) {
    std::vector<std::string> cols;
    for (const auto& [k, v] : first->coverage) cols.push_back(k);
    s << "## Coverage of " << fixed(100.0 * spec.models.front().config.level, 0) << "% credible intervals\n\n";
    markdown_header(s, *first, cols);
    for (const auto& m : report.models) {
      markdown_row_start(s, m);
      for (std::size_t k = 0; k < cols.size(); ++k)
        s << ' ' << (m.succeeded ? fixed(m.coverage[k].second, 2) : "-") << " |";
      s << '\n';
    }
    std::vector<std::string> ecols;
    for (const auto& [k, v] : first->errors) ecols.push_back(k);
    for (int part = 0; part < 2; ++part) {
      s << "\n## Relative " << (part == 0 ? "bias" : "MSE") << "\n\n";
      markdown_header(s, *first, ecols);
      for (const auto& m : report.models) {
        markdown_row_start(s, m);
        for (std::size_t k = 0; k < ecols.size(); ++k)
          s << ' ' << (m.succeeded ? fixed(part == 0 ? m.errors[k].second.bias : m.errors[k].second.mse) : "-")
            << " |";
        s << '\n';
      }
    }
    s << "\n## Test rejections\n\n| Model | test | rejected | reject fraction | non-reject fraction |\n|---|---|---|---|---|\n";
    for (const auto& m : report.models)
      for (const auto& t : m.tests)
        s << "| " << m.index << " | " << t.name << " | " << t.rejected << "/" << t.total << " | "
          << fixed(t.reject_fraction, 2) << " | " << fixed(t.accept_fraction, 2) << " |\n";
    s << "\n## Mean acceptance rates\n\n";
    std::vector<std::string> acols;
    for (const auto& [k, v] : first->mean_acceptance) acols.push_back(k);
    markdown_header(s, *first, acols);
    for (const auto& m : report.models) {
      markdown_row_start(s, m);
      for (std::size_t k = 0; k < acols.size(); ++k)
        s << ' ' << (m.succeeded ? fixed(m.mean_acceptance[k].second, 2) : "-") << " |";
      s << '\n';
    }
  }
  s << "\n## Label-switch reruns\n\n";
  bool any = false;
  for (const auto& m : report.models)
    for (const auto& r : m.reruns) {
      any = true;
      s << "- model " << r.model << ", replicate " << r.replicate << ": " << r.first_flags
        << " flagged draws with seed " << r.first_seed << "; rerun with seed " << r.second_seed << " has "
        << r.second_flags << "\n";
    }
  if (!any) s << "None.\n";
  s << "\n## Failed replicates\n\n";
  any = false;
  for (const auto& m : report.models)
    for (const auto& [rep, msg] : m.failures) {
      any = true;
      s << "- model " << m.index << ", replicate " << rep << ": " << msg << "\n";
    }
  if (!any) s << "None.\n";
  return s.str();
}

inline void write_report(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/report.json", dump_json(report_json(report)));
  write_text_file(dir + "/report.md", report_markdown(report));
}

}  // namespace anssns
