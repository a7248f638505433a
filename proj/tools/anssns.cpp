// Command-line front end: simulate, fit, test, experiment, diag.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "anssns/config.hpp"
#include "anssns/errors.hpp"
#include "anssns/experiment.hpp"
#include "anssns/io.hpp"
#include "anssns/mcmc.hpp"
#include "anssns/posterior.hpp"
#include "anssns/simulate.hpp"
#include "anssns/svg.hpp"

namespace fs = std::filesystem;
using namespace anssns;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string pattern;
  std::string samples;
  bool plots = false;
  bool paper = false;
  int id = 1;
  std::string priors = "uniform";
  std::optional<std::size_t> replicates;
  std::vector<int> models;
  std::size_t jobs = 0;
  std::string dump_spec;
};

RunConfig load_with_seed(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

int cmd_simulate(const Options& o) {
  const RunConfig cfg = load_with_seed(o);
  const auto truth = truth_model(cfg, build_covariates(cfg));
  const auto [pattern, sim] = simulate(truth.spec, truth.kappa, cfg.seed);
  fs::create_directories(o.out);
  write_pattern_csv(pattern, o.out + "/pattern.csv");
  write_text_file(o.out + "/truth.json", dump_json(sim_truth_json(sim, cfg)));
  std::cerr << "simulated " << pattern.size() << " points from " << sim.centers.size() << " clusters\n";
  return 0;
}

int cmd_fit(const Options& o) {
  const RunConfig cfg = load_with_seed(o);
  const PointPattern pattern = read_pattern_csv(o.pattern, cfg.window);
  const auto covs = build_covariates(cfg);
  const auto init = initial_model(cfg, covs, pattern.size());
  const auto samples = run_chain(pattern, init, cfg.priors, mcmc_config(cfg, cfg.seed));
  fs::create_directories(o.out);
  write_samples_csv(samples, o.out + "/samples.csv");
  Json summary;
  summary["seed"] = cfg.seed;
  summary["n_points"] = pattern.size();
  summary["draws"] = samples.size();
  summary["acceptance"] = acceptance_json(samples.acceptance, samples.parameters);
  summary["posterior"] = posterior_summary_json(samples, cfg.level);
  std::vector<std::size_t> flags;
  if (samples.index_of("theta_0") && samples.size() > 1) flags = detect_label_switch(samples);
  summary["label_switch_draws"] = flags;
  write_text_file(o.out + "/fit.json", dump_json(summary));
  if (o.plots) emit_trace_panels(samples, o.out + "/trace.svg", flags);
  if (!flags.empty()) std::cerr << "warning: " << flags.size() << " possible label-switch transitions\n";
  return 0;
}

int cmd_test(const Options& o) {
  const RunConfig cfg = load_config(o.config);
  const PosteriorSamples samples = read_samples_csv(o.samples, cfg);
  fs::create_directories(o.out);
  Json report;
  report["draws"] = samples.size();
  report["level"] = cfg.level;
  const bool constant_sigma = cfg.sigma_x_covariates.empty() && cfg.sigma_y_covariates.empty();
  if (constant_sigma) {
    const auto t = circularity_test(samples, std::nullopt, cfg.level);
    report["isotropy"] = Json{{"interval", interval_json(t.interval)}, {"reject", t.reject}};
  } else {
    if (cfg.test_at) {
      const auto t = circularity_test(samples, cfg.test_at, cfg.level);
      report["isotropy_at"] = Json{{"at", point_json(*cfg.test_at)},
                                   {"interval", interval_json(t.interval)},
                                   {"reject", t.reject}};
    }
    const auto env = circularity_envelope(samples, cfg.envelope_grid, cfg.level);
    write_envelope_csv(env, o.out + "/envelope.csv");
    Json ej{{"grid", cfg.envelope_grid}, {"reject", env.reject}, {"exits", env.exits},
            {"central_draws", env.envelope.central_draw_count}};
    if (env.warning) {
      ej["warning"] = *env.warning;
      std::cerr << "warning: " << *env.warning << '\n';
    }
    report["isotropy_envelope"] = ej;
    if (o.plots) {
      std::optional<PointPattern> pattern;
      if (!o.pattern.empty()) pattern = read_pattern_csv(o.pattern, cfg.window);
      emit_envelope_heatmap(env, cfg.window, o.out + "/envelope.svg", pattern ? &*pattern : nullptr);
    }
  }
  if (cfg.theta_covariates.size() == 1) {
    const auto t = direction_test(samples, cfg.level);
    report["direction"] = Json{{"interval", interval_json(t.interval)}, {"reject", t.reject}};
  }
  report["posterior"] = posterior_summary_json(samples, cfg.level);
  write_text_file(o.out + "/test.json", dump_json(report));
  return 0;
}

int cmd_diag(const Options& o) {
  const RunConfig cfg = load_config(o.config);
  const PosteriorSamples samples = read_samples_csv(o.samples, cfg);
  fs::create_directories(o.out);
  std::vector<std::size_t> flags;
  if (samples.index_of("theta_0") && samples.size() > 1) flags = detect_label_switch(samples);
  Json d;
  d["draws"] = samples.size();
  d["label_switch_draws"] = flags;
  d["posterior"] = posterior_summary_json(samples, cfg.level);
  write_text_file(o.out + "/diag.json", dump_json(d));
  emit_trace_panels(samples, o.out + "/trace.svg", flags);
  for (const auto& p : samples.parameters)
    emit_traceplot(samples, p.name, o.out + "/trace_" + p.name + ".svg", flags);
  if (!flags.empty()) std::cerr << "warning: " << flags.size() << " possible label-switch transitions\n";
  return 0;
}

int cmd_experiment(const Options& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) {
    const auto dir = fs::path(o.config).parent_path().string();
    spec = spec_from_json(read_json_file(o.config), dir.empty() ? "." : dir);
    if (o.seed) spec.master_seed = *o.seed;
  } else {
    spec = make_experiment(o.id, parse_prior_choice(o.priors), o.paper, o.seed.value_or(kDefaultMasterSeed));
  }
  if (o.replicates) {
    if (*o.replicates < 1) throw ConfigError("--replicates must be >= 1");
    spec.replicates = *o.replicates;
  }
  if (!o.dump_spec.empty()) {
    write_text_file(o.dump_spec, dump_json(spec_to_json(spec)));
    return 0;
  }
  if (o.out.empty()) throw ConfigError("--out is required");

  const std::string dir = o.out + "/exp" + std::to_string(spec.experiment) + "_" + prior_choice_name(spec.priors);
  fs::create_directories(dir);
  write_text_file(dir + "/spec.json", dump_json(spec_to_json(spec)));
  RunOptions opt;
  opt.out_dir = dir;
  opt.plots = o.plots;
  opt.models = o.models;
  opt.jobs = o.jobs ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
  opt.on_done = [](const ReplicateResult& r) {
    std::cerr << "model " << r.model << " replicate " << r.replicate << ": "
              << (r.ok() ? "done" : "failed: " + *r.error) << (r.rerun ? " (label-switch rerun)" : "") << '\n';
  };
  const auto report = run_experiment(spec, opt);
  write_report(report, dir);
  std::cout << report_markdown(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neyman-Scott processes with covariate-dependent anisotropic clusters"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "simulate one realization from the model section");
  sim->add_option("--config", o.config, "run config (JSON)")->required();
  sim->add_option("--seed", o.seed, "simulation seed (overrides seeds.master)");
  sim->add_option("--out", o.out, "output directory")->required();

  auto* fit = app.add_subcommand("fit", "run the MCMC sampler on a pattern");
  fit->add_option("--config", o.config, "run config (JSON)")->required();
  fit->add_option("--pattern", o.pattern, "pattern CSV (x,y)")->required();
  fit->add_option("--seed", o.seed, "chain seed (overrides seeds.master)");
  fit->add_option("--out", o.out, "output directory")->required();
  fit->add_flag("--plots", o.plots, "write trace.svg");

  auto* test = app.add_subcommand("test", "isotropy and constant-direction tests on posterior samples");
  test->add_option("--config", o.config, "run config used for the fit")->required();
  test->add_option("--samples", o.samples, "samples CSV from fit")->required();
  test->add_option("--pattern", o.pattern, "pattern CSV, drawn over the envelope map");
  test->add_option("--out", o.out, "output directory")->required();
  test->add_flag("--plots", o.plots, "write envelope.svg");

  auto* exp = app.add_subcommand("experiment", "replicate one of the four simulation experiments");
  exp->add_option("--id", o.id, "experiment 1-4")->check(CLI::Range(1, 4));
  exp->add_option("--priors", o.priors, "uniform | informative (experiment 1)");
  exp->add_flag("--paper", o.paper, "full schedule: 20 replicates, 50000 steps, burn-in 25000");
  exp->add_option("--config", o.config, "experiment spec JSON (as written by --dump-spec)");
  exp->add_option("--seed", o.seed, "master seed");
  exp->add_option("--replicates", o.replicates, "override the replicate count");
  exp->add_option("--models", o.models, "model rows to run (default all)")->delimiter(',');
  exp->add_option("--jobs", o.jobs, "worker threads (default: hardware concurrency)");
  exp->add_option("--out", o.out, "output root");
  exp->add_option("--dump-spec", o.dump_spec, "write the experiment spec JSON and exit");
  exp->add_flag("--plots", o.plots, "write trace and envelope SVGs per replicate");

  auto* diag = app.add_subcommand("diag", "traceplots and label-switch detection");
  diag->add_option("--config", o.config, "run config used for the fit")->required();
  diag->add_option("--samples", o.samples, "samples CSV from fit")->required();
  diag->add_option("--out", o.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*fit) return cmd_fit(o);
    if (*test) return cmd_test(o);
    if (*exp) return cmd_experiment(o);
    if (*diag) return cmd_diag(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
