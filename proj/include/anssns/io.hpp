#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anssns/config.hpp"
#include "anssns/errors.hpp"
#include "anssns/mcmc.hpp"
#include "anssns/posterior.hpp"
#include "anssns/simulate.hpp"
#include "anssns/text.hpp"

namespace anssns {

/// Columns: draw, one per chain coordinate, n_centers, log_kernel.
inline void write_samples_csv(const PosteriorSamples& s, std::ostream& out) {
  out << "draw";
  for (const auto& p : s.parameters) out << ',' << p.name;
  out << ",n_centers,log_kernel\n";
  for (std::size_t d = 0; d < s.size(); ++d) {
    out << d;
    for (double v : s.values[d]) out << ',' << format_double(v);
    out << ',' << s.n_centers[d] << ',' << format_double(s.log_kernel[d]) << '\n';
  }
}

inline void write_samples_csv(const PosteriorSamples& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_samples_csv(s, out);
}

/// Reads samples written by write_samples_csv. Parameter names must match
/// the chain coordinates implied by `cfg`.
inline PosteriorSamples read_samples_csv(const std::string& path, const RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open samples file '" + path + "'");
  PosteriorSamples s;
  s.parameters = config_parameters(cfg);
  s.base_omega = zero_omega(cfg);
  s.covariates = build_covariates(cfg);
  s.window = cfg.window;
  s.config = mcmc_config(cfg, cfg.seed);

  std::string expected = "draw";
  for (const auto& p : s.parameters) expected += "," + p.name;
  expected += ",n_centers,log_kernel";

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("samples CSV is empty", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) throw ParseError("samples CSV header must be `" + expected + "`", 1);
  const std::size_t n_cols = s.parameters.size() + 3;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto v = parse_double(cell);
      if (!v) throw ParseError("bad number '" + cell + "'", line_no);
      cells.push_back(*v);
    }
    if (cells.size() != n_cols) throw ParseError("expected " + std::to_string(n_cols) + " columns", line_no);
    s.values.emplace_back(cells.begin() + 1, cells.end() - 2);
    s.iteration.push_back(cfg.burn_in + (s.values.size()) * cfg.thin);
    s.n_centers.push_back(static_cast<std::size_t>(cells[n_cols - 2]));
    s.log_kernel.push_back(cells[n_cols - 1]);
  }
  if (s.empty()) throw ParseError("samples CSV has no draws", line_no);
  return s;
}

inline Json point_json(const Point2& p) { return Json::array({p.x, p.y}); }

/// Sidecar describing the generating model and realized cluster centres.
inline Json sim_truth_json(const SimTruth& t, const RunConfig& cfg) {
  Json j;
  j["seed"] = t.seed;
  j["kappa"] = t.kappa;
  j["alpha"] = t.spec.alpha;
  j["truth"] = config_to_json(cfg)["model"]["truth"];
  j["n_centers"] = t.centers.size();
  j["total_offspring"] = t.total_offspring;
  j["n_in_window"] = t.n_in_window;
  Json centers = Json::array();
  for (std::size_t k = 0; k < t.centers.size(); ++k)
    centers.push_back(Json{{"x", t.centers[k].x}, {"y", t.centers[k].y}, {"count", t.counts[k]}});
  j["centers"] = centers;
  return j;
}

inline Json acceptance_json(const std::map<std::string, AcceptanceCount>& acc,
                            const std::vector<ParameterInfo>& params) {
  Json j = Json::object();
  const auto put = [&](const std::string& name) {
    const auto& a = acc.at(name);
    j[name] = Json{{"proposed", a.proposed}, {"accepted", a.accepted}, {"rate", a.rate()}};
  };
  for (const char* k : {"birth", "death", "move"}) put(k);
  for (const auto& p : params) put(p.name);
  return j;
}

inline Json interval_json(const CredibleInterval& ci) {
  return Json{{"estimate", ci.point_estimate}, {"lower", ci.lower}, {"upper", ci.upper},
              {"level", ci.level},             {"circular", ci.circular}};
}

/// Posterior summary per chain coordinate: circular for theta_0, linear otherwise.
inline Json posterior_summary_json(const PosteriorSamples& s, double level) {
  Json j = Json::object();
  for (const auto& p : s.parameters) {
    const auto col = s.column(p.name);
    j[p.name] = interval_json(p.name == "theta_0" ? circular_interval_axial(col, level)
                                                  : summarize_scalar(col, level));
  }
  return j;
}

/// lower/upper envelope and benchmark exits as a grid CSV (row-major from y_min upward).
inline void write_envelope_csv(const EnvelopeTest& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "i,j,x,y,lower,upper,exit\n";
  const auto& e = t.envelope;
  std::vector<bool> exit(e.grid.size(), false);
  for (auto k : t.exits) exit[k] = true;
  for (std::size_t k = 0; k < e.grid.size(); ++k)
    out << k % e.nx << ',' << k / e.nx << ',' << format_double(e.grid[k].x) << ',' << format_double(e.grid[k].y)
        << ',' << format_double(e.lower[k]) << ',' << format_double(e.upper[k]) << ',' << (exit[k] ? 1 : 0)
        << '\n';
}

}  // namespace anssns
