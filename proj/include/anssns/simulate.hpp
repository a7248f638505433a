#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "anssns/errors.hpp"
#include "anssns/geometry.hpp"
#include "anssns/model.hpp"
#include "anssns/rng.hpp"
#include "anssns/text.hpp"

namespace anssns {

struct PointPattern {
  std::vector<Point2> points;
  Window window;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Ground truth of one simulated realization.
struct SimTruth {
  std::vector<Point2> centers;
  std::vector<int> counts;  // offspring per center, before clipping to W
  std::size_t total_offspring = 0;
  std::size_t n_in_window = 0;
  double kappa = 0.0;
  std::uint64_t seed = 0;
  ModelSpec spec;
};

/// Standard normal variate; Box-Muller on two fresh uniforms so that the
/// generator state never depends on a cached second value.
inline double standard_normal(RngStream& rng) {
  const double u1 = rng.uniform_open();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline int poisson_count(RngStream& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<int> dist(mean);
  return dist(rng);
}

inline Point2 uniform_point(RngStream& rng, const Window& w) {
  const double x = w.x_min + w.width() * rng.uniform();
  const double y = w.y_min + w.height() * rng.uniform();
  return {x, y};
}

/// `count` i.i.d. draws center + L z with L the Cholesky factor of sigma.
inline std::vector<Point2> sample_offspring(const Point2& center, const CovMatrix& sigma, int count,
                                            RngStream& rng) {
  std::vector<Point2> out;
  if (count <= 0) return out;
  const Cholesky2 l = sigma.cholesky();
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double z1 = standard_normal(rng);
    const double z2 = standard_normal(rng);
    out.push_back({center.x + l.l11 * z1, center.y + l.l21 * z1 + l.l22 * z2});
  }
  return out;
}

/// One realization of the Neyman-Scott process: Poisson(kappa) parents on
/// W_ext, Poisson(alpha) offspring per parent displaced by N(0, Sigma(c)),
/// offspring outside W dropped. Stream 0 of `seed` drives the parents;
/// stream j + 1 drives cluster j.
inline std::pair<PointPattern, SimTruth> simulate(const ModelSpec& spec, double kappa,
                                                  std::uint64_t seed) {
  spec.validate();
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("simulate: kappa must be positive");

  SimTruth truth;
  truth.kappa = kappa;
  truth.seed = seed;
  truth.spec = spec;

  RngStream parent_rng(seed, 0);
  const int n_parents = poisson_count(parent_rng, kappa * spec.window_ext.area());
  truth.centers.reserve(static_cast<std::size_t>(n_parents));
  for (int j = 0; j < n_parents; ++j) truth.centers.push_back(uniform_point(parent_rng, spec.window_ext));

  PointPattern pattern;
  pattern.window = spec.window;
  truth.counts.reserve(truth.centers.size());
  for (std::size_t j = 0; j < truth.centers.size(); ++j) {
    RngStream rng(seed, j + 1);
    const Point2 c = truth.centers[j];
    const int count = poisson_count(rng, spec.alpha);
    truth.counts.push_back(count);
    truth.total_offspring += static_cast<std::size_t>(count);
    for (const auto& p : sample_offspring(c, spec.field.sigma_at(c), count, rng))
      if (spec.window.contains(p)) pattern.points.push_back(p);
  }
  truth.n_in_window = pattern.size();
  return {std::move(pattern), std::move(truth)};
}

/// Writes `x,y` CSV with round-trip exact numbers.
inline void write_pattern_csv(const PointPattern& pattern, std::ostream& out) {
  out << "x,y\n";
  for (const auto& p : pattern.points) out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

inline void write_pattern_csv(const PointPattern& pattern, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_pattern_csv(pattern, out);
}

/// Reads an `x,y` CSV. Every point must lie in `window`.
inline PointPattern read_pattern_csv(const std::string& path, const Window& window) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pattern file '" + path + "'");
  PointPattern pattern;
  pattern.window = window;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("pattern CSV is empty", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y") throw ParseError("pattern CSV header must be `x,y`", line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected `x,y`", line_no);
    const auto x = parse_double(std::string_view(line).substr(0, comma));
    const auto y = parse_double(std::string_view(line).substr(comma + 1));
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) throw ParseError("bad coordinate", line_no);
    const Point2 p{*x, *y};
    if (!window.contains(p)) throw ParseError("point outside the observation window", line_no);
    pattern.points.push_back(p);
  }
  return pattern;
}

}  // namespace anssns
