#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "anssns/errors.hpp"
#include "anssns/geometry.hpp"
#include "anssns/mcmc.hpp"
#include "anssns/model.hpp"

namespace anssns {

struct CredibleInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  double point_estimate = 0.0;
  bool circular = false;  // axial arc from lower counterclockwise to upper, mod pi

  bool contains(double v) const {
    if (!circular) return lower <= v && v <= upper;
    const double a = axial_angle(v);
    return lower <= upper ? (lower <= a && a <= upper) : (a >= lower || a <= upper);
  }
};

/// Quantile by linear interpolation of order statistics (Hyndman-Fan type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw UsageError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline void check_level(double level) {
  if (!(level > 0.0 && level <= 1.0)) throw UsageError("credible level must lie in (0, 1]");
}

/// Posterior median with the equal-tail interval at `level`.
inline CredibleInterval summarize_scalar(std::vector<double> draws, double level = 0.95) {
  if (draws.size() < 2) throw UsageError("summarize_scalar needs at least 2 draws");
  check_level(level);
  std::sort(draws.begin(), draws.end());
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(draws, tail), quantile_sorted(draws, 1.0 - tail), level,
          quantile_sorted(draws, 0.5), false};
}

namespace detail {
inline double arc_distance(double a, double b) {
  return std::numbers::pi - std::abs(std::numbers::pi - std::abs(a - b));
}
inline double doubled(double theta) { return 2.0 * axial_angle(theta); }
}  // namespace detail

/// Median of axial angles: doubles the angles, picks the data angle with the
/// smallest total arc distance to all others (ties: smallest angle), halves back.
inline double circular_median_axial(const std::vector<double>& draws) {
  if (draws.empty()) throw UsageError("circular median of no draws");
  std::vector<double> phi(draws.size());
  std::transform(draws.begin(), draws.end(), phi.begin(), detail::doubled);
  double best = std::numeric_limits<double>::infinity();
  double best_phi = 0.0;
  for (const double candidate : phi) {
    double s = 0.0;
    for (const double p : phi) s += detail::arc_distance(p, candidate);
    const double tol = 1e-12 * std::max(1.0, s);
    if (best == std::numeric_limits<double>::infinity() || s < best - tol ||
        (std::abs(s - best) <= tol && candidate < best_phi)) {
      best = s;
      best_phi = candidate;
    }
  }
  return axial_angle(0.5 * best_phi);
}

/// Equal-tail arc for axial angles: doubled angles are rotated so that the
/// circular median sits at pi, linear quantiles are taken, then everything is
/// rotated back and halved. The arc may wrap through 0 (lower > upper).
inline CredibleInterval circular_interval_axial(const std::vector<double>& draws, double level = 0.95) {
  if (draws.empty()) throw UsageError("circular interval of no draws");
  check_level(level);
  const double median = circular_median_axial(draws);
  const double phi_m = 2.0 * median;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> shifted(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    double s = std::fmod(detail::doubled(draws[i]) - phi_m + std::numbers::pi, two_pi);
    if (s < 0.0) s += two_pi;
    shifted[i] = s;
  }
  std::sort(shifted.begin(), shifted.end());
  const double tail = 0.5 * (1.0 - level);
  const auto back = [&](double q) { return axial_angle(0.5 * (q - std::numbers::pi + phi_m)); };
  return {back(quantile_sorted(shifted, tail)), back(quantile_sorted(shifted, 1.0 - tail)), level,
          median, true};
}

/// Signed axial difference estimate - truth in (-pi/2, pi/2].
inline double axial_difference(double estimate, double truth) {
  double d = axial_angle(estimate - truth);
  if (d > 0.5 * std::numbers::pi) d -= std::numbers::pi;
  return d;
}

struct TestResult {
  CredibleInterval interval;
  bool reject = false;
};

/// Per-draw sigma_x(u) / sigma_y(u).
inline std::vector<double> sigma_ratio_draws(const PosteriorSamples& samples, const Point2& u) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t d = 0; d < samples.size(); ++d) {
    const auto field = samples.field_at(d);
    out.push_back(field.sigma_x_at(u) / field.sigma_y_at(u));
  }
  return out;
}

/// Isotropy test on the circularity sigma_x / sigma_y: reject iff 1 lies
/// outside the credible interval. With location-dependent sigma fields a
/// location `at` is required (pointwise version); otherwise use the envelope.
inline TestResult circularity_test(const PosteriorSamples& samples, std::optional<Point2> at = std::nullopt,
                                   double level = 0.95) {
  std::vector<double> ratios;
  if (at) {
    ratios = sigma_ratio_draws(samples, *at);
  } else {
    if (!samples.covariates->sigma_x.empty() || !samples.covariates->sigma_y.empty())
      throw UsageError(
          "circularity test needs constant sigma fields; use the circularity envelope instead");
    ratios.reserve(samples.size());
    for (std::size_t d = 0; d < samples.size(); ++d) ratios.push_back(intercept_sigma_ratio(samples, d));
  }
  TestResult r;
  r.interval = summarize_scalar(std::move(ratios), level);
  r.reject = !r.interval.contains(1.0);
  return r;
}

/// Constant-direction test: reject iff 0 lies outside the interval for theta_1.
inline TestResult direction_test(const PosteriorSamples& samples, double level = 0.95) {
  if (samples.covariates->theta.size() != 1)
    throw UsageError("direction test needs exactly one theta covariate");
  TestResult r;
  r.interval = summarize_scalar(samples.column("theta_1"), level);
  r.reject = !r.interval.contains(0.0);
  return r;
}

struct CredibleEnvelope {
  std::vector<Point2> grid;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
  std::size_t central_draw_count = 0;  // draws lying entirely inside
};

struct EnvelopeTest {
  CredibleEnvelope envelope;
  bool reject = false;
  std::vector<std::size_t> exits;  // grid indices where the benchmark leaves the envelope
  std::optional<std::string> warning;
};

/// Cell-centre grid of resolution n x n over w, row-major from y_min upward.
inline std::vector<Point2> regular_grid(const Window& w, std::size_t n) {
  std::vector<Point2> grid;
  grid.reserve(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      grid.push_back({w.x_min + w.width() * (static_cast<double>(i) + 0.5) / static_cast<double>(n),
                      w.y_min + w.height() * (static_cast<double>(j) + 0.5) / static_cast<double>(n)});
  return grid;
}

/// Indices of the most central curves by extreme rank length.
///
/// `curves[d][k]` is curve d at grid point k. Each curve gets the two-sided
/// pointwise rank min(#below + 1, #above + 1) at every grid point; its sorted
/// rank vector is compared lexicographically (larger = more central), ties
/// broken by lower curve index.
inline std::vector<std::size_t> erl_central_set(const std::vector<std::vector<double>>& curves,
                                                std::size_t keep) {
  const std::size_t m = curves.size();
  if (m == 0) return {};
  const std::size_t n_points = curves.front().size();
  std::vector<std::vector<std::size_t>> ranks(m, std::vector<std::size_t>(n_points));
  std::vector<double> column(m);
  for (std::size_t k = 0; k < n_points; ++k) {
    for (std::size_t d = 0; d < m; ++d) column[d] = curves[d][k];
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t d = 0; d < m; ++d) {
      const auto lo = std::lower_bound(sorted.begin(), sorted.end(), column[d]);
      const auto hi = std::upper_bound(sorted.begin(), sorted.end(), column[d]);
      const auto below = static_cast<std::size_t>(lo - sorted.begin());
      const auto above = static_cast<std::size_t>(sorted.end() - hi);
      ranks[d][k] = std::min(below, above) + 1;
    }
  }
  for (auto& r : ranks) std::sort(r.begin(), r.end());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranks[a] > ranks[b]; });
  order.resize(std::min(keep, m));
  return order;
}

inline std::size_t central_count(std::size_t m, double level) {
  return std::min<std::size_t>(m, static_cast<std::size_t>(std::ceil(level * static_cast<double>(m) - 1e-9)));
}

/// Global envelope from curves: pointwise min/max over the ERL-central set.
inline CredibleEnvelope envelope_from_curves(const std::vector<std::vector<double>>& curves,
                                             double level) {
  check_level(level);
  if (curves.empty()) throw UsageError("envelope needs at least one curve");
  const std::size_t n_points = curves.front().size();
  if (n_points == 0) throw ConfigError("envelope grid is empty");
  const auto central = erl_central_set(curves, central_count(curves.size(), level));
  CredibleEnvelope env;
  env.level = level;
  env.lower.assign(n_points, std::numeric_limits<double>::infinity());
  env.upper.assign(n_points, -std::numeric_limits<double>::infinity());
  for (const auto d : central)
    for (std::size_t k = 0; k < n_points; ++k) {
      env.lower[k] = std::min(env.lower[k], curves[d][k]);
      env.upper[k] = std::max(env.upper[k], curves[d][k]);
    }
  for (const auto& c : curves) {
    bool inside = true;
    for (std::size_t k = 0; k < n_points && inside; ++k)
      inside = env.lower[k] <= c[k] && c[k] <= env.upper[k];
    if (inside) ++env.central_draw_count;
  }
  return env;
}

inline constexpr std::size_t kEnvelopeMinDraws = 100;
inline constexpr std::size_t kEnvelopeWarnDraws = 500;

/// Circularity-surface test: envelope of sigma_x(u)/sigma_y(u) over a
/// regular grid; reject iff the constant 1 leaves the envelope anywhere.
inline EnvelopeTest circularity_envelope(const PosteriorSamples& samples, std::size_t grid_resolution = 32,
                                         double level = 0.95) {
  if (grid_resolution == 0) throw ConfigError("envelope grid is empty");
  if (samples.size() < kEnvelopeMinDraws)
    throw UsageError("circularity envelope needs at least " + std::to_string(kEnvelopeMinDraws) +
                     " draws, got " + std::to_string(samples.size()));
  EnvelopeTest out;
  if (samples.size() < kEnvelopeWarnDraws)
    out.warning = "only " + std::to_string(samples.size()) + " draws; envelope extremes are coarse";

  const auto grid = regular_grid(samples.window, grid_resolution);
  std::vector<std::vector<double>> curves(samples.size(), std::vector<double>(grid.size()));
  for (std::size_t d = 0; d < samples.size(); ++d) {
    const auto field = samples.field_at(d);
    for (std::size_t k = 0; k < grid.size(); ++k)
      curves[d][k] = field.sigma_x_at(grid[k]) / field.sigma_y_at(grid[k]);
  }
  out.envelope = envelope_from_curves(curves, level);
  out.envelope.grid = grid;
  out.envelope.nx = grid_resolution;
  out.envelope.ny = grid_resolution;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (out.envelope.lower[k] > 1.0 || out.envelope.upper[k] < 1.0) out.exits.push_back(k);
  out.reject = !out.exits.empty();
  return out;
}

struct RelativeError {
  double bias = 0.0;
  double mse = 0.0;
};

/// mean(est - truth) / truth and mean((est - truth)^2) / truth^2.
inline RelativeError relative_error_stats(const std::vector<double>& estimates, double truth) {
  if (truth == 0.0) throw UsageError("relative error needs a nonzero truth");
  if (estimates.empty()) throw UsageError("relative error of no estimates");
  double s = 0.0, s2 = 0.0;
  for (double e : estimates) {
    s += e - truth;
    s2 += (e - truth) * (e - truth);
  }
  const double n = static_cast<double>(estimates.size());
  return {s / n / truth, s2 / n / (truth * truth)};
}

/// As relative_error_stats, with differences taken axially (mod pi).
inline RelativeError relative_error_stats_axial(const std::vector<double>& estimates, double truth) {
  if (truth == 0.0) throw UsageError("relative error needs a nonzero truth");
  if (estimates.empty()) throw UsageError("relative error of no estimates");
  double s = 0.0, s2 = 0.0;
  for (double e : estimates) {
    const double d = axial_difference(e, truth);
    s += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(estimates.size());
  return {s / n / truth, s2 / n / (truth * truth)};
}

}  // namespace anssns
