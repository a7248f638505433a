#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "anssns/errors.hpp"
#include "anssns/geometry.hpp"
#include "anssns/text.hpp"

namespace anssns {

template <std::size_t N>
struct GaussLegendreRule {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};
};

/// N-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_N).
template <std::size_t N>
GaussLegendreRule<N> make_gauss_legendre() {
  GaussLegendreRule<N> rule;
  const std::size_t half = (N + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (N + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= N; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = N * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[N - 1 - i] = x;
    rule.weights[N - 1 - i] = w;
  }
  return rule;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline constexpr std::size_t kQuadratureOrder = 24;
inline constexpr double kTruncationSds = 8.0;
// Panel width in units of the narrowest length scale of the integrand.
inline constexpr double kPanelScale = 3.0;

/// Probability mass of N(center, sigma) inside window `w`.
///
/// The y-integral is done exactly: conditional on x, y is normal with mean
/// cy + (a12/a11)(x - cx) and variance det/a11. The remaining x-integral runs
/// over [cx -+ 8 sqrt(a11)] clipped to w, using composite 24-point
/// Gauss-Legendre panels no wider than 3x the smaller of the marginal sd and
/// the width over which the conditional CDF difference changes. Mass beyond
/// the 8-sd bounding box of the 8-Mahalanobis ellipse is treated as zero.
inline double gaussian_mass_in_window(const Point2& center, const CovMatrix& sigma, const Window& w) {
  static const auto rule = make_gauss_legendre<kQuadratureOrder>();
  if (!std::isfinite(center.x) || !std::isfinite(center.y) || !(sigma.a11 > 0.0) || !(sigma.a22 > 0.0))
    throw NumericalError("quadrature failed for cluster centred at (" + format_double(center.x) +
                         ", " + format_double(center.y) + ")");

  const double sx = std::sqrt(sigma.a11);
  const double sy = std::sqrt(sigma.a22);
  const double hx = kTruncationSds * sx;
  const double hy = kTruncationSds * sy;
  const double bx0 = center.x - hx, bx1 = center.x + hx;
  const double by0 = center.y - hy, by1 = center.y + hy;

  if (bx1 <= w.x_min || bx0 >= w.x_max || by1 <= w.y_min || by0 >= w.y_max) return 0.0;
  const bool x_inside = bx0 >= w.x_min && bx1 <= w.x_max;
  const bool y_inside = by0 >= w.y_min && by1 <= w.y_max;
  if (x_inside && y_inside) return 1.0;
  if (y_inside)
    return normal_cdf((w.x_max - center.x) / sx) - normal_cdf((w.x_min - center.x) / sx);
  if (x_inside)
    return normal_cdf((w.y_max - center.y) / sy) - normal_cdf((w.y_min - center.y) / sy);

  const double det = sigma.det();
  const double slope = sigma.a12 / sigma.a11;
  const double cond_sd = std::sqrt(det / sigma.a11);
  double scale = sx;
  if (slope != 0.0) scale = std::min(scale, cond_sd / std::abs(slope));

  const double x0 = std::max(w.x_min, bx0);
  const double x1 = std::min(w.x_max, bx1);
  const auto panels = static_cast<std::size_t>(std::ceil((x1 - x0) / (kPanelScale * scale)));
  const std::size_t n_panels = std::max<std::size_t>(panels, 1);
  const double width = (x1 - x0) / static_cast<double>(n_panels);
  const double norm = 1.0 / (sx * std::sqrt(2.0 * std::numbers::pi));

  double total = 0.0;
  for (std::size_t p = 0; p < n_panels; ++p) {
    const double a = x0 + width * static_cast<double>(p);
    const double mid = a + 0.5 * width;
    double panel = 0.0;
    for (std::size_t k = 0; k < kQuadratureOrder; ++k) {
      const double x = mid + 0.5 * width * rule.nodes[k];
      const double dx = x - center.x;
      const double m = center.y + slope * dx;
      const double inner = normal_cdf((w.y_max - m) / cond_sd) - normal_cdf((w.y_min - m) / cond_sd);
      panel += rule.weights[k] * std::exp(-0.5 * dx * dx / sigma.a11) * inner;
    }
    total += 0.5 * width * panel;
  }
  total *= norm;

  if (!std::isfinite(total) || total < -1e-12 || total > 1.0 + 1e-12)
    throw NumericalError("quadrature failed for cluster centred at (" + format_double(center.x) +
                         ", " + format_double(center.y) + ")");
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace anssns
