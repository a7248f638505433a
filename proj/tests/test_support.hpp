#pragma once

// Independent oracles shared by the test suites. Nothing here calls into the
// library code path it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "anssns/geometry.hpp"
#include "anssns/likelihood.hpp"
#include "anssns/rng.hpp"
#include "anssns/simulate.hpp"

namespace anssns::testing {

inline double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Mass of an axis-aligned Gaussian in a rectangle: product of normal CDF differences.
inline double axis_aligned_mass(Point2 c, double sx, double sy, const Window& w) {
  return (phi_cdf((w.x_max - c.x) / sx) - phi_cdf((w.x_min - c.x) / sx)) *
         (phi_cdf((w.y_max - c.y) / sy) - phi_cdf((w.y_min - c.y) / sy));
}

/// Monte Carlo estimate of the Gaussian mass in w, with its standard error.
struct McEstimate {
  double mean;
  double se;
};
inline McEstimate monte_carlo_mass(Point2 c, const CovMatrix& s, const Window& w, std::size_t n,
                                   std::uint64_t seed) {
  RngStream rng(seed, 77);
  const double l11 = std::sqrt(s.a11);
  const double l21 = s.a12 / l11;
  const double l22 = std::sqrt(s.a22 - l21 * l21);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double u1 = rng.uniform_open(), u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double z1 = r * std::cos(2.0 * std::numbers::pi * u2);
    const double z2 = r * std::sin(2.0 * std::numbers::pi * u2);
    const Point2 p{c.x + l11 * z1, c.y + l21 * z1 + l22 * z2};
    if (w.contains(p)) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(n))};
}

/// Composite tensor midpoint-free Gauss-Legendre (8 nodes per panel) of f over a box.
template <class F>
double integrate_box(F f, double x0, double x1, double y0, double y1, int panels) {
  static const double nodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                  -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                  0.7966664774136267,  0.9602898564975363};
  static const double weights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                    0.2223810344533745, 0.1012285362903763};
  const double hx = (x1 - x0) / panels, hy = (y1 - y0) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i)
    for (int j = 0; j < panels; ++j) {
      const double mx = x0 + (i + 0.5) * hx, my = y0 + (j + 0.5) * hy;
      double s = 0.0;
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          s += weights[a] * weights[b] * f(mx + 0.5 * hx * nodes[a], my + 0.5 * hy * nodes[b]);
      total += 0.25 * hx * hy * s;
    }
  return total;
}

/// log p(X | C, alpha, omega) by direct summation: no truncation, no caches,
/// density written out from the covariance entries.
inline double naive_log_p_X(const PointPattern& x, const std::vector<Point2>& centers,
                            const std::vector<CovMatrix>& sigmas, const std::vector<double>& masses,
                            double alpha, double window_area) {
  double integral = 0.0;
  for (double m : masses) integral += alpha * m;
  double s = 0.0;
  for (const auto& p : x.points) {
    double lambda = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const auto& S = sigmas[c];
      const double det = S.a11 * S.a22 - S.a12 * S.a12;
      const double dx = p.x - centers[c].x, dy = p.y - centers[c].y;
      const double q = (S.a22 * dx * dx - 2 * S.a12 * dx * dy + S.a11 * dy * dy) / det;
      lambda += alpha * std::exp(-0.5 * q) / (2 * std::numbers::pi * std::sqrt(det));
    }
    s += std::log(lambda);
  }
  return window_area - integral + s;
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Asymptotic p-value P(sqrt(n) D > t) with the usual small-sample correction.
inline double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  return std::clamp(p, 0.0, 1.0);
}

/// Chi-square upper-tail probability via the regularised gamma function.
inline double chi2_sf(double x, double dof) {
  const double a = 0.5 * dof, z = 0.5 * x;
  if (z <= 0) return 1.0;
  if (z < a + 1) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 1000; ++n) {
      term *= z / (a + n);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
  }
  double b = z + 1 - a, c = 1e300, d = 1 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

}  // namespace anssns::testing
