#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace anssns {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
struct Window {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  static Window make(double x_min, double x_max, double y_min, double y_max) {
    Window w{x_min, x_max, y_min, y_max};
    w.validate();
    return w;
  }

  void validate() const {
    if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
          std::isfinite(y_max)))
      throw std::domain_error("window bounds must be finite");
    if (!(x_min < x_max) || !(y_min < y_max))
      throw std::domain_error("window requires x_min < x_max and y_min < y_max");
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool contains(const Point2& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  bool contains(const Window& inner) const {
    return inner.x_min >= x_min && inner.x_max <= x_max && inner.y_min >= y_min &&
           inner.y_max <= y_max;
  }

  friend bool operator==(const Window&, const Window&) = default;
};

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Counterclockwise rotation by `theta` radians.
inline Mat2 rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {{{c, -s}, {s, c}}};
}

/// Lower-triangular factor L with L L^T = Sigma.
struct Cholesky2 {
  double l11 = 0.0;
  double l21 = 0.0;
  double l22 = 0.0;
};

/// Symmetric 2x2 covariance matrix stored as its three distinct entries.
struct CovMatrix {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;

  double det() const { return a11 * a22 - a12 * a12; }
  bool positive_definite() const { return a11 > 0.0 && det() > 0.0; }

  Cholesky2 cholesky() const {
    if (!positive_definite()) throw std::domain_error("covariance matrix is not positive definite");
    const double l11 = std::sqrt(a11);
    const double l21 = a12 / l11;
    return {l11, l21, std::sqrt(a22 - l21 * l21)};
  }

  /// Eigenvalues in ascending order.
  std::array<double, 2> eigenvalues() const {
    const double mean = 0.5 * (a11 + a22);
    const double half_diff = 0.5 * (a11 - a22);
    const double r = std::hypot(half_diff, a12);
    return {mean - r, mean + r};
  }

  friend bool operator==(const CovMatrix&, const CovMatrix&) = default;
};

/// R diag(sigma_x^2, sigma_y^2) R^T with R the rotation by theta.
inline CovMatrix make_sigma(double sigma_x, double sigma_y, double theta) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
    throw std::domain_error("make_sigma: standard deviations must be positive");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double vx = sigma_x * sigma_x;
  const double vy = sigma_y * sigma_y;
  return {vx * c * c + vy * s * s, (vx - vy) * c * s, vx * s * s + vy * c * c};
}

/// Bivariate normal density of u - center with covariance sigma.
inline double gaussian_density(const Point2& u, const Point2& center, const CovMatrix& sigma) {
  const double det = sigma.det();
  if (!(sigma.a11 > 0.0) || !(det > 0.0))
    throw std::domain_error("gaussian_density: singular covariance matrix");
  const double dx = u.x - center.x;
  const double dy = u.y - center.y;
  const double q = (sigma.a22 * dx * dx - 2.0 * sigma.a12 * dx * dy + sigma.a11 * dy * dy) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

}  // namespace anssns
