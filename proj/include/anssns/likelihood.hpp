#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "anssns/geometry.hpp"
#include "anssns/model.hpp"
#include "anssns/quadrature.hpp"
#include "anssns/simulate.hpp"

namespace anssns {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Displacement kernel k(. - c; Sigma(c)) of one cluster, with its precision
/// matrix and its mass I(c) inside the observation window cached.
struct CenterKernel {
  Point2 center;
  CovMatrix sigma;
  double p11 = 0.0, p12 = 0.0, p22 = 0.0;  // inverse of sigma
  double log_norm = 0.0;                    // -log(2 pi sqrt(det))
  double half_x = 0.0, half_y = 0.0;        // 8-sd bounding box half widths
  double mass = 0.0;                        // I(c)

  double mahalanobis2(const Point2& u) const {
    const double dx = u.x - center.x;
    const double dy = u.y - center.y;
    return p11 * dx * dx + 2.0 * p12 * dx * dy + p22 * dy * dy;
  }

  /// Density truncated to zero outside the 8-Mahalanobis ellipse.
  double density(const Point2& u) const {
    const double dx = u.x - center.x;
    const double dy = u.y - center.y;
    if (std::abs(dx) > half_x || std::abs(dy) > half_y) return 0.0;
    const double q = p11 * dx * dx + 2.0 * p12 * dx * dy + p22 * dy * dy;
    if (q > kTruncationSds * kTruncationSds) return 0.0;
    return std::exp(log_norm - 0.5 * q);
  }

  double log_density_exact(const Point2& u) const { return log_norm - 0.5 * mahalanobis2(u); }
};

inline CenterKernel make_center_kernel(const Point2& c, const CovMatrix& sigma, const Window& w) {
  const double det = sigma.det();
  if (!(sigma.a11 > 0.0) || !(det > 0.0))
    throw std::domain_error("cluster covariance is not positive definite");
  CenterKernel k;
  k.center = c;
  k.sigma = sigma;
  k.p11 = sigma.a22 / det;
  k.p12 = -sigma.a12 / det;
  k.p22 = sigma.a11 / det;
  k.log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
  k.half_x = kTruncationSds * std::sqrt(sigma.a11);
  k.half_y = kTruncationSds * std::sqrt(sigma.a22);
  k.mass = gaussian_mass_in_window(c, sigma, w);
  return k;
}

/// Cluster centers C in W_ext with their per-center kernel caches.
class CenterConfig {
 public:
  CenterConfig() = default;
  CenterConfig(Window window, Window window_ext) : window_(window), window_ext_(window_ext) {}

  static CenterConfig build(const std::vector<Point2>& centers, const AnisotropyField& field,
                            const Window& window, const Window& window_ext) {
    CenterConfig config(window, window_ext);
    config.kernels_.reserve(centers.size());
    for (const auto& c : centers) config.kernels_.push_back(config.make_kernel(c, field));
    return config;
  }

  CenterKernel make_kernel(const Point2& c, const AnisotropyField& field) const {
    return make_center_kernel(c, field.sigma_at(c), window_);
  }

  /// Recomputes every cache for a new field (omega changed).
  void rebuild(const AnisotropyField& field) {
    for (auto& k : kernels_) k = make_kernel(k.center, field);
  }

  std::size_t size() const { return kernels_.size(); }
  bool empty() const { return kernels_.empty(); }
  const std::vector<CenterKernel>& kernels() const { return kernels_; }
  const CenterKernel& operator[](std::size_t i) const { return kernels_[i]; }
  const Window& window() const { return window_; }
  const Window& window_ext() const { return window_ext_; }

  std::vector<Point2> centers() const {
    std::vector<Point2> out;
    out.reserve(kernels_.size());
    for (const auto& k : kernels_) out.push_back(k.center);
    return out;
  }

  void push_back(CenterKernel k) { kernels_.push_back(std::move(k)); }
  void erase(std::size_t i) { kernels_.erase(kernels_.begin() + static_cast<std::ptrdiff_t>(i)); }
  void replace(std::size_t i, CenterKernel k) { kernels_[i] = std::move(k); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& k : kernels_) s += k.mass;
    return s;
  }

 private:
  Window window_;
  Window window_ext_;
  std::vector<CenterKernel> kernels_;
};

/// log p(C | kappa) = |W_ext| - kappa |W_ext| + |C| log kappa.
inline double log_p_centers(std::size_t n_centers, double kappa, const Window& w_ext) {
  const double area = w_ext.area();
  const double count_term = n_centers == 0 ? 0.0 : static_cast<double>(n_centers) * std::log(kappa);
  return area - kappa * area + count_term;
}

inline double log_p_centers(const CenterConfig& config, double kappa) {
  return log_p_centers(config.size(), kappa, config.window_ext());
}

/// lambda(u; C, alpha, omega) = sum_c alpha k(u - c).
inline double conditional_intensity(const Point2& u, const CenterConfig& config, double alpha) {
  double s = 0.0;
  for (const auto& k : config.kernels()) s += k.density(u);
  return alpha * s;
}

/// Integral of lambda over W: alpha sum_c I(c).
inline double integral_term(const CenterConfig& config, double alpha) {
  return alpha * config.total_mass();
}

/// log sum_c k(u - c) without truncation, for points that every truncated
/// kernel misses.
inline double log_kernel_sum_exact(const Point2& u, const CenterConfig& config) {
  if (config.empty()) return kNegInf;
  double top = kNegInf;
  for (const auto& k : config.kernels()) top = std::max(top, k.log_density_exact(u));
  double s = 0.0;
  for (const auto& k : config.kernels()) s += std::exp(k.log_density_exact(u) - top);
  return top + std::log(s);
}

struct LogLikTerms {
  double log_p_X_given_C = 0.0;
  double log_p_C_given_kappa = 0.0;
  double sum_log_lambda = 0.0;
  double integral = 0.0;
};

// A truncated kernel sum is trusted when it exceeds this multiple of the
// largest possible truncated remainder; the relative error is then < 1e-10.
inline constexpr double kReliableSumFactor = 1e10;

/// Upper bound on sum_c of the density mass dropped by truncation at one point.
inline double truncation_bound(const CenterConfig& config) {
  double s = 0.0;
  for (const auto& k : config.kernels()) s += std::exp(k.log_norm);
  return s * std::exp(-0.5 * kTruncationSds * kTruncationSds);
}

/// Sum over data points of log sum_c k(x_i - c), given the per-point
/// truncated kernel sums. Sums too small to dominate the truncation error are
/// recomputed exactly.
inline double sum_log_kernel(const std::vector<double>& kernel_sum, const PointPattern& pattern,
                             const CenterConfig& config) {
  const double threshold = kReliableSumFactor * truncation_bound(config);
  double s = 0.0;
  for (std::size_t i = 0; i < kernel_sum.size(); ++i)
    s += kernel_sum[i] > threshold ? std::log(kernel_sum[i])
                                   : log_kernel_sum_exact(pattern.points[i], config);
  return s;
}

inline double assemble_log_p_X(double window_area, double alpha, double total_mass,
                               std::size_t n_points, double sum_log_kernel) {
  if (n_points == 0) return window_area - alpha * total_mass;
  if (sum_log_kernel == kNegInf) return kNegInf;
  return window_area - alpha * total_mass + static_cast<double>(n_points) * std::log(alpha) +
         sum_log_kernel;
}

/// All log-density terms, recomputed from scratch:
/// log p(X | C, kappa, alpha, omega) = |W| - int_W lambda + sum_i log lambda(x_i).
inline LogLikTerms log_p_pattern(const PointPattern& pattern, const CenterConfig& config,
                                 double alpha, double kappa) {
  std::vector<double> kernel_sum(pattern.size(), 0.0);
  for (const auto& k : config.kernels())
    for (std::size_t i = 0; i < pattern.size(); ++i) kernel_sum[i] += k.density(pattern.points[i]);
  const double slk = sum_log_kernel(kernel_sum, pattern, config);
  const double mass = config.total_mass();

  LogLikTerms t;
  t.integral = alpha * mass;
  t.sum_log_lambda =
      pattern.empty() ? 0.0 : (slk == kNegInf ? kNegInf : static_cast<double>(pattern.size()) * std::log(alpha) + slk);
  t.log_p_X_given_C = assemble_log_p_X(config.window().area(), alpha, mass, pattern.size(), slk);
  t.log_p_C_given_kappa = log_p_centers(config, kappa);
  return t;
}

/// Incrementally maintained kernel sums sum_c k(x_i - c) for a fixed pattern.
///
/// rows_[c][i] holds k(x_i - c). Kernel sums are always re-added in center
/// order, so incremental and from-scratch values agree bit for bit.
class KernelCache {
 public:
  /// A pending birth, death or move of one center.
  struct Update {
    enum class Kind { Birth, Death, Move };
    Kind kind = Kind::Birth;
    std::size_t index = 0;
    CenterKernel kernel;
    std::vector<double> row;
    std::vector<double> kernel_sum;
    double sum_log = 0.0;
    double total_mass = 0.0;
  };

  void reset(const PointPattern& pattern, const CenterConfig& config) {
    const std::size_t n = pattern.size();
    rows_.resize(config.size());
    for (std::size_t c = 0; c < config.size(); ++c) fill_row(pattern, config[c], rows_[c]);
    kernel_sum_.assign(n, 0.0);
    for (const auto& row : rows_)
      for (std::size_t i = 0; i < n; ++i) kernel_sum_[i] += row[i];
    sum_log_ = sum_log_kernel(kernel_sum_, pattern, config);
    total_mass_ = config.total_mass();
  }

  double sum_log() const { return sum_log_; }
  double total_mass() const { return total_mass_; }
  const std::vector<double>& kernel_sum() const { return kernel_sum_; }

  double log_p_X(const PointPattern& pattern, double window_area, double alpha) const {
    return assemble_log_p_X(window_area, alpha, total_mass_, pattern.size(), sum_log_);
  }

  void prepare_birth(const PointPattern& pattern, const CenterConfig& config, CenterKernel kernel,
                     Update& u) const {
    u.kind = Update::Kind::Birth;
    u.index = config.size();
    u.kernel = std::move(kernel);
    fill_row(pattern, u.kernel, u.row);
    u.kernel_sum.resize(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) u.kernel_sum[i] = kernel_sum_[i] + u.row[i];
    u.total_mass = total_mass_ + u.kernel.mass;
    finish(pattern, config, u);
  }

  void prepare_death(const PointPattern& pattern, const CenterConfig& config, std::size_t index,
                     Update& u) const {
    u.kind = Update::Kind::Death;
    u.index = index;
    resum(pattern.size(), index, nullptr, u.kernel_sum);
    u.total_mass = 0.0;
    for (std::size_t c = 0; c < config.size(); ++c)
      if (c != index) u.total_mass += config[c].mass;
    finish(pattern, config, u);
  }

  void prepare_move(const PointPattern& pattern, const CenterConfig& config, std::size_t index,
                    CenterKernel kernel, Update& u) const {
    u.kind = Update::Kind::Move;
    u.index = index;
    u.kernel = std::move(kernel);
    fill_row(pattern, u.kernel, u.row);
    resum(pattern.size(), index, &u.row, u.kernel_sum);
    u.total_mass = 0.0;
    for (std::size_t c = 0; c < config.size(); ++c)
      u.total_mass += c == index ? u.kernel.mass : config[c].mass;
    finish(pattern, config, u);
  }

  /// Applies a prepared update to both the cache and the configuration.
  void commit(Update& u, CenterConfig& config) {
    switch (u.kind) {
      case Update::Kind::Birth:
        config.push_back(u.kernel);
        rows_.push_back(std::move(u.row));
        break;
      case Update::Kind::Death:
        config.erase(u.index);
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(u.index));
        break;
      case Update::Kind::Move:
        config.replace(u.index, u.kernel);
        std::swap(rows_[u.index], u.row);
        break;
    }
    std::swap(kernel_sum_, u.kernel_sum);
    sum_log_ = u.sum_log;
    total_mass_ = u.total_mass;
  }

 private:
  static void fill_row(const PointPattern& pattern, const CenterKernel& k, std::vector<double>& row) {
    row.resize(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) row[i] = k.density(pattern.points[i]);
  }

  void resum(std::size_t n, std::size_t index, const std::vector<double>* replacement,
             std::vector<double>& out) const {
    out.assign(n, 0.0);
    for (std::size_t c = 0; c < rows_.size(); ++c) {
      const std::vector<double>* row = &rows_[c];
      if (c == index) {
        if (!replacement) continue;
        row = replacement;
      }
      for (std::size_t i = 0; i < n; ++i) out[i] += (*row)[i];
    }
  }

  // Sum of logs under the proposed configuration.
  static void finish(const PointPattern& pattern, const CenterConfig& config, Update& u) {
    CenterConfig proposed = config;
    switch (u.kind) {
      case Update::Kind::Birth:
        proposed.push_back(u.kernel);
        break;
      case Update::Kind::Death:
        proposed.erase(u.index);
        break;
      case Update::Kind::Move:
        proposed.replace(u.index, u.kernel);
        break;
    }
    u.sum_log = sum_log_kernel(u.kernel_sum, pattern, proposed);
  }

  std::vector<std::vector<double>> rows_;
  std::vector<double> kernel_sum_;
  double sum_log_ = 0.0;
  double total_mass_ = 0.0;
};

}  // namespace anssns
