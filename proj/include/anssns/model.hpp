#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anssns/covariate.hpp"
#include "anssns/errors.hpp"
#include "anssns/geometry.hpp"

namespace anssns {

/// Reduces an orientation to [0, pi).
inline double axial_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  double a = std::fmod(theta, pi);
  if (a < 0.0) a += pi;
  if (a >= pi) a -= pi;
  return a;
}

/// Coefficient vector omega. Index 0 of each block is the intercept.
struct OmegaParams {
  std::vector<double> sigma_x_coefs{0.0};
  std::vector<double> sigma_y_coefs{0.0};
  std::vector<double> theta_coefs{0.0};

  /// Constant field with the given standard deviations and orientation.
  static OmegaParams constant(double sigma_x, double sigma_y, double theta) {
    return {{std::log(sigma_x)}, {std::log(sigma_y)}, {theta}};
  }

  friend bool operator==(const OmegaParams&, const OmegaParams&) = default;
};

/// Covariates attached to sigma_x, sigma_y and theta (intercepts excluded).
struct CovariateSet {
  std::vector<Covariate> sigma_x;
  std::vector<Covariate> sigma_y;
  std::vector<Covariate> theta;

  bool covers(const Window& w) const {
    for (const auto* list : {&sigma_x, &sigma_y, &theta})
      for (const auto& c : *list)
        if (!c.covers(w)) return false;
    return true;
  }
};

/// sigma_x(u), sigma_y(u), theta(u) from omega and covariates:
///   sigma_x(u) = exp(b0 + sum b_i Z_i^x(u)), likewise sigma_y,
///   theta(u)   = [t0 + pi tanh(sum t_i Z_i^theta(u))] mod pi.
class AnisotropyField {
 public:
  AnisotropyField() : covariates_(std::make_shared<const CovariateSet>()) {}

  AnisotropyField(OmegaParams omega, std::shared_ptr<const CovariateSet> covariates)
      : covariates_(std::move(covariates)), omega_(std::move(omega)) {
    if (!covariates_) covariates_ = std::make_shared<const CovariateSet>();
    check_lengths(omega_);
  }

  static AnisotropyField constant(double sigma_x, double sigma_y, double theta) {
    return AnisotropyField(OmegaParams::constant(sigma_x, sigma_y, theta), nullptr);
  }

  const OmegaParams& omega() const { return omega_; }
  const CovariateSet& covariates() const { return *covariates_; }
  const std::shared_ptr<const CovariateSet>& covariates_ptr() const { return covariates_; }

  AnisotropyField with_omega(OmegaParams omega) const { return {std::move(omega), covariates_}; }

  bool sigma_is_constant() const {
    return covariates_->sigma_x.empty() && covariates_->sigma_y.empty();
  }
  bool is_stationary() const { return sigma_is_constant() && covariates_->theta.empty(); }

  double sigma_x_at(const Point2& u) const {
    return std::exp(linear_predictor(omega_.sigma_x_coefs, covariates_->sigma_x, u));
  }
  double sigma_y_at(const Point2& u) const {
    return std::exp(linear_predictor(omega_.sigma_y_coefs, covariates_->sigma_y, u));
  }
  double theta_at(const Point2& u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < covariates_->theta.size(); ++i)
      s += omega_.theta_coefs[i + 1] * covariates_->theta[i].evaluate(u);
    return axial_angle(omega_.theta_coefs[0] + std::numbers::pi * std::tanh(s));
  }
  CovMatrix sigma_at(const Point2& u) const {
    return make_sigma(sigma_x_at(u), sigma_y_at(u), theta_at(u));
  }

  void check_lengths(const OmegaParams& omega) const {
    if (omega.sigma_x_coefs.size() != covariates_->sigma_x.size() + 1 ||
        omega.sigma_y_coefs.size() != covariates_->sigma_y.size() + 1 ||
        omega.theta_coefs.size() != covariates_->theta.size() + 1)
      throw ConfigError("omega coefficient counts must equal attached covariates + 1");
    for (const auto* v : {&omega.sigma_x_coefs, &omega.sigma_y_coefs, &omega.theta_coefs})
      for (double c : *v)
        if (!std::isfinite(c)) throw ConfigError("omega coefficients must be finite");
  }

 private:
  static double linear_predictor(const std::vector<double>& coefs, const std::vector<Covariate>& z,
                                 const Point2& u) {
    double s = coefs[0];
    for (std::size_t i = 0; i < z.size(); ++i) s += coefs[i + 1] * z[i].evaluate(u);
    return s;
  }

  std::shared_ptr<const CovariateSet> covariates_;
  OmegaParams omega_;
};

/// Windows, mean cluster size and anisotropy field of a Neyman-Scott model.
struct ModelSpec {
  Window window{0.0, 1.0, 0.0, 1.0};
  Window window_ext{-0.2, 1.2, -0.2, 1.2};
  double alpha = 1.0;
  AnisotropyField field;
  std::size_t n_observed = 0;

  void validate() const {
    window.validate();
    window_ext.validate();
    if (!window_ext.contains(window)) throw ConfigError("window must lie inside window_ext");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (!field.covariates().covers(window_ext))
      throw ConfigError("covariates must cover the extended window");
  }
};

/// kappa = n / (alpha |W|), from E M = alpha kappa |W|.
inline double kappa_from_alpha(const ModelSpec& spec, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("kappa_from_alpha: alpha must be positive");
  return static_cast<double>(spec.n_observed) / (alpha * spec.window.area());
}

/// Marginal prior of one scalar parameter.
struct Prior {
  enum class Kind { Uniform, LogNormalMeanVar, LogUniform };

  Kind kind = Kind::Uniform;
  double a = 0.0;
  double b = 1.0;

  static Prior uniform(double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("uniform prior needs finite a < b");
    return {Kind::Uniform, lo, hi};
  }
  /// Log-normal with mean m and variance v of the untransformed variable.
  static Prior lognormal_mean_var(double m, double v) {
    if (!(m > 0.0) || !(v > 0.0) || !std::isfinite(m) || !std::isfinite(v))
      throw ConfigError("log-normal prior needs mean > 0 and variance > 0");
    return {Kind::LogNormalMeanVar, m, v};
  }
  static Prior log_uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(lo < hi) || !std::isfinite(hi))
      throw ConfigError("log-uniform prior needs 0 < a < b");
    return {Kind::LogUniform, lo, hi};
  }

  /// Parameters (mu, s^2) of log X for the mean/variance log-normal.
  std::pair<double, double> log_normal_params() const {
    const double s2 = std::log1p(b / (a * a));
    return {std::log(a) - 0.5 * s2, s2};
  }

  double cdf(double x) const {
    switch (kind) {
      case Kind::Uniform:
        return x <= a ? 0.0 : x >= b ? 1.0 : (x - a) / (b - a);
      case Kind::LogUniform:
        return x <= a ? 0.0 : x >= b ? 1.0 : std::log(x / a) / std::log(b / a);
      case Kind::LogNormalMeanVar: {
        if (x <= 0.0) return 0.0;
        const auto [mu, s2] = log_normal_params();
        return 0.5 * std::erfc(-(std::log(x) - mu) / std::sqrt(2.0 * s2));
      }
    }
    return 0.0;
  }

  template <class Rng>
  double sample(Rng& rng) const {
    const double u = rng.uniform_open();
    switch (kind) {
      case Kind::Uniform:
        return a + (b - a) * u;
      case Kind::LogUniform:
        return a * std::exp(u * std::log(b / a));
      case Kind::LogNormalMeanVar:
        break;
    }
    const auto [mu, s2] = log_normal_params();
    // Box-Muller, one variate.
    const double r = std::sqrt(-2.0 * std::log(u));
    return std::exp(mu + std::sqrt(s2) * r * std::cos(2.0 * std::numbers::pi * rng.uniform()));
  }

  friend bool operator==(const Prior&, const Prior&) = default;
};

/// Log prior density; -inf outside the support.
inline double log_prior_density(const Prior& prior, double value) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!std::isfinite(value)) return neg_inf;
  switch (prior.kind) {
    case Prior::Kind::Uniform:
      return value < prior.a || value > prior.b ? neg_inf : -std::log(prior.b - prior.a);
    case Prior::Kind::LogUniform:
      return value < prior.a || value > prior.b
                 ? neg_inf
                 : -std::log(value) - std::log(std::log(prior.b / prior.a));
    case Prior::Kind::LogNormalMeanVar: {
      if (value <= 0.0) return neg_inf;
      const auto [mu, s2] = prior.log_normal_params();
      const double z = std::log(value) - mu;
      return -std::log(value) - 0.5 * std::log(2.0 * std::numbers::pi * s2) - 0.5 * z * z / s2;
    }
  }
  return neg_inf;
}

}  // namespace anssns
