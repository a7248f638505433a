#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "anssns/model.hpp"
#include "anssns/rng.hpp"

namespace anssns {
namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const CovariateSet> theta_on_x() {
  auto s = std::make_shared<CovariateSet>();
  s->theta.push_back(Covariate::coordinate_x());
  return s;
}

std::shared_ptr<const CovariateSet> sigma_on_x() {
  auto s = std::make_shared<CovariateSet>();
  s->sigma_x.push_back(Covariate::coordinate_x());
  s->sigma_y.push_back(Covariate::coordinate_x());
  return s;
}

TEST(SigmaAt, ExponentialLinkAtOrigin) {
  const AnisotropyField f({{std::log(0.01), 1.0}, {std::log(0.01), 1.0}, {0.0}}, sigma_on_x());
  EXPECT_NEAR(f.sigma_x_at({0.0, 0.4}), 0.01, 1e-16);
  EXPECT_NEAR(f.sigma_y_at({0.0, 0.4}), 0.01, 1e-16);
}

TEST(SigmaAt, ExponentialLinkAtRightEdge) {
  const AnisotropyField f({{std::log(0.01), 1.5}, {std::log(0.01), 1.5}, {0.0}}, sigma_on_x());
  EXPECT_NEAR(f.sigma_x_at({1.0, 0.2}), 0.044816890703380644, 1e-15);  // 0.01 e^1.5
}

TEST(SigmaAt, ConstantFieldFromTemplate) {
  const double s = 0.02;
  const auto f = AnisotropyField::constant(s / 0.7, 0.7 * s, pi / 4);
  EXPECT_NEAR(f.sigma_x_at({0.5, 0.5}), 0.028571428571428574, 1e-15);
  EXPECT_NEAR(f.sigma_y_at({0.9, 0.1}), 0.014, 1e-15);
}

TEST(ThetaAt, NoCovariatesIsIntercept) {
  const auto f = AnisotropyField::constant(0.04, 0.01, pi / 4);
  EXPECT_NEAR(f.theta_at({0.2, 0.3}), pi / 4, 1e-15);
  EXPECT_NEAR(f.theta_at({0.9, -0.1}), pi / 4, 1e-15);
}

TEST(ThetaAt, TanhLinkAtRightEdge) {
  const AnisotropyField f({{std::log(0.04)}, {std::log(0.01)}, {pi / 4, 0.5}}, theta_on_x());
  // pi/4 + pi tanh(0.5)
  EXPECT_NEAR(f.theta_at({1.0, 0.5}), 2.237182029743294, 1e-12);
}

TEST(ThetaAt, SaturatedTanhWrapsModPi) {
  const AnisotropyField f({{0.0}, {0.0}, {pi / 4, 1.0}}, theta_on_x());
  EXPECT_NEAR(f.theta_at({50.0, 0.0}), pi / 4, 1e-12);
}

TEST(SigmaAt, ConstantFieldIsDiagonal) {
  const auto f = AnisotropyField::constant(0.04, 0.01, 0.0);
  for (Point2 u : {Point2{0, 0}, Point2{0.7, 0.2}, Point2{1.1, -0.2}}) {
    const auto s = f.sigma_at(u);
    EXPECT_NEAR(s.a11, 0.0016, 1e-17);
    EXPECT_NEAR(s.a12, 0.0, 1e-17);
    EXPECT_NEAR(s.a22, 0.0001, 1e-17);
  }
}

TEST(SigmaAt, DirectionalFieldComposes) {
  const AnisotropyField f({{std::log(0.04)}, {std::log(0.01)}, {pi / 4, 0.5}}, theta_on_x());
  EXPECT_NEAR(f.theta_at({0.0, 0.3}), pi / 4, 1e-15);
  const auto a = f.sigma_at({1.0, 0.3});
  const auto b = make_sigma(0.04, 0.01, 2.237182029743294);
  EXPECT_NEAR(a.a11, b.a11, 1e-15);
  EXPECT_NEAR(a.a12, b.a12, 1e-15);
  EXPECT_NEAR(a.a22, b.a22, 1e-15);
}

TEST(AnisotropyField, CoefficientCountMustMatchCovariates) {
  EXPECT_THROW(AnisotropyField({{0.0}, {0.0}, {0.0}}, theta_on_x()), ConfigError);
  EXPECT_THROW(AnisotropyField({{0.0, 1.0}, {0.0}, {0.0, 1.0}}, theta_on_x()), ConfigError);
}

TEST(KappaFromAlpha, Values) {
  ModelSpec spec;
  spec.n_observed = 200;
  EXPECT_DOUBLE_EQ(kappa_from_alpha(spec, 10.0), 20.0);
  EXPECT_DOUBLE_EQ(kappa_from_alpha(spec, 5.0), 40.0);
  spec.n_observed = 100;
  spec.window = {0, 2, 0, 2};
  spec.window_ext = {-0.2, 2.2, -0.2, 2.2};
  EXPECT_DOUBLE_EQ(kappa_from_alpha(spec, 5.0), 5.0);
  EXPECT_THROW(kappa_from_alpha(spec, 0.0), std::domain_error);
  EXPECT_THROW(kappa_from_alpha(spec, -1.0), std::domain_error);
}

TEST(ModelSpec, ValidatesWindowsAndCoverage) {
  ModelSpec spec;
  spec.alpha = 5;
  EXPECT_NO_THROW(spec.validate());
  spec.window_ext = {0.1, 1, 0, 1};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.window_ext = {-0.2, 1.2, -0.2, 1.2};
  auto cov = std::make_shared<CovariateSet>();
  cov->theta.push_back(Covariate::raster(2, 2, {0, 0}, 0.5, 0.5, {1, 2, 3, 4}));
  spec.field = AnisotropyField({{0.0}, {0.0}, {0.0, 1.0}}, cov);
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(LogPrior, Uniform) {
  const auto p = Prior::uniform(1, 30);
  EXPECT_DOUBLE_EQ(log_prior_density(p, 7.0), std::log(1.0 / 29.0));
  EXPECT_EQ(log_prior_density(p, 0.5), -INFINITY);
  EXPECT_EQ(log_prior_density(p, 31.0), -INFINITY);
}

TEST(LogPrior, LogNormalMeanVarParameters) {
  const auto p = Prior::lognormal_mean_var(0.03, 4e-5);
  const auto [mu, s2] = p.log_normal_params();
  EXPECT_NEAR(mu, -3.528300453289851, 1e-12);
  EXPECT_NEAR(s2, 0.043485111939738835, 1e-12);
  EXPECT_NEAR(log_prior_density(p, 0.03), 4.1498520519872075, 1e-10);
  EXPECT_EQ(log_prior_density(p, 0.0), -INFINITY);
  EXPECT_EQ(log_prior_density(p, -1.0), -INFINITY);
}

TEST(LogPrior, LogNormalMomentsByNumericIntegration) {
  const auto p = Prior::lognormal_mean_var(0.03, 4e-5);
  // Composite Simpson on [1e-4, 0.2]; the density is negligible outside.
  const int n = 200000;
  const double a = 1e-4, b = 0.2, h = (b - a) / n;
  double mass = 0.0, mean = 0.0, second = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double d = std::exp(log_prior_density(p, x));
    mass += w * d;
    mean += w * x * d;
    second += w * x * x * d;
  }
  mass *= h / 3;
  mean *= h / 3;
  second *= h / 3;
  EXPECT_NEAR(mass, 1.0, 1e-8);
  EXPECT_NEAR(mean, 0.03, 1e-6);
  EXPECT_NEAR(second - mean * mean, 4e-5, 1e-9);
}

TEST(LogPrior, LogUniformIntegratesToOne) {
  const auto p = Prior::log_uniform(0.002, 0.2);
  const int n = 200000;
  double s = 0.0;
  const double a = std::log(0.002), b = std::log(0.2), h = (b - a) / n;
  for (int i = 0; i < n; ++i) {
    const double x = std::exp(a + (i + 0.5) * h);
    s += std::exp(log_prior_density(p, x)) * x * h;  // change of variable to log x
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
  EXPECT_EQ(log_prior_density(p, 0.3), -INFINITY);
}

TEST(Prior, FactoryValidation) {
  EXPECT_THROW(Prior::uniform(2, 1), ConfigError);
  EXPECT_THROW(Prior::lognormal_mean_var(0, 1), ConfigError);
  EXPECT_THROW(Prior::lognormal_mean_var(1, 0), ConfigError);
  EXPECT_THROW(Prior::log_uniform(0, 1), ConfigError);
  EXPECT_THROW(Prior::log_uniform(2, 1), ConfigError);
}

TEST(PriorProperty, LogNormalSampleMean) {
  const auto p = Prior::lognormal_mean_var(0.03, 4e-5);
  RngStream rng(100, 0);
  const int n = 1000000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += p.sample(rng);
  EXPECT_NEAR(s / n, 0.03, 3 * std::sqrt(4e-5 / n));
}

TEST(ModelProperty, ThetaAlwaysInHalfOpenRange) {
  RngStream rng(21, 0);
  for (int k = 0; k < 5000; ++k) {
    const double t0 = 40 * rng.uniform() - 20, t1 = 6 * rng.uniform() - 3;
    const AnisotropyField f({{0.0}, {0.0}, {t0, t1}}, theta_on_x());
    const double t = f.theta_at({3 * rng.uniform() - 1, 0.0});
    ASSERT_GE(t, 0.0);
    ASSERT_LT(t, pi);
  }
}

TEST(ModelProperty, AddingPiToInterceptLeavesSigmaUnchanged) {
  RngStream rng(22, 0);
  for (int k = 0; k < 2000; ++k) {
    const OmegaParams w{{-4 + rng.uniform()}, {-4 + rng.uniform()}, {6 * rng.uniform() - 3, rng.uniform()}};
    OmegaParams v = w;
    v.theta_coefs[0] += pi;
    const AnisotropyField f(w, theta_on_x()), g(v, theta_on_x());
    const Point2 u{1.4 * rng.uniform() - 0.2, 0.0};
    const auto a = f.sigma_at(u), b = g.sigma_at(u);
    ASSERT_NEAR(a.a11, b.a11, 1e-12);
    ASSERT_NEAR(a.a12, b.a12, 1e-12);
    ASSERT_NEAR(a.a22, b.a22, 1e-12);
  }
}

TEST(ModelProperty, SwappingAxesAndQuarterTurnLeavesSigmaUnchanged) {
  RngStream rng(23, 0);
  for (int k = 0; k < 2000; ++k) {
    const OmegaParams w{{-4 + rng.uniform(), rng.uniform()},
                        {-4 + rng.uniform(), rng.uniform()},
                        {3 * rng.uniform()}};
    const OmegaParams v{w.sigma_y_coefs, w.sigma_x_coefs, {w.theta_coefs[0] + pi / 2}};
    const AnisotropyField f(w, sigma_on_x()), g(v, sigma_on_x());
    const Point2 u{1.4 * rng.uniform() - 0.2, 1.4 * rng.uniform() - 0.2};
    const auto a = f.sigma_at(u), b = g.sigma_at(u);
    ASSERT_NEAR(a.a11, b.a11, 1e-12);
    ASSERT_NEAR(a.a12, b.a12, 1e-12);
    ASSERT_NEAR(a.a22, b.a22, 1e-12);
  }
}

TEST(ModelProperty, SigmaStrictlyPositive) {
  RngStream rng(24, 0);
  for (int k = 0; k < 2000; ++k) {
    const AnisotropyField f({{20 * rng.uniform() - 10, 20 * rng.uniform() - 10}, {0.0, 0.0}, {0.0}},
                            sigma_on_x());
    ASSERT_GT(f.sigma_x_at({2 * rng.uniform() - 1, 0.0}), 0.0);
  }
}

TEST(AxialAngle, Reduction) {
  EXPECT_NEAR(axial_angle(-pi / 4), 3 * pi / 4, 1e-15);
  EXPECT_NEAR(axial_angle(5 * pi / 4), pi / 4, 1e-15);
  EXPECT_EQ(axial_angle(0.0), 0.0);
  EXPECT_LT(axial_angle(std::nextafter(pi, 0.0)), pi);
}

}  // namespace
}  // namespace anssns
