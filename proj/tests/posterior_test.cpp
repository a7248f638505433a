#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "anssns/posterior.hpp"
#include "anssns/rng.hpp"

namespace anssns {
namespace {

constexpr double pi = std::numbers::pi;

TEST(SummarizeScalar, OneToHundredTypeSeven) {
  std::vector<double> d(100);
  for (int i = 0; i < 100; ++i) d[i] = i + 1;
  const auto ci = summarize_scalar(d, 0.95);
  // h = (n - 1) p: 2.475 -> 3.475, 96.525 -> 97.525.
  EXPECT_DOUBLE_EQ(ci.point_estimate, 50.5);
  EXPECT_NEAR(ci.lower, 3.475, 1e-12);
  EXPECT_NEAR(ci.upper, 97.525, 1e-12);
}

TEST(SummarizeScalar, ConstantDrawsAndNesting) {
  const auto c = summarize_scalar(std::vector<double>(10, 2.5), 0.95);
  EXPECT_EQ(c.lower, 2.5);
  EXPECT_EQ(c.upper, 2.5);
  RngStream rng(1, 0);
  std::vector<double> d(500);
  for (auto& v : d) v = rng.uniform();
  const auto wide = summarize_scalar(d, 0.95), narrow = summarize_scalar(d, 0.5);
  EXPECT_LE(narrow.upper - narrow.lower, wide.upper - wide.lower);
  EXPECT_GE(narrow.lower, wide.lower);
  EXPECT_LE(narrow.upper, wide.upper);
  EXPECT_THROW(summarize_scalar({1.0}, 0.95), UsageError);
  EXPECT_THROW(summarize_scalar({1.0, 2.0}, 0.0), UsageError);
}

TEST(SummarizeScalar, MedianIsPermutationInvariant) {
  RngStream rng(2, 0);
  std::vector<double> d(301);
  for (auto& v : d) v = rng.uniform();
  const auto base = summarize_scalar(d, 0.9);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(d.begin(), d.end(), rng);
    const auto s = summarize_scalar(d, 0.9);
    ASSERT_EQ(s.point_estimate, base.point_estimate);
    ASSERT_EQ(s.lower, base.lower);
    ASSERT_EQ(s.upper, base.upper);
  }
}

// Brute force: scan every data angle and a fine grid of candidates on the
// doubled circle; return the minimiser restricted to data angles.
double brute_force_axial_median(const std::vector<double>& draws) {
  double best = INFINITY, arg = 0;
  for (double c : draws) {
    const double pc = 2 * axial_angle(c);
    double s = 0;
    for (double d : draws) {
      const double diff = std::abs(2 * axial_angle(d) - pc);
      s += std::min(diff, 2 * pi - diff);
    }
    if (s < best - 1e-12 || (std::abs(s - best) <= 1e-12 && pc / 2 < arg)) {
      best = s;
      arg = pc / 2;
    }
  }
  return arg;
}

TEST(CircularMedian, ConstantDraws) {
  EXPECT_NEAR(circular_median_axial(std::vector<double>(7, pi / 4)), pi / 4, 1e-15);
}

TEST(CircularMedian, WrapPairMatchesBruteForce) {
  const std::vector<double> d{pi - 0.05, 0.05};
  const double m = circular_median_axial(d);
  EXPECT_NEAR(m, brute_force_axial_median(d), 1e-15);
  // Either data angle, both 0.05 away from 0 along the short arc.
  EXPECT_TRUE(std::abs(m - 0.05) < 1e-12 || std::abs(m - (pi - 0.05)) < 1e-12);
}

TEST(CircularMedian, RandomSamplesMatchBruteForce) {
  RngStream rng(3, 0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> d(15 + k % 7);
    const double centre = pi * rng.uniform();
    for (auto& v : d) v = centre + 0.6 * (rng.uniform() - 0.5);
    ASSERT_NEAR(circular_median_axial(d), brute_force_axial_median(d), 1e-12);
  }
}

TEST(CircularMedian, ShiftByPiChangesNothing) {
  RngStream rng(4, 0);
  std::vector<double> d(40), e(40);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = axial_angle(3 + rng.uniform());
    e[i] = d[i] + pi;
  }
  EXPECT_NEAR(circular_median_axial(d), circular_median_axial(e), 1e-12);
  EXPECT_THROW(circular_median_axial({}), UsageError);
}

TEST(CircularInterval, TightClusterMatchesLinearQuantiles) {
  RngStream rng(5, 0);
  std::vector<double> d(999);
  for (auto& v : d) v = pi / 4 + 0.05 * (rng.uniform() - 0.5);
  const auto arc = circular_interval_axial(d, 0.95);
  const auto lin = summarize_scalar(d, 0.95);
  EXPECT_NEAR(arc.lower, lin.lower, 1e-9);
  EXPECT_NEAR(arc.upper, lin.upper, 1e-9);
  EXPECT_TRUE(arc.circular);
}

TEST(CircularInterval, SymmetricAroundZeroWraps) {
  std::vector<double> d;
  for (int i = 1; i <= 200; ++i) {
    d.push_back(0.001 * i);
    d.push_back(pi - 0.001 * i);
  }
  const auto arc = circular_interval_axial(d, 0.95);
  EXPECT_GT(arc.lower, arc.upper);  // wraps through 0
  EXPECT_TRUE(arc.contains(0.0));
  EXPECT_NEAR(pi - arc.lower, arc.upper, 2e-3);
}

TEST(CircularInterval, FullLevelCoversAllDraws) {
  RngStream rng(6, 0);
  std::vector<double> d(100);
  for (auto& v : d) v = 2.0 + 0.8 * rng.uniform();
  const auto arc = circular_interval_axial(d, 1.0);
  for (double v : d) EXPECT_TRUE(arc.contains(v));
}

PosteriorSamples constant_field_samples(const std::vector<std::array<double, 4>>& rows) {
  PosteriorSamples s;
  s.base_omega = OmegaParams::constant(0.04, 0.01, pi / 4);
  s.parameters = chain_parameters(s.base_omega, SigmaScale::Natural);
  s.window = {0, 1, 0, 1};
  for (const auto& r : rows) s.values.push_back({r[0], r[1], r[2], r[3]});
  return s;
}

TEST(CircularityTest, TruthRatios) {
  auto s = constant_field_samples({{5, 0.02 / 0.7, 0.014, 0.8}, {5, 0.02 / 0.7, 0.014, 0.8}});
  EXPECT_NEAR(circularity_test(s).interval.point_estimate, 1 / 0.49, 1e-12);  // about 2.04
  s = constant_field_samples({{5, 0.04, 0.01, 0.8}, {5, 0.04, 0.01, 0.8}});
  EXPECT_NEAR(circularity_test(s).interval.point_estimate, 4.0, 1e-12);
}

TEST(CircularityTest, EqualSigmasDoNotReject) {
  const auto s = constant_field_samples({{5, 0.02, 0.02, 0.1}, {5, 0.02, 0.02, 2.0}, {5, 0.02, 0.02, 1.0}});
  const auto r = circularity_test(s);
  EXPECT_NEAR(r.interval.lower, 1.0, 1e-12);
  EXPECT_NEAR(r.interval.upper, 1.0, 1e-12);
  EXPECT_FALSE(r.reject);
}

PosteriorSamples sigma_covariate_samples(std::size_t m, double slope_spread, std::uint64_t seed) {
  PosteriorSamples s;
  auto cov = std::make_shared<CovariateSet>();
  cov->sigma_x.push_back(Covariate::coordinate_x());
  cov->sigma_y.push_back(Covariate::coordinate_x());
  s.covariates = cov;
  s.base_omega = {{0, 0}, {0, 0}, {0}};
  s.parameters = chain_parameters(s.base_omega, SigmaScale::Log);
  s.window = {0, 1, 0, 1};
  RngStream rng(seed, 0);
  for (std::size_t d = 0; d < m; ++d) {
    const double a = std::log(0.01) + 0.1 * (rng.uniform() - 0.5);
    s.values.push_back({5.0, a, 1.0 + slope_spread * (rng.uniform() - 0.5),
                        a + 0.1 * (rng.uniform() - 0.5), 1.0 + slope_spread * (rng.uniform() - 0.5),
                        pi * rng.uniform()});
  }
  return s;
}

TEST(CircularityTest, SigmaCovariatesRequireEnvelopeOrLocation) {
  const auto s = sigma_covariate_samples(10, 0.2, 1);
  EXPECT_THROW(circularity_test(s), UsageError);
  EXPECT_NO_THROW(circularity_test(s, Point2{0.5, 0.5}));
}

PosteriorSamples direction_samples(const std::vector<double>& theta1) {
  PosteriorSamples s;
  auto cov = std::make_shared<CovariateSet>();
  cov->theta.push_back(Covariate::coordinate_x());
  s.covariates = cov;
  s.base_omega = {{std::log(0.04)}, {std::log(0.01)}, {pi / 4, 0.0}};
  s.parameters = chain_parameters(s.base_omega, SigmaScale::Natural);
  s.window = {0, 1, 0, 1};
  for (double t : theta1) s.values.push_back({5.0, 0.04, 0.01, pi / 4, t});
  return s;
}

TEST(DirectionTest, Decisions) {
  EXPECT_FALSE(direction_test(direction_samples(std::vector<double>(20, 0.0))).reject);
  std::vector<double> d;
  for (int i = 0; i <= 20; ++i) d.push_back(0.4 + 0.01 * i);
  const auto r = direction_test(direction_samples(d));
  EXPECT_TRUE(r.reject);
  EXPECT_GT(r.interval.lower, 0.0);
  EXPECT_THROW(direction_test(constant_field_samples({{5, 0.04, 0.01, 0.8}, {5, 0.04, 0.01, 0.8}})),
               UsageError);
}

TEST(Envelope, SharedConstantSurface) {
  for (double c : {1.0, 1.3}) {
    std::vector<std::array<double, 4>> rows(120, {5, 0.02 * c, 0.02, 0.5});
    const auto r = circularity_envelope(constant_field_samples(rows), 8, 0.95);
    for (std::size_t k = 0; k < r.envelope.lower.size(); ++k) {
      EXPECT_NEAR(r.envelope.lower[k], c, 1e-12);
      EXPECT_NEAR(r.envelope.upper[k], c, 1e-12);
    }
    EXPECT_EQ(r.reject, c != 1.0);
  }
}

TEST(Envelope, ConstantCurvesReduceToScalarDepthBand) {
  RngStream rng(7, 0);
  const std::size_t m = 200;
  std::vector<double> values(m);
  for (auto& v : values) v = 0.5 + rng.uniform();
  std::vector<std::vector<double>> curves;
  for (double v : values) curves.push_back(std::vector<double>(16, v));
  const auto env = envelope_from_curves(curves, 0.95);

  // Scalar oracle: depth min(rank from below, rank from above); keep the 190
  // deepest values (ties to lower index), band = their min and max.
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> depth(m);
  for (std::size_t d = 0; d < m; ++d) {
    std::size_t below = 0, above = 0;
    for (double v : values) {
      below += v < values[d];
      above += v > values[d];
    }
    depth[d] = std::min(below, above);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return depth[a] > depth[b]; });
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < 190; ++k) {
    lo = std::min(lo, values[idx[k]]);
    hi = std::max(hi, values[idx[k]]);
  }
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_EQ(env.lower[k], lo);
    EXPECT_EQ(env.upper[k], hi);
  }
  // With distinct values the band is the 5th..196th order statistics.
  std::sort(values.begin(), values.end());
  EXPECT_EQ(lo, values[5]);
  EXPECT_EQ(hi, values[194]);
  EXPECT_EQ(env.central_draw_count, 190u);
}

TEST(Envelope, CentralCountMatchesDirectScan) {
  const auto s = sigma_covariate_samples(400, 0.6, 8);
  const auto r = circularity_envelope(s, 12, 0.9);
  std::size_t inside = 0;
  for (std::size_t d = 0; d < s.size(); ++d) {
    const auto f = s.field_at(d);
    bool in = true;
    for (std::size_t k = 0; k < r.envelope.grid.size(); ++k) {
      const double v = f.sigma_x_at(r.envelope.grid[k]) / f.sigma_y_at(r.envelope.grid[k]);
      in = in && r.envelope.lower[k] <= v && v <= r.envelope.upper[k];
    }
    inside += in;
  }
  EXPECT_EQ(inside, r.envelope.central_draw_count);
  EXPECT_GE(inside, central_count(400, 0.9));
  for (std::size_t k = 0; k < r.envelope.lower.size(); ++k) EXPECT_LE(r.envelope.lower[k], r.envelope.upper[k]);
  ASSERT_TRUE(r.warning.has_value());
}

TEST(Envelope, TooFewDrawsOrEmptyGrid) {
  const auto s = sigma_covariate_samples(50, 0.6, 9);
  EXPECT_THROW(circularity_envelope(s, 8, 0.95), UsageError);
  EXPECT_THROW(circularity_envelope(sigma_covariate_samples(120, 0.6, 9), 0, 0.95), ConfigError);
}

TEST(AxialInvariance, ShiftingThetaByPiChangesNoTest) {
  auto s = sigma_covariate_samples(150, 0.6, 10);
  auto t = s;
  const auto ti = *s.index_of("theta_0");
  for (auto& row : t.values) row[ti] += pi;
  const auto a = circularity_envelope(s, 8), b = circularity_envelope(t, 8);
  EXPECT_EQ(a.envelope.lower, b.envelope.lower);
  EXPECT_EQ(a.envelope.upper, b.envelope.upper);
  EXPECT_EQ(a.reject, b.reject);
  const auto pa = circularity_test(s, Point2{0.3, 0.3}), pb = circularity_test(t, Point2{0.3, 0.3});
  EXPECT_EQ(pa.interval.lower, pb.interval.lower);
  EXPECT_EQ(pa.interval.upper, pb.interval.upper);

  std::vector<double> d;
  for (int i = 0; i < 30; ++i) d.push_back(0.01 * i - 0.1);
  auto u = direction_samples(d), v = u;
  for (auto& row : v.values) row[3] += pi;
  EXPECT_EQ(direction_test(u).interval.lower, direction_test(v).interval.lower);
  EXPECT_EQ(direction_test(u).reject, direction_test(v).reject);
}

TEST(RelativeErrorStats, Arithmetic) {
  const auto z = relative_error_stats({2, 2, 2}, 2);
  EXPECT_EQ(z.bias, 0.0);
  EXPECT_EQ(z.mse, 0.0);
  const auto e = relative_error_stats({1.1 * 3, 1.1 * 3}, 3);
  EXPECT_NEAR(e.bias, 0.1, 1e-12);
  EXPECT_NEAR(e.mse, 0.01, 1e-12);
  EXPECT_THROW(relative_error_stats({1.0}, 0.0), UsageError);
  const auto a = relative_error_stats_axial({pi / 4 + pi, pi / 4}, pi / 4);
  EXPECT_NEAR(a.bias, 0.0, 1e-12);
}

TEST(Coverage, RateIsHandCount) {
  // 20 replicate intervals, 17 cover the truth.
  std::size_t covered = 0;
  for (int r = 0; r < 20; ++r) {
    CredibleInterval ci{r < 17 ? 0.0 : 2.0, r < 17 ? 2.0 : 3.0, 0.95, 1.0, false};
    covered += ci.contains(1.0);
  }
  EXPECT_DOUBLE_EQ(static_cast<double>(covered) / 20, 0.85);
}

}  // namespace
}  // namespace anssns
