#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gtep/inflow.hpp"

namespace gtep {
namespace {

InflowModel two_hydros() {
  return InflowModel::stationary({100.0, 50.0}, {20.0, 10.0}, {0.5, 0.5});
}

TEST(ConditionNext, ZeroCorrelationZeroNoiseGivesMean) {
  auto m = InflowModel::stationary({100.0, 50.0}, {20.0, 10.0}, {0.0, 0.0});
  const std::vector<double> cur{140.0, 20.0}, xi{0.0, 0.0};
  const auto next = condition_next(m, 0, cur, xi);
  EXPECT_DOUBLE_EQ(next.inflow[0], 100.0);
  EXPECT_DOUBLE_EQ(next.inflow[1], 50.0);
}

TEST(ConditionNext, PerfectPersistencePropagatesAnomaly) {
  InflowModel m;
  m.seasons = 2;
  m.mean = {{100.0}, {300.0}};
  m.stddev = {{20.0}, {60.0}};
  m.serial_corr = {{1.0}, {1.0}};
  m.spatial_corr = Eigen::MatrixXd::Identity(1, 1);
  const std::vector<double> cur{130.0}, xi{2.7};
  const auto next = condition_next(m, 0, cur, xi);
  EXPECT_NEAR((next.inflow[0] - 300.0) / 60.0, (130.0 - 100.0) / 20.0, 1e-12);
}

TEST(ConditionNext, MatchesHandEvaluatedFormula) {
  // Frozen from a decimal evaluation of the AR(1) recursion.
  const std::vector<double> cur{120.0, 45.0}, xi{1.0, -1.0};
  const auto next = condition_next(two_hydros(), 0, cur, xi);
  EXPECT_NEAR(next.inflow[0], 127.320508075688772935, 1e-12);
  EXPECT_NEAR(next.inflow[1], 38.8397459621556135324, 1e-12);
  EXPECT_EQ(next.clamp_events, 0);
  EXPECT_NEAR(next.sensitivity[0], 0.5, 1e-15);
}

TEST(ConditionNext, AffineInNoiseWithExpectedSlope) {
  const auto m = two_hydros();
  const std::vector<double> cur{110.0, 52.0};
  const std::vector<double> x0{0.3, -0.2}, x1{1.3, 0.8};
  const auto a = condition_next(m, 0, cur, x0);
  const auto b = condition_next(m, 0, cur, x1);
  EXPECT_NEAR(b.inflow[0] - a.inflow[0], 20.0 * std::sqrt(0.75), 1e-12);
  EXPECT_NEAR(b.inflow[1] - a.inflow[1], 10.0 * std::sqrt(0.75), 1e-12);
}

TEST(ConditionNext, DegenerateStddevWithCorrelationThrows) {
  auto m = InflowModel::stationary({100.0}, {0.0}, {0.4});
  const std::vector<double> cur{100.0}, xi{0.0};
  EXPECT_THROW(condition_next(m, 0, cur, xi), DegenerateInflowModel);
}

TEST(ConditionNext, ClampsNegativeInflowAndCountsIt) {
  auto m = InflowModel::stationary({10.0}, {20.0}, {0.0});
  const std::vector<double> cur{10.0}, xi{-3.0};
  const auto next = condition_next(m, 0, cur, xi);
  EXPECT_EQ(next.inflow[0], 0.0);
  EXPECT_EQ(next.clamp_events, 1);
  EXPECT_EQ(next.sensitivity[0], 0.0);
}

TEST(ConditionNext, NoClampWhenMeanAtLeastFourSigma) {
  auto m = InflowModel::stationary({80.0}, {20.0}, {0.7});
  // rho*1 + 3*sqrt(1 - rho^2) <= sqrt(10) < 4 for any rho.
  for (double a : {60.0, 80.0, 100.0}) {
    for (double xi : {-3.0, 0.0, 3.0}) {
      const std::vector<double> cur{a}, x{xi};
      EXPECT_EQ(condition_next(m, 0, cur, x).clamp_events, 0);
    }
  }
}

TEST(ConditionNext, StationaryVarianceUnderRepeatedConditioning) {
  auto m = InflowModel::stationary({1000.0}, {20.0}, {0.6});
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  const int n = 200000;
  std::vector<double> a{1000.0};
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const std::vector<double> xi{normal(rng)};
    a = condition_next(m, 0, a, xi).inflow;
    sum += a[0];
    sum2 += a[0] * a[0];
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // Var of the sample variance of an AR(1): 2 s^4 (1 + r^2) / ((1 - r^2) n).
  const double se = 400.0 * std::sqrt(2.0 * (1 + 0.36) / ((1 - 0.36) * n));
  EXPECT_NEAR(var, 400.0, 3.0 * se);
}

TEST(SampleNoise, IdentityCorrelationIsUncorrelated) {
  InflowModel m = InflowModel::stationary({1, 1, 1}, {1, 1, 1}, {0, 0, 0});
  const int n = 100000;
  const auto draws = sample_noise(m, n, std::uint64_t{42});
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      double s = 0.0;
      for (const auto& d : draws) s += d[i] * d[j];
      EXPECT_NEAR(s / n, 0.0, 0.01);
    }
  }
}

TEST(SampleNoise, SingleHydroMarginalMoments) {
  InflowModel m = InflowModel::stationary({1}, {1}, {0});
  const int n = 100000;
  const auto draws = sample_noise(m, n, std::uint64_t{3});
  double s = 0.0, s2 = 0.0;
  for (const auto& d : draws) {
    s += d[0];
    s2 += d[0] * d[0];
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 3.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / n));
}

TEST(SampleNoise, ReproducesTargetCorrelation) {
  InflowModel m = InflowModel::stationary({1, 1}, {1, 1}, {0, 0});
  m.spatial_corr << 1.0, 0.7, 0.7, 1.0;
  const int n = 100000;
  const auto draws = sample_noise(m, n, std::uint64_t{8});
  double s = 0.0;
  for (const auto& d : draws) s += d[0] * d[1];
  // se of a sample correlation ~ (1 - r^2)/sqrt(n)
  EXPECT_NEAR(s / n, 0.7, 3.0 * (1 - 0.49) / std::sqrt(n) + 0.01);
}

TEST(SampleNoise, SameSeedBitIdentical) {
  auto m = two_hydros();
  m.spatial_corr << 1.0, 0.3, 0.3, 1.0;
  EXPECT_EQ(sample_noise(m, 50, std::uint64_t{9}), sample_noise(m, 50, std::uint64_t{9}));
  EXPECT_NE(sample_noise(m, 50, std::uint64_t{9}), sample_noise(m, 50, std::uint64_t{10}));
}

TEST(SampleNoise, RejectsNonPsdMatrix) {
  auto m = InflowModel::stationary({1, 1, 1}, {1, 1, 1}, {0, 0, 0});
  m.spatial_corr << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;
  EXPECT_THROW(sample_noise(m, 10, std::uint64_t{1}), std::domain_error);
  EXPECT_FALSE(check_inflow_model(m, 3).empty());
}

TEST(FitAr1, ConstantSeries) {
  const auto fit = fit_ar1({std::vector<double>(40, 100.0)});
  EXPECT_DOUBLE_EQ(fit.model.mean[0][0], 100.0);
  EXPECT_EQ(fit.model.stddev[0][0], 0.0);
  EXPECT_EQ(fit.model.serial_corr[0][0], 0.0);
  EXPECT_FALSE(fit.warnings.empty());
}

TEST(FitAr1, RoundTripRecoversParameters) {
  // Simulate directly from the AR(1) definition, independent of
  // condition_next.
  const double mu = 100.0, sigma = 20.0, rho = 0.5;
  const int n = 50000;
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> normal;
  std::vector<double> series(n);
  double z = normal(rng);
  for (int k = 0; k < n; ++k) {
    series[k] = mu + sigma * z;
    z = rho * z + std::sqrt(1 - rho * rho) * normal(rng);
  }
  const auto fit = fit_ar1({series});
  const double se_mean = sigma * std::sqrt((1 + rho) / (1 - rho) / n);
  const double se_sd = sigma * std::sqrt((1 + rho * rho) / (1 - rho * rho) / (2.0 * n));
  const double se_rho = std::sqrt((1 - rho * rho) / n);
  EXPECT_NEAR(fit.model.mean[0][0], mu, 3 * se_mean);
  EXPECT_NEAR(fit.model.stddev[0][0], sigma, 3 * se_sd);
  EXPECT_NEAR(fit.model.serial_corr[0][0], rho, 3 * se_rho);
}

TEST(FitAr1, DuplicatedSeriesAreFullyCorrelated) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(50.0, 5.0);
  std::vector<double> s(500);
  for (auto& v : s) v = normal(rng);
  const auto fit = fit_ar1({s, s});
  EXPECT_NEAR(fit.model.spatial_corr(0, 1), 1.0, 1e-9);
  EXPECT_TRUE(check_inflow_model(fit.model, 2).empty());
}

TEST(FitAr1, SeasonalMeans) {
  std::vector<double> s;
  for (int year = 0; year < 10; ++year) {
    s.push_back(10.0 + year % 2);
    s.push_back(50.0 - year % 3);
  }
  const auto fit = fit_ar1({s}, 2);
  EXPECT_NEAR(fit.model.mean[0][0], 10.5, 1e-12);
  EXPECT_NEAR(fit.model.mean[1][0], (50.0 * 10 - (0 + 1 + 2 + 0 + 1 + 2 + 0 + 1 + 2 + 0)) / 10.0, 1e-12);
}

TEST(FitAr1, RequiresTwoObservationsPerSeason) {
  EXPECT_THROW(fit_ar1({{1.0, 2.0, 3.0}}, 2), std::invalid_argument);
}

TEST(ReadInflowHistory, ParsesTable) {
  std::istringstream in("stage,hydro,value\n1,H1,10\n2,H1,12\n1,H2,5\n2,H2,7.5\n");
  const auto h = read_inflow_history(in);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.at("H1"), (std::vector<double>{10, 12}));
  EXPECT_EQ(h.at("H2"), (std::vector<double>{5, 7.5}));
}

TEST(ReadInflowHistory, RejectsGaps) {
  std::istringstream in("1,H1,10\n3,H1,12\n");
  EXPECT_THROW(read_inflow_history(in), std::runtime_error);
}

}  // namespace
}  // namespace gtep
