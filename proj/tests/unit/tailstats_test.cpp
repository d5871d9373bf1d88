#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "heavytail/error.hpp"
#include "heavytail/tailstats.hpp"

using namespace heavytail;
using namespace heavytail::tailstats;
using randkit::RngStream;
using randkit::TailLaw;

TEST(Hill, ExactParetoSample) {
  RngStream s(21, 0);
  const auto x = randkit::sample_pareto(s, 2.0, 100'000);
  const auto fit = hill_estimate(x, 1000);
  EXPECT_EQ(fit.k_used, 1000u);
  EXPECT_LE(fit.ci_low, 2.0);
  EXPECT_GE(fit.ci_high, 2.0);
  EXPECT_NEAR(fit.ci_high - fit.ci_low, 2 * 1.96 * fit.alpha_hat / std::sqrt(1000.0), 1e-12);
}

TEST(Hill, DefaultK) {
  RngStream s(21, 1);
  const auto x = randkit::sample_pareto(s, 1.0, 10'000);
  EXPECT_EQ(hill_estimate(x).k_used, 100u);
}

TEST(Hill, ConstantSampleDegenerate) {
  const std::vector<double> x(100, 3.0);
  EXPECT_THROW(hill_estimate(x, 10), DegenerateSampleError);
}

TEST(Hill, KOutOfRange) {
  std::vector<double> x(50);
  std::iota(x.begin(), x.end(), 1.0);
  EXPECT_THROW(hill_estimate(x, 50), ParameterError);
  EXPECT_THROW(hill_estimate(x, 1), ParameterError);
}

TEST(Hill, UsesAbsoluteValues) {
  RngStream s(21, 2);
  auto x = randkit::sample_pareto(s, 1.5, 5000);
  const auto a = hill_estimate(x, 100);
  for (std::size_t i = 0; i < x.size(); i += 2) x[i] = -x[i];
  const auto b = hill_estimate(x, 100);
  EXPECT_EQ(a.alpha_hat, b.alpha_hat);
}

TEST(NormalizingSequence, Analytic) {
  EXPECT_DOUBLE_EQ(normalizing_sequence(TailLaw::pareto(2.0), 100), 10.0);
}

TEST(NormalizingSequence, OrderStatistic) {
  std::vector<double> x(100);
  std::iota(x.begin(), x.end(), 1.0);
  EXPECT_DOUBLE_EQ(normalizing_sequence(x, 100), 100.0);
  EXPECT_DOUBLE_EQ(normalizing_sequence(x, 10), 91.0);
  EXPECT_THROW(normalizing_sequence(x, 101), ParameterError);
}

TEST(NormalizingSequence, GarchSelfConsistent) {
  const auto path = models::simulate_path(fx::garch(0.1, 0.85), 1'000'000, std::nullopt, RngStream(22, 0));
  const auto x = fx::column(path.values);
  const std::size_t n = 10'000;
  const auto fit = hill_estimate(x, 1000);
  const double c0 = 1000.0 / static_cast<double>(x.size()) * std::pow(fit.threshold, fit.alpha_hat);
  const double predicted = std::pow(c0 * static_cast<double>(n), 1.0 / fit.alpha_hat);
  const double a_n = normalizing_sequence(x, n);
  EXPECT_NEAR(a_n / predicted, 1.0, 0.10);
}

TEST(EmpiricalTailProcess, IidProfileVanishes) {
  const auto path = models::simulate_path(fx::ar1(0.0, TailLaw::symmetric_pareto(1.5)), 200'000, 0,
                                          RngStream(23, 0));
  const auto tp = empirical_tail_process(path, 0.99, 5);
  EXPECT_GE(tp.exceedance_count, 1000u);
  for (Eigen::Index t = 1; t <= 5; ++t) {
    EXPECT_NEAR(tp.mean_profile(t, 0), 0.0, 3.0 * tp.std_error(t, 0)) << t;
  }
}

TEST(EmpiricalTailProcess, Ar1Geometric) {
  const auto path = models::simulate_path(fx::ar1(0.5, TailLaw::pareto(1.5)), 400'000, std::nullopt,
                                          RngStream(23, 1));
  const auto tp = empirical_tail_process(path, 0.999, 4);
  for (Eigen::Index t = 0; t <= 4; ++t) {
    // X_{t+s}/X_t = 0.5^s + (innovations since t)/X_t; the second term has
    // mean at most E Z (1 - 0.5^s)/(1 - 0.5) / threshold with E Z = 3.
    const double expect = std::pow(0.5, static_cast<double>(t));
    const double bias = 3.0 * (1.0 - expect) / 0.5 / tp.threshold;
    EXPECT_NEAR(tp.mean_profile(t, 0), expect, 3.0 * tp.std_error(t, 0) + bias) << t;
  }
}

TEST(EmpiricalTailProcess, HorizonZeroAveragedDirection) {
  const auto path = models::simulate_path(fx::ar1(0.5, TailLaw::pareto(1.5)), 10'000, 0, RngStream(23, 2));
  const auto tp = empirical_tail_process(path, 0.95, 0);
  ASSERT_EQ(tp.mean_profile.rows(), 1);
  EXPECT_DOUBLE_EQ(tp.mean_profile(0, 0), 1.0);
}

TEST(EmpiricalTailProcess, TooFewExceedances) {
  const auto path = models::simulate_path(fx::ar1(0.5, TailLaw::pareto(1.5)), 1000, 0, RngStream(23, 3));
  EXPECT_THROW(empirical_tail_process(path, 0.99, 2), InsufficientDataError);
}

TEST(AngularMeasure, SingleRay) {
  Eigen::MatrixXd v(5, 2);
  v << 1, 0, 2, 0, 3, 0, 4, 0, 5, 0;
  const auto m = angular_measure(v, 3);
  ASSERT_EQ(m.atoms.size(), 1u);
  EXPECT_DOUBLE_EQ(m.atoms[0].direction(0), 1.0);
  EXPECT_DOUBLE_EQ(m.atoms[0].direction(1), 0.0);
  EXPECT_DOUBLE_EQ(m.atoms[0].weight, 1.0);
  EXPECT_DOUBLE_EQ(m.total, 1.0);
}

TEST(AngularMeasure, SymmetricScalarPareto) {
  const auto path = models::simulate_path(fx::ar1(0.0, TailLaw::symmetric_pareto(1.2)), 100'000, 0,
                                          RngStream(24, 0));
  const std::size_t k = 2000;
  const auto m = angular_measure(path.values, k);
  const auto masses = bucket_masses(m, 2);
  const double se = std::sqrt(0.25 / static_cast<double>(k));
  EXPECT_NEAR(masses[0], 0.5, 3 * se);
  EXPECT_NEAR(masses[1], 0.5, 3 * se);
  EXPECT_NEAR(masses[0] + masses[1], 1.0, 1e-12);
}

TEST(AngularMeasure, KOutOfRange) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(4, 1);
  EXPECT_THROW(angular_measure(v, 0), ParameterError);
  EXPECT_THROW(angular_measure(v, 5), ParameterError);
}

TEST(AngularMeasure, AtomsOnSphere) {
  Eigen::MatrixXd v(200, 3);
  RngStream s(24, 1);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) v(i, j) = randkit::sample_normal(s);
  const auto m = angular_measure(v, 50);
  double total = 0;
  for (const auto& a : m.atoms) {
    EXPECT_NEAR(a.direction.norm(), 1.0, 1e-12);
    EXPECT_GE(a.weight, 0.0);
    total += a.weight;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}
