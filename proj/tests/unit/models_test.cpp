#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "heavytail/error.hpp"
#include "heavytail/models.hpp"
#include "heavytail/stats.hpp"
#include "heavytail/tailstats.hpp"

using namespace heavytail;
using namespace heavytail::models;
using randkit::RngStream;
using randkit::TailLaw;
using fx::ar1;

TEST(SimulatePath, ZeroCoefficientGivesInnovations) {
  const auto law = TailLaw::pareto(1.5);
  const auto path = simulate_path(ar1(0.0, law), 1000, 0, RngStream(1, 7));
  RngStream direct(1, 7);
  for (std::size_t t = 0; t < 1000; ++t) {
    ASSERT_EQ(path.values(static_cast<Eigen::Index>(t), 0), law.sample(direct)) << t;
  }
}

TEST(SimulatePath, EmptyPath) {
  const auto path = simulate_path(ar1(0.5, TailLaw::pareto(1.5)), 0, 0, RngStream(1, 1));
  EXPECT_EQ(path.rows(), 0u);
}

TEST(SimulatePath, GarchReturnsMeanZero) {
  const auto path = simulate_path(fx::garch(0.1, 0.85), 200'000, std::nullopt, RngStream(2, 2));
  const auto x = fx::column(path.values);
  const auto m = summarize(x);
  EXPECT_NEAR(m.mean, 0.0, 3.0 * m.std_error);
}

TEST(SimulatePath, ExplosiveVar1Rejected) {
  EXPECT_THROW(simulate_path(ar1(1.2, TailLaw::pareto(1.5)), 10, 0, RngStream(1, 1)), DivergenceError);
}

TEST(TailProcess, Ar1IsGeometric) {
  const auto tp = sample_tail_process(ar1(0.5, TailLaw::pareto(1.5)), 12, RngStream(3, 3));
  ASSERT_EQ(tp.horizon(), 12u);
  for (std::size_t t = 0; t <= 12; ++t) {
    EXPECT_DOUBLE_EQ(tp.theta(static_cast<Eigen::Index>(t), 0), std::pow(0.5, static_cast<double>(t)));
  }
}

TEST(TailProcess, HorizonZeroUnitNorm) {
  const auto tp = sample_tail_process(ar1(0.5, TailLaw::symmetric_pareto(1.5)), 0, RngStream(3, 4));
  ASSERT_EQ(tp.theta.rows(), 1);
  EXPECT_DOUBLE_EQ(std::abs(tp.theta(0, 0)), 1.0);
}

TEST(TailProcess, KestenFixedMultiplier) {
  KestenSpec k;
  k.base = Eigen::MatrixXd::Constant(1, 1, 0.5);
  k.b_law = TailLaw::pareto(1.5);
  const auto tp = sample_tail_process(k, 10, RngStream(3, 5));
  for (Eigen::Index t = 0; t <= 10; ++t) EXPECT_DOUBLE_EQ(tp.theta(t, 0), std::pow(0.5, static_cast<double>(t)));
}

TEST(TailProcess, MultivariateRowsOnSphereAtZero) {
  Eigen::MatrixXd a(2, 2);
  a << 0.4, -0.3, 0.3, 0.4;
  const auto spec = fx::var1(a, TailLaw::symmetric_pareto(1.2));
  TailProcessSampler sampler(spec, RngStream(4, 0));
  EXPECT_EQ(sampler.theta0_source(), "exact");
  RngStream s(4, 1);
  for (int i = 0; i < 100; ++i) {
    const auto tp = sampler.sample(5, s);
    EXPECT_NEAR(tp.theta.row(0).norm(), 1.0, 1e-12);
    for (Eigen::Index t = 1; t <= 5; ++t) {
      const Eigen::VectorXd expect = a * tp.theta.row(t - 1).transpose();
      EXPECT_NEAR((tp.theta.row(t).transpose() - expect).norm(), 0.0, 1e-14);
    }
  }
}

TEST(TailIndex, GarchUnitPersistenceIsTwo) {
  for (double a1 : {0.05, 0.1, 0.3}) {
    EXPECT_NEAR(tail_index(fx::garch(a1, 1.0 - a1)), 2.0, 1e-6) << a1;
  }
}

TEST(TailIndex, GarchMatchesQuadratureOracle) {
  const double oracle = fx::garch_tail_oracle(0.1, 0.85);
  EXPECT_NEAR(tail_index(fx::garch(0.1, 0.85)), oracle, 1e-3);
}

TEST(TailIndex, KestenLognormalClosedForm) {
  const auto spec = fx::kesten_lognormal(-0.5, 0.5, TailLaw::gaussian());
  EXPECT_NEAR(tail_index(spec), 2.0, 1e-6);
  EXPECT_NEAR(moment_function(spec, 2.0), 1.0, 1e-12);
}

TEST(TailIndex, Var1UsesInnovationIndex) {
  EXPECT_DOUBLE_EQ(tail_index(ar1(0.5, TailLaw::pareto(1.7))), 1.7);
  EXPECT_THROW(tail_index(ar1(0.5, TailLaw::gaussian())), UnsupportedLawError);
}

TEST(TailIndex, NonContractiveGarchHasNoRoot) {
  EXPECT_THROW(tail_index(fx::garch(2.0, 0.9)), RegimeError);
}

TEST(GaussHermite, IntegratesPolynomials) {
  const auto q = gauss_hermite(20);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const double x = q.nodes[i], w = q.weights[i];
    m0 += w; m2 += w * x * x; m4 += w * x * x * x * x;
  }
  EXPECT_NEAR(m0, std::sqrt(M_PI), 1e-12);
  EXPECT_NEAR(m2, std::sqrt(M_PI) / 2, 1e-12);
  EXPECT_NEAR(m4, 3 * std::sqrt(M_PI) / 4, 1e-12);
}

TEST(StationaryConstants, Ar1) {
  const auto spec = ar1(0.5, TailLaw::pareto(1.5));
  const auto mean = stationary_mean(spec);
  ASSERT_TRUE(mean);
  EXPECT_NEAR((*mean)(0), 3.0 / (1 - 0.5), 1e-12);
  const auto c = stationary_tail_constant(spec);
  ASSERT_TRUE(c);
  EXPECT_NEAR(*c, 1.0 / (1.0 - std::pow(0.5, 1.5)), 1e-12);
}

TEST(Drift, ContractiveAr1) {
  std::vector<Vector> grid;
  for (double y : {-40.0, -20.0, -5.0, 0.0, 5.0, 20.0, 40.0}) grid.push_back(Vector::Constant(1, y));
  const auto r = drift_margin(ar1(0.5, TailLaw::symmetric_pareto(1.5)), 1.0, 1, grid, RngStream(6, 0));
  EXPECT_NEAR(r.beta, 0.5, 4.0 * r.beta_se + 0.02);
  EXPECT_TRUE(r.pass);
}

TEST(Drift, ExpansiveAr1Fails) {
  std::vector<Vector> grid;
  for (double y : {-40.0, -20.0, 0.0, 20.0, 40.0}) grid.push_back(Vector::Constant(1, y));
  const auto r = drift_margin(ar1(1.2, TailLaw::symmetric_pareto(1.5)), 1.0, 1, grid, RngStream(6, 1));
  EXPECT_GT(r.beta, 1.0);
  EXPECT_FALSE(r.pass);
}

TEST(Drift, GarchSkeletonBelowTailIndex) {
  const auto spec = fx::garch(0.1, 0.85);
  const double p = tail_index(spec) / 2.0 - 0.1;
  std::vector<Vector> grid;
  for (double s : {1.0, 5.0, 20.0, 100.0, 500.0}) grid.push_back(Vector::Constant(1, s));
  const auto r = drift_margin(spec, p, 10, grid, RngStream(6, 2));
  EXPECT_TRUE(r.pass) << "beta " << r.beta << " upper " << r.beta_upper;
}

TEST(LagProducts, LagZeroIsSquare) {
  Eigen::VectorXd x(4);
  x << 1, -2, 3, 0.5;
  const auto p = lag_products(x, 0);
  ASSERT_EQ(p.cols(), 1u);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p.values(i, 0), x(i) * x(i));
}

TEST(LagProducts, IidParetoProductKeepsIndex) {
  RngStream s(7, 0);
  const auto draws = randkit::sample_pareto(s, 2.0, 1'000'000);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(draws.data(), static_cast<Eigen::Index>(draws.size()));
  const auto p = lag_products(x, 1);
  const auto fit = tailstats::hill_estimate(fx::column(p.values, 1), 1000);
  EXPECT_LE(fit.ci_low, 2.0);
  EXPECT_GE(fit.ci_high, 2.0);
}

TEST(LagProducts, GarchCrossProductHalvesIndex) {
  const auto spec = fx::garch(0.35, 0.6);
  const double alpha = tail_index(spec);
  ASSERT_GT(alpha, 2.0);
  ASSERT_LT(alpha, 4.0);
  // Extremes cluster, so the nominal Hill band is optimistic; a long path
  // and moderate k keep it honest.
  const auto p = acf_functional_path(spec, 1, 4'000'000, RngStream(7, 1));
  const auto fit = tailstats::hill_estimate(fx::column(p.values, 1), 400);
  EXPECT_LE(fit.ci_low, alpha / 2.0) << fit.alpha_hat;
  EXPECT_GE(fit.ci_high, alpha / 2.0) << fit.alpha_hat;
}

TEST(Validate, GarchFieldNamed) {
  try {
    validate(fx::garch(-0.1, 0.85));
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha1"), std::string::npos);
  }
}
