#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "heavytail/cluster.hpp"
#include "heavytail/error.hpp"

using namespace heavytail;
using namespace heavytail::cluster;
using models::AngularAtom;
using randkit::RngStream;
using randkit::TailLaw;

namespace {

const Direction kPlus = Direction::scalar(1.0);

// Geometric sums of a deterministic AR(1) tail process, in closed form.
double ar1_cluster(double a, double alpha) { return std::pow(1.0 - a, -alpha) * (1.0 - std::pow(a, alpha)); }

models::TailSampler ar1_sampler(double a, double alpha) {
  return models::TailProcessSampler(fx::ar1(a, TailLaw::pareto(alpha)), RngStream(0, 0)).as_function();
}

}  // namespace

TEST(ClusterIndex, IidPositiveIsOne) {
  const auto sampler = models::iid_tail_sampler({AngularAtom{Eigen::VectorXd::Ones(1), 1.0}});
  const auto est = cluster_index_tail_process(sampler, kPlus, 1.3, 10, 1000, RngStream(31, 0));
  EXPECT_DOUBLE_EQ(est.value, 1.0);
  EXPECT_EQ(est.route, Route::tail_process);
}

TEST(ClusterIndex, Ar1AlphaOne) {
  const auto est = cluster_index_tail_process(ar1_sampler(0.5, 1.0), kPlus, 1.0, 60, 1000, RngStream(31, 1));
  EXPECT_NEAR(est.value, 1.0, 1e-12);
}

TEST(ClusterIndex, Ar1AlphaOneAndHalf) {
  const auto est = cluster_index_tail_process(ar1_sampler(0.5, 1.5), kPlus, 1.5, 60, 1000, RngStream(31, 2));
  EXPECT_NEAR(est.value, 2.0 * std::sqrt(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(ar1_cluster(0.5, 1.5), 1.8284271247461903, 1e-15);
}

TEST(ClusterIndex, NegativeDirectionOfPositiveModel) {
  const auto est = cluster_index_tail_process(ar1_sampler(0.5, 1.5), -kPlus, 1.5, 40, 500, RngStream(31, 3));
  EXPECT_DOUBLE_EQ(est.value, 0.0);
}

TEST(ClusterIndex, TooFewReplicas) {
  EXPECT_THROW(cluster_index_tail_process(ar1_sampler(0.5, 1.5), kPlus, 1.5, 10, 10, RngStream(31, 4)),
               ParameterError);
}

TEST(ClusterIndex, DimensionMismatch) {
  const Direction d2(Eigen::Vector2d(1.0, 0.0));
  EXPECT_THROW(cluster_index_tail_process(ar1_sampler(0.5, 1.5), d2, 1.5, 10, 200, RngStream(31, 5)),
               ParameterError);
}

TEST(ClosedForm, ZeroMatrixIsIidValue) {
  const auto spec = fx::ar1(0.0, TailLaw::symmetric_pareto(1.5, 1.0, 0.4));
  const auto est = closed_form_cluster_index(spec, kPlus, 20'000, RngStream(32, 0));
  EXPECT_NEAR(est.value, 0.7, 3.0 * est.std_error);
  EXPECT_EQ(est.route, Route::closed_form);
}

TEST(ClosedForm, Ar1Values) {
  for (double alpha : {1.0, 1.5}) {
    const auto est = closed_form_cluster_index(fx::ar1(0.5, TailLaw::pareto(alpha)), kPlus, 1000, RngStream(32, 1));
    EXPECT_NEAR(est.value, ar1_cluster(0.5, alpha), 1e-12) << alpha;
  }
}

TEST(ClosedForm, KestenFixedMultiplier) {
  models::KestenSpec k;
  k.base = Eigen::MatrixXd::Constant(1, 1, 0.5);
  k.b_law = TailLaw::pareto(1.5);
  const auto est = closed_form_cluster_index(k, kPlus, 1000, RngStream(32, 2));
  // Z_1 is truncated at the default horizon, whose tail is below 1e-4.
  EXPECT_NEAR(est.value, ar1_cluster(0.5, 1.5), 1e-3);
}

TEST(ClosedForm, AgreesWithTailProcessRotationScaling) {
  Eigen::MatrixXd a(2, 2);
  const double r = 0.6, phi = 0.7;
  a << r * std::cos(phi), -r * std::sin(phi), r * std::sin(phi), r * std::cos(phi);
  const auto spec = fx::var1(a, TailLaw::symmetric_pareto(1.4, 1.0, 0.3));
  const Direction theta = Direction::normalized(Eigen::Vector2d(1.0, 2.0));
  const auto cf = closed_form_cluster_index(spec, theta, 40'000, RngStream(32, 3));
  models::TailProcessSampler sampler(spec, RngStream(32, 4));
  const std::size_t horizon = models::default_horizon(spec);
  const auto tp = cluster_index_tail_process(sampler.as_function(), theta, 1.4, horizon, 40'000, RngStream(32, 5));
  const double se = std::hypot(cf.std_error, tp.std_error);
  EXPECT_GT(se, 0.0);
  EXPECT_LE(std::abs(cf.value - tp.value), 3.0 * se + 1e-4);
}

TEST(ClosedForm, GarchRejected) {
  EXPECT_THROW(closed_form_cluster_index(fx::garch(0.1, 0.85), kPlus, 1000, RngStream(32, 6)), ParameterError);
}

TEST(Telescoping, IidFirstDifference) {
  const auto sampler = models::iid_tail_sampler(
      {AngularAtom{Eigen::VectorXd::Ones(1), 0.7}, AngularAtom{-Eigen::VectorXd::Ones(1), 0.3}});
  const auto est = telescoping_difference(sampler, kPlus, 1.5, 1, 40'000, RngStream(33, 0));
  EXPECT_NEAR(est.value, 0.7, 3.0 * est.std_error);
  EXPECT_EQ(est.route, Route::telescoping);
}

TEST(Telescoping, Ar1FiniteSums) {
  // At alpha = 1 the positive sums cancel to Theta_0 = 1 for every k.
  const auto one = telescoping_difference(ar1_sampler(0.5, 1.0), kPlus, 1.0, 5, 500, RngStream(33, 1));
  EXPECT_NEAR(one.value, 1.0, 1e-12);
  const double head = 2.0 * (1.0 - std::pow(0.5, 6));
  const double tail = head - 1.0;
  const auto est = telescoping_difference(ar1_sampler(0.5, 1.5), kPlus, 1.5, 5, 500, RngStream(33, 1));
  EXPECT_NEAR(est.value, std::pow(head, 1.5) - std::pow(tail, 1.5), 1e-12);
}

TEST(Telescoping, GeometricStabilization) {
  std::vector<double> delta;
  for (std::size_t k = 1; k <= 12; ++k) {
    delta.push_back(telescoping_difference(ar1_sampler(0.5, 1.5), kPlus, 1.5, k, 200, RngStream(33, 2)).value);
  }
  for (std::size_t k = 1; k + 1 < delta.size(); ++k) {
    const double d0 = std::abs(delta[k] - delta[k - 1]);
    const double d1 = std::abs(delta[k + 1] - delta[k]);
    EXPECT_LT(d1, 0.75 * d0) << k;
  }
}

TEST(Telescoping, KZeroRejected) {
  EXPECT_THROW(telescoping_difference(ar1_sampler(0.5, 1.5), kPlus, 1.5, 0, 200, RngStream(33, 3)), ParameterError);
}

TEST(Extremal, Iid) {
  const auto sampler = models::iid_tail_sampler({AngularAtom{Eigen::VectorXd::Ones(1), 1.0}});
  EXPECT_DOUBLE_EQ(extremal_index(sampler, kPlus, 1.0, 10, 200, RngStream(34, 0)).value, 1.0);
}

TEST(Extremal, Ar1) {
  EXPECT_NEAR(extremal_index(ar1_sampler(0.5, 1.0), kPlus, 1.0, 30, 200, RngStream(34, 1)).value, 0.5, 1e-12);
  EXPECT_NEAR(extremal_index(ar1_sampler(0.5, 2.0), kPlus, 2.0, 30, 200, RngStream(34, 2)).value, 0.75, 1e-12);
}

TEST(Direction, RequiresUnitNorm) {
  EXPECT_THROW(Direction(Eigen::Vector2d(1.0, 1.0)), ParameterError);
  EXPECT_NO_THROW(Direction(Eigen::Vector2d(0.6, 0.8)));
  EXPECT_THROW(Direction::normalized(Eigen::Vector2d::Zero()), ParameterError);
}

TEST(DirectionGrid, Sizes) {
  EXPECT_EQ(direction_grid(1).size(), 2u);
  EXPECT_EQ(direction_grid(2).size(), 64u);
  EXPECT_EQ(direction_grid(3).size(), 512u);
  for (const auto& d : direction_grid(3)) EXPECT_NEAR(d.theta().norm(), 1.0, 1e-12);
}

TEST(NuAlpha, Values) {
  const LimitMeasureEvaluator ev(1.5, {kPlus, -kPlus}, {1.8284, 0.0});
  EXPECT_DOUBLE_EQ(nu_alpha(ev, kPlus, 1.0), 1.8284);
  EXPECT_NEAR(nu_alpha(ev, kPlus, 2.0), 0.6464, 5e-5);
  EXPECT_DOUBLE_EQ(nu_alpha(ev, -kPlus, 3.0), 0.0);
}

TEST(NuAlpha, AngleInterpolation) {
  std::vector<Direction> dirs;
  std::vector<double> b;
  for (int i = 0; i < 4; ++i) {
    const double ang = i * M_PI / 2;
    dirs.emplace_back(Eigen::Vector2d(std::cos(ang), std::sin(ang)));
    b.push_back(static_cast<double>(i));
  }
  const LimitMeasureEvaluator ev(1.5, dirs, b);
  const Direction mid = Direction::normalized(Eigen::Vector2d(1.0, 1.0));
  EXPECT_NEAR(ev.b(mid), 0.5, 1e-12);
  const Direction wrap = Direction::normalized(Eigen::Vector2d(1.0, -1.0));
  EXPECT_NEAR(ev.b(wrap), 1.5, 1e-12);
}

TEST(LimitMeasure, IntegerAlphaUniquenessFlag) {
  EXPECT_TRUE(LimitMeasureEvaluator(1.0, {kPlus, -kPlus}, {1.0, 0.5}).uniqueness_flagged());
  EXPECT_FALSE(LimitMeasureEvaluator(1.0, {kPlus, -kPlus}, {1.0, 1.0}).uniqueness_flagged());
  EXPECT_FALSE(LimitMeasureEvaluator(1.5, {kPlus, -kPlus}, {1.0, 0.5}).uniqueness_flagged());
}
