#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fixtures.hpp"
#include "heavytail/error.hpp"
#include "heavytail/limits.hpp"
#include "heavytail/regen.hpp"

using namespace heavytail;
using namespace heavytail::limits;
using randkit::RngStream;
using randkit::TailLaw;

namespace {

const Direction kPlus = Direction::scalar(1.0);

StableLawParams scalar_params(double alpha, double b_plus, double b_minus) {
  return StableLawParams::make(alpha, {StablePair{kPlus, b_plus, b_minus}});
}

void expect_all_pass(const StableCheckResult& r) {
  for (const auto& c : r.comparisons) {
    EXPECT_LE(c.sup_abs_gap, c.mc_band) << "theta " << c.theta.theta().transpose();
    EXPECT_TRUE(c.pass);
  }
}

}  // namespace

TEST(StableCf, SymmetricIsReal) {
  for (double alpha : {0.5, 1.0, 1.5}) {
    for (double x : {-2.0, -0.3, 0.7, 2.5}) {
      const auto psi = stable_cf(alpha, 0.8, 0.8, x);
      EXPECT_DOUBLE_EQ(psi.imag(), 0.0);
      EXPECT_NEAR(psi.real(), std::exp(-2.0 * 0.8 / c_alpha(alpha) * std::pow(std::abs(x), alpha)), 1e-15);
    }
  }
}

TEST(StableCf, OriginIsOne) {
  EXPECT_EQ(stable_cf(1.3, 2.0, 0.1, 0.0), std::complex<double>(1.0, 0.0));
}

TEST(StableCf, HalfAlphaOneSided) {
  const double c = 0.5 / (std::tgamma(1.5) * std::cos(M_PI / 4));
  EXPECT_NEAR(c_alpha(0.5), c, 1e-15);
  const auto expect = std::exp(-(1.0 / c) * std::complex<double>(1.0, -std::tan(M_PI / 4)));
  const auto got = stable_cf(0.5, 1.0, 0.0, 1.0);
  EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-14);
}

TEST(StableCf, AlphaOneAsymmetricRejected) {
  EXPECT_THROW(stable_cf(1.0, 1.0, 0.5, 0.3), ParameterError);
  EXPECT_NO_THROW(stable_cf(1.0, 1.0, 1.0, 0.3));
}

TEST(StableCheck, IidSymmetricStable) {
  const auto spec = fx::ar1(0.0, TailLaw::stable(1.5));
  const auto r = stable_check(spec, scalar_params(1.5, 0.5, 0.5), {kPlus}, 1000, 2000, RngStream(41, 0));
  EXPECT_EQ(r.a_n_source, "analytic");
  expect_all_pass(r);
}

// Pareto mass below the scale contributes a drift of order -4 n^{-1/4} to
// S_n / a_n at alpha = 0.8, so the band is met only for large n.
TEST(StableCheck, IidParetoBelowOne) {
  const auto spec = fx::ar1(0.0, TailLaw::pareto(0.8));
  const auto r = stable_check(spec, scalar_params(0.8, 1.0, 0.0), {kPlus}, 100'000, 2000, RngStream(41, 1));
  EXPECT_EQ(r.centering_source, "none");
  expect_all_pass(r);
}

TEST(StableCheck, IidParetoGapShrinksWithN) {
  const auto spec = fx::ar1(0.0, TailLaw::pareto(0.8));
  double previous = 2.0;
  for (std::size_t n : {100, 1000, 10'000}) {
    const auto r = stable_check(spec, scalar_params(0.8, 1.0, 0.0), {kPlus}, n, 4000, RngStream(41, 7));
    const double gap = r.comparisons.front().sup_abs_gap;
    EXPECT_LT(gap, previous) << n;
    previous = gap;
  }
}

TEST(StableCheck, Ar1WithClosedFormB) {
  const auto spec = fx::ar1(0.5, TailLaw::symmetric_pareto(1.5));
  const double bp = cluster::closed_form_cluster_index(spec, kPlus, 20'000, RngStream(41, 2)).value;
  const double bm = cluster::closed_form_cluster_index(spec, -kPlus, 20'000, RngStream(41, 3)).value;
  const auto r = stable_check(spec, scalar_params(1.5, bp, bm), {kPlus}, 1000, 2000, RngStream(41, 4));
  EXPECT_EQ(r.centering_source, "exact");
  expect_all_pass(r);
}

TEST(StableCheck, LightTailIsRegimeError) {
  const auto spec = fx::ar1(0.0, TailLaw::symmetric_pareto(2.5));
  EXPECT_THROW(stable_check(spec, scalar_params(1.5, 0.5, 0.5), {kPlus}, 100, 100, RngStream(41, 5)), RegimeError);
}

TEST(StableCheck, AlphaMismatch) {
  const auto spec = fx::ar1(0.0, TailLaw::stable(1.5));
  EXPECT_THROW(stable_check(spec, scalar_params(1.2, 0.5, 0.5), {kPlus}, 100, 100, RngStream(41, 6)),
               ParameterError);
}

TEST(Ldp, RegionBelowGrowthRule) {
  LdpOptions opts;
  opts.region = std::make_pair(1.0, 1e6);
  EXPECT_THROW(ldp_scan(fx::ar1(0.0, TailLaw::pareto(0.8)), kPlus, 1000, 4, 1000, 1.0, RngStream(42, 0), opts),
               ParameterError);
}

TEST(Ldp, TooFewReplicas) {
  EXPECT_THROW(ldp_scan(fx::ar1(0.0, TailLaw::pareto(0.8)), kPlus, 1000, 4, 200, 1.0, RngStream(42, 1)),
               InsufficientDataError);
}

TEST(Ldp, IidParetoApproachesOne) {
  const auto r = ldp_scan(fx::ar1(0.0, TailLaw::pareto(0.8)), kPlus, 500, 5, 40'000, 1.0, RngStream(42, 2));
  ASSERT_EQ(r.xs.size(), 5u);
  for (std::size_t j = 1; j < r.xs.size(); ++j) EXPECT_GT(r.xs[j], r.xs[j - 1]);
  EXPECT_GT(r.xs.front(), r.b_n);
  EXPECT_LT(r.xs.back(), r.c_n);
  EXPECT_NEAR(r.ratios.back(), 1.0, 3.0 * r.ratio_se.back() + 0.05);
  EXPECT_EQ(r.tail_source, "analytic");
}

TEST(GaussianClt, AtomizedIsSampleCovariance) {
  const auto spec = fx::ar1(0.0, TailLaw::gaussian(1.5));
  const auto m = regen::Minorization::atomized(spec);
  const auto blocks = regen::harvest_blocks(m, 5000, RngStream(43, 0), true, 0);
  const auto rep = gaussian_sigma(blocks);
  const auto x = fx::column(blocks.observations);
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  EXPECT_NEAR(rep.sigma_hat(0, 0), var, 1e-12 * var);
  EXPECT_DOUBLE_EQ(rep.mean_cycle_length, 1.0);
}

TEST(GaussianClt, Ar1AgreesWithBatchMeans) {
  const auto spec = fx::ar1(0.5, TailLaw::gaussian());
  const auto m = regen::Minorization::for_model(spec, 2.0);
  const auto blocks = regen::harvest_blocks(m, 200'000, RngStream(43, 1), true);
  const auto rep = gaussian_sigma(blocks);
  EXPECT_LT(rep.rel_gap, 0.10);
  // Long-run variance Var(Z) / (1 - a)^2 = 4.
  EXPECT_NEAR(rep.sigma_hat(0, 0), 4.0, 0.4);
}

TEST(GaussianClt, TooShort) {
  const auto spec = fx::ar1(0.5, TailLaw::gaussian());
  const auto m = regen::Minorization::for_model(spec, 2.0);
  const auto blocks = regen::harvest_blocks(m, 60, RngStream(43, 2), true);
  EXPECT_THROW(gaussian_sigma(blocks), InsufficientDataError);
}
