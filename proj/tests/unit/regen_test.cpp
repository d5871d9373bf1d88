#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "heavytail/error.hpp"
#include "heavytail/regen.hpp"
#include "heavytail/stats.hpp"
#include "heavytail/tailstats.hpp"

using namespace heavytail;
using namespace heavytail::regen;
using randkit::RngStream;
using randkit::TailLaw;

namespace {

const auto kAr1 = fx::ar1(0.5, TailLaw::symmetric_pareto(1.5));

// Radius giving eps = (1 / (1 + 2 * 0.5 * M))^1.5 = 0.2 for kAr1.
const double kRadius02 = std::pow(0.2, -1.0 / 1.5) - 1.0;

}  // namespace

TEST(Minorization, EpsilonClosedForm) {
  const auto m = Minorization::for_model(kAr1, kRadius02);
  EXPECT_NEAR(m.epsilon(), 0.2, 1e-12);
  EXPECT_TRUE(m.in_small_set(Eigen::VectorXd::Constant(1, kRadius02)));
  EXPECT_FALSE(m.in_small_set(Eigen::VectorXd::Constant(1, kRadius02 + 1e-9)));
}

TEST(Minorization, MinorantBelowKernel) {
  const auto m = Minorization::for_model(fx::ar1(0.5, TailLaw::gaussian()), 1.5);
  for (double x : {-1.5, -0.4, 0.0, 1.1, 1.5}) {
    for (double y = -6.0; y <= 6.0; y += 0.05) {
      const Eigen::VectorXd yv = Eigen::VectorXd::Constant(1, y);
      const double kernel = m.noise_density(Eigen::VectorXd::Constant(1, y - 0.5 * x));
      EXPECT_LE(m.minorant_density(0.5, yv), kernel * (1 + 1e-12)) << x << " " << y;
    }
  }
}

TEST(Minorization, GarchUnsupported) {
  EXPECT_THROW(Minorization::for_model(fx::garch(0.1, 0.85), 1.0), ParameterError);
  EXPECT_THROW(Minorization::for_model(kAr1, 0.0), ParameterError);
}

TEST(SplitStep, WholeSpaceAlwaysRegenerates) {
  const auto m = Minorization::atomized(fx::ar1(0.0, TailLaw::pareto(1.5)));
  RngStream s(51, 0);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const auto st = split_step(x, m, s);
    ASSERT_TRUE(st.regenerated);
    x = st.next;
  }
}

TEST(SplitStep, OutsideSmallSetNeverRegenerates) {
  const auto m = Minorization::for_model(kAr1, kRadius02);
  RngStream s(51, 1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 10.0);
  for (int i = 0; i < 5000; ++i) ASSERT_FALSE(split_step(x, m, s).regenerated);
}

TEST(SplitStep, KernelFidelity) {
  const auto m = Minorization::for_model(kAr1, kRadius02);
  models::ChainStepper direct(kAr1);
  for (double x0 : {0.3, -1.2, 5.0}) {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, x0);
    RngStream s_split(52, 0), s_direct(52, 1);
    std::vector<double> a, b;
    int regenerations = 0;
    for (int i = 0; i < 10'000; ++i) {
      const auto st = split_step(x, m, s_split);
      regenerations += st.regenerated;
      a.push_back(st.next(0));
      direct.set_state(x);
      direct.step(s_direct);
      b.push_back(direct.state()(0));
    }
    const double d = ks_two_sample(a, b);
    EXPECT_GT(ks_two_sample_pvalue(d, a.size(), b.size()), 0.01) << "x0 " << x0 << " D " << d;
    if (m.in_small_set(x)) EXPECT_NEAR(regenerations / 1e4, 0.2, 3 * std::sqrt(0.16 / 1e4));
  }
}

TEST(Harvest, AtomizedBlocksAreObservations) {
  const auto m = Minorization::atomized(fx::ar1(0.0, TailLaw::symmetric_pareto(1.2)));
  const auto blocks = harvest_blocks(m, 2000, RngStream(53, 0), true, 0);
  const auto lengths = blocks.cycle_lengths();
  ASSERT_GE(blocks.cycle_count(), 1998u);
  for (double l : lengths) EXPECT_EQ(l, 1.0);
  for (std::size_t i = 0; i < blocks.cycle_count(); ++i) {
    const std::size_t t = blocks.cycle_starts[i];  // block i holds X_{t+1}
    EXPECT_EQ(blocks.block_sums[i](0), blocks.observations(static_cast<Eigen::Index>(t), 0));
  }
  EXPECT_TRUE(decomposition_exact(blocks));
}

TEST(Harvest, DecompositionExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = Minorization::for_model(kAr1, 2.0);
    const auto blocks = harvest_blocks(m, 20'000, RngStream(54, seed), true);
    EXPECT_TRUE(decomposition_exact(blocks)) << seed;
  }
}

TEST(Harvest, NoCycles) {
  // Positive Pareto innovations keep X_t >= 1, outside {|x| <= 0.5}.
  const auto m = Minorization::for_model(fx::ar1(0.5, TailLaw::pareto(1.5)), 0.5);
  EXPECT_THROW(harvest_blocks(m, 500, RngStream(55, 0), false, 5), InsufficientDataError);
}

TEST(Kac, AtomizedExact) {
  const auto m = Minorization::atomized(fx::ar1(0.0, TailLaw::gaussian()));
  const auto blocks = harvest_blocks(m, 1000, RngStream(56, 0), false, 0);
  const auto rep = kac_check(blocks, 1.0);
  EXPECT_EQ(rep.mean_length, 1.0);
  EXPECT_EQ(rep.z_score, 0.0);
  EXPECT_TRUE(rep.pass);
}

TEST(Kac, GeometricLengths) {
  RngStream s(56, 1);
  std::vector<double> lengths;
  for (int i = 0; i < 5000; ++i) {
    double l = 1;
    while (s.uniform() > 0.2) ++l;
    lengths.push_back(l);
  }
  const auto rep = kac_check(lengths, 0.2);
  EXPECT_NEAR(rep.mean_length, 5.0, 3 * rep.mean_length_se);
  EXPECT_TRUE(rep.pass);
  // log P(tau > k) = k log 0.8.
  EXPECT_LT(rep.tail_slope, 0.0);
  EXPECT_NEAR(rep.tail_slope, std::log(0.8), 4 * rep.tail_slope_se + 0.01);
}

TEST(Kac, Ar1MeanCycleLength) {
  const auto m = Minorization::for_model(kAr1, 2.0);
  const auto blocks = harvest_blocks(m, 500'000, RngStream(56, 2));
  const auto rep = kac_check(blocks, m.epsilon() * blocks.small_set_fraction);
  EXPECT_TRUE(rep.pass) << "z " << rep.z_score;
  EXPECT_LT(rep.tail_slope, 0.0);
}

TEST(Kac, TooFewCycles) {
  EXPECT_THROW(kac_check(std::vector<double>(10, 2.0), 0.5), InsufficientDataError);
}

TEST(BlockSpectral, PositiveModelAtPlusOne) {
  const auto m = Minorization::for_model(fx::ar1(0.5, TailLaw::pareto(1.5)), 4.0);
  const auto blocks = harvest_blocks(m, 200'000, RngStream(57, 0));
  const auto meas = block_spectral_measure(blocks, 100);
  ASSERT_EQ(meas.atoms.size(), 1u);
  EXPECT_DOUBLE_EQ(meas.atoms[0].direction(0), 1.0);
  EXPECT_THROW(block_spectral_measure(blocks, blocks.cycle_count() + 1), ParameterError);
}

TEST(BlockSpectral, AtomizedMatchesSingleObservations) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  const auto m = Minorization::atomized(fx::var1(a, TailLaw::symmetric_pareto(1.3, 1.0, 0.2)));
  const auto blocks = harvest_blocks(m, 20'000, RngStream(57, 1), true, 0);
  // With unit cycles the top-k blocks are the top-k observations shifted by
  // one index; compare through the bucket masses.
  const auto bm = tailstats::bucket_masses(block_spectral_measure(blocks, 500), 8);
  Eigen::MatrixXd complete = blocks.observations.middleRows(
      static_cast<Eigen::Index>(blocks.cycle_starts.front()), static_cast<Eigen::Index>(blocks.cycle_count()));
  const auto sm = tailstats::bucket_masses(tailstats::angular_measure(complete, 500), 8);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(bm[j], sm[j], 1e-12) << j;
}

// Block sums of a diagonal recursion point where a single large innovation
// points, amplified by |sum_t A^t s|^alpha - |sum_{t>=1} A^t s|^alpha relative
// to the single-observation angular law.
TEST(BlockSpectral, AnisotropicReweighting) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 0.6;
  a(1, 1) = 0.1;
  const double alpha = 1.5;
  const auto m = Minorization::for_model(fx::var1(a, TailLaw::symmetric_pareto(alpha)), 2.0);
  const auto blocks = harvest_blocks(m, 6'000'000, RngStream(57, 2), true);
  const std::size_t k_block = 250, k_single = 3000;
  const auto block = tailstats::bucket_masses(block_spectral_measure(blocks, k_block), 8);

  auto single = tailstats::angular_measure(blocks.observations, k_single);
  const Eigen::MatrixXd resolvent = (Eigen::MatrixXd::Identity(2, 2) - a).inverse();
  double total = 0.0;
  for (auto& atom : single.atoms) {
    const Eigen::VectorXd head = resolvent * atom.direction;
    const Eigen::VectorXd tail = head - atom.direction;
    atom.weight *= std::pow(head.norm(), alpha) - std::pow(tail.norm(), alpha);
    total += atom.weight;
  }
  for (auto& atom : single.atoms) atom.weight /= total;
  const auto reweighted = tailstats::bucket_masses(single, 8);

  for (std::size_t j = 0; j < 8; ++j) {
    const double p = 0.5 * (block[j] + reweighted[j]);
    const double se = std::sqrt(p * (1 - p) * (1.0 / k_block + 1.0 / k_single));
    EXPECT_NEAR(block[j], reweighted[j], 3 * se + 1e-3) << "bucket " << j;
  }
}

TEST(BlockSpectral, HillIndexMatchesObservations) {
  const auto m = Minorization::for_model(kAr1, 2.0);
  const auto blocks = harvest_blocks(m, 1'000'000, RngStream(57, 3), true);
  std::vector<double> block_norms;
  for (const auto& s : blocks.block_sums) block_norms.push_back(s.norm());
  const auto fb = tailstats::hill_estimate(block_norms);
  const auto fx_ = tailstats::hill_estimate(fx::column(blocks.observations), 1000);
  EXPECT_TRUE(tailstats::intervals_overlap(fb, fx_)) << fb.alpha_hat << " vs " << fx_.alpha_hat;
}

TEST(BlockSpectral, AbsCorrelationSmall) {
  const auto m = Minorization::for_model(fx::ar1(0.5, TailLaw::gaussian()), 2.0);
  const auto blocks = harvest_blocks(m, 200'000, RngStream(57, 4));
  // Cycles are independent; consecutive |S(i)| are uncorrelated.
  EXPECT_LT(std::abs(block_abs_lag1_correlation(blocks)), 4.0 / std::sqrt(double(blocks.cycle_count())));
}
