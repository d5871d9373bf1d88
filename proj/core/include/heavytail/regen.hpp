#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "heavytail/models.hpp"
#include "heavytail/rng_stream.hpp"
#include "heavytail/tailstats.hpp"

namespace heavytail::regen {

// Minorization P(x, .) >= eps nu(.) on the small set C = {|x| <= M} for an
// affine chain X' = A X + B whose noise B has iid coordinates with a known
// density (gaussian, pareto or symmetric_pareto).
//
// The split uses the drawn coefficient: given A, the kernel f_B(y - A x) is
// bounded below on C by g_A(y) = prod_j inf_{|m| <= |A| M} f(y_j - m), with
// mass eps_A. With probability eps_A the next state is drawn from g_A/eps_A
// (a regeneration: the law does not depend on x), otherwise from the residual
// kernel by rejection. For fixed A this is the textbook Nummelin split.
class Minorization {
 public:
  // Analytic construction for var1 (fixed A, iid-coordinate innovations) and
  // kesten models. M must be positive.
  static Minorization for_model(const models::ModelSpec& spec, double radius);
  // Whole-space atom of an iid chain (var1 with A = 0): eps = 1 and nu is the
  // innovation law, so every step regenerates.
  static Minorization atomized(const models::ModelSpec& spec);

  bool in_small_set(const Eigen::VectorXd& state) const;
  double radius() const { return radius_; }
  // eps_A for the fixed coefficient, or E eps_A over the multiplier law
  // (Monte Carlo on a fixed stream) when A is random.
  double epsilon() const { return epsilon_; }
  bool whole_space() const { return whole_space_; }
  // Regeneration probability given the drawn coefficient norm |A|.
  double epsilon_for(double coefficient_norm) const;
  // Draw from nu_A.
  void sample_nu(double coefficient_norm, Eigen::Ref<Eigen::VectorXd> out, randkit::RngStream& stream) const;
  // g_A(y) and the noise density f(y - A x).
  double minorant_density(double coefficient_norm, const Eigen::VectorXd& y) const;
  double noise_density(const Eigen::VectorXd& b) const;
  double noise_draw(randkit::RngStream& stream) const { return noise_.sample(stream); }

  const models::ModelSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& base() const { return base_; }
  double base_norm() const { return base_norm_; }
  std::size_t dim() const { return static_cast<std::size_t>(base_.rows()); }

 private:
  models::ModelSpec spec_;
  Eigen::MatrixXd base_;
  double base_norm_ = 0.0;
  randkit::TailLaw noise_;
  double radius_ = 0.0;
  double epsilon_ = 0.0;
  bool whole_space_ = false;
  const models::KestenSpec* kesten() const { return std::get_if<models::KestenSpec>(&spec_); }
};

struct SplitStep {
  Eigen::VectorXd next;
  bool regenerated = false;
};

constexpr std::size_t kResidualGuard = 1'000'000;

// One transition of the split chain. Throws MinorizationError when the
// residual rejection loop exceeds kResidualGuard iterations.
SplitStep split_step(const Eigen::VectorXd& state, const Minorization& minorization, randkit::RngStream& stream);

struct RegenBlocks {
  // tau(i): times t in [0, n] where the transition t -> t+1 regenerated.
  std::vector<std::size_t> cycle_starts;
  // S(i) = X_{tau(i)+1} + ... + X_{tau(i+1)} for complete cycles.
  std::vector<Eigen::VectorXd> block_sums;
  Eigen::VectorXd head_sum;  // X_1 + ... + X_{tau(1)}
  Eigen::VectorXd tail_sum;  // X_{tau(last)+1} + ... + X_n
  // Sum accumulated as head, blocks in order, tail.
  Eigen::VectorXd total;
  std::size_t n = 0;
  // Fraction of Phi_0, ..., Phi_{n-1} inside the small set.
  double small_set_fraction = 0.0;
  // Raw observations X_1..X_n (rows) when requested.
  Eigen::MatrixXd observations;

  std::size_t cycle_count() const { return block_sums.size(); }
  std::vector<double> cycle_lengths() const;
};

// Runs the split chain for n observed steps after `burn_in` (default: model
// rule) and collects the regenerative decomposition of S_n. Throws
// InsufficientDataError when no regeneration occurs.
RegenBlocks harvest_blocks(const Minorization& minorization, std::size_t n, randkit::RngStream stream,
                           bool keep_observations = false, std::optional<std::size_t> burn_in = std::nullopt);

// Recomputes S_n from the stored observations with the block accumulation
// order and returns true when it matches `total` bit for bit.
bool decomposition_exact(const RegenBlocks& blocks);

struct KacReport {
  std::size_t cycles = 0;
  double mean_length = 0.0;
  double mean_length_se = 0.0;
  double expected_length = 0.0;  // 1 / pi(A)
  double z_score = 0.0;
  // Slope of log P(tau > k) against k (exponential tail rate, < 0).
  double tail_slope = 0.0;
  double tail_slope_se = 0.0;
  bool pass = false;  // |z| <= 3
};

KacReport kac_check(const RegenBlocks& blocks, double pi_atom, std::size_t min_cycles = 30);
// Same from raw cycle lengths.
KacReport kac_check(const std::vector<double>& lengths, double pi_atom, std::size_t min_cycles = 30);

// Angular measure of the k largest complete-cycle block sums.
tailstats::AngularMeasure block_spectral_measure(const RegenBlocks& blocks, std::size_t k);

// Lag-1 sample correlation of |S(i)| across consecutive cycles.
double block_abs_lag1_correlation(const RegenBlocks& blocks);

}  // namespace heavytail::regen
