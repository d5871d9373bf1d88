#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "heavytail/cluster.hpp"
#include "heavytail/models.hpp"
#include "heavytail/regen.hpp"

namespace heavytail::limits {

using cluster::Direction;

// C_alpha = (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2)), 2/pi at alpha = 1.
double c_alpha(double alpha);

struct StablePair {
  Direction theta;
  double b_plus = 0.0;   // b(theta)
  double b_minus = 0.0;  // b(-theta)
};

struct StableLawParams {
  double alpha = 1.5;
  std::vector<StablePair> pairs;
  double c_alpha = 0.0;

  static StableLawParams make(double alpha, std::vector<StablePair> pairs);
  const StablePair& pair(const Direction& theta) const;
};

// exp{-|x|^a C_a^-1 [(b+ + b-) - i sign(x) (b+ - b-) tan(pi a / 2)]}.
// At alpha = 1 only the symmetric case b+ = b- is defined.
std::complex<double> stable_cf(double alpha, double b_plus, double b_minus, double x);
std::complex<double> stable_cf(const StableLawParams& params, const Direction& theta, double x);

struct CfComparison {
  Direction theta;
  std::vector<double> grid;
  std::vector<std::complex<double>> empirical;
  std::vector<std::complex<double>> theoretical;
  double sup_abs_gap = 0.0;
  double mc_band = 0.0;
  bool pass = false;
};

struct StableCheckOptions {
  std::size_t grid_points = 61;
  double x_max = 3.0;
  // The alpha = 1 limit is only checked for models declared symmetric.
  bool declared_symmetric = false;
  // Length of the independent run used for an empirical mean or a_n.
  std::size_t pilot_length = 1'000'000;
  std::optional<std::size_t> burn_in;
};

struct StableCheckResult {
  double alpha = 0.0;
  double a_n = 0.0;
  std::string a_n_source;         // "analytic" or "empirical"
  std::string centering_source;   // "none", "exact" or "sample"
  Eigen::VectorXd centering;      // E X used (zero when none)
  std::vector<CfComparison> comparisons;
};

// Empirical CF of theta' (S_n - n E X) / a_n over R replicas against
// stable_cf on a grid of [-x_max, x_max]; mc_band = 3 sqrt(2/R).
StableCheckResult stable_check(const models::ModelSpec& spec, const StableLawParams& params,
                               const std::vector<Direction>& theta_grid, std::size_t n, std::size_t replicas,
                               randkit::RngStream stream, const StableCheckOptions& options = {});

struct LdpOptions {
  double epsilon = 0.1;
  double c_factor = 100.0;  // c_n = c_factor * b_n
  // Explicit region (lo, hi); lo must respect the growth rule lo >= b_n.
  std::optional<std::pair<double, double>> region;
  std::size_t min_exceedances = 50;
  std::size_t pilot_length = 1'000'000;
  std::optional<std::size_t> burn_in;
};

struct LdpScanResult {
  std::size_t n = 0;
  Direction theta;
  double alpha = 0.0;
  double b_n = 0.0;
  double c_n = 0.0;
  std::vector<double> xs;
  std::vector<double> ratios;
  std::vector<double> ratio_se;
  std::vector<std::size_t> counts;
  double target = 0.0;
  double sup_dev = 0.0;
  // max |ratio - target| / se over the grid.
  double max_z = 0.0;
  double tail_constant = 0.0;
  std::string tail_source;       // "analytic" or "empirical"
  std::string centering_source;  // "none", "exact" or "sample"
  std::size_t replicas = 0;
};

// P(theta'(S_n - n E X) > x) / (n P(|X| > x)) by direct counting over R
// paths on a geometric grid strictly inside (b_n, c_n).
LdpScanResult ldp_scan(const models::ModelSpec& spec, const Direction& theta, std::size_t n, std::size_t grid_size,
                       std::size_t replicas, double target, randkit::RngStream stream, const LdpOptions& options = {});

struct GaussianCltReport {
  Eigen::MatrixXd sigma_hat;
  Eigen::MatrixXd batch_sigma;
  double rel_gap = 0.0;
  std::size_t cycles = 0;
  double mean_cycle_length = 0.0;
  std::size_t batch_size = 0;
};

// sigma_hat = mean of S~(i) S~(i)' over complete cycles / mean cycle length,
// where S~(i) is the block sum centred at the path mean; batch_sigma is the
// batch-means estimate on the stored observations (batch size n^{1/3} unless
// given).
GaussianCltReport gaussian_sigma(const regen::RegenBlocks& blocks, std::size_t batch_size = 0,
                                 std::size_t min_cycles = 30);

}  // namespace heavytail::limits
