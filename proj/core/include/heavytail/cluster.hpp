#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>
#include <vector>

#include "heavytail/models.hpp"
#include "heavytail/rng_stream.hpp"

namespace heavytail::cluster {

// Unit vector theta in R^d.
class Direction {
 public:
  Direction() = default;
  // Requires | |theta| - 1 | <= 1e-12.
  explicit Direction(Eigen::VectorXd theta);
  static Direction normalized(const Eigen::VectorXd& v);
  static Direction scalar(double sign);

  const Eigen::VectorXd& theta() const { return theta_; }
  std::size_t dim() const { return static_cast<std::size_t>(theta_.size()); }
  Direction operator-() const { return Direction(-theta_); }

 private:
  Eigen::VectorXd theta_;
};

enum class Route { tail_process, ldp_ratio, closed_form, telescoping };
std::string_view to_string(Route route);

struct ClusterIndexEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double jackknife_se = 0.0;
  Route route = Route::tail_process;
  std::size_t horizon = 0;
  std::size_t replicas = 0;
  // E (theta' Theta_0)_+^alpha from the same draws, and the standard error of
  // the paired difference with `value` (upper bound check for alpha <= 1).
  double theta0_moment = 0.0;
  double theta0_moment_se = 0.0;
  double bound_gap_se = 0.0;
  // Replicas dropped by the closed-form route (singular I - A draws).
  std::size_t skipped = 0;
};

constexpr std::size_t kMinReplicas = 100;

// (x)_+^alpha with 0 at x <= 0 for every alpha.
double positive_power(double x, double alpha);

// b(theta) = E[(sum_{t>=0} theta' Theta_t)_+^alpha - (sum_{t>=1} theta' Theta_t)_+^alpha]
// truncated at `horizon`.
ClusterIndexEstimate cluster_index_tail_process(const models::TailSampler& sampler, const Direction& theta,
                                                double alpha, std::size_t horizon, std::size_t replicas,
                                                randkit::RngStream stream);

// E[(theta' sum_0^k Theta_t)_+^alpha - (theta' sum_1^k Theta_t)_+^alpha] = b_{k+1} - b_k.
ClusterIndexEstimate telescoping_difference(const models::TailSampler& sampler, const Direction& theta,
                                            double alpha, std::size_t k, std::size_t replicas,
                                            randkit::RngStream stream);

// Same functional with suprema in place of sums.
ClusterIndexEstimate extremal_index(const models::TailSampler& sampler, const Direction& theta, double alpha,
                                    std::size_t horizon, std::size_t replicas, randkit::RngStream stream);

// Var1: E[(theta'(I-A)^{-1} Theta_0)_+^a - (theta' A (I-A)^{-1} Theta_0)_+^a].
// Kesten: E[(theta'(Z_1 + I) Theta_0)_+^a - (theta' Z_1 Theta_0)_+^a] with
// Z_1 = sum_{t>=1} A_t ... A_1 truncated at the default horizon.
// Child streams of `stream` also feed the Theta_0 pilot when one is needed.
ClusterIndexEstimate closed_form_cluster_index(const models::ModelSpec& spec, const Direction& theta,
                                               std::size_t replicas, randkit::RngStream stream);

// Half-space values of the limit measure: nu_alpha(t {x : theta'x > 1}) = t^-alpha b(theta).
class LimitMeasureEvaluator {
 public:
  LimitMeasureEvaluator(double alpha, std::vector<Direction> directions, std::vector<double> b_values);

  double alpha() const { return alpha_; }
  std::size_t dim() const { return dim_; }
  const std::vector<Direction>& directions() const { return directions_; }
  const std::vector<double>& b_values() const { return b_values_; }

  // b(theta): stored value, or linear interpolation in angle for d = 2.
  double b(const Direction& theta) const;
  // True when alpha is an integer and b(theta) != b(-theta) (beyond
  // `tolerance`) for some stored direction; the half-space values then need
  // not determine nu_alpha.
  bool uniqueness_flagged(double tolerance = 1e-12) const;

 private:
  double alpha_;
  std::size_t dim_;
  std::vector<Direction> directions_;
  std::vector<double> b_values_;
  std::vector<double> angles_;  // d = 2, sorted
  std::vector<std::size_t> angle_order_;
};

double nu_alpha(const LimitMeasureEvaluator& evaluator, const Direction& theta, double t);

// Default direction grid: {+1, -1} for d = 1, `count` (default 64) equally
// spaced angles for d = 2, `count` (default 512) Fibonacci points for d = 3.
std::vector<Direction> direction_grid(std::size_t dim, std::size_t count = 0);

}  // namespace heavytail::cluster
