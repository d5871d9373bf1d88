#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "heavytail/distributions.hpp"
#include "heavytail/models.hpp"

namespace heavytail::tailstats {

struct TailFit {
  double alpha_hat = 0.0;
  std::size_t k_used = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  // X_(k+1), the threshold order statistic of |X|.
  double threshold = 0.0;
  std::size_t sample_size = 0;
};

// Hill estimator on the k largest |x|, with band alpha_hat (1 +- 1.96/sqrt(k)).
TailFit hill_estimate(std::span<const double> samples, std::size_t k);
// Hill estimate with the default k = floor(sqrt(n)).
TailFit hill_estimate(std::span<const double> samples);

bool intervals_overlap(const TailFit& a, const TailFit& b);

// a_n solving n P(|X| > a_n) = 1.
double normalizing_sequence(const randkit::TailLaw& law, double n);
// Empirical version: the ceil(m/n)-th largest |x| of m samples.
double normalizing_sequence(std::span<const double> samples, std::size_t n);

struct EmpiricalTailProcess {
  std::size_t horizon = 0;
  Eigen::MatrixXd mean_profile;   // (T+1) x d
  Eigen::MatrixXd std_error;      // (T+1) x d
  std::size_t exceedance_count = 0;
  double threshold = 0.0;
};

// Forward profiles X_{t+s}/|X_t| averaged over all t with |X_t| above the
// q-quantile of the norms (overlapping windows are all used).
EmpiricalTailProcess empirical_tail_process(const models::PathMatrix& path, double quantile, std::size_t horizon,
                                            std::size_t min_exceedances = 30);

struct AngularMeasure {
  std::vector<models::AngularAtom> atoms;
  double total = 0.0;
};

// Empirical distribution of X/|X| over the k largest rows by norm; atoms
// closer than 1e-12 are merged and the total mass is 1.
AngularMeasure angular_measure(const Eigen::MatrixXd& vectors, std::size_t k);

// Mass of each of `buckets` equal angular sectors of the unit circle (d = 2)
// or of the two half-lines (d = 1).
std::vector<double> bucket_masses(const AngularMeasure& measure, std::size_t buckets);

}  // namespace heavytail::tailstats
