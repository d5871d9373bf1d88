#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace heavytail {

// Mean with plug-in and grouped-jackknife standard errors. Sums run in index
// order so the result is bit-reproducible.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double jackknife_se = 0.0;
  std::size_t count = 0;
};

MeanEstimate summarize(std::span<const double> values, std::size_t jackknife_groups = 20);

double sample_variance(std::span<const double> values);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
// Asymptotic p-value of the two-sample statistic with sizes n and m.
double ks_two_sample_pvalue(double statistic, std::size_t n, std::size_t m);

// Ordinary least squares y = intercept + slope * x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace heavytail
