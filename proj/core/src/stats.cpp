#include "heavytail/stats.hpp"

#include <algorithm>
#include <cmath>

#include "heavytail/error.hpp"

namespace heavytail {

MeanEstimate summarize(std::span<const double> values, std::size_t jackknife_groups) {
  MeanEstimate out;
  out.count = values.size();
  if (values.empty()) return out;
  double total = 0.0;
  for (double v : values) total += v;
  const double n = static_cast<double>(values.size());
  out.mean = total / n;
  if (values.size() < 2) return out;
  out.std_error = std::sqrt(sample_variance(values) / n);

  // Delete-a-group jackknife over contiguous index groups.
  const std::size_t groups = std::min(jackknife_groups, values.size());
  if (groups < 2) {
    out.jackknife_se = out.std_error;
    return out;
  }
  std::vector<double> group_sum(groups, 0.0);
  std::vector<std::size_t> group_count(groups, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t g = i * groups / values.size();
    group_sum[g] += values[i];
    ++group_count[g];
  }
  std::vector<double> leave_out(groups);
  double leave_mean = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    leave_out[g] = (total - group_sum[g]) / static_cast<double>(values.size() - group_count[g]);
    leave_mean += leave_out[g];
  }
  leave_mean /= static_cast<double>(groups);
  double ss = 0.0;
  for (double v : leave_out) ss += (v - leave_mean) * (v - leave_mean);
  const double g = static_cast<double>(groups);
  out.jackknife_se = std::sqrt((g - 1.0) / g * ss);
  return out;
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw ParameterError("KS statistic needs two non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double ks_two_sample_pvalue(double statistic, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * statistic;
  if (lambda < 1e-3) return 1.0;
  // Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterError("line fit needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw DegenerateSampleError("line fit with constant regressor");
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      ss += r * r;
    }
    fit.slope_se = std::sqrt(ss / (n - 2.0) / sxx);
  }
  return fit;
}

}  // namespace heavytail
