#include "heavytail/tailstats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "heavytail/error.hpp"
#include "heavytail/stats.hpp"

namespace heavytail::tailstats {

TailFit hill_estimate(std::span<const double> samples, std::size_t k) {
  const std::size_t n = samples.size();
  if (k < 2 || k >= n) {
    throw ParameterError("Hill estimator needs 2 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<double> abs_values(n);
  std::transform(samples.begin(), samples.end(), abs_values.begin(), [](double x) { return std::abs(x); });
  std::nth_element(abs_values.begin(), abs_values.begin() + static_cast<std::ptrdiff_t>(k), abs_values.end(),
                   std::greater<>());
  const double threshold = abs_values[k];
  if (!(threshold > 0.0)) {
    throw DegenerateSampleError("Hill estimator threshold order statistic is zero");
  }
  std::sort(abs_values.begin(), abs_values.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log(abs_values[i] / threshold);
  if (!(acc > 0.0)) {
    throw DegenerateSampleError("Hill estimator on a sample whose top order statistics are all equal");
  }
  TailFit fit;
  fit.alpha_hat = static_cast<double>(k) / acc;
  fit.k_used = k;
  const double half_width = 1.96 / std::sqrt(static_cast<double>(k));
  fit.ci_low = fit.alpha_hat * (1.0 - half_width);
  fit.ci_high = fit.alpha_hat * (1.0 + half_width);
  fit.threshold = threshold;
  fit.sample_size = n;
  return fit;
}

TailFit hill_estimate(std::span<const double> samples) {
  const auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(samples.size()))));
  return hill_estimate(samples, k);
}

bool intervals_overlap(const TailFit& a, const TailFit& b) {
  return a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
}

double normalizing_sequence(const randkit::TailLaw& law, double n) { return randkit::quantile_tail(law, n); }

double normalizing_sequence(std::span<const double> samples, std::size_t n) {
  if (n < 1) throw ParameterError("normalizing sequence needs n >= 1");
  const std::size_t m = samples.size();
  if (n > m) {
    throw ParameterError("empirical normalizing sequence needs n <= sample size (n=" + std::to_string(n) +
                         ", m=" + std::to_string(m) + ")");
  }
  const std::size_t rank = (m + n - 1) / n;
  std::vector<double> abs_values(m);
  std::transform(samples.begin(), samples.end(), abs_values.begin(), [](double x) { return std::abs(x); });
  std::nth_element(abs_values.begin(), abs_values.begin() + static_cast<std::ptrdiff_t>(rank - 1), abs_values.end(),
                   std::greater<>());
  return abs_values[rank - 1];
}

EmpiricalTailProcess empirical_tail_process(const models::PathMatrix& path, double quantile, std::size_t horizon,
                                            std::size_t min_exceedances) {
  const std::size_t n = path.rows();
  if (n <= horizon) throw ParameterError("empirical tail process needs path length > horizon");
  if (!(quantile > 0.0 && quantile < 1.0)) throw ParameterError("tail-process quantile must lie in (0, 1)");
  const std::size_t usable = n - horizon;
  std::vector<double> norms(usable);
  for (std::size_t t = 0; t < usable; ++t) norms[t] = path.values.row(static_cast<Eigen::Index>(t)).norm();
  std::vector<double> sorted = norms;
  const auto pos = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(usable - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pos), sorted.end());
  const double threshold = sorted[pos];

  const auto d = static_cast<Eigen::Index>(path.cols());
  const auto rows = static_cast<Eigen::Index>(horizon + 1);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, d);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(rows, d);
  std::size_t count = 0;
  for (std::size_t t = 0; t < usable; ++t) {
    if (!(norms[t] > threshold)) continue;
    ++count;
    for (Eigen::Index s = 0; s < rows; ++s) {
      const Eigen::RowVectorXd ratio = path.values.row(static_cast<Eigen::Index>(t) + s) / norms[t];
      sum.row(s) += ratio;
      sum_sq.row(s) += ratio.cwiseProduct(ratio);
    }
  }
  if (count < min_exceedances) {
    throw InsufficientDataError("only " + std::to_string(count) + " exceedances above the " + std::to_string(quantile) +
                                "-quantile (need " + std::to_string(min_exceedances) + ")");
  }
  EmpiricalTailProcess out;
  out.horizon = horizon;
  out.exceedance_count = count;
  out.threshold = threshold;
  const double c = static_cast<double>(count);
  out.mean_profile = sum / c;
  const Eigen::MatrixXd var = (sum_sq / c - out.mean_profile.cwiseProduct(out.mean_profile)).cwiseMax(0.0) * c /
                              std::max(1.0, c - 1.0);
  out.std_error = (var / c).cwiseSqrt();
  return out;
}

AngularMeasure angular_measure(const Eigen::MatrixXd& vectors, std::size_t k) {
  const auto m = static_cast<std::size_t>(vectors.rows());
  if (k == 0 || k > m) {
    throw ParameterError("angular measure needs 1 <= k <= m (k=" + std::to_string(k) + ", m=" + std::to_string(m) + ")");
  }
  if (vectors.cols() < 1) throw ParameterError("angular measure needs d >= 1");
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) norms[i] = vectors.row(static_cast<Eigen::Index>(i)).norm();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t r = order[i];
    if (!(norms[r] > 0.0)) {
      throw DegenerateSampleError("angular measure over zero vectors");
    }
    dirs.emplace_back(vectors.row(static_cast<Eigen::Index>(r)).transpose() / norms[r]);
  }
  std::sort(dirs.begin(), dirs.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  AngularMeasure out;
  const double w = 1.0 / static_cast<double>(k);
  for (const auto& dvec : dirs) {
    if (!out.atoms.empty() && (out.atoms.back().direction - dvec).cwiseAbs().maxCoeff() < 1e-12) {
      out.atoms.back().weight += w;
    } else {
      out.atoms.push_back({dvec, w});
    }
  }
  out.total = 0.0;
  for (const auto& a : out.atoms) out.total += a.weight;
  return out;
}

std::vector<double> bucket_masses(const AngularMeasure& measure, std::size_t buckets) {
  if (measure.atoms.empty()) return {};
  const auto d = measure.atoms.front().direction.size();
  if (d == 1) {
    std::vector<double> out(2, 0.0);
    for (const auto& a : measure.atoms) out[a.direction[0] > 0.0 ? 0 : 1] += a.weight;
    return out;
  }
  if (d != 2) throw ParameterError("angular buckets are defined for d <= 2");
  if (buckets == 0) throw ParameterError("bucket count must be positive");
  std::vector<double> out(buckets, 0.0);
  for (const auto& a : measure.atoms) {
    double angle = std::atan2(a.direction[1], a.direction[0]);
    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
    // Shift by half a sector so coordinate axes fall mid-bucket.
    angle += std::numbers::pi / static_cast<double>(buckets);
    auto idx = static_cast<std::size_t>(angle / (2.0 * std::numbers::pi) * static_cast<double>(buckets));
    out[idx % buckets] += a.weight;
  }
  return out;
}

}  // namespace heavytail::tailstats
