#include "heavytail/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "heavytail/error.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/stats.hpp"

namespace heavytail::cluster {

Direction::Direction(Eigen::VectorXd theta) : theta_(std::move(theta)) {
  if (theta_.size() == 0) throw ParameterError("direction must have d >= 1");
  if (!theta_.allFinite() || std::abs(theta_.norm() - 1.0) > 1e-12) {
    throw ParameterError("direction must be a unit vector");
  }
}

Direction Direction::normalized(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ParameterError("cannot normalize a zero or non-finite vector");
  return Direction(v / n);
}

Direction Direction::scalar(double sign) { return Direction(Eigen::VectorXd::Constant(1, sign >= 0.0 ? 1.0 : -1.0)); }

std::string_view to_string(Route route) {
  switch (route) {
    case Route::tail_process: return "tail_process";
    case Route::ldp_ratio: return "ldp_ratio";
    case Route::closed_form: return "closed_form";
    case Route::telescoping: return "telescoping";
  }
  return "unknown";
}

double positive_power(double x, double alpha) { return x > 0.0 ? std::pow(x, alpha) : 0.0; }

namespace {

enum class Functional { sum, sup };

struct ReplicaValue {
  double value = 0.0;
  double theta0 = 0.0;
};

void check_replicas(std::size_t replicas) {
  if (replicas < kMinReplicas) {
    throw ParameterError("cluster index needs at least " + std::to_string(kMinReplicas) + " replicas (got " +
                         std::to_string(replicas) + ")");
  }
}

ClusterIndexEstimate finish(const std::vector<ReplicaValue>& draws, Route route, std::size_t horizon) {
  const std::size_t n = draws.size();
  std::vector<double> values(n);
  std::vector<double> theta0(n);
  std::vector<double> gap(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = draws[i].value;
    theta0[i] = draws[i].theta0;
    gap[i] = draws[i].theta0 - draws[i].value;
  }
  const MeanEstimate b = summarize(values);
  const MeanEstimate m = summarize(theta0);
  const MeanEstimate g = summarize(gap);
  ClusterIndexEstimate out;
  out.value = b.mean;
  out.std_error = b.std_error;
  out.jackknife_se = b.jackknife_se;
  out.route = route;
  out.horizon = horizon;
  out.replicas = n;
  out.theta0_moment = m.mean;
  out.theta0_moment_se = m.std_error;
  out.bound_gap_se = g.std_error;
  return out;
}

ClusterIndexEstimate tail_functional(const models::TailSampler& sampler, const Direction& theta, double alpha,
                                     std::size_t horizon, std::size_t replicas, const randkit::RngStream& stream,
                                     Functional kind, Route route) {
  check_replicas(replicas);
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!sampler) throw ParameterError("tail-process sampler is empty");
  const auto draws = parallel_map<ReplicaValue>(replicas, [&](std::size_t i) {
    randkit::RngStream rs = stream.fork(i);
    const models::TailProcessPath path = sampler(horizon, rs);
    if (static_cast<std::size_t>(path.theta.cols()) != theta.dim()) {
      throw ParameterError("direction dimension does not match the tail process");
    }
    const Eigen::VectorXd proj = path.theta * theta.theta();
    double head = proj[0];
    double rest = 0.0;
    if (kind == Functional::sum) {
      for (Eigen::Index t = 1; t < proj.size(); ++t) rest += proj[t];
      head += rest;
    } else {
      // sup over an empty index set is treated as 0, matching Theta_t = 0 beyond the horizon.
      rest = proj.size() > 1 ? proj.tail(proj.size() - 1).maxCoeff() : 0.0;
      head = std::max(head, rest);
    }
    return ReplicaValue{positive_power(head, alpha) - positive_power(rest, alpha), positive_power(proj[0], alpha)};
  });
  return finish(draws, route, horizon);
}

}  // namespace

ClusterIndexEstimate cluster_index_tail_process(const models::TailSampler& sampler, const Direction& theta,
                                                double alpha, std::size_t horizon, std::size_t replicas,
                                                randkit::RngStream stream) {
  return tail_functional(sampler, theta, alpha, horizon, replicas, stream, Functional::sum, Route::tail_process);
}

ClusterIndexEstimate telescoping_difference(const models::TailSampler& sampler, const Direction& theta,
                                            double alpha, std::size_t k, std::size_t replicas,
                                            randkit::RngStream stream) {
  if (k < 1) throw ParameterError("telescoping difference needs k >= 1");
  return tail_functional(sampler, theta, alpha, k, replicas, stream, Functional::sum, Route::telescoping);
}

ClusterIndexEstimate extremal_index(const models::TailSampler& sampler, const Direction& theta, double alpha,
                                    std::size_t horizon, std::size_t replicas, randkit::RngStream stream) {
  return tail_functional(sampler, theta, alpha, horizon, replicas, stream, Functional::sup, Route::tail_process);
}

ClusterIndexEstimate closed_form_cluster_index(const models::ModelSpec& spec, const Direction& theta,
                                               std::size_t replicas, randkit::RngStream stream) {
  check_replicas(replicas);
  if (std::holds_alternative<models::Garch11Spec>(spec)) {
    throw ParameterError("closed-form cluster index is defined for var1 and kesten models");
  }
  if (models::dimension(spec) != theta.dim()) throw ParameterError("direction dimension does not match the model");
  const models::TailProcessSampler sampler(spec, stream.fork(0x70170));
  const double alpha = sampler.alpha();
  const auto d = static_cast<Eigen::Index>(theta.dim());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  const Eigen::RowVectorXd th = theta.theta().transpose();

  const auto* var1 = std::get_if<models::Var1Spec>(&spec);
  const auto* kesten = std::get_if<models::KestenSpec>(&spec);
  const randkit::RngStream replica_root = stream.fork(0x7E91);

  std::vector<std::uint8_t> skipped(replicas, 0);
  std::vector<ReplicaValue> draws(replicas);
  if (var1 != nullptr) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(eye - var1->a);
    const bool singular = !lu.isInvertible();
    Eigen::RowVectorXd w_head;
    Eigen::RowVectorXd w_tail;
    if (!singular) {
      const Eigen::MatrixXd inv = lu.inverse();
      w_head = th * inv;
      w_tail = th * var1->a * inv;
    }
    parallel_for(replicas, [&](std::size_t i) {
      if (singular) {
        skipped[i] = 1;
        return;
      }
      randkit::RngStream rs = replica_root.fork(i);
      const Eigen::VectorXd t0 = sampler.sample_theta0(rs);
      draws[i] = {positive_power(w_head.dot(t0), alpha) - positive_power(w_tail.dot(t0), alpha),
                  positive_power(th.dot(t0), alpha)};
    });
  } else {
    const std::size_t horizon = models::default_horizon(spec);
    parallel_for(replicas, [&](std::size_t i) {
      randkit::RngStream rs = replica_root.fork(i);
      const Eigen::VectorXd t0 = sampler.sample_theta0(rs);
      // Z_1 Theta_0 accumulated directly: Pi_t Theta_0 = s_t base Pi_{t-1} Theta_0.
      Eigen::VectorXd cur = t0;
      Eigen::VectorXd z1 = Eigen::VectorXd::Zero(d);
      for (std::size_t t = 0; t < horizon; ++t) {
        cur = models::sample_multiplier(*kesten, rs) * (kesten->base * cur);
        z1 += cur;
      }
      if (!z1.allFinite()) {
        skipped[i] = 1;
        return;
      }
      draws[i] = {positive_power(th.dot(z1 + t0), alpha) - positive_power(th.dot(z1), alpha),
                  positive_power(th.dot(t0), alpha)};
    });
  }
  std::size_t n_skipped = 0;
  std::vector<ReplicaValue> kept;
  kept.reserve(replicas);
  for (std::size_t i = 0; i < replicas; ++i) {
    if (skipped[i] != 0) {
      ++n_skipped;
    } else {
      kept.push_back(draws[i]);
    }
  }
  if (static_cast<double>(n_skipped) > 0.01 * static_cast<double>(replicas)) {
    throw DegenerateSampleError("closed-form route skipped " + std::to_string(n_skipped) + " of " +
                                std::to_string(replicas) + " draws (singular I - A)");
  }
  ClusterIndexEstimate out = finish(kept, Route::closed_form, var1 != nullptr ? 0 : models::default_horizon(spec));
  out.replicas = replicas;
  out.skipped = n_skipped;
  return out;
}

// ---------------------------------------------------------------------------

LimitMeasureEvaluator::LimitMeasureEvaluator(double alpha, std::vector<Direction> directions,
                                             std::vector<double> b_values)
    : alpha_(alpha), dim_(0), directions_(std::move(directions)), b_values_(std::move(b_values)) {
  if (!(alpha_ > 0.0)) throw ParameterError("alpha must be positive");
  if (directions_.empty() || directions_.size() != b_values_.size()) {
    throw ParameterError("limit measure needs one b value per direction");
  }
  dim_ = directions_.front().dim();
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (directions_[i].dim() != dim_) throw ParameterError("directions must share a dimension");
    if (!(b_values_[i] >= 0.0)) throw ParameterError("b values must be nonnegative");
  }
  if (dim_ == 2) {
    angles_.resize(directions_.size());
    angle_order_.resize(directions_.size());
    for (std::size_t i = 0; i < directions_.size(); ++i) {
      const auto& v = directions_[i].theta();
      double a = std::atan2(v[1], v[0]);
      if (a < 0.0) a += 2.0 * std::numbers::pi;
      angles_[i] = a;
      angle_order_[i] = i;
    }
    std::sort(angle_order_.begin(), angle_order_.end(),
              [&](std::size_t a, std::size_t b) { return angles_[a] < angles_[b]; });
  }
}

double LimitMeasureEvaluator::b(const Direction& theta) const {
  if (theta.dim() != dim_) throw ParameterError("direction dimension does not match the evaluator");
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if ((directions_[i].theta() - theta.theta()).cwiseAbs().maxCoeff() <= 1e-12) return b_values_[i];
  }
  if (dim_ != 2 || directions_.size() < 2) {
    throw ParameterError("direction is not on the stored grid and cannot be interpolated");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::atan2(theta.theta()[1], theta.theta()[0]);
  if (a < 0.0) a += two_pi;
  const std::size_t m = angle_order_.size();
  // Bracketing neighbours on the circle.
  std::size_t hi_pos = 0;
  while (hi_pos < m && angles_[angle_order_[hi_pos]] < a) ++hi_pos;
  const std::size_t lo_idx = angle_order_[(hi_pos + m - 1) % m];
  const std::size_t hi_idx = angle_order_[hi_pos % m];
  double lo_a = angles_[lo_idx];
  double hi_a = angles_[hi_idx];
  if (hi_pos == 0) lo_a -= two_pi;
  if (hi_pos == m) hi_a += two_pi;
  const double w = (a - lo_a) / (hi_a - lo_a);
  return (1.0 - w) * b_values_[lo_idx] + w * b_values_[hi_idx];
}

bool LimitMeasureEvaluator::uniqueness_flagged(double tolerance) const {
  if (alpha_ != std::round(alpha_)) return false;
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    const Direction neg = -directions_[i];
    double b_neg = 0.0;
    try {
      b_neg = b(neg);
    } catch (const ParameterError&) {
      continue;
    }
    const double scale = std::max({1.0, std::abs(b_values_[i]), std::abs(b_neg)});
    if (std::abs(b_values_[i] - b_neg) > tolerance * scale) return true;
  }
  return false;
}

double nu_alpha(const LimitMeasureEvaluator& evaluator, const Direction& theta, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("nu_alpha needs t > 0");
  return std::pow(t, -evaluator.alpha()) * evaluator.b(theta);
}

std::vector<Direction> direction_grid(std::size_t dim, std::size_t count) {
  std::vector<Direction> out;
  if (dim == 1) {
    out.push_back(Direction::scalar(1.0));
    out.push_back(Direction::scalar(-1.0));
    return out;
  }
  if (dim == 2) {
    const std::size_t m = count == 0 ? 64 : count;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
      Eigen::VectorXd v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(Direction::normalized(v));
    }
    return out;
  }
  if (dim == 3) {
    const std::size_t m = count == 0 ? 512 : count;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t j = 0; j < m; ++j) {
      const double z = 1.0 - (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(m);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * static_cast<double>(j);
      Eigen::VectorXd v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      out.push_back(Direction::normalized(v));
    }
    return out;
  }
  throw ParameterError("direction grids are provided for d <= 3");
}

}  // namespace heavytail::cluster
