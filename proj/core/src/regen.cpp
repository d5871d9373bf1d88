#include "heavytail/regen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "heavytail/error.hpp"
#include "heavytail/stats.hpp"

namespace heavytail::regen {

namespace {

void check_noise(const randkit::TailLaw& law) {
  law.validate();
  switch (law.family) {
    case randkit::TailFamily::gaussian:
    case randkit::TailFamily::pareto:
    case randkit::TailFamily::symmetric_pareto: return;
    default:
      throw UnsupportedLawError("minorization needs a gaussian, pareto or symmetric_pareto noise density (got " +
                                std::string(randkit::to_string(law.family)) + ")");
  }
}

double operator_norm(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
}

}  // namespace

Minorization Minorization::for_model(const models::ModelSpec& spec, double radius) {
  models::validate(spec);
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterError("small-set radius M must be positive");
  Minorization m;
  m.spec_ = spec;
  m.radius_ = radius;
  if (const auto* v = std::get_if<models::Var1Spec>(&spec)) {
    if (!v->innovation.atoms.empty()) {
      throw UnsupportedLawError("minorization needs var1 innovations with iid coordinates");
    }
    m.base_ = v->a;
    m.noise_ = v->innovation.law;
  } else if (const auto* k = std::get_if<models::KestenSpec>(&spec)) {
    m.base_ = k->base;
    m.noise_ = k->b_law;
  } else {
    throw ParameterError("regeneration splitting is not provided for garch11");
  }
  check_noise(m.noise_);
  m.base_norm_ = operator_norm(m.base_);
  const auto* k = m.kesten();
  if (k == nullptr || k->multiplier == models::MultiplierLaw::fixed) {
    m.epsilon_ = m.epsilon_for(m.base_norm_);
  } else {
    // E eps_A over the multiplier law on a fixed stream.
    randkit::RngStream s(0x5A11, 0xE951);
    constexpr int kDraws = 100'000;
    double acc = 0.0;
    for (int i = 0; i < kDraws; ++i) acc += m.epsilon_for(std::abs(models::sample_multiplier(*k, s)) * m.base_norm_);
    m.epsilon_ = acc / kDraws;
  }
  if (!(m.epsilon_ > 0.0)) throw MinorizationError("minorization constant is zero on the small set");
  return m;
}

Minorization Minorization::atomized(const models::ModelSpec& spec) {
  models::validate(spec);
  const auto* v = std::get_if<models::Var1Spec>(&spec);
  if (v == nullptr || !v->a.isZero(0.0)) {
    throw ParameterError("the whole-space atom needs an iid chain (var1 with A = 0)");
  }
  if (!v->innovation.atoms.empty()) {
    throw UnsupportedLawError("the whole-space atom needs innovations with iid coordinates");
  }
  Minorization m;
  m.spec_ = spec;
  m.base_ = v->a;
  m.noise_ = v->innovation.law;
  m.noise_.validate();
  m.radius_ = std::numeric_limits<double>::infinity();
  m.epsilon_ = 1.0;
  m.whole_space_ = true;
  return m;
}

bool Minorization::in_small_set(const Eigen::VectorXd& state) const {
  return whole_space_ || state.norm() <= radius_;
}

double Minorization::epsilon_for(double coefficient_norm) const {
  if (whole_space_) return 1.0;
  const double c = coefficient_norm * radius_;
  double one = 0.0;
  if (noise_.family == randkit::TailFamily::gaussian) {
    one = std::erfc(c / (noise_.scale * std::numbers::sqrt2));
  } else {
    one = std::pow(noise_.scale / (noise_.scale + 2.0 * c), noise_.alpha);
  }
  return std::pow(one, static_cast<double>(dim()));
}

void Minorization::sample_nu(double coefficient_norm, Eigen::Ref<Eigen::VectorXd> out,
                             randkit::RngStream& stream) const {
  if (whole_space_) {
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = noise_.sample(stream);
    return;
  }
  const double c = coefficient_norm * radius_;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (noise_.family == randkit::TailFamily::gaussian) {
      // Density proportional to phi(|y| + c): shift a normal draw beyond c.
      bool done = false;
      for (std::size_t it = 0; it < kResidualGuard; ++it) {
        const double w = noise_.scale * randkit::sample_normal(stream);
        if (std::abs(w) > c) {
          out[j] = std::copysign(std::abs(w) - c, w);
          done = true;
          break;
        }
      }
      if (!done) throw MinorizationError("nu sampler exceeded the rejection guard");
      continue;
    }
    double sign = 1.0;
    if (noise_.family == randkit::TailFamily::symmetric_pareto) {
      sign = stream.uniform() < 0.5 * (1.0 + noise_.skew) ? 1.0 : -1.0;
    }
    const double y = (noise_.scale + 2.0 * c) * randkit::pareto_from_uniform(stream.uniform(), noise_.alpha) - c;
    out[j] = sign * y;
  }
}

double Minorization::minorant_density(double coefficient_norm, const Eigen::VectorXd& y) const {
  const double c = coefficient_norm * radius_;
  double g = 1.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double v = y[j];
    if (noise_.family == randkit::TailFamily::gaussian) {
      g *= noise_.density(std::abs(v) + c);
    } else if (noise_.family == randkit::TailFamily::pareto) {
      g *= v >= noise_.scale + c ? noise_.density(v + c) : 0.0;
    } else {
      g *= std::abs(v) >= noise_.scale + c ? noise_.density(std::copysign(std::abs(v) + c, v)) : 0.0;
    }
    if (g == 0.0) return 0.0;
  }
  return g;
}

double Minorization::noise_density(const Eigen::VectorXd& b) const {
  double f = 1.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) f *= noise_.density(b[j]);
  return f;
}

SplitStep split_step(const Eigen::VectorXd& state, const Minorization& m, randkit::RngStream& stream) {
  const auto d = static_cast<Eigen::Index>(m.dim());
  if (state.size() != d) throw ParameterError("state dimension does not match the chain");
  SplitStep out;
  out.next.resize(d);
  if (m.whole_space()) {
    m.sample_nu(0.0, out.next, stream);
    out.regenerated = true;
    return out;
  }
  double s = 1.0;
  if (const auto* k = std::get_if<models::KestenSpec>(&m.spec())) s = models::sample_multiplier(*k, stream);
  const Eigen::VectorXd mean = s * (m.base() * state);
  const double coef = std::abs(s) * m.base_norm();
  Eigen::VectorXd b(d);
  if (!m.in_small_set(state)) {
    for (Eigen::Index j = 0; j < d; ++j) b[j] = m.noise_draw(stream);
    out.next = mean + b;
    return out;
  }
  const double eps = m.epsilon_for(coef);
  if (stream.uniform() < eps) {
    m.sample_nu(coef, out.next, stream);
    out.regenerated = true;
    return out;
  }
  // Residual kernel (f(y - Ax) - g_A(y)) / (1 - eps_A) by rejection.
  for (std::size_t it = 0; it < kResidualGuard; ++it) {
    for (Eigen::Index j = 0; j < d; ++j) b[j] = m.noise_draw(stream);
    const Eigen::VectorXd y = mean + b;
    const double g = m.minorant_density(coef, y);
    const double f = m.noise_density(b);
    if (stream.uniform() >= g / f) {
      out.next = y;
      return out;
    }
  }
  throw MinorizationError("residual kernel rejection exceeded " + std::to_string(kResidualGuard) +
                          " iterations; epsilon is too large for this small set");
}

std::vector<double> RegenBlocks::cycle_lengths() const {
  std::vector<double> out;
  if (cycle_starts.size() < 2) return out;
  out.reserve(cycle_starts.size() - 1);
  for (std::size_t i = 1; i < cycle_starts.size(); ++i) {
    out.push_back(static_cast<double>(cycle_starts[i] - cycle_starts[i - 1]));
  }
  return out;
}

namespace {

Eigen::VectorXd block_order_total(const Eigen::VectorXd& head, const std::vector<Eigen::VectorXd>& blocks,
                                  const Eigen::VectorXd& tail) {
  Eigen::VectorXd total = head;
  for (const auto& b : blocks) total += b;
  total += tail;
  return total;
}

}  // namespace

RegenBlocks harvest_blocks(const Minorization& m, std::size_t n, randkit::RngStream stream, bool keep_observations,
                           std::optional<std::size_t> burn_in) {
  if (n < 1) throw ParameterError("harvest_blocks needs n >= 1");
  const auto d = static_cast<Eigen::Index>(m.dim());
  const models::ChainStepper stepper(m.spec());
  Eigen::VectorXd state = stepper.initial_state();
  const std::size_t burn = burn_in.value_or(m.whole_space() ? 0 : models::default_burn_in(m.spec()));
  for (std::size_t t = 0; t < burn; ++t) state = split_step(state, m, stream).next;

  RegenBlocks out;
  out.n = n;
  out.head_sum = Eigen::VectorXd::Zero(d);
  out.tail_sum = Eigen::VectorXd::Zero(d);
  if (keep_observations) out.observations.resize(static_cast<Eigen::Index>(n), d);
  Eigen::VectorXd part = Eigen::VectorXd::Zero(d);
  bool seen = false;
  std::size_t inside = 0;
  for (std::size_t t = 0; t <= n; ++t) {
    if (t >= 1) {
      if (!state.allFinite()) throw DivergenceError("split chain diverged at step " + std::to_string(t));
      part += state;
      if (keep_observations) out.observations.row(static_cast<Eigen::Index>(t - 1)) = state.transpose();
    }
    if (t < n && m.in_small_set(state)) ++inside;
    SplitStep step = split_step(state, m, stream);
    if (step.regenerated) {
      if (seen) {
        out.block_sums.push_back(part);
      } else {
        out.head_sum = part;
        seen = true;
      }
      out.cycle_starts.push_back(t);
      part.setZero();
    }
    state = std::move(step.next);
  }
  if (!seen) {
    throw InsufficientDataError("no regeneration in " + std::to_string(n) + " steps; increase n or the small set");
  }
  out.tail_sum = part;
  out.total = block_order_total(out.head_sum, out.block_sums, out.tail_sum);
  out.small_set_fraction = static_cast<double>(inside) / static_cast<double>(n);
  return out;
}

bool decomposition_exact(const RegenBlocks& blocks) {
  if (blocks.observations.rows() != static_cast<Eigen::Index>(blocks.n)) {
    throw ParameterError("decomposition check needs stored observations");
  }
  const auto d = blocks.observations.cols();
  Eigen::VectorXd head = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::VectorXd> sums;
  Eigen::VectorXd part = Eigen::VectorXd::Zero(d);
  std::size_t next = 0;
  bool seen = false;
  auto close_at = [&](std::size_t t) {
    while (next < blocks.cycle_starts.size() && blocks.cycle_starts[next] == t) {
      if (seen) {
        sums.push_back(part);
      } else {
        head = part;
        seen = true;
      }
      part.setZero();
      ++next;
    }
  };
  close_at(0);
  for (std::size_t t = 1; t <= blocks.n; ++t) {
    part += blocks.observations.row(static_cast<Eigen::Index>(t - 1)).transpose();
    close_at(t);
  }
  const Eigen::VectorXd recomputed = block_order_total(head, sums, part);
  if (sums.size() != blocks.block_sums.size()) return false;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (recomputed[j] != blocks.total[j]) return false;
  }
  return true;
}

KacReport kac_check(const std::vector<double>& lengths, double pi_atom, std::size_t min_cycles) {
  if (!(pi_atom > 0.0 && pi_atom <= 1.0)) throw ParameterError("atom probability must lie in (0, 1]");
  if (lengths.size() < min_cycles) {
    throw InsufficientDataError("Kac check needs at least " + std::to_string(min_cycles) + " complete cycles (got " +
                                std::to_string(lengths.size()) + ")");
  }
  KacReport r;
  r.cycles = lengths.size();
  const MeanEstimate est = summarize(lengths);
  r.mean_length = est.mean;
  r.mean_length_se = est.std_error;
  r.expected_length = 1.0 / pi_atom;
  const double diff = r.mean_length - r.expected_length;
  if (r.mean_length_se > 0.0) {
    r.z_score = diff / r.mean_length_se;
  } else {
    r.z_score = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  r.pass = std::abs(r.z_score) <= 3.0;

  // log P(tau > k) against k over the range with at least 10 survivors.
  const double max_len = *std::max_element(lengths.begin(), lengths.end());
  const auto total = static_cast<double>(lengths.size());
  std::vector<double> ks;
  std::vector<double> logs;
  for (double k = 1.0; k < max_len; k += 1.0) {
    const auto survivors = static_cast<double>(std::count_if(lengths.begin(), lengths.end(), [k](double l) { return l > k; }));
    if (survivors < 10.0) break;
    ks.push_back(k);
    logs.push_back(std::log(survivors / total));
  }
  if (ks.size() >= 3) {
    const LineFit fit = fit_line(ks, logs);
    r.tail_slope = fit.slope;
    r.tail_slope_se = fit.slope_se;
  } else {
    r.tail_slope = -std::numeric_limits<double>::infinity();
    r.tail_slope_se = 0.0;
  }
  return r;
}

KacReport kac_check(const RegenBlocks& blocks, double pi_atom, std::size_t min_cycles) {
  return kac_check(blocks.cycle_lengths(), pi_atom, min_cycles);
}

tailstats::AngularMeasure block_spectral_measure(const RegenBlocks& blocks, std::size_t k) {
  const std::size_t m = blocks.block_sums.size();
  if (k == 0 || k > m) {
    throw ParameterError("block spectral measure needs 1 <= k <= cycles (k=" + std::to_string(k) +
                         ", cycles=" + std::to_string(m) + ")");
  }
  Eigen::MatrixXd sums(static_cast<Eigen::Index>(m), blocks.block_sums.front().size());
  for (std::size_t i = 0; i < m; ++i) sums.row(static_cast<Eigen::Index>(i)) = blocks.block_sums[i].transpose();
  return tailstats::angular_measure(sums, k);
}

double block_abs_lag1_correlation(const RegenBlocks& blocks) {
  const std::size_t m = blocks.block_sums.size();
  if (m < 3) throw InsufficientDataError("lag-1 correlation needs at least three cycles");
  std::vector<double> a(m);
  for (std::size_t i = 0; i < m; ++i) a[i] = blocks.block_sums[i].norm();
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(m);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    den += (a[i] - mean) * (a[i] - mean);
    if (i + 1 < m) num += (a[i] - mean) * (a[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace heavytail::regen
