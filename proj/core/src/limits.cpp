#include "heavytail/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "heavytail/error.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/tailstats.hpp"

namespace heavytail::limits {

double c_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("C_alpha needs alpha in (0, 2)");
  return randkit::stable_tail_constant(alpha);
}

StableLawParams StableLawParams::make(double alpha, std::vector<StablePair> pairs) {
  StableLawParams p;
  p.alpha = alpha;
  p.c_alpha = limits::c_alpha(alpha);
  for (const auto& pr : pairs) {
    if (!(pr.b_plus >= 0.0 && pr.b_minus >= 0.0)) throw ParameterError("stable pairs need b values >= 0");
  }
  p.pairs = std::move(pairs);
  return p;
}

const StablePair& StableLawParams::pair(const Direction& theta) const {
  for (const auto& p : pairs) {
    if (p.theta.dim() == theta.dim() && (p.theta.theta() - theta.theta()).cwiseAbs().maxCoeff() <= 1e-12) return p;
  }
  throw ParameterError("no (b(theta), b(-theta)) pair stored for this direction");
}

std::complex<double> stable_cf(double alpha, double b_plus, double b_minus, double x) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("stable_cf needs alpha in (0, 2)");
  if (x == 0.0) return {1.0, 0.0};
  const double ca = c_alpha(alpha);
  const double ax = std::pow(std::abs(x), alpha);
  if (alpha == 1.0) {
    if (b_plus != b_minus) {
      throw ParameterError("alpha = 1 stable limit is only supported for symmetric pairs b(theta) = b(-theta)");
    }
    return {std::exp(-ax * (b_plus + b_minus) / ca), 0.0};
  }
  const double sign = x > 0.0 ? 1.0 : -1.0;
  const double re = (b_plus + b_minus);
  const double im = -sign * (b_plus - b_minus) * std::tan(0.5 * std::numbers::pi * alpha);
  return std::exp(-ax / ca * std::complex<double>(re, im));
}

std::complex<double> stable_cf(const StableLawParams& params, const Direction& theta, double x) {
  const StablePair& p = params.pair(theta);
  return stable_cf(params.alpha, p.b_plus, p.b_minus, x);
}

namespace {

struct Centering {
  Eigen::VectorXd mean;
  std::string source;
};

models::PathMatrix pilot_path(const models::ModelSpec& spec, std::size_t length, std::optional<std::size_t> burn_in,
                              const randkit::RngStream& stream) {
  if (length < 1000) throw ParameterError("pilot length must be at least 1000");
  return models::simulate_path(spec, length, burn_in, stream.fork(0x9170'7001));
}

Centering centering_for(const models::ModelSpec& spec, double alpha, const models::PathMatrix* pilot) {
  const auto d = static_cast<Eigen::Index>(models::dimension(spec));
  if (!(alpha > 1.0)) return {Eigen::VectorXd::Zero(d), "none"};
  if (auto m = models::stationary_mean(spec)) return {*m, "exact"};
  return {pilot->values.colwise().mean().transpose(), "sample"};
}

std::vector<double> row_norms(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).norm();
  return out;
}

Eigen::MatrixXd replicate_sums(const models::ModelSpec& spec, std::size_t n, std::size_t replicas,
                               std::optional<std::size_t> burn_in, const randkit::RngStream& stream) {
  const std::size_t burn = burn_in.value_or(models::default_burn_in(spec));
  const auto d = static_cast<Eigen::Index>(models::dimension(spec));
  Eigen::MatrixXd sums(static_cast<Eigen::Index>(replicas), d);
  parallel_for(replicas, [&](std::size_t r) {
    randkit::RngStream rs = stream.fork(r);
    sums.row(static_cast<Eigen::Index>(r)) = models::simulate_sum(spec, n, burn, rs).transpose();
  });
  return sums;
}

}  // namespace

StableCheckResult stable_check(const models::ModelSpec& spec, const StableLawParams& params,
                               const std::vector<Direction>& theta_grid, std::size_t n, std::size_t replicas,
                               randkit::RngStream stream, const StableCheckOptions& options) {
  models::validate(spec);
  if (n < 1 || replicas < 2) throw ParameterError("stable check needs n >= 1 and at least two replicas");
  if (theta_grid.empty()) throw ParameterError("stable check needs at least one direction");
  if (options.grid_points < 2 || !(options.x_max > 0.0)) throw ParameterError("invalid CF grid");
  const double alpha = models::model_alpha(spec);
  if (!(alpha < 2.0)) {
    throw RegimeError("stable limit needs alpha < 2 (model alpha " + std::to_string(alpha) + ")");
  }
  if (std::abs(alpha - params.alpha) > 1e-9) {
    throw ParameterError("stable parameters alpha does not match the model tail index");
  }
  if (alpha == 1.0 && !options.declared_symmetric) {
    throw ParameterError("alpha = 1 stable check requires a model declared symmetric");
  }
  const std::size_t d = models::dimension(spec);
  for (const auto& th : theta_grid) {
    if (th.dim() != d) throw ParameterError("direction dimension does not match the model");
    (void)params.pair(th);
  }

  StableCheckResult result;
  result.alpha = alpha;
  std::optional<models::PathMatrix> pilot;
  const auto tail_c = models::stationary_tail_constant(spec);
  const bool need_pilot = !tail_c || (alpha > 1.0 && !models::stationary_mean(spec));
  if (need_pilot) pilot = pilot_path(spec, options.pilot_length, options.burn_in, stream);
  if (tail_c) {
    result.a_n = std::pow(*tail_c * static_cast<double>(n), 1.0 / alpha);
    result.a_n_source = "analytic";
  } else {
    result.a_n = tailstats::normalizing_sequence(row_norms(pilot->values), n);
    result.a_n_source = "empirical";
  }
  const Centering c = centering_for(spec, alpha, pilot ? &*pilot : nullptr);
  result.centering = c.mean;
  result.centering_source = c.source;

  Eigen::MatrixXd sums = replicate_sums(spec, n, replicas, options.burn_in, stream.fork(0x5C11));
  const Eigen::RowVectorXd shift = static_cast<double>(n) * c.mean.transpose();
  sums = (sums.rowwise() - shift) / result.a_n;

  std::vector<double> grid(options.grid_points);
  for (std::size_t j = 0; j < options.grid_points; ++j) {
    grid[j] = -options.x_max + 2.0 * options.x_max * static_cast<double>(j) / static_cast<double>(options.grid_points - 1);
  }
  const double band = 3.0 * std::sqrt(2.0 / static_cast<double>(replicas));
  for (const auto& th : theta_grid) {
    const Eigen::VectorXd proj = sums * th.theta();
    CfComparison cmp;
    cmp.theta = th;
    cmp.grid = grid;
    cmp.mc_band = band;
    cmp.empirical = parallel_map<std::complex<double>>(grid.size(), [&](std::size_t j) {
      double re = 0.0;
      double im = 0.0;
      for (Eigen::Index r = 0; r < proj.size(); ++r) {
        re += std::cos(grid[j] * proj[r]);
        im += std::sin(grid[j] * proj[r]);
      }
      return std::complex<double>(re, im) / static_cast<double>(proj.size());
    });
    cmp.theoretical.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      cmp.theoretical[j] = stable_cf(params, th, grid[j]);
      cmp.sup_abs_gap = std::max(cmp.sup_abs_gap, std::abs(cmp.empirical[j] - cmp.theoretical[j]));
    }
    cmp.pass = cmp.sup_abs_gap <= band;
    result.comparisons.push_back(std::move(cmp));
  }
  return result;
}

LdpScanResult ldp_scan(const models::ModelSpec& spec, const Direction& theta, std::size_t n, std::size_t grid_size,
                       std::size_t replicas, double target, randkit::RngStream stream, const LdpOptions& options) {
  models::validate(spec);
  if (n < 1 || grid_size < 1 || replicas < 1) throw ParameterError("ldp scan needs positive n, grid size and R");
  if (theta.dim() != models::dimension(spec)) throw ParameterError("direction dimension does not match the model");
  if (!(options.epsilon > 0.0) || !(options.c_factor > 1.0)) throw ParameterError("invalid ldp region knobs");
  const double alpha = models::model_alpha(spec);
  const double nd = static_cast<double>(n);
  const double growth = alpha < 2.0 ? 1.0 / alpha + options.epsilon : 0.5 + options.epsilon;

  LdpScanResult res;
  res.n = n;
  res.theta = theta;
  res.alpha = alpha;
  res.target = target;
  res.replicas = replicas;
  res.b_n = std::pow(nd, growth);
  res.c_n = options.c_factor * res.b_n;
  if (options.region) {
    const auto [lo, hi] = *options.region;
    if (!(lo >= res.b_n)) {
      throw ParameterError("ldp region lower end " + std::to_string(lo) + " is below b_n = " +
                           std::to_string(res.b_n));
    }
    if (!(hi > lo)) throw ParameterError("ldp region must satisfy hi > lo");
    res.b_n = lo;
    res.c_n = hi;
  }

  std::optional<models::PathMatrix> pilot;
  const auto tail_c = models::stationary_tail_constant(spec);
  const bool need_pilot = !tail_c || (alpha > 1.0 && !models::stationary_mean(spec));
  if (need_pilot) pilot = pilot_path(spec, options.pilot_length, options.burn_in, stream);
  if (tail_c) {
    res.tail_constant = *tail_c;
    res.tail_source = "analytic";
  } else {
    // c from the k-th largest norm of the pilot with the model alpha.
    const std::vector<double> norms = row_norms(pilot->values);
    const tailstats::TailFit fit = tailstats::hill_estimate(norms);
    res.tail_constant = static_cast<double>(fit.k_used) / static_cast<double>(norms.size()) *
                        std::pow(fit.threshold, alpha);
    res.tail_source = "empirical";
  }
  const Centering c = centering_for(spec, alpha, pilot ? &*pilot : nullptr);
  res.centering_source = c.source;

  const double ratio_span = std::log(res.c_n / res.b_n);
  res.xs.resize(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    res.xs[j] = res.b_n * std::exp(ratio_span * static_cast<double>(j + 1) / static_cast<double>(grid_size + 1));
  }

  const Eigen::MatrixXd sums = replicate_sums(spec, n, replicas, options.burn_in, stream.fork(0x1D95));
  const double shift = nd * c.mean.dot(theta.theta());
  std::vector<double> proj(replicas);
  for (std::size_t r = 0; r < replicas; ++r) proj[r] = sums.row(static_cast<Eigen::Index>(r)).dot(theta.theta()) - shift;
  std::sort(proj.begin(), proj.end());

  const double rd = static_cast<double>(replicas);
  res.ratios.resize(grid_size);
  res.ratio_se.resize(grid_size);
  res.counts.resize(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    const double x = res.xs[j];
    const auto above = static_cast<std::size_t>(proj.end() - std::upper_bound(proj.begin(), proj.end(), x));
    res.counts[j] = above;
    const double p = static_cast<double>(above) / rd;
    const double denom = nd * res.tail_constant * std::pow(x, -alpha);
    res.ratios[j] = p / denom;
    res.ratio_se[j] = std::sqrt(p * (1.0 - p) / rd) / denom;
  }
  for (std::size_t j = 0; j < grid_size; ++j) {
    if (res.counts[j] < options.min_exceedances) {
      throw InsufficientDataError("only " + std::to_string(res.counts[j]) + " exceedances at x = " +
                                  std::to_string(res.xs[j]) + " (need " + std::to_string(options.min_exceedances) +
                                  "); widen R");
    }
  }
  for (std::size_t j = 0; j < grid_size; ++j) {
    const double dev = std::abs(res.ratios[j] - target);
    res.sup_dev = std::max(res.sup_dev, dev);
    if (res.ratio_se[j] > 0.0) res.max_z = std::max(res.max_z, dev / res.ratio_se[j]);
  }
  return res;
}

GaussianCltReport gaussian_sigma(const regen::RegenBlocks& blocks, std::size_t batch_size, std::size_t min_cycles) {
  const std::size_t cycles = blocks.block_sums.size();
  if (cycles < min_cycles) {
    throw InsufficientDataError("Gaussian CLT needs at least " + std::to_string(min_cycles) +
                                " complete cycles (got " + std::to_string(cycles) + ")");
  }
  if (blocks.observations.rows() != static_cast<Eigen::Index>(blocks.n)) {
    throw ParameterError("Gaussian CLT comparison needs stored observations");
  }
  const auto d = blocks.observations.cols();
  const Eigen::VectorXd mean = blocks.observations.colwise().mean().transpose();
  const std::vector<double> lengths = blocks.cycle_lengths();

  GaussianCltReport rep;
  rep.cycles = cycles;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  double total_len = 0.0;
  for (std::size_t i = 0; i < cycles; ++i) {
    const Eigen::VectorXd s = blocks.block_sums[i] - lengths[i] * mean;
    acc += s * s.transpose();
    total_len += lengths[i];
  }
  const double cd = static_cast<double>(cycles);
  rep.mean_cycle_length = total_len / cd;
  rep.sigma_hat = acc / cd / rep.mean_cycle_length;
  rep.sigma_hat = 0.5 * (rep.sigma_hat + rep.sigma_hat.transpose());

  const std::size_t n = blocks.n;
  rep.batch_size = batch_size != 0 ? batch_size
                                   : std::max<std::size_t>(1, static_cast<std::size_t>(std::cbrt(static_cast<double>(n))));
  const std::size_t batches = n / rep.batch_size;
  if (batches < 2) throw InsufficientDataError("batch means need at least two batches");
  Eigen::MatrixXd means(static_cast<Eigen::Index>(batches), d);
  for (std::size_t b = 0; b < batches; ++b) {
    means.row(static_cast<Eigen::Index>(b)) =
        blocks.observations
            .middleRows(static_cast<Eigen::Index>(b * rep.batch_size), static_cast<Eigen::Index>(rep.batch_size))
            .colwise()
            .mean();
  }
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::MatrixXd centred = means.rowwise() - grand;
  rep.batch_sigma = static_cast<double>(rep.batch_size) * (centred.transpose() * centred) /
                    static_cast<double>(batches - 1);

  Eigen::JacobiSVD<Eigen::MatrixXd> diff(rep.sigma_hat - rep.batch_sigma);
  Eigen::JacobiSVD<Eigen::MatrixXd> ref(rep.batch_sigma);
  const double denom = ref.singularValues()[0];
  rep.rel_gap = denom > 0.0 ? diff.singularValues()[0] / denom : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace heavytail::limits
