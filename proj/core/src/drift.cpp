#include <algorithm>
#include <cmath>
#include <numbers>

#include "heavytail/error.hpp"
#include "heavytail/models.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/stats.hpp"

namespace heavytail::models {

namespace {

struct ConditionalMoment {
  double mean = 0.0;
  double se = 0.0;
};

// E(V(f(Phi_m)) | Phi_0 = y) by conditional Monte Carlo.
ConditionalMoment conditional_moment(const ModelSpec& spec, const Vector& y, double p, std::size_t m,
                                     const randkit::RngStream& base, std::size_t replicas) {
  std::vector<double> values(replicas);
  const auto* garch = std::get_if<Garch11Spec>(&spec);
  if (garch != nullptr) {
    if (y.size() != 1 || !(y[0] > 0.0)) {
      throw ParameterError("garch11 drift states are positive sigma^2 values");
    }
    for (std::size_t r = 0; r < replicas; ++r) {
      randkit::RngStream stream = base.fork(r);
      double s = y[0];
      for (std::size_t t = 0; t < m; ++t) {
        double z = 0.0;
        if (garch->z_law == GarchNoise::gaussian) {
          z = randkit::sample_normal(stream);
        } else {
          z = stream.uniform(-std::numbers::sqrt3, std::numbers::sqrt3);
        }
        s = garch->alpha0 + s * (garch->alpha1 * z * z + garch->beta1);
      }
      values[r] = std::pow(s, p);
    }
  } else {
    ChainStepper chain(spec);
    for (std::size_t r = 0; r < replicas; ++r) {
      randkit::RngStream stream = base.fork(r);
      chain.set_state(y);
      for (std::size_t t = 0; t < m; ++t) chain.step(stream);
      values[r] = std::pow(chain.observe().norm(), p);
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DivergenceError("conditional simulation diverged in the drift check");
  }
  const MeanEstimate est = summarize(values);
  return {est.mean, est.std_error};
}

struct DriftFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

// Least squares with the intercept constrained to be nonnegative. The slope
// uncertainty combines regression residuals with the Monte Carlo error of
// each conditional mean (the slope is linear in them).
DriftFit fit_drift(const std::vector<double>& v, const std::vector<double>& y, const std::vector<double>& se) {
  DriftFit fit;
  const LineFit line = fit_line(v, y);
  double mx = 0.0;
  for (double x : v) mx += x;
  mx /= static_cast<double>(v.size());
  double sxx = 0.0;
  for (double x : v) sxx += (x - mx) * (x - mx);
  double mc_var = 0.0;
  if (line.intercept >= 0.0) {
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double w = (v[i] - mx) / sxx;
      mc_var += w * w * se[i] * se[i];
    }
    fit.slope_se = std::sqrt(line.slope_se * line.slope_se + mc_var);
    return fit;
  }
  // Refit through the origin.
  double sxy = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sxy += v[i] * y[i];
    s2 += v[i] * v[i];
  }
  fit.slope = sxy / s2;
  fit.intercept = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = y[i] - fit.slope * v[i];
    ss += r * r;
    const double w = v[i] / s2;
    mc_var += w * w * se[i] * se[i];
  }
  const double resid_var = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) / s2 : 0.0;
  fit.slope_se = std::sqrt(resid_var + mc_var);
  return fit;
}

}  // namespace

DriftReport drift_margin(const ModelSpec& spec, double p, std::size_t m, const std::vector<Vector>& grid,
                         randkit::RngStream stream, std::size_t replicas_per_state) {
  validate(spec);
  if (!(p > 0.0)) throw ParameterError("drift power p must be positive");
  if (m < 1) throw ParameterError("skeleton step m must be at least 1");
  if (grid.size() < 2) throw ParameterError("drift grid needs at least two states");
  if (replicas_per_state < 2) throw ParameterError("drift check needs at least two replicas per state");

  const bool garch = std::holds_alternative<Garch11Spec>(spec);
  DriftReport report;
  report.p = p;
  report.m = m;
  const std::size_t states = grid.size();
  report.grid_v.resize(states);
  for (std::size_t j = 0; j < states; ++j) {
    report.grid_v[j] = garch ? std::pow(grid[j][0], p) : std::pow(grid[j].norm(), p);
  }

  struct Pair {
    ConditionalMoment m_step;
    ConditionalMoment one_step;
  };
  const auto results = parallel_map<Pair>(states, [&](std::size_t j) {
    const randkit::RngStream state_stream = stream.fork(j);
    Pair out;
    out.m_step = conditional_moment(spec, grid[j], p, m, state_stream.fork(0), replicas_per_state);
    out.one_step = m == 1 ? out.m_step : conditional_moment(spec, grid[j], p, 1, state_stream.fork(1), replicas_per_state);
    return out;
  });

  std::vector<double> one_mean(states);
  std::vector<double> one_se(states);
  report.conditional.resize(states);
  report.conditional_se.resize(states);
  for (std::size_t j = 0; j < states; ++j) {
    report.conditional[j] = results[j].m_step.mean;
    report.conditional_se[j] = results[j].m_step.se;
    one_mean[j] = results[j].one_step.mean;
    one_se[j] = results[j].one_step.se;
  }
  const DriftFit fit = fit_drift(report.grid_v, report.conditional, report.conditional_se);
  report.beta = fit.slope;
  report.beta_se = fit.slope_se;
  report.beta_upper = fit.slope + 1.96 * fit.slope_se;
  report.intercept = fit.intercept;
  const DriftFit one = fit_drift(report.grid_v, one_mean, one_se);
  report.c1 = one.slope;
  // c2 must dominate every residual of the one-step bound.
  double c2 = one.intercept;
  for (std::size_t j = 0; j < states; ++j) c2 = std::max(c2, one_mean[j] - one.slope * report.grid_v[j]);
  report.c2 = std::max(0.0, c2);
  report.pass = report.beta > 0.0 && report.beta_upper < 1.0;
  return report;
}

PathMatrix lag_products(const Eigen::VectorXd& x, std::size_t lag_max) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n <= lag_max) {
    throw ParameterError("lag-product functional needs n > h");
  }
  PathMatrix out;
  const auto rows = static_cast<Eigen::Index>(n - lag_max);
  const auto cols = static_cast<Eigen::Index>(lag_max + 1);
  out.values.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = r + static_cast<Eigen::Index>(lag_max);
    for (Eigen::Index h = 0; h < cols; ++h) out.values(r, h) = x[t] * x[t - h];
  }
  return out;
}

PathMatrix acf_functional_path(const ModelSpec& spec, std::size_t lag_max, std::size_t n, randkit::RngStream stream) {
  if (n <= lag_max) throw ParameterError("acf functional needs n > h");
  ModelSpec scalar = spec;
  if (auto* g = std::get_if<Garch11Spec>(&scalar)) {
    g->observable = GarchObservable::returns;
  } else if (const auto* k = std::get_if<KestenSpec>(&scalar); k == nullptr || k->dim() != 1) {
    throw ParameterError("acf functional is defined for garch11 and scalar kesten models");
  }
  const PathMatrix path = simulate_path(scalar, n, std::nullopt, stream);
  PathMatrix out = lag_products(path.values.col(0), lag_max);
  out.burn_in_used = path.burn_in_used;
  out.stream_id = path.stream_id;
  return out;
}

}  // namespace heavytail::models
