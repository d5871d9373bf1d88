#include "heavytail/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "heavytail/error.hpp"

namespace heavytail::randkit {

namespace {

constexpr double kPi = std::numbers::pi;

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("tail index alpha must be positive and finite, got " + std::to_string(alpha));
  }
}

void require_stable_alpha(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw ParameterError("stable index alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (!(beta >= -1.0 && beta <= 1.0)) {
    throw ParameterError("stable skewness beta must lie in [-1, 1], got " + std::to_string(beta));
  }
}

}  // namespace

std::string_view to_string(TailFamily family) {
  switch (family) {
    case TailFamily::pareto: return "pareto";
    case TailFamily::symmetric_pareto: return "symmetric_pareto";
    case TailFamily::stable: return "stable";
    case TailFamily::lognormal: return "lognormal";
    case TailFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

TailFamily parse_tail_family(std::string_view name) {
  if (name == "pareto") return TailFamily::pareto;
  if (name == "symmetric_pareto") return TailFamily::symmetric_pareto;
  if (name == "stable") return TailFamily::stable;
  if (name == "lognormal") return TailFamily::lognormal;
  if (name == "gaussian") return TailFamily::gaussian;
  throw ParameterError("unknown tail family '" + std::string(name) + "'");
}

TailLaw TailLaw::pareto(double alpha, double scale) {
  return TailLaw{TailFamily::pareto, alpha, scale, 1.0};
}

TailLaw TailLaw::symmetric_pareto(double alpha, double scale, double skew) {
  return TailLaw{TailFamily::symmetric_pareto, alpha, scale, skew};
}

TailLaw TailLaw::stable(double alpha, double skew, double scale) {
  return TailLaw{TailFamily::stable, alpha, scale, skew};
}

TailLaw TailLaw::gaussian(double scale) {
  return TailLaw{TailFamily::gaussian, std::numeric_limits<double>::infinity(), scale, 0.0};
}

TailLaw TailLaw::lognormal(double sigma) {
  return TailLaw{TailFamily::lognormal, std::numeric_limits<double>::infinity(), sigma, 0.0};
}

void TailLaw::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ParameterError("law scale must be positive and finite");
  }
  if (!(skew >= -1.0 && skew <= 1.0)) {
    throw ParameterError("law skew must lie in [-1, 1]");
  }
  switch (family) {
    case TailFamily::pareto:
    case TailFamily::symmetric_pareto: require_alpha(alpha); break;
    case TailFamily::stable: require_stable_alpha(alpha, skew); break;
    case TailFamily::lognormal:
    case TailFamily::gaussian: break;
  }
}

bool TailLaw::regularly_varying() const noexcept {
  switch (family) {
    case TailFamily::pareto:
    case TailFamily::symmetric_pareto: return true;
    case TailFamily::stable: return alpha < 2.0;
    case TailFamily::lognormal:
    case TailFamily::gaussian: return false;
  }
  return false;
}

double TailLaw::tail_constant() const {
  if (!regularly_varying()) {
    throw UnsupportedLawError("law '" + std::string(to_string(family)) + "' is not regularly varying");
  }
  if (family == TailFamily::stable) {
    return stable_tail_constant(alpha) * std::pow(scale, alpha);
  }
  return std::pow(scale, alpha);
}

double TailLaw::positive_tail_fraction() const {
  switch (family) {
    case TailFamily::pareto: return 1.0;
    case TailFamily::symmetric_pareto:
    case TailFamily::stable: return 0.5 * (1.0 + skew);
    case TailFamily::lognormal: return 1.0;
    case TailFamily::gaussian: return 0.5;
  }
  return 0.5;
}

double TailLaw::mean() const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  switch (family) {
    case TailFamily::pareto: return alpha > 1.0 ? scale * alpha / (alpha - 1.0) : nan;
    case TailFamily::symmetric_pareto: return alpha > 1.0 ? skew * scale * alpha / (alpha - 1.0) : nan;
    case TailFamily::stable: return alpha > 1.0 ? 0.0 : nan;
    case TailFamily::lognormal: return std::exp(0.5 * scale * scale);
    case TailFamily::gaussian: return 0.0;
  }
  return nan;
}

double TailLaw::abs_survival(double x) const {
  switch (family) {
    case TailFamily::pareto:
    case TailFamily::symmetric_pareto: return x < scale ? 1.0 : std::pow(x / scale, -alpha);
    case TailFamily::gaussian: return x <= 0.0 ? 1.0 : std::erfc(x / (scale * std::numbers::sqrt2));
    case TailFamily::lognormal:
      return x <= 0.0 ? 1.0 : 0.5 * std::erfc(std::log(x) / (scale * std::numbers::sqrt2));
    case TailFamily::stable: break;
  }
  throw UnsupportedLawError("no closed-form survival function for the stable family");
}

double TailLaw::density(double x) const {
  switch (family) {
    case TailFamily::pareto:
      return x < scale ? 0.0 : alpha * std::pow(scale, alpha) * std::pow(x, -alpha - 1.0);
    case TailFamily::symmetric_pareto: {
      const double ax = std::abs(x);
      if (ax < scale) return 0.0;
      const double side = x > 0.0 ? 0.5 * (1.0 + skew) : 0.5 * (1.0 - skew);
      return side * alpha * std::pow(scale, alpha) * std::pow(ax, -alpha - 1.0);
    }
    case TailFamily::gaussian: {
      const double z = x / scale;
      return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * kPi));
    }
    case TailFamily::lognormal:
    case TailFamily::stable: break;
  }
  throw UnsupportedLawError("density not available for family '" + std::string(to_string(family)) + "'");
}

double TailLaw::sample(RngStream& stream) const {
  switch (family) {
    case TailFamily::pareto: return scale * pareto_from_uniform(stream.uniform(), alpha);
    case TailFamily::symmetric_pareto: {
      const double sign = stream.uniform() < 0.5 * (1.0 + skew) ? 1.0 : -1.0;
      return sign * scale * pareto_from_uniform(stream.uniform(), alpha);
    }
    case TailFamily::stable: return scale * stable_draw(stream, alpha, skew);
    case TailFamily::lognormal: return std::exp(scale * sample_normal(stream));
    case TailFamily::gaussian: return scale * sample_normal(stream);
  }
  return 0.0;
}

double sample_normal(RngStream& stream) noexcept {
  // Box-Muller; consumes exactly two uniforms per draw.
  const double u1 = stream.uniform();
  const double u2 = stream.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double sample_exponential(RngStream& stream) noexcept { return -std::log(stream.uniform()); }

double sample_gamma(RngStream& stream, double shape) {
  if (!(shape > 0.0)) {
    throw ParameterError("gamma shape must be positive");
  }
  if (shape < 1.0) {
    const double boost = std::pow(stream.uniform(), 1.0 / shape);
    return sample_gamma(stream, shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = sample_normal(stream);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double pareto_from_uniform(double u, double alpha) { return std::pow(u, -1.0 / alpha); }

std::vector<double> sample_pareto(RngStream& stream, double alpha, std::size_t n) {
  require_alpha(alpha);
  std::vector<double> out(n);
  const double inv = -1.0 / alpha;
  for (auto& x : out) {
    x = std::pow(stream.uniform(), inv);
  }
  return out;
}

double stable_draw(RngStream& stream, double alpha, double beta) {
  const double v = kPi * (stream.uniform() - 0.5);
  const double w = sample_exponential(stream);
  if (alpha == 1.0) {
    const double half_pi = 0.5 * kPi;
    const double shifted = half_pi + beta * v;
    return (shifted * std::tan(v) - beta * std::log(half_pi * w * std::cos(v) / shifted)) / half_pi;
  }
  const double t = beta * std::tan(0.5 * kPi * alpha);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
  const double arg = alpha * (v + b);
  return s * std::sin(arg) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - arg) / w, (1.0 - alpha) / alpha);
}

std::vector<double> sample_stable(RngStream& stream, double alpha, double beta, std::size_t n) {
  require_stable_alpha(alpha, beta);
  std::vector<double> out(n);
  for (auto& x : out) {
    x = stable_draw(stream, alpha, beta);
  }
  return out;
}

double stable_tail_constant(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw ParameterError("stable constant requires alpha in (0, 2)");
  }
  if (alpha == 1.0) {
    return 2.0 / kPi;
  }
  return (1.0 - alpha) / (std::tgamma(2.0 - alpha) * std::cos(0.5 * kPi * alpha));
}

double quantile_tail(const TailLaw& law, double n) {
  if (!(n >= 1.0)) {
    throw ParameterError("quantile_tail requires n >= 1");
  }
  law.validate();
  switch (law.family) {
    case TailFamily::pareto:
    case TailFamily::symmetric_pareto: return law.scale * std::pow(n, 1.0 / law.alpha);
    case TailFamily::stable:
      if (law.alpha < 2.0) {
        return std::pow(law.tail_constant() * n, 1.0 / law.alpha);
      }
      break;
    case TailFamily::lognormal:
    case TailFamily::gaussian: break;
  }
  throw UnsupportedLawError("law '" + std::string(to_string(law.family)) +
                            "' has no invertible regularly varying tail");
}

}  // namespace heavytail::randkit
