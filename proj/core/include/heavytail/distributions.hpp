#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "heavytail/rng_stream.hpp"

namespace heavytail::randkit {

enum class TailFamily { pareto, symmetric_pareto, stable, lognormal, gaussian };

std::string_view to_string(TailFamily family);
TailFamily parse_tail_family(std::string_view name);

// Marginal law of an innovation or noise variable.
//
//   pareto            P(X > x) = (x/scale)^-alpha, x >= scale
//   symmetric_pareto  |X| ~ pareto(alpha, scale), P(X > 0) = (1 + skew)/2
//   stable            scale * S_alpha(1, skew, 0), 1-parameterization
//   lognormal         exp(scale * N(0,1)); not regularly varying
//   gaussian          scale * N(0,1); not regularly varying
//
// For the lognormal and gaussian families `alpha` is ignored.
struct TailLaw {
  TailFamily family = TailFamily::pareto;
  double alpha = 1.0;
  double scale = 1.0;
  double skew = 0.0;

  static TailLaw pareto(double alpha, double scale = 1.0);
  static TailLaw symmetric_pareto(double alpha, double scale = 1.0, double skew = 0.0);
  static TailLaw stable(double alpha, double skew = 0.0, double scale = 1.0);
  static TailLaw gaussian(double scale = 1.0);
  static TailLaw lognormal(double sigma = 1.0);

  // Throws ParameterError when the fields violate the family's domain.
  void validate() const;
  bool regularly_varying() const noexcept;
  // c in P(|X| > x) ~ c x^-alpha. Throws UnsupportedLawError when not regularly varying.
  double tail_constant() const;
  // lim P(X > x) / P(|X| > x).
  double positive_tail_fraction() const;
  // E X, or NaN when the mean does not exist.
  double mean() const;
  // P(|X| > x) for the analytic families (pareto, symmetric_pareto, gaussian).
  double abs_survival(double x) const;
  // Density of X at x; defined for pareto, symmetric_pareto and gaussian.
  double density(double x) const;
  double sample(RngStream& stream) const;
};

double sample_normal(RngStream& stream) noexcept;
double sample_exponential(RngStream& stream) noexcept;
// Marsaglia-Tsang; shape > 0, unit scale.
double sample_gamma(RngStream& stream, double shape);

// Exact inversion X = U^{-1/alpha}, unit scale.
std::vector<double> sample_pareto(RngStream& stream, double alpha, std::size_t n);
double pareto_from_uniform(double u, double alpha);

// Standard alpha-stable S_alpha(1, beta, 0) via Chambers-Mallows-Stuck.
std::vector<double> sample_stable(RngStream& stream, double alpha, double beta, std::size_t n);
double stable_draw(RngStream& stream, double alpha, double beta);

// Constant C_alpha = (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2)),
// continuously extended by 2/pi at alpha = 1. It is also the tail constant of
// S_alpha(1, beta, 0): P(|X| > x) ~ C_alpha x^-alpha.
double stable_tail_constant(double alpha);

// a_n solving n P(|X| > a_n) = 1; for stable laws the asymptotic tail is
// inverted. Throws UnsupportedLawError for non regularly varying families.
double quantile_tail(const TailLaw& law, double n);

}  // namespace heavytail::randkit
