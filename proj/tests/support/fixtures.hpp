#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/constants/constants.hpp>

#include "heavytail/models.hpp"

namespace heavytail::fx {

inline models::ModelSpec ar1(double a, const randkit::TailLaw& law) {
  models::Var1Spec s;
  s.a = Eigen::MatrixXd::Constant(1, 1, a);
  s.innovation.law = law;
  return s;
}

inline models::ModelSpec var1(const Eigen::MatrixXd& a, const randkit::TailLaw& law) {
  models::Var1Spec s;
  s.a = a;
  s.innovation.law = law;
  return s;
}

inline models::ModelSpec kesten_lognormal(double mu, double sigma2, const randkit::TailLaw& b_law) {
  models::KestenSpec k;
  k.base = Eigen::MatrixXd::Identity(1, 1);
  k.multiplier = models::MultiplierLaw::lognormal;
  k.log_mu = mu;
  k.log_sigma2 = sigma2;
  k.b_law = b_law;
  return k;
}

inline models::ModelSpec garch(double alpha1, double beta1, double alpha0 = 0.1) {
  models::Garch11Spec g;
  g.alpha0 = alpha0;
  g.alpha1 = alpha1;
  g.beta1 = beta1;
  return g;
}

// Distribution function of S_alpha(1, 0, 0) by Gil-Pelaez inversion of
// exp(-|t|^alpha), adaptive Gauss-Kronrod on a truncated half-line.
inline double symmetric_stable_cdf(double alpha, double x) {
  using boost::math::quadrature::gauss_kronrod;
  if (x == 0.0) return 0.5;
  const double upper = std::pow(50.0, 1.0 / alpha);
  auto integrand = [&](double t) {
    if (t == 0.0) return x;
    return std::sin(t * x) * std::exp(-std::pow(t, alpha)) / t;
  };
  double total = 0.0;
  // Split so each panel holds a bounded number of oscillations.
  const double width = std::min(upper, 2.0 * boost::math::constants::pi<double>() / std::max(std::abs(x), 1e-3));
  for (double lo = 0.0; lo < upper; lo += width) {
    total += gauss_kronrod<double, 31>::integrate(integrand, lo, std::min(upper, lo + width), 8, 1e-12);
  }
  return 0.5 + total / boost::math::constants::pi<double>();
}

// Root kappa > 0 of E (alpha1 Z^2 + beta1)^{kappa/2} = 1 for Z ~ N(0,1), by
// Gauss-Kronrod quadrature against the normal density and TOMS 748.
inline double garch_tail_oracle(double alpha1, double beta1) {
  using boost::math::quadrature::gauss_kronrod;
  auto moment = [&](double kappa) {
    auto f = [&](double z) {
      return std::pow(alpha1 * z * z + beta1, kappa / 2.0) * std::exp(-0.5 * z * z);
    };
    const double half = gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15,
                                                             1e-13);
    return 2.0 * half / std::sqrt(2.0 * boost::math::constants::pi<double>()) - 1.0;
  };
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(40);
  const auto [lo, hi] = boost::math::tools::toms748_solve(moment, 0.5, 60.0, tol, iters);
  return 0.5 * (lo + hi);
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j = 0) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

}  // namespace heavytail::fx
