#include "heavytail/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "heavytail/error.hpp"

namespace heavytail::models {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kBlowUp = 1e250;

void check_square(const Matrix& m, const char* name) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw ParameterError(std::string(name) + " must be a non-empty square matrix");
  }
  if (!m.allFinite()) {
    throw ParameterError(std::string(name) + " has non-finite entries");
  }
}

double sample_garch_noise(GarchNoise law, randkit::RngStream& stream) {
  if (law == GarchNoise::gaussian) return randkit::sample_normal(stream);
  return stream.uniform(-std::numbers::sqrt3, std::numbers::sqrt3);
}

void draw_innovation(const Innovation& innov, Eigen::Ref<Vector> out, randkit::RngStream& stream,
                     const std::vector<double>& atom_cdf) {
  if (innov.atoms.empty()) {
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = innov.law.sample(stream);
    return;
  }
  const double u = stream.uniform();
  const auto it = std::lower_bound(atom_cdf.begin(), atom_cdf.end(), u);
  const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(it - atom_cdf.begin()), atom_cdf.size() - 1);
  const double radius = std::abs(innov.law.sample(stream));
  const Vector& dir = innov.atoms[idx].direction;
  out = radius * dir / dir.norm();
}

std::vector<double> atom_cdf(const std::vector<AngularAtom>& atoms) {
  std::vector<double> cdf;
  cdf.reserve(atoms.size());
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight >= 0.0)) throw ParameterError("angular atom weights must be nonnegative");
    total += a.weight;
    cdf.push_back(total);
  }
  if (!atoms.empty() && !(total > 0.0)) throw ParameterError("angular atom weights sum to zero");
  for (auto& c : cdf) c /= total;
  return cdf;
}

// E log|s| for the multiplier law.
double multiplier_log_mean(const KestenSpec& k) {
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  switch (k.multiplier) {
    case MultiplierLaw::fixed: return 0.0;
    case MultiplierLaw::lognormal: return k.log_mu;
    case MultiplierLaw::uniform: {
      const double l = k.low;
      const double h = k.high;
      if (l >= 0.0) return (xlogx(h) - h - xlogx(l) + l) / (h - l);
      if (h <= 0.0) return (xlogx(-l) + l - xlogx(-h) - h) / (h - l);
      return (xlogx(h) - h + xlogx(-l) + l) / (h - l);
    }
  }
  return 0.0;
}

// E|s|^kappa for the multiplier law.
double multiplier_moment(const KestenSpec& k, double kappa) {
  switch (k.multiplier) {
    case MultiplierLaw::fixed: return 1.0;
    case MultiplierLaw::lognormal: return std::exp(kappa * k.log_mu + 0.5 * kappa * kappa * k.log_sigma2);
    case MultiplierLaw::uniform: {
      const double l = k.low;
      const double h = k.high;
      auto prim = [kappa](double x) { return std::pow(std::abs(x), kappa + 1.0) / (kappa + 1.0); };
      if (l >= 0.0) return (prim(h) - prim(l)) / (h - l);
      if (h <= 0.0) return (prim(l) - prim(h)) / (h - l);
      return (prim(h) + prim(l)) / (h - l);
    }
  }
  return 1.0;
}

double garch_log_moment(const Garch11Spec& g, double power, const TailIndexOptions& options);

double kesten_log_moment(const KestenSpec& k, double kappa) {
  return std::log(multiplier_moment(k, kappa)) + kappa * std::log(spectral_radius(k.base));
}

double kesten_lyapunov(const KestenSpec& k) {
  const double rho = spectral_radius(k.base);
  if (rho == 0.0) return -std::numeric_limits<double>::infinity();
  return multiplier_log_mean(k) + std::log(rho);
}

double garch_log_lyapunov(const Garch11Spec& g) {
  const auto rule = gauss_hermite(64);
  if (g.z_law == GarchNoise::gaussian) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = std::numbers::sqrt2 * rule.nodes[i];
      acc += rule.weights[i] * std::log(g.alpha1 * z * z + g.beta1);
    }
    return acc / std::sqrt(std::numbers::pi);
  }
  // Uniform on (-sqrt3, sqrt3): midpoint rule on the half interval.
  constexpr int kCells = 4096;
  double acc = 0.0;
  for (int i = 0; i < kCells; ++i) {
    const double z = std::numbers::sqrt3 * (i + 0.5) / kCells;
    acc += std::log(g.alpha1 * z * z + g.beta1);
  }
  return acc / kCells;
}

bool kesten_nonnegative(const KestenSpec& k) {
  if (k.dim() != 1) return false;
  const double m = k.base(0, 0);
  const bool s_nonneg = k.multiplier != MultiplierLaw::uniform || k.low >= 0.0;
  const bool b_nonneg =
      k.b_law.family == randkit::TailFamily::pareto || k.b_law.family == randkit::TailFamily::lognormal;
  return m >= 0.0 && s_nonneg && b_nonneg;
}

Var1Spec kesten_as_var1(const KestenSpec& k) {
  Var1Spec v;
  v.a = k.base;
  v.innovation.law = k.b_law;
  return v;
}

}  // namespace

double sample_multiplier(const KestenSpec& k, randkit::RngStream& stream) {
  switch (k.multiplier) {
    case MultiplierLaw::fixed: return 1.0;
    case MultiplierLaw::lognormal:
      return std::exp(k.log_mu + std::sqrt(k.log_sigma2) * randkit::sample_normal(stream));
    case MultiplierLaw::uniform: return stream.uniform(k.low, k.high);
  }
  return 1.0;
}

double spectral_radius(const Matrix& a) {
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Matrix> solver(a, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::string model_name(const ModelSpec& spec) {
  return std::visit(Overloaded{[](const Var1Spec&) { return std::string("var1"); },
                               [](const KestenSpec&) { return std::string("kesten"); },
                               [](const Garch11Spec&) { return std::string("garch11"); }},
                    spec);
}

std::size_t dimension(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return s.dim(); }, spec);
}

void validate(const ModelSpec& spec) {
  std::visit(Overloaded{
                 [](const Var1Spec& v) {
                   check_square(v.a, "Var1 coefficient matrix");
                   v.innovation.law.validate();
                   for (const auto& atom : v.innovation.atoms) {
                     if (static_cast<std::size_t>(atom.direction.size()) != v.dim() || atom.direction.norm() == 0.0) {
                       throw ParameterError("innovation atoms must be non-zero vectors of the model dimension");
                     }
                   }
                   if (!v.innovation.atoms.empty()) atom_cdf(v.innovation.atoms);
                 },
                 [](const KestenSpec& k) {
                   check_square(k.base, "Kesten base matrix");
                   k.b_law.validate();
                   if (k.multiplier == MultiplierLaw::lognormal && !(k.log_sigma2 >= 0.0)) {
                     throw ParameterError("Kesten lognormal multiplier needs log_sigma2 >= 0");
                   }
                   if (k.multiplier == MultiplierLaw::uniform && !(k.high > k.low)) {
                     throw ParameterError("Kesten uniform multiplier needs high > low");
                   }
                   if (k.alpha_hint && !(*k.alpha_hint > 0.0)) {
                     throw ParameterError("Kesten alpha_hint must be positive");
                   }
                   if (!(k.pilot_quantile > 0.0 && k.pilot_quantile < 1.0)) {
                     throw ParameterError("Kesten pilot_quantile must lie in (0, 1)");
                   }
                 },
                 [](const Garch11Spec& g) {
                   if (!(g.alpha0 > 0.0)) throw ParameterError("garch11 field alpha0 must be positive");
                   if (!(g.alpha1 > 0.0)) throw ParameterError("garch11 field alpha1 must be positive");
                   if (!(g.beta1 > 0.0)) throw ParameterError("garch11 field beta1 must be positive");
                 }},
             spec);
}

// ---------------------------------------------------------------------------
// Chain stepping

ChainStepper::ChainStepper(const ModelSpec& spec) : spec_(spec) {
  validate(spec_);
  state_ = initial_state();
  scratch_ = Vector::Zero(state_.size());
  if (const auto* v = std::get_if<Var1Spec>(&spec_); v != nullptr && !v->innovation.atoms.empty()) {
    innovation_cdf_ = atom_cdf(v->innovation.atoms);
  }
}

Vector ChainStepper::initial_state() const {
  return std::visit(Overloaded{[](const Var1Spec& v) -> Vector { return Vector::Zero(v.dim()); },
                               [](const KestenSpec& k) -> Vector { return Vector::Zero(k.dim()); },
                               [](const Garch11Spec& g) -> Vector {
                                 const double persistence = g.alpha1 + g.beta1;
                                 const double var = persistence < 1.0 ? g.alpha0 / (1.0 - persistence) : g.alpha0;
                                 Vector s(2);
                                 s << var, 0.0;
                                 return s;
                               }},
                    spec_);
}

void ChainStepper::set_state(const Vector& state) {
  if (state.size() != state_.size()) {
    throw ParameterError("chain state has wrong dimension");
  }
  state_ = state;
}

void ChainStepper::step(randkit::RngStream& stream) {
  std::visit(Overloaded{[&](const Var1Spec& v) {
                          draw_innovation(v.innovation, scratch_, stream, innovation_cdf_);
                          state_ = v.a * state_ + scratch_;
                        },
                        [&](const KestenSpec& k) {
                          const double s = sample_multiplier(k, stream);
                          for (Eigen::Index j = 0; j < scratch_.size(); ++j) scratch_[j] = k.b_law.sample(stream);
                          state_ = s * (k.base * state_) + scratch_;
                        },
                        [&](const Garch11Spec& g) {
                          const double var = g.alpha0 + g.alpha1 * state_[1] * state_[1] + g.beta1 * state_[0];
                          const double z = sample_garch_noise(g.z_law, stream);
                          state_[0] = var;
                          state_[1] = std::sqrt(var) * z;
                        }},
             spec_);
}

Vector ChainStepper::observe() const {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(dimension(spec_)));
  observe_into(row);
  return row.transpose();
}

void ChainStepper::observe_into(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
  if (const auto* g = std::get_if<Garch11Spec>(&spec_)) {
    if (g->observable == GarchObservable::returns) {
      row[0] = state_[1];
    } else {
      row[0] = std::sqrt(state_[0]);
      row[1] = state_[1];
    }
    return;
  }
  row = state_.transpose();
}

// ---------------------------------------------------------------------------
// Rates, burn-in and horizon

double contraction_rate(const ModelSpec& spec) {
  return std::visit(
      Overloaded{[](const Var1Spec& v) { return spectral_radius(v.a); },
                 [&](const KestenSpec& k) {
                   const double rho = spectral_radius(k.base);
                   if (k.multiplier == MultiplierLaw::fixed) return rho;
                   double p = 0.5;
                   try {
                     p = std::min(1.0, 0.5 * model_alpha(spec));
                   } catch (const Error&) {
                     return std::exp(kesten_lyapunov(k));
                   }
                   return std::pow(multiplier_moment(k, p), 1.0 / p) * rho;
                 },
                 [&](const Garch11Spec& g) {
                   double p = 0.5;
                   try {
                     p = std::min(1.0, 0.5 * tail_index(spec));
                   } catch (const Error&) {
                     return std::exp(0.5 * garch_log_lyapunov(g));
                   }
                   return std::exp(garch_log_moment(g, 0.5 * p, {}) / p);
                 }},
      spec);
}

std::size_t horizon_for(double beta, double tolerance, std::size_t cap) {
  if (!(beta >= 0.0)) throw ParameterError("contraction rate must be nonnegative");
  if (beta >= 1.0) {
    throw DivergenceError("contraction rate " + std::to_string(beta) + " >= 1: tail process does not decay");
  }
  if (beta == 0.0) return 1;
  std::size_t t = 1;
  while (std::pow(beta, static_cast<double>(t)) / (1.0 - beta) > tolerance && t < cap) ++t;
  return t;
}

std::size_t default_horizon(const ModelSpec& spec, double tolerance) {
  return horizon_for(contraction_rate(spec), tolerance);
}

std::size_t default_burn_in(const ModelSpec& spec) {
  double beta = 0.0;
  try {
    beta = contraction_rate(spec);
  } catch (const Error&) {
    return 1000;
  }
  if (beta >= 1.0) return 1000;
  return std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(10.0 / (1.0 - beta))));
}

namespace {

void check_stationary(const ModelSpec& spec) {
  std::visit(Overloaded{[](const Var1Spec& v) {
                          const double rho = spectral_radius(v.a);
                          if (rho >= 1.0) {
                            throw DivergenceError("Var1 invariant violated: spectral radius of A is " +
                                                  std::to_string(rho) + " >= 1");
                          }
                        },
                        [](const KestenSpec& k) {
                          const double gamma = kesten_lyapunov(k);
                          if (!(gamma < 0.0)) {
                            throw DivergenceError("Kesten invariant violated: Lyapunov exponent " +
                                                  std::to_string(gamma) + " is not negative");
                          }
                        },
                        [](const Garch11Spec& g) {
                          const double gamma = garch_log_lyapunov(g);
                          if (!(gamma < 0.0)) {
                            throw DivergenceError("garch11 invariant violated: E log(alpha1 Z^2 + beta1) = " +
                                                  std::to_string(gamma) + " is not negative");
                          }
                        }},
             spec);
}

[[noreturn]] void diverged(std::size_t t) {
  throw DivergenceError("recursion diverged at step " + std::to_string(t) + " (non-finite or exploding state)");
}

}  // namespace

PathMatrix simulate_path(const ModelSpec& spec, std::size_t n, std::optional<std::size_t> burn_in,
                         randkit::RngStream stream) {
  validate(spec);
  check_stationary(spec);
  PathMatrix out;
  out.stream_id = stream.stream_id();
  out.burn_in_used = burn_in.value_or(default_burn_in(spec));
  const auto d = static_cast<Eigen::Index>(dimension(spec));
  out.values.resize(static_cast<Eigen::Index>(n), d);
  ChainStepper chain(spec);
  for (std::size_t t = 0; t < out.burn_in_used; ++t) {
    chain.step(stream);
    if (!chain.state().allFinite()) diverged(t);
  }
  for (std::size_t t = 0; t < n; ++t) {
    chain.step(stream);
    const Vector& s = chain.state();
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > kBlowUp) diverged(out.burn_in_used + t);
    chain.observe_into(out.values.row(static_cast<Eigen::Index>(t)));
  }
  return out;
}

Vector simulate_sum(const ModelSpec& spec, std::size_t n, std::size_t burn_in, randkit::RngStream& stream) {
  // Scalar Var1 fast path: the inner loop of the large-deviation scans.
  if (const auto* v = std::get_if<Var1Spec>(&spec); v != nullptr && v->dim() == 1 && v->innovation.atoms.empty()) {
    const double a = v->a(0, 0);
    const randkit::TailLaw& law = v->innovation.law;
    double x = 0.0;
    double total = 0.0;
    auto run = [&](auto draw) {
      for (std::size_t t = 0; t < burn_in; ++t) x = a * x + draw();
      for (std::size_t t = 0; t < n; ++t) {
        x = a * x + draw();
        total += x;
      }
    };
    if (law.family == randkit::TailFamily::pareto) {
      const double inv = -1.0 / law.alpha;
      const double scale = law.scale;
      run([&] { return scale * std::pow(stream.uniform(), inv); });
    } else {
      run([&] { return law.sample(stream); });
    }
    if (!std::isfinite(total)) diverged(burn_in + n);
    Vector out(1);
    out[0] = total;
    return out;
  }
  ChainStepper chain(spec);
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(dimension(spec)));
  Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(row.size());
  for (std::size_t t = 0; t < burn_in; ++t) chain.step(stream);
  for (std::size_t t = 0; t < n; ++t) {
    chain.step(stream);
    chain.observe_into(row);
    total += row;
  }
  if (!total.allFinite()) diverged(burn_in + n);
  return total.transpose();
}

// ---------------------------------------------------------------------------
// Tail index

Quadrature gauss_hermite(std::size_t n) {
  if (n == 0) throw ParameterError("Gauss-Hermite rule needs at least one node");
  Quadrature q;
  q.nodes.assign(n, 0.0);
  q.weights.assign(n, 0.0);
  constexpr double kPiQuarter = 0.7511255444649425;  // pi^{-1/4}
  const double nd = static_cast<double>(n);
  const std::size_t half = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(nd, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * q.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * q.nodes[1];
    } else {
      z = 2.0 * z - q.nodes[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = kPiQuarter;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
      }
      pp = std::sqrt(2.0 * nd) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    q.nodes[i] = z;
    q.nodes[n - 1 - i] = -z;
    q.weights[i] = 2.0 / (pp * pp);
    q.weights[n - 1 - i] = q.weights[i];
  }
  return q;
}

namespace {

// log E (alpha1 Z^2 + beta1)^power.
double garch_log_moment(const Garch11Spec& g, double power, const TailIndexOptions& options) {
  if (g.z_law == GarchNoise::gaussian) {
    static thread_local std::size_t cached_n = 0;
    static thread_local Quadrature rule;
    if (cached_n != options.gh_nodes) {
      rule = gauss_hermite(options.gh_nodes);
      cached_n = options.gh_nodes;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = std::numbers::sqrt2 * rule.nodes[i];
      acc += rule.weights[i] * std::pow(g.alpha1 * z * z + g.beta1, power);
    }
    return std::log(acc / std::sqrt(std::numbers::pi));
  }
  // Non-Gaussian noise: Monte Carlo over a fixed stream, so the moment
  // function is a deterministic smooth function of the power.
  static thread_local std::vector<double> log_a;
  static thread_local std::uint64_t cached_seed = 0;
  static thread_local std::size_t cached_draws = 0;
  static thread_local double cached_a1 = -1.0;
  static thread_local double cached_b1 = -1.0;
  if (cached_seed != options.mc_seed || cached_draws != options.mc_draws || cached_a1 != g.alpha1 ||
      cached_b1 != g.beta1 || log_a.empty()) {
    randkit::RngStream stream(options.mc_seed, 0x6A11CE);
    log_a.resize(options.mc_draws);
    for (auto& v : log_a) {
      const double z = sample_garch_noise(g.z_law, stream);
      v = std::log(g.alpha1 * z * z + g.beta1);
    }
    cached_seed = options.mc_seed;
    cached_draws = options.mc_draws;
    cached_a1 = g.alpha1;
    cached_b1 = g.beta1;
  }
  double acc = 0.0;
  for (double v : log_a) acc += std::exp(power * v);
  return std::log(acc / static_cast<double>(log_a.size()));
}

template <typename LogMoment>
double solve_moment_root(LogMoment&& g, double tolerance, const std::string& what) {
  double lo = 1e-6;
  const double g_lo = g(lo);
  if (!std::isfinite(g_lo)) throw BracketError(what + ": moment function not finite near 0");
  if (!(g_lo < 0.0)) {
    throw NoRootError(what + ": moment function is nonnegative near 0 (Lyapunov exponent >= 0)");
  }
  double hi = 1.0;
  for (;;) {
    const double g_hi = g(hi);
    if (!std::isfinite(g_hi)) {
      throw BracketError(what + ": moment function not finite at bracket end " + std::to_string(hi));
    }
    if (g_hi > 0.0) break;
    lo = hi;
    hi *= 2.0;
    if (hi > 1024.0) throw NoRootError(what + ": no sign change on the expanded bracket (0, 1024]");
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double moment_function(const ModelSpec& spec, double kappa, const TailIndexOptions& options) {
  return std::visit(Overloaded{[&](const Var1Spec&) -> double {
                                 throw ParameterError("Var1 has no multiplicative moment equation");
                               },
                               [&](const KestenSpec& k) { return std::exp(kesten_log_moment(k, kappa)); },
                               [&](const Garch11Spec& g) { return std::exp(garch_log_moment(g, 0.5 * kappa, options)); }},
                    spec);
}

double tail_index(const ModelSpec& spec, const TailIndexOptions& options) {
  validate(spec);
  return std::visit(
      Overloaded{[&](const Var1Spec& v) {
                   if (!v.innovation.law.regularly_varying()) {
                     throw UnsupportedLawError("Var1 innovation law is not regularly varying");
                   }
                   return v.innovation.law.alpha;
                 },
                 [&](const KestenSpec& k) {
                   return solve_moment_root([&](double kappa) { return kesten_log_moment(k, kappa); },
                                            options.tolerance, "kesten tail index");
                 },
                 [&](const Garch11Spec& g) {
                   return solve_moment_root([&](double kappa) { return garch_log_moment(g, 0.5 * kappa, options); },
                                            options.tolerance, "garch11 tail index");
                 }},
      spec);
}

double model_alpha(const ModelSpec& spec) {
  if (const auto* k = std::get_if<KestenSpec>(&spec)) {
    if (k->alpha_hint) return *k->alpha_hint;
    double alpha = std::numeric_limits<double>::infinity();
    if (k->b_law.regularly_varying()) alpha = k->b_law.alpha;
    if (k->multiplier != MultiplierLaw::fixed) {
      try {
        alpha = std::min(alpha, tail_index(spec));
      } catch (const NoRootError&) {
      }
    }
    if (!std::isfinite(alpha)) {
      throw NoRootError("kesten model has neither a moment-equation root nor regularly varying noise");
    }
    return alpha;
  }
  return tail_index(spec);
}

std::optional<Vector> stationary_mean(const ModelSpec& spec) {
  return std::visit(
      Overloaded{[](const Var1Spec& v) -> std::optional<Vector> {
                   const double m = v.innovation.law.mean();
                   if (!std::isfinite(m)) return std::nullopt;
                   const auto d = static_cast<Eigen::Index>(v.dim());
                   Vector mz(d);
                   if (v.innovation.atoms.empty()) {
                     mz.setConstant(m);
                   } else {
                     if (v.innovation.law.family == randkit::TailFamily::stable) return std::nullopt;
                     const randkit::TailLaw& law = v.innovation.law;
                     double radius_mean = law.scale * law.alpha / (law.alpha - 1.0);
                     if (law.family == randkit::TailFamily::gaussian) {
                       radius_mean = law.scale * std::sqrt(2.0 / std::numbers::pi);
                     } else if (law.family == randkit::TailFamily::lognormal) {
                       radius_mean = m;
                     }
                     const auto cdf = atom_cdf(v.innovation.atoms);
                     mz.setZero();
                     double prev = 0.0;
                     for (std::size_t i = 0; i < cdf.size(); ++i) {
                       const Vector& dir = v.innovation.atoms[i].direction;
                       mz += (cdf[i] - prev) * dir / dir.norm();
                       prev = cdf[i];
                     }
                     mz *= radius_mean;
                   }
                   const Matrix eye = Matrix::Identity(d, d);
                   return Vector((eye - v.a).lu().solve(mz));
                 },
                 [&](const KestenSpec& k) -> std::optional<Vector> {
                   const double mb = k.b_law.mean();
                   if (!std::isfinite(mb)) return std::nullopt;
                   double alpha = 0.0;
                   try {
                     alpha = model_alpha(spec);
                   } catch (const Error&) {
                     return std::nullopt;
                   }
                   if (!(alpha > 1.0)) return std::nullopt;
                   double ms = 1.0;
                   if (k.multiplier == MultiplierLaw::lognormal) ms = std::exp(k.log_mu + 0.5 * k.log_sigma2);
                   if (k.multiplier == MultiplierLaw::uniform) ms = 0.5 * (k.low + k.high);
                   const Matrix ea = ms * k.base;
                   if (spectral_radius(ea) >= 1.0) return std::nullopt;
                   const auto d = static_cast<Eigen::Index>(k.dim());
                   const Vector eb = Vector::Constant(d, mb);
                   return Vector((Matrix::Identity(d, d) - ea).lu().solve(eb));
                 },
                 [&](const Garch11Spec& g) -> std::optional<Vector> {
                   if (g.observable != GarchObservable::returns) return std::nullopt;
                   double alpha = 0.0;
                   try {
                     alpha = tail_index(spec);
                   } catch (const Error&) {
                     return std::nullopt;
                   }
                   if (!(alpha > 1.0)) return std::nullopt;
                   return Vector::Zero(1);
                 }},
      spec);
}

std::vector<AngularAtom> innovation_angular_law(const Innovation& innovation, std::size_t dim) {
  std::vector<AngularAtom> atoms;
  if (!innovation.atoms.empty()) {
    const auto cdf = atom_cdf(innovation.atoms);
    double prev = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      const Vector& dir = innovation.atoms[i].direction;
      atoms.push_back({dir / dir.norm(), cdf[i] - prev});
      prev = cdf[i];
    }
    return atoms;
  }
  const double p = innovation.law.positive_tail_fraction();
  const auto d = static_cast<Eigen::Index>(dim);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vector e = Vector::Unit(d, j);
    if (p > 0.0) atoms.push_back({e, p / static_cast<double>(dim)});
    if (p < 1.0) atoms.push_back({-e, (1.0 - p) / static_cast<double>(dim)});
  }
  return atoms;
}

std::vector<AngularAtom> linear_theta0_law(const Matrix& a, const std::vector<AngularAtom>& innovation_atoms,
                                           double alpha, double* series_mass) {
  const auto d = a.rows();
  double input_total = 0.0;
  for (const auto& u : innovation_atoms) input_total += u.weight;
  std::vector<AngularAtom> raw;
  double total = 0.0;
  Matrix power = Matrix::Identity(d, d);
  for (std::size_t i = 0; i < 100'000; ++i) {
    double round_max = 0.0;
    for (const auto& u : innovation_atoms) {
      const Vector v = power * u.direction;
      const double nv = v.norm();
      if (!(nv > 0.0)) continue;
      const double w = u.weight / input_total * std::pow(nv, alpha);
      round_max = std::max(round_max, w);
      total += w;
      raw.push_back({v / nv, w});
    }
    if (i > 0 && round_max <= 1e-17 * total) break;
    power = a * power;
  }
  if (!(total > 0.0)) throw DegenerateSampleError("angular law of Theta_0 has zero mass");
  if (series_mass != nullptr) *series_mass = total;
  // Merge coinciding directions.
  std::vector<AngularAtom> merged;
  for (auto& atom : raw) {
    bool found = false;
    for (auto& m : merged) {
      if ((m.direction - atom.direction).cwiseAbs().maxCoeff() < 1e-12) {
        m.weight += atom.weight;
        found = true;
        break;
      }
    }
    if (!found) merged.push_back(std::move(atom));
    if (merged.size() > 4096) break;
  }
  for (auto& m : merged) m.weight /= total;
  return merged;
}

std::optional<double> stationary_tail_constant(const ModelSpec& spec) {
  const Var1Spec* v = std::get_if<Var1Spec>(&spec);
  Var1Spec converted;
  if (const auto* k = std::get_if<KestenSpec>(&spec); k != nullptr && k->multiplier == MultiplierLaw::fixed) {
    converted = kesten_as_var1(*k);
    v = &converted;
  }
  if (v == nullptr || !v->innovation.law.regularly_varying()) return std::nullopt;
  const double c_law = v->innovation.law.tail_constant();
  const double c_abs = v->innovation.atoms.empty() ? static_cast<double>(v->dim()) * c_law : c_law;
  double mass = 0.0;
  linear_theta0_law(v->a, innovation_angular_law(v->innovation, v->dim()), v->innovation.law.alpha, &mass);
  return c_abs * mass;
}

// ---------------------------------------------------------------------------
// Spectral tail process

namespace {

// Draws Z_0 from the noise law tilted by weight(z), for the GARCH tail process.
double tilted_garch_noise(const Garch11Spec& g, double alpha, bool include_volatility, randkit::RngStream& stream) {
  const double sign_u = stream.uniform();
  const double sign = sign_u < 0.5 ? -1.0 : 1.0;
  if (g.z_law == GarchNoise::gaussian) {
    if (!include_volatility) {
      // Density proportional to |z|^alpha phi(z): Z^2 / 2 ~ Gamma((alpha + 1)/2).
      return sign * std::sqrt(2.0 * randkit::sample_gamma(stream, 0.5 * (alpha + 1.0)));
    }
    // Density proportional to (1 + z^2)^{alpha/2} phi(z), by rejection from
    // the mixture proportional to (1 + |z|^alpha) phi(z).
    const double tilt_mass =
        std::pow(2.0, 0.5 * alpha) * std::tgamma(0.5 * (alpha + 1.0)) / std::sqrt(std::numbers::pi);
    for (int iter = 0; iter < 1'000'000; ++iter) {
      double z = 0.0;
      if (stream.uniform() < 1.0 / (1.0 + tilt_mass)) {
        z = randkit::sample_normal(stream);
      } else {
        z = std::sqrt(2.0 * randkit::sample_gamma(stream, 0.5 * (alpha + 1.0)));
      }
      const double accept =
          std::pow(1.0 + z * z, 0.5 * alpha) / (std::pow(2.0, 0.5 * alpha) * (1.0 + std::pow(std::abs(z), alpha)));
      if (stream.uniform() < accept) return sign * std::abs(z);
    }
    throw DivergenceError("tilted GARCH noise rejection sampler did not accept");
  }
  const double edge = std::numbers::sqrt3;
  if (!include_volatility) {
    // Density proportional to |z|^alpha on (-sqrt3, sqrt3).
    return sign * edge * std::pow(stream.uniform(), 1.0 / (alpha + 1.0));
  }
  for (int iter = 0; iter < 1'000'000; ++iter) {
    const double z = edge * stream.uniform();
    if (stream.uniform() < std::pow((1.0 + z * z) / 4.0, 0.5 * alpha)) return sign * z;
  }
  throw DivergenceError("tilted GARCH noise rejection sampler did not accept");
}

std::vector<AngularAtom> pilot_angles(const KestenSpec& k, const ModelSpec& spec, randkit::RngStream stream) {
  const PathMatrix pilot = simulate_path(spec, k.pilot_length, std::nullopt, stream);
  const std::size_t n = pilot.rows();
  std::vector<double> norms(n);
  for (std::size_t t = 0; t < n; ++t) norms[t] = pilot.values.row(static_cast<Eigen::Index>(t)).norm();
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor((1.0 - k.pilot_quantile) * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep - 1), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  std::vector<AngularAtom> atoms;
  atoms.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t t = order[i];
    if (!(norms[t] > 0.0)) continue;
    atoms.push_back({pilot.values.row(static_cast<Eigen::Index>(t)).transpose() / norms[t], 1.0 / static_cast<double>(keep)});
  }
  if (atoms.empty()) throw DegenerateSampleError("pilot run produced no non-zero exceedances");
  return atoms;
}

}  // namespace

TailProcessSampler::TailProcessSampler(const ModelSpec& spec, randkit::RngStream pilot_stream) : spec_(spec) {
  validate(spec_);
  dim_ = dimension(spec_);
  std::visit(Overloaded{[&](const Var1Spec& v) {
                          if (!v.innovation.law.regularly_varying()) {
                            throw UnsupportedLawError("Var1 tail process needs a regularly varying innovation law");
                          }
                          alpha_ = v.innovation.law.alpha;
                          atoms_ = linear_theta0_law(v.a, innovation_angular_law(v.innovation, v.dim()), alpha_);
                          theta0_source_ = "exact";
                        },
                        [&](const KestenSpec& k) {
                          alpha_ = model_alpha(spec_);
                          if (k.multiplier == MultiplierLaw::fixed && k.b_law.regularly_varying()) {
                            const Var1Spec v = kesten_as_var1(k);
                            atoms_ = linear_theta0_law(v.a, innovation_angular_law(v.innovation, v.dim()), alpha_);
                            theta0_source_ = "exact";
                          } else if (kesten_nonnegative(k)) {
                            atoms_ = {{Vector::Ones(1), 1.0}};
                            theta0_source_ = "exact";
                          } else {
                            atoms_ = pilot_angles(k, spec_, pilot_stream);
                            theta0_source_ = "pilot";
                          }
                        },
                        [&](const Garch11Spec&) {
                          alpha_ = tail_index(spec_);
                          theta0_source_ = "exact";
                        }},
             spec_);
  cumulative_ = atom_cdf(atoms_);
}

Vector TailProcessSampler::sample_theta0(randkit::RngStream& stream) const {
  if (const auto* g = std::get_if<Garch11Spec>(&spec_)) {
    const bool with_vol = g->observable == GarchObservable::volatility_and_returns;
    const double z0 = tilted_garch_noise(*g, alpha_, with_vol, stream);
    if (!with_vol) return Vector::Constant(1, z0 > 0.0 ? 1.0 : -1.0);
    Vector out(2);
    out << 1.0, z0;
    return out / out.norm();
  }
  const double u = stream.uniform();
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
  return atoms_[idx].direction;
}

TailProcessPath TailProcessSampler::sample(std::size_t horizon, randkit::RngStream& stream) const {
  TailProcessPath path;
  const auto rows = static_cast<Eigen::Index>(horizon + 1);
  const auto d = static_cast<Eigen::Index>(dim_);
  path.theta.resize(rows, d);
  // The radius uses a child stream keyed by the current position so it is
  // independent of the angular draws.
  randkit::RngStream radius_stream = stream.fork(stream.counter() ^ 0xA11CE5EEDull);
  path.pareto_radius = randkit::pareto_from_uniform(radius_stream.uniform(), alpha_);

  std::visit(
      Overloaded{[&](const Var1Spec& v) {
                   Vector cur = sample_theta0(stream);
                   path.theta.row(0) = cur.transpose();
                   for (Eigen::Index t = 1; t < rows; ++t) {
                     cur = v.a * cur;
                     path.theta.row(t) = cur.transpose();
                   }
                 },
                 [&](const KestenSpec& k) {
                   Vector cur = sample_theta0(stream);
                   path.theta.row(0) = cur.transpose();
                   for (Eigen::Index t = 1; t < rows; ++t) {
                     cur = sample_multiplier(k, stream) * (k.base * cur);
                     path.theta.row(t) = cur.transpose();
                   }
                 },
                 [&](const Garch11Spec& g) {
                   const bool with_vol = g.observable == GarchObservable::volatility_and_returns;
                   const double z0 = tilted_garch_noise(g, alpha_, with_vol, stream);
                   const double norm0 = with_vol ? std::sqrt(1.0 + z0 * z0) : std::abs(z0);
                   auto put = [&](Eigen::Index t, double root_pi, double z) {
                     if (with_vol) {
                       path.theta(t, 0) = root_pi / norm0;
                       path.theta(t, 1) = root_pi * z / norm0;
                     } else {
                       path.theta(t, 0) = root_pi * z / norm0;
                     }
                   };
                   put(0, 1.0, z0);
                   double product = 1.0;
                   double z_prev = z0;
                   for (Eigen::Index t = 1; t < rows; ++t) {
                     product *= g.alpha1 * z_prev * z_prev + g.beta1;
                     const double z = sample_garch_noise(g.z_law, stream);
                     put(t, std::sqrt(product), z);
                     z_prev = z;
                   }
                 }},
      spec_);
  return path;
}

TailSampler TailProcessSampler::as_function() const {
  auto self = std::make_shared<const TailProcessSampler>(*this);
  return [self](std::size_t horizon, randkit::RngStream& stream) { return self->sample(horizon, stream); };
}

TailProcessPath sample_tail_process(const ModelSpec& spec, std::size_t horizon, randkit::RngStream stream) {
  const TailProcessSampler sampler(spec, stream.fork(0x917071));
  return sampler.sample(horizon, stream);
}

TailSampler iid_tail_sampler(std::vector<AngularAtom> atoms) {
  if (atoms.empty()) throw ParameterError("iid tail sampler needs at least one angular atom");
  auto cdf = std::make_shared<const std::vector<double>>(atom_cdf(atoms));
  auto shared_atoms = std::make_shared<const std::vector<AngularAtom>>(std::move(atoms));
  return [cdf, shared_atoms](std::size_t horizon, randkit::RngStream& stream) {
    const auto& list = *shared_atoms;
    const auto d = list.front().direction.size();
    TailProcessPath path;
    path.theta = Matrix::Zero(static_cast<Eigen::Index>(horizon + 1), d);
    const double u = stream.uniform();
    const auto it = std::lower_bound(cdf->begin(), cdf->end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf->begin()), list.size() - 1);
    path.theta.row(0) = (list[idx].direction / list[idx].direction.norm()).transpose();
    return path;
  };
}

}  // namespace heavytail::models
