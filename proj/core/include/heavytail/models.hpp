#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "heavytail/distributions.hpp"
#include "heavytail/rng_stream.hpp"

namespace heavytail::models {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct AngularAtom {
  Vector direction;
  double weight = 1.0;
};

// Innovation Z_t of a linear model. With no atoms the coordinates of Z_t are
// iid draws from `law`; otherwise Z_t = |R| U with R ~ law and U drawn from
// the atoms (normalized to the unit sphere), so the angular law of Z_t is
// exactly the atom distribution.
struct Innovation {
  randkit::TailLaw law;
  std::vector<AngularAtom> atoms;
};

// X_t = A X_{t-1} + Z_t with a fixed coefficient matrix.
struct Var1Spec {
  Matrix a;
  Innovation innovation;

  std::size_t dim() const { return static_cast<std::size_t>(a.rows()); }
};

enum class MultiplierLaw { fixed, lognormal, uniform };

// X_t = A_t X_{t-1} + B_t with A_t = s_t * base, s_t iid scalar multipliers
// and B_t iid with independent coordinates drawn from b_law.
struct KestenSpec {
  Matrix base;
  MultiplierLaw multiplier = MultiplierLaw::fixed;
  double log_mu = 0.0;      // lognormal: log s ~ N(log_mu, log_sigma2)
  double log_sigma2 = 0.0;
  double low = 0.0;         // uniform: s ~ U(low, high)
  double high = 0.0;
  randkit::TailLaw b_law;
  std::optional<double> alpha_hint;
  // Pilot run used to approximate the angular law of Theta_0 when it is not
  // available in closed form.
  std::size_t pilot_length = 1'000'000;
  double pilot_quantile = 0.999;

  std::size_t dim() const { return static_cast<std::size_t>(base.rows()); }
};

enum class GarchNoise { gaussian, uniform };
enum class GarchObservable { returns, volatility_and_returns };

// X_t = sigma_t Z_t, sigma_t^2 = alpha0 + sigma_{t-1}^2 (alpha1 Z_{t-1}^2 + beta1).
struct Garch11Spec {
  double alpha0 = 0.1;
  double alpha1 = 0.1;
  double beta1 = 0.85;
  GarchNoise z_law = GarchNoise::gaussian;
  GarchObservable observable = GarchObservable::returns;

  std::size_t dim() const { return observable == GarchObservable::returns ? 1 : 2; }
};

using ModelSpec = std::variant<Var1Spec, KestenSpec, Garch11Spec>;

std::string model_name(const ModelSpec& spec);
// Dimension of the observed process X_t = f(Phi_t).
std::size_t dimension(const ModelSpec& spec);
// Throws ParameterError when a structural invariant fails (shapes, positive
// GARCH coefficients, valid laws). Stationarity is checked where it matters.
void validate(const ModelSpec& spec);

struct PathMatrix {
  Matrix values;  // n x d
  std::size_t burn_in_used = 0;
  std::uint64_t stream_id = 0;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

// Spectral tail process draw (Theta_0, ..., Theta_T) as rows.
struct TailProcessPath {
  Matrix theta;
  double pareto_radius = 1.0;

  std::size_t horizon() const { return static_cast<std::size_t>(theta.rows()) - 1; }
};

// One-step transition kernel of the underlying Markov chain. The chain state
// is model specific: X_t for Var1/Kesten, (sigma_t^2, X_t) for GARCH.
class ChainStepper {
 public:
  explicit ChainStepper(const ModelSpec& spec);

  const Vector& state() const { return state_; }
  void set_state(const Vector& state);
  void step(randkit::RngStream& stream);
  // Observation f(Phi_t).
  Vector observe() const;
  void observe_into(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;
  // Initial state used before burn-in.
  Vector initial_state() const;

 private:
  ModelSpec spec_;
  Vector state_;
  Vector scratch_;
  std::vector<double> innovation_cdf_;
};

// Geometric contraction rate of the chain (one-step decay of |Theta_t| in
// the appropriate moment); used for burn-in and horizon defaults.
double contraction_rate(const ModelSpec& spec);
std::size_t default_burn_in(const ModelSpec& spec);
// Smallest T with beta^T / (1 - beta) below `tolerance`.
std::size_t horizon_for(double beta, double tolerance = 1e-4, std::size_t cap = 100'000);
std::size_t default_horizon(const ModelSpec& spec, double tolerance = 1e-4);

PathMatrix simulate_path(const ModelSpec& spec, std::size_t n, std::optional<std::size_t> burn_in,
                         randkit::RngStream stream);
// S_n = X_1 + ... + X_n of a stationary run, without storing the path.
Vector simulate_sum(const ModelSpec& spec, std::size_t n, std::size_t burn_in, randkit::RngStream& stream);

// Tail index of the stationary solution.
//   Var1: innovation alpha.
//   Kesten: root of log E s^k + k log rho(base) = 0 (E A^k = 1 when d = 1).
//   GARCH: root of E (alpha1 Z^2 + beta1)^{k/2} = 1.
struct TailIndexOptions {
  double tolerance = 1e-10;
  std::size_t gh_nodes = 128;
  std::size_t mc_draws = 1'000'000;
  std::uint64_t mc_seed = 0x5EED;
};
double tail_index(const ModelSpec& spec, const TailIndexOptions& options = {});
// The moment function whose root tail_index returns, evaluated at kappa.
double moment_function(const ModelSpec& spec, double kappa, const TailIndexOptions& options = {});
// Index alpha governing the tails of X_t (the hint or the innovation index
// when they dominate the multiplicative root).
double model_alpha(const ModelSpec& spec);

// E X_t when known in closed form.
std::optional<Vector> stationary_mean(const ModelSpec& spec);
// c in P(|X_t| > x) ~ c x^-alpha for linear models with regularly varying
// innovations and a fixed coefficient matrix.
std::optional<double> stationary_tail_constant(const ModelSpec& spec);

// Nodes and weights of the n-point Gauss-Hermite rule for weight exp(-x^2).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_hermite(std::size_t n);

using TailSampler = std::function<TailProcessPath(std::size_t horizon, randkit::RngStream& stream)>;

// Sampler for the spectral tail process of a model. Construction may run a
// pilot simulation (Kesten with random multipliers) using `pilot_stream`.
class TailProcessSampler {
 public:
  TailProcessSampler(const ModelSpec& spec, randkit::RngStream pilot_stream);

  TailProcessPath sample(std::size_t horizon, randkit::RngStream& stream) const;
  Vector sample_theta0(randkit::RngStream& stream) const;
  double alpha() const { return alpha_; }
  std::size_t dim() const { return dim_; }
  // How Theta_0 is drawn: "exact" or "pilot".
  const std::string& theta0_source() const { return theta0_source_; }
  // The discrete angular law of Theta_0 (atoms with probabilities), when one
  // is available (linear models).
  const std::vector<AngularAtom>& theta0_atoms() const { return atoms_; }

  TailSampler as_function() const;

 private:
  ModelSpec spec_;
  double alpha_ = 1.0;
  std::size_t dim_ = 1;
  std::string theta0_source_;
  std::vector<AngularAtom> atoms_;
  std::vector<double> cumulative_;
};

TailProcessPath sample_tail_process(const ModelSpec& spec, std::size_t horizon, randkit::RngStream stream);

// Tail sampler of an iid sequence with the given angular law (Theta_t = 0, t >= 1).
TailSampler iid_tail_sampler(std::vector<AngularAtom> atoms);

// Angular law of Theta_0 for a linear recursion with fixed matrix `a` and
// innovation angular atoms: atoms A^i u / |A^i u| with weights w |A^i u|^alpha.
std::vector<AngularAtom> linear_theta0_law(const Matrix& a, const std::vector<AngularAtom>& innovation_atoms,
                                           double alpha, double* series_mass = nullptr);
// Angular atoms of an innovation (iid coordinates or explicit atoms).
std::vector<AngularAtom> innovation_angular_law(const Innovation& innovation, std::size_t dim);

struct DriftReport {
  double p = 1.0;
  std::size_t m = 1;
  std::vector<double> grid_v;        // V(f(y)) at each grid state
  std::vector<double> conditional;   // E(V(f(Phi_m)) | Phi_0 = y)
  std::vector<double> conditional_se;
  double beta = 0.0;
  double beta_se = 0.0;
  double beta_upper = 0.0;  // beta + 1.96 se
  double intercept = 0.0;
  // (DC_{p,m})(b): one-step bound E(V(f(Phi_1)) | y) <= c1 V(f(y)) + c2.
  double c1 = 0.0;
  double c2 = 0.0;
  bool pass = false;
};

// Conditional Monte Carlo check of the drift condition with V(x) = |x|^p on
// the m-skeleton. For GARCH the states are sigma^2 values and V(s) = s^p.
DriftReport drift_margin(const ModelSpec& spec, double p, std::size_t m, const std::vector<Vector>& grid,
                         randkit::RngStream stream, std::size_t replicas_per_state = 4000);

// Lag-product functional columns (X_t^2, X_t X_{t-1}, ..., X_t X_{t-h}) for
// t = h, ..., n-1 of a scalar path (GARCH returns or scalar Kesten).
PathMatrix acf_functional_path(const ModelSpec& spec, std::size_t lag_max, std::size_t n, randkit::RngStream stream);
PathMatrix lag_products(const Eigen::VectorXd& x, std::size_t lag_max);

double spectral_radius(const Matrix& a);
// Draw of the scalar multiplier s_t of a Kesten model (1 when fixed).
double sample_multiplier(const KestenSpec& k, randkit::RngStream& stream);

}  // namespace heavytail::models
