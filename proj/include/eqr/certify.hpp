#pragma once

#include <optional>

#include <Eigen/Dense>

#include "eqr/entropy.hpp"
#include "eqr/qset.hpp"
#include "eqr/sdp.hpp"

namespace eqr {

/// Which variance cross term to use in the single-round second-moment
/// bound. The derivation supports 2*max{-(xi_minus + gamma_bar), 0}; an
/// alternative printed form drops the minus sign. Conservative takes the
/// maximum of the two, which is safe under either reading.
enum class VarianceVariant { Proof, Statement, Conservative };

/// Affine entropy certificate packaged for per-round estimation.
///
/// The certificate alpha + beta . E + gamma . omega <= H(E) is turned into
/// the unbiased per-round estimator
///   xi(a, x) = (alpha_x + a beta_x) / p(x),
/// whose mean over rounds tracks alpha + beta . E for the device's running
/// behaviour. The split of alpha into (alpha_1, alpha_2) is free given the
/// sum; it does not affect the mean but changes the estimator's range and
/// hence the concentration constants.
///
/// Fields are public for inspection; mutate through make() so the derived
/// cache stays consistent.
struct TradeoffFunction {
  Eigen::Vector2d alpha_split = Eigen::Vector2d::Zero();
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();
  Eigen::Vector2d gamma = Eigen::Vector2d::Zero();
  InputDistribution inputs{0.5, 0.5};
  VarianceVariant variant = VarianceVariant::Proof;

  /// Derived cache: estimator values xi_table[i][x-1] for a = +1 (i = 0)
  /// and a = -1 (i = 1), their extremes, gamma_bar = gamma_1 + gamma_2,
  /// and the second-moment bound V.
  double xi_table[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double xi_plus = 0.0;
  double xi_minus = 0.0;
  double gamma_bar = 0.0;
  double v = 0.0;

  double alpha() const { return alpha_split.sum(); }

  /// Value of the affine functional at a behaviour with the given average
  /// energies: alpha + beta . E + gamma . w_avg.
  double value(const Behaviour& b, const Eigen::Vector2d& w_avg) const;

  /// Validates gamma <= 0 (1e-12 slack, then clamped) and the input
  /// distribution, then fills the derived cache. Throws std::domain_error
  /// on violated invariants.
  static TradeoffFunction make(const Eigen::Vector2d& alpha_split,
                               const Eigen::Vector2d& beta,
                               const Eigen::Vector2d& gamma,
                               const InputDistribution& inputs,
                               VarianceVariant variant =
                                   VarianceVariant::Proof);
};

/// Options for make_tradeoff_function.
struct TradeoffOptions {
  /// Pick the alpha split minimizing xi_plus - xi_minus instead of the
  /// default alpha_x = alpha / 2. The spread max(u) - min(l) is a maximum
  /// of two constants, one increasing and one decreasing line in the split
  /// variable, so its minimum sits where the lines cross: alpha_x =
  /// alpha p(x).
  bool optimize_split = false;
  VarianceVariant variant = VarianceVariant::Proof;
  /// When set, the entropy solve replaces the componentwise average-energy
  /// constraint by the single scalar constraint coeffs . omega_avg <=
  /// value (input-averaged max-average assumption). The certificate's
  /// gamma comes back as multiplier * coeffs, so the packaged TF keeps the
  /// componentwise form.
  std::optional<LinearTarget> energy_functional;
  sdp::SolveOptions solve;    ///< forwarded to the entropy solver
};

/// Builds a trade-off function by solving the dual entropy program with k
/// chords at the expected behaviour and packaging its certificate. The
/// resulting TF is tight at `expected`: its value there equals the
/// certified entropy bound. Propagates entropy-module errors (infeasible
/// target, solver failure).
TradeoffFunction make_tradeoff_function(const Behaviour& expected,
                                        const EnergyBounds& energies,
                                        const InputDistribution& inputs,
                                        int k = 16,
                                        const TradeoffOptions& opts = {});

/// Estimator value xi(a, x) = (alpha_x + a beta_x) / p(x) for outcome
/// a = +-1 and input x in {1, 2}.
double estimator(const TradeoffFunction& tf, int a, int x);

/// Second-moment data for the concentration bound.
struct VarianceBound {
  double v = 0.0;
  double xi_plus = 0.0;
  double xi_minus = 0.0;
};

/// Computes (V, xi_plus, xi_minus) for the per-round surprisal estimate:
///   V = max{(xi_plus + gamma_bar)^2, (xi_minus + gamma_bar)^2}
///       + cross_term(variant) + (4 |A| / e^2) (log2 e)^2,  |A| = 2,
/// where the cross term is 2*max{-(xi_minus + gamma_bar), 0} for Proof,
/// 2*max{xi_minus + gamma_bar, 0} for Statement, and the maximum of the
/// two for Conservative.
VarianceBound variance_bound(const TradeoffFunction& tf);

/// One-sided concentration error for n rounds at confidence eps_t:
///   t = sqrt(2 V) sqrt(log2(1/eps_t) / n) + (xi_plus / 3) log2(1/eps_t) / n.
/// Requires n >= 1, eps_t in (0, 1], V >= 0; t -> 0 as eps_t -> 1.
double error_term(double v, double xi_plus, long long n, double eps_t);

/// Certified per-round surprisal rate from an observed estimator mean:
/// xi_mean + gamma . w_avg - t.
double surprisal_rate(double xi_mean, const TradeoffFunction& tf,
                      const EnergyBounds& energies, double t);

/// Smooth min-entropy budget after the concentration and smoothing
/// penalties: sigma_h = n (r - t) - log2(1/eps_m). May be <= 0, meaning
/// nothing is extractable. Requires r - t <= 1 and eps_m in (0, 1].
double min_entropy_budget(long long n, double r, double t, double eps_m);

/// Total soundness error eps = eps_t + eps_m + eps_ext + eps_omega. Each
/// input must lie in (0, 1).
double soundness_epsilon(double eps_t, double eps_m, double eps_ext,
                         double eps_omega);

/// Conditional soundness bound eps_ext + (eps_omega + eps_t + eps_m) /
/// kappa for pass probability kappa in (0, 1]; diagnostic only, the
/// protocol never needs kappa at run time.
double conditional_soundness(double eps_t, double eps_m, double eps_ext,
                             double eps_omega, double kappa);

/// Full parameter set for one protocol run.
struct ProtocolConfig {
  long long n = 0;                ///< number of rounds
  InputDistribution inputs{0.5, 0.5};
  EnergyBounds energies{Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones()};
  TradeoffFunction tf;
  double threshold_r = 0.0;       ///< pass iff xi_mean + gamma . w_avg >= r
  double eps_t = 1e-6;
  double eps_m = 1e-6;
  double eps_ext = 1e-6;
  double eps_omega = 1e-6;
  long long sigma = 0;            ///< extractor output length (bits)

  /// Concentration error for this configuration.
  double error() const { return error_term(tf.v, tf.xi_plus, n, eps_t); }

  /// Min-entropy budget at the pass threshold.
  double budget() const {
    return min_entropy_budget(n, threshold_r, error(), eps_m);
  }

  /// Throws std::domain_error if any epsilon is outside (0, 1), n < 1,
  /// r - t > 1, or sigma exceeds what the extractor accounting allows.
  void validate() const;
};

}  // namespace eqr
