#include "eqr/certify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eqr/extract.hpp"

namespace eqr {

namespace {

double cross_term(double lo, VarianceVariant variant) {
  // lo = xi_minus + gamma_bar; log2|A| = 1 for binary outcomes.
  const double proof = 2.0 * std::max(-lo, 0.0);
  const double statement = 2.0 * std::max(lo, 0.0);
  switch (variant) {
    case VarianceVariant::Proof:
      return proof;
    case VarianceVariant::Statement:
      return statement;
    case VarianceVariant::Conservative:
      return std::max(proof, statement);
  }
  return proof;
}

double variance_from(double xi_plus, double xi_minus, double gamma_bar,
                     VarianceVariant variant) {
  const double hi = xi_plus + gamma_bar;
  const double lo = xi_minus + gamma_bar;
  const double log2e = std::log2(std::exp(1.0));
  const double tail = 8.0 / std::exp(2.0) * log2e * log2e;
  return std::max(hi * hi, lo * lo) + cross_term(lo, variant) + tail;
}

}  // namespace

double TradeoffFunction::value(const Behaviour& b,
                               const Eigen::Vector2d& w_avg) const {
  return alpha() + beta.dot(Eigen::Vector2d(b.e1, b.e2)) + gamma.dot(w_avg);
}

TradeoffFunction TradeoffFunction::make(const Eigen::Vector2d& alpha_split,
                                        const Eigen::Vector2d& beta,
                                        const Eigen::Vector2d& gamma,
                                        const InputDistribution& inputs,
                                        VarianceVariant variant) {
  if (gamma.maxCoeff() > 1e-12)
    throw std::domain_error(
        "TradeoffFunction: gamma must be <= 0 componentwise");

  TradeoffFunction tf;
  tf.alpha_split = alpha_split;
  tf.beta = beta;
  tf.gamma = gamma.cwiseMin(0.0);
  tf.inputs = inputs;
  tf.variant = variant;

  for (int x = 1; x <= 2; ++x) {
    const double ax = alpha_split(x - 1);
    const double bx = beta(x - 1);
    const double px = inputs.p(x);
    tf.xi_table[0][x - 1] = (ax + bx) / px;   // a = +1
    tf.xi_table[1][x - 1] = (ax - bx) / px;   // a = -1
  }
  tf.xi_plus = std::max({tf.xi_table[0][0], tf.xi_table[0][1],
                         tf.xi_table[1][0], tf.xi_table[1][1]});
  tf.xi_minus = std::min({tf.xi_table[0][0], tf.xi_table[0][1],
                          tf.xi_table[1][0], tf.xi_table[1][1]});
  tf.gamma_bar = tf.gamma.sum();
  tf.v = variance_from(tf.xi_plus, tf.xi_minus, tf.gamma_bar, variant);
  return tf;
}

TradeoffFunction make_tradeoff_function(const Behaviour& expected,
                                        const EnergyBounds& energies,
                                        const InputDistribution& inputs,
                                        int k, const TradeoffOptions& opts) {
  EntropyProblem prob{expected, energies, inputs, k, opts.energy_functional};
  const EntropyBound bound = entropy_lower_bound(prob, opts.solve);
  const DualCertificate& cert = bound.certificate;

  Eigen::Vector2d split;
  if (opts.optimize_split)
    split = cert.alpha * Eigen::Vector2d(inputs.p1, inputs.p2);
  else
    split = Eigen::Vector2d::Constant(cert.alpha / 2.0);
  return TradeoffFunction::make(split, cert.beta, cert.gamma, inputs,
                                opts.variant);
}

double estimator(const TradeoffFunction& tf, int a, int x) {
  if (a != 1 && a != -1)
    throw std::invalid_argument("estimator: outcome must be +1 or -1");
  if (x != 1 && x != 2)
    throw std::invalid_argument("estimator: input must be 1 or 2");
  return tf.xi_table[a == 1 ? 0 : 1][x - 1];
}

VarianceBound variance_bound(const TradeoffFunction& tf) {
  VarianceBound vb;
  vb.xi_plus = tf.xi_plus;
  vb.xi_minus = tf.xi_minus;
  vb.v = variance_from(tf.xi_plus, tf.xi_minus, tf.gamma_bar, tf.variant);
  return vb;
}

double error_term(double v, double xi_plus, long long n, double eps_t) {
  if (n < 1) throw std::domain_error("error_term: n must be >= 1");
  if (!(eps_t > 0.0 && eps_t <= 1.0))
    throw std::domain_error("error_term: eps_t must be in (0, 1]");
  if (v < 0.0) throw std::domain_error("error_term: V must be >= 0");
  const double ln = -std::log2(eps_t) / static_cast<double>(n);
  return std::sqrt(2.0 * v) * std::sqrt(ln) + xi_plus / 3.0 * ln;
}

double surprisal_rate(double xi_mean, const TradeoffFunction& tf,
                      const EnergyBounds& energies, double t) {
  return xi_mean + tf.gamma.dot(energies.avg) - t;
}

double min_entropy_budget(long long n, double r, double t, double eps_m) {
  if (n < 1) throw std::domain_error("min_entropy_budget: n must be >= 1");
  if (r - t > 1.0 + 1e-12)
    throw std::domain_error(
        "min_entropy_budget: rate exceeds one bit per round");
  if (!(eps_m > 0.0 && eps_m <= 1.0))
    throw std::domain_error("min_entropy_budget: eps_m must be in (0, 1]");
  return static_cast<double>(n) * (r - t) - (-std::log2(eps_m));
}

namespace {

void check_eps(double e, const char* name) {
  if (!(e > 0.0 && e < 1.0)) {
    std::string msg = "soundness: ";
    msg += name;
    msg += " must be in (0, 1)";
    throw std::domain_error(msg);
  }
}

}  // namespace

double soundness_epsilon(double eps_t, double eps_m, double eps_ext,
                         double eps_omega) {
  check_eps(eps_t, "eps_t");
  check_eps(eps_m, "eps_m");
  check_eps(eps_ext, "eps_ext");
  check_eps(eps_omega, "eps_omega");
  return eps_t + eps_m + eps_ext + eps_omega;
}

double conditional_soundness(double eps_t, double eps_m, double eps_ext,
                             double eps_omega, double kappa) {
  check_eps(eps_t, "eps_t");
  check_eps(eps_m, "eps_m");
  check_eps(eps_ext, "eps_ext");
  check_eps(eps_omega, "eps_omega");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::domain_error("soundness: kappa must be in (0, 1]");
  return eps_ext + (eps_omega + eps_t + eps_m) / kappa;
}

void ProtocolConfig::validate() const {
  if (n < 1) throw std::domain_error("ProtocolConfig: n must be >= 1");
  check_eps(eps_t, "eps_t");
  check_eps(eps_m, "eps_m");
  check_eps(eps_ext, "eps_ext");
  // eps_omega may be exactly zero: it never enters a logarithm, and zero
  // states that the average-energy assumption holds with certainty (an
  // honest declared source).
  if (!(eps_omega >= 0.0 && eps_omega < 1.0))
    throw std::domain_error("soundness: eps_omega must be in [0, 1)");
  const double t = error();
  if (threshold_r - t > 1.0 + 1e-12)
    throw std::domain_error(
        "ProtocolConfig: threshold exceeds one bit per round after the "
        "error term");
  if (sigma < 0)
    throw std::domain_error("ProtocolConfig: sigma must be >= 0");
  const double sh = budget();
  const ExtractorParams allowed = plan(n, std::max(0.0, sh), eps_ext);
  if (sigma > allowed.sigma)
    throw std::domain_error(
        "ProtocolConfig: sigma exceeds the extractable length for the "
        "min-entropy budget");
}

}  // namespace eqr
