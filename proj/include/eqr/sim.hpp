#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "eqr/bits.hpp"
#include "eqr/certify.hpp"
#include "eqr/qset.hpp"

namespace eqr {

/// One hidden-variable branch of an i.i.d. ensemble: a fixed behaviour
/// with its true per-preparation energies, drawn with probability weight.
struct EnsembleComponent {
  double weight = 0.0;
  Behaviour behaviour;
  Eigen::Vector2d omega = Eigen::Vector2d::Zero();
};

/// I.i.d. ensemble device: the hidden variable is drawn once per
/// experiment, then every round plays the branch behaviour independently.
struct IidEnsembleDevice {
  std::vector<EnsembleComponent> components;
  /// Claim that the mixture satisfies the max-average assumption,
  /// sum_lambda p(lambda) omega^lambda <= declared omega_avg. Checked at
  /// run start when set.
  bool declared_avg_compliant = true;
};

/// Honest binary-phase-shift-keying device: coherent states of amplitude
/// +-xi measured by a binned X-quadrature homodyne with efficiency eta.
/// delta is the safety margin folded into the declared average energy
/// threshold (1 + delta) xi^2 / 2.
struct BpskDevice {
  double xi = 0.0;
  double eta = 1.0;
  double delta = 0.0;
};

/// Honest on-off-keying device: vacuum for x = 1, a coherent pulse of
/// amplitude xi for x = 2, measured by a click/no-click detector with
/// efficiency eta.
struct OokDevice {
  double xi = 0.0;
  double eta = 1.0;
};

/// Deterministic adaptive strategy: the rule maps the realized history
/// (outputs and inputs of earlier rounds, most recent last) to the next
/// round's behaviour and its true energies. Stochastic adversaries are
/// modelled by folding their randomness into the closure state.
struct AdaptiveDevice {
  std::function<std::pair<Behaviour, Eigen::Vector2d>(
      const std::vector<int>& past_a, const std::vector<int>& past_x)>
      rule;
};

using DeviceModel =
    std::variant<IidEnsembleDevice, BpskDevice, OokDevice, AdaptiveDevice>;

/// A sampled round behaviour fell outside the quantum set at the declared
/// peak energies: the device violates the protocol's trust assumptions,
/// which is a modelling error rather than a statistical abort.
struct DeviceViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Expected BPSK statistics: E = (erf(eta xi), -erf(eta xi)) with mean
/// photon number xi^2 / 2 in either preparation.
struct BpskBehaviour {
  Behaviour behaviour;
  double mean_photons = 0.0;
};
BpskBehaviour bpsk_behaviour(double xi, double eta);

/// Expected OOK statistics: E1 = -1 (vacuum never clicks), E2 = 1 - 2
/// exp(-eta xi^2 / 2), with peak energies (0, xi^2 / 2).
struct OokBehaviour {
  Behaviour behaviour;
  EnergyBounds energies;
};
OokBehaviour ook_behaviour(double xi, double eta);

enum class Decision { Pass, Abort };

/// Full record of one protocol execution. Reproducible byte for byte from
/// (device parameters, config, seed).
struct ProtocolTranscript {
  std::vector<std::uint8_t> x;  ///< inputs, values 1 or 2
  std::vector<std::int8_t> a;   ///< outcomes, values +1 or -1
  double xi_mean = 0.0;         ///< (1/n) sum_i xi(a_i, x_i)
  /// True per-round energies (omega_1, omega_2) of the behaviour the
  /// simulator played; simulation-side bookkeeping that a real experiment
  /// would not have.
  std::vector<Eigen::Vector2d> energy_ledger;
  Decision decision = Decision::Abort;
  /// Extracted key, present (nonempty) iff decision == Pass and the
  /// config's sigma is positive. Outcome a = +1 maps to raw bit 0, a = -1
  /// to raw bit 1.
  BitVec key;
  BitVec extractor_seed;
  std::uint64_t master_seed = 0;
};

/**
 * Runs the n-round protocol on a simulated device: draws inputs i.i.d.
 * from cfg.inputs, queries the device, accumulates the estimator mean,
 * then passes iff xi_mean + gamma . omega_avg >= r (declared averages from
 * cfg.energies.avg) and on pass hashes the raw outcome string down to
 * cfg.sigma bits with a fresh Toeplitz seed.
 *
 * Derived streams: input draws, device randomness and the extractor seed
 * come from decorrelated substreams of `seed`, so transcripts are
 * deterministic given (device, cfg, seed) and trials can run in parallel.
 *
 * Throws DeviceViolationError if a played round behaviour (or ensemble
 * branch) lies outside the quantum set at cfg.energies.pk, and
 * std::domain_error for an ensemble whose compliance claim fails or whose
 * weights do not form a distribution. cfg is validated on entry.
 */
ProtocolTranscript run_protocol(const DeviceModel& dev,
                                const ProtocolConfig& cfg,
                                std::uint64_t seed);

/// Violation statistics from repeated simulated experiments.
struct MonteCarloResult {
  long long trials = 0;
  long long violations = 0;
  double frequency = 0.0;
};

/**
 * Empirical test of the concentration guarantee: for `trials` independent
 * simulated experiments, compares the true per-round surprisal
 * -(1/n) log2 mu(a^n | x^n, lambda), computed from the device's actual
 * conditional probabilities (simulation-only introspection), against the
 * certified rate xi_mean + gamma . omega_avg - t. Returns the fraction of
 * trials where the certified rate exceeds the true surprisal, which the
 * guarantee caps at eps_t + eps_omega up to sampling noise.
 */
MonteCarloResult monte_carlo_theorem3(const DeviceModel& dev,
                                      const ProtocolConfig& cfg,
                                      long long trials,
                                      std::uint64_t seed = 0x7e03c4u);

}  // namespace eqr
