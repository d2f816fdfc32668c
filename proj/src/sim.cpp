#include "eqr/sim.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "eqr/extract.hpp"
#include "eqr/rng.hpp"

namespace eqr {

BpskBehaviour bpsk_behaviour(double xi, double eta) {
  if (xi < 0.0) throw std::domain_error("bpsk_behaviour: xi must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::domain_error("bpsk_behaviour: eta must be in [0, 1]");
  BpskBehaviour out;
  const double e = std::erf(eta * xi);
  out.behaviour = Behaviour(e, -e);
  out.mean_photons = xi * xi / 2.0;
  return out;
}

OokBehaviour ook_behaviour(double xi, double eta) {
  if (xi < 0.0) throw std::domain_error("ook_behaviour: xi must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::domain_error("ook_behaviour: eta must be in [0, 1]");
  const double wpk = xi * xi / 2.0;
  return OokBehaviour{
      Behaviour(-1.0, 1.0 - 2.0 * std::exp(-eta * wpk)),
      EnergyBounds::peak_only(Eigen::Vector2d(0.0, wpk))};
}

namespace {

// Claimed round energies must sit inside [0, pk] and the behaviour must be
// physical at those energies (which implies membership at the peak).
void check_round(const Behaviour& b, const Eigen::Vector2d& omega,
                 const Eigen::Vector2d& pk) {
  if (omega.minCoeff() < -1e-12)
    throw DeviceViolationError("device claims negative round energies");
  if ((omega - pk).maxCoeff() > 1e-9)
    throw DeviceViolationError(
        "device round energies exceed the declared peak bound");
  if (!in_quantum_set_closed_form(b, omega.cwiseMax(0.0)))
    throw DeviceViolationError(
        "device round behaviour is outside the quantum set at its claimed "
        "energies");
}

// Static round law shared by every device kind: a fixed behaviour for the
// whole run, or a per-round adaptive query.
struct RoundLaw {
  Behaviour behaviour;
  Eigen::Vector2d omega = Eigen::Vector2d::Zero();
  const AdaptiveDevice* adaptive = nullptr;
};

void validate_ensemble(const IidEnsembleDevice& dev,
                       const ProtocolConfig& cfg) {
  if (dev.components.empty())
    throw std::domain_error("iid ensemble has no components");
  double total = 0.0;
  Eigen::Vector2d mean_omega = Eigen::Vector2d::Zero();
  for (const auto& c : dev.components) {
    if (c.weight < -1e-12)
      throw std::domain_error("iid ensemble has a negative weight");
    total += c.weight;
    mean_omega += c.weight * c.omega;
    check_round(c.behaviour, c.omega, cfg.energies.pk);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::domain_error("iid ensemble weights must sum to one");
  if (dev.declared_avg_compliant &&
      (mean_omega - cfg.energies.avg).maxCoeff() > 1e-9)
    throw std::domain_error(
        "iid ensemble declared average-compliant but the mixture exceeds "
        "the declared average energies");
}

// Picks the fixed round law for the run; for ensembles the branch is drawn
// once per experiment from `rng` (the hidden variable is sampled at the
// start, then rounds are i.i.d.).
RoundLaw draw_law(const DeviceModel& dev, const ProtocolConfig& cfg,
                  Xoshiro256pp& rng) {
  RoundLaw law;
  if (const auto* ens = std::get_if<IidEnsembleDevice>(&dev)) {
    validate_ensemble(*ens, cfg);
    double u = rng.uniform01();
    const EnsembleComponent* pick = &ens->components.back();
    for (const auto& c : ens->components) {
      if (u < c.weight) {
        pick = &c;
        break;
      }
      u -= c.weight;
    }
    law.behaviour = pick->behaviour;
    law.omega = pick->omega;
  } else if (const auto* bpsk = std::get_if<BpskDevice>(&dev)) {
    const BpskBehaviour bb = bpsk_behaviour(bpsk->xi, bpsk->eta);
    law.behaviour = bb.behaviour;
    law.omega = Eigen::Vector2d::Constant(bb.mean_photons);
    check_round(law.behaviour, law.omega, cfg.energies.pk);
  } else if (const auto* ook = std::get_if<OokDevice>(&dev)) {
    const OokBehaviour ob = ook_behaviour(ook->xi, ook->eta);
    law.behaviour = ob.behaviour;
    law.omega = ob.energies.pk;
    check_round(law.behaviour, law.omega, cfg.energies.pk);
  } else {
    law.adaptive = &std::get<AdaptiveDevice>(dev);
    if (!law.adaptive->rule)
      throw std::domain_error("adaptive device has no rule");
  }
  return law;
}

}  // namespace

ProtocolTranscript run_protocol(const DeviceModel& dev,
                                const ProtocolConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  Xoshiro256pp input_rng(derive_seed(seed, 0));
  Xoshiro256pp device_rng(derive_seed(seed, 1));
  Xoshiro256pp seed_rng(derive_seed(seed, 2));

  const RoundLaw law = draw_law(dev, cfg, device_rng);
  const std::size_t n = static_cast<std::size_t>(cfg.n);

  ProtocolTranscript tr;
  tr.master_seed = seed;
  tr.x.resize(n);
  tr.a.resize(n);
  tr.energy_ledger.resize(n);
  std::vector<int> hist_a, hist_x;
  if (law.adaptive) {
    hist_a.reserve(n);
    hist_x.reserve(n);
  }

  double xi_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int x = input_rng.bernoulli(cfg.inputs.p1) ? 1 : 2;
    Behaviour b = law.behaviour;
    Eigen::Vector2d omega = law.omega;
    if (law.adaptive) {
      std::tie(b, omega) = law.adaptive->rule(hist_a, hist_x);
      check_round(b, omega, cfg.energies.pk);
    }
    const double ex = x == 1 ? b.e1 : b.e2;
    const int a = device_rng.bernoulli((1.0 + ex) / 2.0) ? 1 : -1;
    tr.x[i] = static_cast<std::uint8_t>(x);
    tr.a[i] = static_cast<std::int8_t>(a);
    tr.energy_ledger[i] = omega;
    xi_sum += estimator(cfg.tf, a, x);
    if (law.adaptive) {
      hist_a.push_back(a);
      hist_x.push_back(x);
    }
  }
  tr.xi_mean = xi_sum / static_cast<double>(cfg.n);

  const double score = tr.xi_mean + cfg.tf.gamma.dot(cfg.energies.avg);
  tr.decision = score >= cfg.threshold_r ? Decision::Pass : Decision::Abort;

  if (tr.decision == Decision::Pass && cfg.sigma > 0) {
    ExtractorParams p;
    p.n = cfg.n;
    p.sigma = cfg.sigma;
    p.l = cfg.n + cfg.sigma - 1;
    p.sigma_h = cfg.budget();
    p.eps_ext = cfg.eps_ext;

    BitVec raw(n);
    for (std::size_t i = 0; i < n; ++i) raw.set(i, tr.a[i] < 0);
    BitVec s(static_cast<std::size_t>(p.l));
    for (std::size_t i = 0; i < s.size(); ++i)
      s.set(i, (seed_rng.next() >> 40) & 1u);
    tr.extractor_seed = s;
    tr.key = toeplitz_extract(raw, s, p);
  }
  return tr;
}

MonteCarloResult monte_carlo_theorem3(const DeviceModel& dev,
                                      const ProtocolConfig& cfg,
                                      long long trials,
                                      std::uint64_t seed) {
  cfg.validate();
  if (trials < 1)
    throw std::domain_error("monte_carlo_theorem3: trials must be >= 1");
  const double t = cfg.error();
  const double gamma_term = cfg.tf.gamma.dot(cfg.energies.avg);
  const std::size_t n = static_cast<std::size_t>(cfg.n);

  MonteCarloResult res;
  res.trials = trials;
  std::vector<int> hist_a, hist_x;
  for (long long trial = 0; trial < trials; ++trial) {
    Xoshiro256pp rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
    const RoundLaw law = draw_law(dev, cfg, rng);
    hist_a.clear();
    hist_x.clear();
    double xi_sum = 0.0;
    double surprisal = 0.0;  // -log2 of the realized outcome probability
    for (std::size_t i = 0; i < n; ++i) {
      const int x = rng.bernoulli(cfg.inputs.p1) ? 1 : 2;
      Behaviour b = law.behaviour;
      if (law.adaptive) {
        Eigen::Vector2d omega;
        std::tie(b, omega) = law.adaptive->rule(hist_a, hist_x);
        check_round(b, omega, cfg.energies.pk);
      }
      const double ex = x == 1 ? b.e1 : b.e2;
      const int a = rng.bernoulli((1.0 + ex) / 2.0) ? 1 : -1;
      const double pa = (1.0 + a * ex) / 2.0;
      surprisal -= std::log2(pa);
      xi_sum += estimator(cfg.tf, a, x);
      if (law.adaptive) {
        hist_a.push_back(a);
        hist_x.push_back(x);
      }
    }
    const double rate =
        xi_sum / static_cast<double>(cfg.n) + gamma_term - t;
    if (rate > surprisal / static_cast<double>(cfg.n)) ++res.violations;
  }
  res.frequency =
      static_cast<double>(res.violations) / static_cast<double>(res.trials);
  return res;
}

}  // namespace eqr
