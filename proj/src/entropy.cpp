#include "eqr/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eqr/linprog.hpp"
#include "eqr/rng.hpp"
#include "ipm.hpp"

namespace eqr {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

// Symmetric coefficient with a/4 on the diagonal and b_x/2 against the
// measurement column; its trace against a membership Gram matrix equals
// a + b . E.
Matrix4d mat_a(double a, const Vector2d& b) {
  Matrix4d m = Matrix4d::Zero();
  m.diagonal().setConstant(a / 4.0);
  m(0, 2) = m(2, 0) = b(0) / 2.0;
  m(1, 2) = m(2, 1) = b(1) / 2.0;
  return m;
}

// Symmetric coefficient with (g1+g2)/8 on the diagonal and g_x/4 against the
// energy column; its trace against a membership Gram matrix equals g . eta.
Matrix4d mat_c(const Vector2d& g) {
  Matrix4d m = Matrix4d::Zero();
  m.diagonal().setConstant((g(0) + g(1)) / 8.0);
  m(0, 3) = m(3, 0) = g(0) / 4.0;
  m(1, 3) = m(3, 1) = g(1) / 4.0;
  return m;
}

// Linear pieces r + rv . E whose pointwise minimum the certificate must
// minorize over the peak-constrained quantum set.
struct PieceSet {
  std::vector<double> r;
  std::vector<Vector2d> rv;
};

struct DualSpec {
  PieceSet pieces;
  // Target: either a full correlation pair or one linear functional of it.
  bool functional_target = false;
  Vector2d target_coeffs = Vector2d::Zero();
  double target_value = 0.0;
  Vector2d target_e = Vector2d::Zero();
  // Average-energy term: componentwise bounds, or one scalar functional.
  bool functional_energy = false;
  Vector2d energy_coeffs = Vector2d::Zero();
  double energy_value = 0.0;
  Vector2d w_avg = Vector2d::Zero();
  Vector2d w_pk = Vector2d::Zero();
};

struct DualOutcome {
  DualCertificate cert;
  double gap = 0.0;  // residual duality gap, bounds the value suboptimality
  int iterations = 0;
};

detail::ConeBlock scalar_block(int var, double coef, int group) {
  detail::ConeBlock b;
  b.constant = MatrixXd::Zero(1, 1);
  b.vars = {var};
  b.coeff = {MatrixXd::Constant(1, 1, coef)};
  b.group = group;
  return b;
}

// Maximizes alpha + beta . E* + (gamma energy term) over affine functionals
// that minorize min_j (r_j + rv_j . E) on the quantum set with peak energies
// w_pk.  Each piece contributes one 4x4 linear matrix inequality in
// (alpha, beta, gamma) plus its private multipliers (gamma', delta), the
// exact finite reformulation of the semi-infinite constraint.  After the
// interior-point solve the multipliers are rounded onto the feasible set so
// the returned certificate is valid up to floating-point eigenvalue error,
// not just up to the duality gap.
DualOutcome solve_affine_dual(const DualSpec& spec,
                              const sdp::SolveOptions& opts) {
  const int np = static_cast<int>(spec.pieces.r.size());
  const int nb = spec.functional_target ? 1 : 2;
  const int ng = spec.functional_energy ? 1 : 2;
  const int ns = 1 + nb + ng;  // alpha, beta block, gamma block
  const int ib = 1;            // first beta variable
  const int ig = 1 + nb;       // first gamma variable

  detail::ConeProblem cp;
  cp.c = VectorXd::Zero(ns + 6 * np);
  cp.c(0) = -1.0;  // run_ipm minimizes; we maximize the affine value
  if (spec.functional_target) {
    cp.c(ib) = -spec.target_value;
  } else {
    cp.c(ib) = -spec.target_e(0);
    cp.c(ib + 1) = -spec.target_e(1);
  }
  if (spec.functional_energy) {
    cp.c(ig) = -spec.energy_value;
  } else {
    cp.c(ig) = -spec.w_avg(0);
    cp.c(ig + 1) = -spec.w_avg(1);
  }
  cp.num_shared = ns;
  cp.group_begin.resize(np + 1);
  for (int j = 0; j <= np; ++j) cp.group_begin[j] = ns + 6 * j;
  cp.blocks.reserve(4 * np + ng);

  const Vector2d e1 = Vector2d::UnitX();
  const Vector2d e2 = Vector2d::UnitY();
  for (int j = 0; j < np; ++j) {
    const int base = ns + 6 * j;
    detail::ConeBlock lmi;
    lmi.group = j;
    // PSD block: -(A(alpha - r, beta - rv) + C(gamma + gamma') + diag(delta)).
    lmi.constant = mat_a(spec.pieces.r[j], spec.pieces.rv[j]);
    lmi.vars.push_back(0);
    lmi.coeff.push_back(-mat_a(1.0, Vector2d::Zero()));
    if (spec.functional_target) {
      lmi.vars.push_back(ib);
      lmi.coeff.push_back(-mat_a(0.0, spec.target_coeffs));
    } else {
      lmi.vars.push_back(ib);
      lmi.coeff.push_back(-mat_a(0.0, e1));
      lmi.vars.push_back(ib + 1);
      lmi.coeff.push_back(-mat_a(0.0, e2));
    }
    if (spec.functional_energy) {
      lmi.vars.push_back(ig);
      lmi.coeff.push_back(-mat_c(spec.energy_coeffs));
    } else {
      lmi.vars.push_back(ig);
      lmi.coeff.push_back(-mat_c(e1));
      lmi.vars.push_back(ig + 1);
      lmi.coeff.push_back(-mat_c(e2));
    }
    for (int t = 0; t < 2; ++t) {
      lmi.vars.push_back(base + t);
      lmi.coeff.push_back(-mat_c(t == 0 ? e1 : e2));
    }
    for (int i = 0; i < 4; ++i) {
      Matrix4d d = Matrix4d::Zero();
      d(i, i) = -1.0;
      lmi.vars.push_back(base + 2 + i);
      lmi.coeff.push_back(d);
    }
    cp.blocks.push_back(std::move(lmi));

    // sum(delta) + gamma' . w_pk >= 0
    detail::ConeBlock sum;
    sum.group = j;
    sum.constant = MatrixXd::Zero(1, 1);
    for (int t = 0; t < 2; ++t) {
      if (spec.w_pk(t) > 0.0) {
        sum.vars.push_back(base + t);
        sum.coeff.push_back(MatrixXd::Constant(1, 1, spec.w_pk(t)));
      }
    }
    for (int i = 0; i < 4; ++i) {
      sum.vars.push_back(base + 2 + i);
      sum.coeff.push_back(MatrixXd::Constant(1, 1, 1.0));
    }
    cp.blocks.push_back(std::move(sum));

    cp.blocks.push_back(scalar_block(base + 0, -1.0, j));  // gamma'_1 <= 0
    cp.blocks.push_back(scalar_block(base + 1, -1.0, j));  // gamma'_2 <= 0
  }
  for (int t = 0; t < ng; ++t)
    cp.blocks.push_back(scalar_block(ig + t, -1.0, -1));  // gamma <= 0

  detail::IpmOptions io;
  io.gap_tol = opts.gap_tol;
  io.feas_tol = opts.feas_tol;
  io.max_iterations = opts.max_iterations;
  io.divergence_bound = 1e6;
  detail::IpmResult res = detail::run_ipm(cp, io);

  if (res.status == detail::IpmStatus::PrimalDiverging)
    throw InfeasibleTargetError(
        "target cannot be reproduced by any decomposition meeting the "
        "average-energy constraint");
  // Targets on the boundary of the quantum set make the decomposition side
  // lose strict feasibility, and the interior-point iteration then stops a
  // little short of the requested tolerances with a residual duality gap.
  // Such an iterate is still usable: the rounding pass below turns it into
  // an exactly valid (if slightly suboptimal) certificate, and the residual
  // gap is reported so callers can judge the looseness.
  const bool usable_stall =
      (res.status == detail::IpmStatus::Stalled ||
       res.status == detail::IpmStatus::MaxIterations) &&
      res.primal_res <= 1e-5 && res.dual_res <= 1e-3;
  if (res.status != detail::IpmStatus::Converged && !usable_stall)
    throw sdp::SolverError(
        sdp::SolveStatus::NumericalFailure,
        "entropy dual solve did not converge (status " +
            std::to_string(static_cast<int>(res.status)) + ", " +
            std::to_string(res.iterations) + " iterations, rel gap " +
            std::to_string(res.rel_gap) + ", residuals " +
            std::to_string(res.primal_res) + "/" +
            std::to_string(res.dual_res) + ")");

  // Unpack the shared variables.
  double alpha = res.x(0);
  Vector2d beta;
  if (spec.functional_target)
    beta = res.x(ib) * spec.target_coeffs;
  else
    beta = Vector2d(res.x(ib), res.x(ib + 1));
  double gscal = 0.0;
  Vector2d gamma;
  if (spec.functional_energy) {
    gscal = std::min(res.x(ig), 0.0);
    gamma = gscal * spec.energy_coeffs;
  } else {
    gamma = Vector2d(std::min(res.x(ig), 0.0), std::min(res.x(ig + 1), 0.0));
  }

  // Round the certificate onto the exactly feasible set.  First make every
  // piece matrix PSD-negative by shifting its delta down by the worst
  // eigenvalue (plus a guard for eigensolver error); this can drive the
  // multiplier sums negative, which a uniform shift of alpha (compensated
  // inside each piece by delta) then repairs without touching the matrices.
  double worst = 0.0;
  for (int j = 0; j < np; ++j) {
    const int base = ns + 6 * j;
    const Vector2d gp(std::min(res.x(base + 0), 0.0),
                      std::min(res.x(base + 1), 0.0));
    Vector4d delta;
    for (int i = 0; i < 4; ++i) delta(i) = res.x(base + 2 + i);
    Matrix4d m = mat_a(alpha - spec.pieces.r[j], beta - spec.pieces.rv[j]) +
                 mat_c(gamma + gp);
    m += delta.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix4d> es(m, Eigen::EigenvaluesOnly);
    const double guard = 1e-13 * std::max(1.0, m.cwiseAbs().maxCoeff());
    const double shift = std::max(es.eigenvalues().maxCoeff(), 0.0) + guard;
    const double sum = delta.sum() - 4.0 * shift + gp.dot(spec.w_pk);
    worst = std::max(worst, -sum);
  }
  alpha -= worst;

  DualOutcome out;
  out.cert.alpha = alpha;
  out.cert.beta = beta;
  out.cert.gamma = gamma;
  const double target_term = spec.functional_target
                                 ? res.x(ib) * spec.target_value
                                 : beta.dot(spec.target_e);
  const double energy_term = spec.functional_energy
                                 ? gscal * spec.energy_value
                                 : gamma.dot(spec.w_avg);
  out.cert.value = alpha + target_term + energy_term;
  // Weak duality in the minimization form: the true optimum lies between
  // the primal and dual objectives, so their spread bounds how much better
  // the optimal certificate could be.
  out.gap = std::max(0.0, res.pobj - res.dobj);
  out.iterations = res.iterations;
  return out;
}

// Shared validation: fills the target/energy part of a DualSpec and throws
// if the target is detectably outside the constrained quantum set.
DualSpec make_spec(const EntropyProblem& prob) {
  DualSpec spec;
  spec.w_pk = prob.energies.pk;
  spec.w_avg = prob.energies.avg;
  if (const auto* b = std::get_if<Behaviour>(&prob.target)) {
    if (!in_quantum_set_closed_form(*b, prob.energies.pk))
      throw InfeasibleTargetError(
          "target behaviour lies outside the quantum set at peak energies");
    // Both correlations at +-1 pin every decomposition component to the
    // target itself, so the componentwise average-energy constraint
    // collapses to a membership test at the average bounds. Interior-point
    // divergence detection is unreliable exactly at these corners, so
    // settle them here.
    if (!prob.energy_functional &&
        std::abs(std::abs(b->e1) - 1.0) < 1e-12 &&
        std::abs(std::abs(b->e2) - 1.0) < 1e-12 &&
        !in_quantum_set_closed_form(*b, prob.energies.avg))
      throw InfeasibleTargetError(
          "extremal target behaviour cannot meet the average-energy bound");
    spec.target_e = Vector2d(b->e1, b->e2);
  } else {
    const auto& lt = std::get<LinearTarget>(prob.target);
    if (lt.coeffs.cwiseAbs().maxCoeff() <= 1e-12)
      throw std::invalid_argument("functional target has zero coefficients");
    const double hi = support_function(lt.coeffs, prob.energies.pk);
    const double lo = -support_function(-lt.coeffs, prob.energies.pk);
    if (lt.value > hi + 1e-9 || lt.value < lo - 1e-9)
      throw InfeasibleTargetError(
          "functional target value exceeds its range over the quantum set");
    spec.functional_target = true;
    spec.target_coeffs = lt.coeffs;
    spec.target_value = lt.value;
  }
  if (prob.energy_functional) {
    const auto& ef = *prob.energy_functional;
    if (ef.coeffs.minCoeff() < -1e-12 ||
        ef.coeffs.cwiseAbs().maxCoeff() <= 1e-12)
      throw std::invalid_argument(
          "energy functional needs nonnegative, nonzero coefficients");
    if (ef.value < 0.0)
      throw std::invalid_argument("energy functional bound must be >= 0");
    spec.functional_energy = true;
    spec.energy_coeffs = ef.coeffs.cwiseMax(0.0);
    spec.energy_value = ef.value;
  }
  return spec;
}

}  // namespace

InputDistribution::InputDistribution(double p1_in, double p2_in)
    : p1(p1_in), p2(p2_in) {
  if (!(p1 > 0.0) || !(p2 > 0.0))
    throw std::domain_error("input probabilities must be strictly positive");
  const double s = p1 + p2;
  if (std::abs(s - 1.0) > 1e-9)
    throw std::domain_error("input probabilities must sum to one");
  p1 /= s;
  p2 = 1.0 - p1;
}

double binary_entropy(double e) {
  if (std::abs(e) > 1.0 + 1e-12)
    throw std::domain_error("binary_entropy: correlation outside [-1, 1]");
  e = std::clamp(e, -1.0, 1.0);
  const double p = 0.5 * (1.0 + e);
  const double q = 0.5 * (1.0 - e);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (q > 0.0) h -= q * std::log2(q);
  return h;
}

double ChordFamily::evaluate(double e) const {
  return (c.array() * e + d.array()).minCoeff();
}

ChordFamily chords(int k) {
  if (k < 1) throw std::invalid_argument("chords: need at least one segment");
  ChordFamily f;
  f.c.resize(k);
  f.d.resize(k);
  double prev_e = -1.0;
  double prev_h = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double e = -1.0 + 2.0 * i / k;
    const double h = binary_entropy(e);
    f.c(i - 1) = (h - prev_h) / (e - prev_e);
    f.d(i - 1) = prev_h - f.c(i - 1) * prev_e;
    prev_e = e;
    prev_h = h;
  }
  return f;
}

EntropyBound entropy_lower_bound(const EntropyProblem& prob,
                                 const sdp::SolveOptions& opts) {
  if (prob.k < 1 || prob.k > 128)
    throw std::invalid_argument("entropy_lower_bound: k must be in [1, 128]");
  DualSpec spec = make_spec(prob);
  const ChordFamily env = chords(prob.k);
  spec.pieces.r.reserve(static_cast<size_t>(prob.k) * prob.k);
  spec.pieces.rv.reserve(static_cast<size_t>(prob.k) * prob.k);
  for (int i1 = 0; i1 < prob.k; ++i1) {
    for (int i2 = 0; i2 < prob.k; ++i2) {
      spec.pieces.r.push_back(prob.inputs.p1 * env.d(i1) +
                              prob.inputs.p2 * env.d(i2));
      spec.pieces.rv.push_back(Vector2d(prob.inputs.p1 * env.c(i1),
                                        prob.inputs.p2 * env.c(i2)));
    }
  }
  DualOutcome out = solve_affine_dual(spec, opts);
  EntropyBound bound;
  bound.iterations = out.iterations;
  bound.optimality_gap = out.gap;
  if (out.cert.value <= 0.0) {
    // The optimum is not positive: the zero certificate carries the same
    // (trivial) information and is exactly feasible.
    bound.value = 0.0;
    bound.certificate = DualCertificate{};
  } else {
    bound.value = out.cert.value;
    bound.certificate = out.cert;
  }
  return bound;
}

EntropyBound min_entropy_bound(const EntropyProblem& prob,
                               const sdp::SolveOptions& opts) {
  DualSpec spec = make_spec(prob);
  // Negated guessing probability: -G(E) = min over sign pairs (a1, a2) of
  // -1/2 - (p1 a1 E1 + p2 a2 E2) / 2, exactly four linear pieces.
  for (const double a1 : {1.0, -1.0}) {
    for (const double a2 : {1.0, -1.0}) {
      spec.pieces.r.push_back(-0.5);
      spec.pieces.rv.push_back(
          Vector2d(-0.5 * prob.inputs.p1 * a1, -0.5 * prob.inputs.p2 * a2));
    }
  }
  DualOutcome out = solve_affine_dual(spec, opts);
  const double guess = std::clamp(-out.cert.value, 0.5, 1.0);
  EntropyBound bound;
  bound.value = -std::log2(guess);
  bound.certificate = out.cert;
  bound.optimality_gap = out.gap;
  bound.iterations = out.iterations;
  return bound;
}

bool verify_certificate(const DualCertificate& cert, const ChordFamily& env,
                        const EnergyBounds& energies,
                        const InputDistribution& inputs, int samples,
                        std::uint64_t seed) {
  if (cert.gamma.maxCoeff() > 1e-12) return false;
  Xoshiro256pp rng(seed);
  const auto sphere = [&rng]() {
    while (true) {
      const Vector3d v(rng.normal(), rng.normal(), rng.normal());
      const double n = v.norm();
      if (n > 1e-6) return Vector3d(v / n);
    }
  };
  const Vector2d w_pk = energies.pk;
  for (int s = 0; s < samples; ++s) {
    const Vector3d kv = sphere();
    const Vector3d m = sphere();
    double lhs = cert.alpha;
    double rhs = 0.0;
    for (int x = 0; x < 2; ++x) {
      const double eta = rng.uniform(0.0, w_pk(x));
      const double t = 2.0 * eta - 1.0;
      Vector3d u;
      do {
        u = sphere();
        u -= u.dot(kv) * kv;
      } while (u.norm() < 1e-9);
      u.normalize();
      const Vector3d n = t * kv + std::sqrt(std::max(0.0, 1.0 - t * t)) * u;
      const double e = std::clamp(n.dot(m), -1.0, 1.0);
      lhs += cert.beta(x) * e + cert.gamma(x) * eta;
      rhs += (x == 0 ? inputs.p1 : inputs.p2) * env.evaluate(e);
    }
    if (lhs > rhs + 1e-9) return false;
  }
  return true;
}

Decomposition decompose_upper_bound(const Behaviour& b,
                                    const EnergyBounds& energies,
                                    const InputDistribution& inputs,
                                    int grid) {
  if (grid < 8)
    throw std::invalid_argument("decompose_upper_bound: grid too small");
  if (!in_quantum_set_closed_form(b, energies.pk))
    throw InfeasibleTargetError(
        "target behaviour lies outside the quantum set at peak energies");

  const Vector2d w_pk = energies.pk;
  const double a1 = std::asin(std::sqrt(std::clamp(w_pk(0), 0.0, 1.0)));
  const double a2 = std::asin(std::sqrt(std::clamp(w_pk(1), 0.0, 1.0)));
  const double cap = 2.0 * (a1 + a2);

  struct Cand {
    double e1, e2, w1, w2, h;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<size_t>(grid) + 256);

  // Accepts an angle pair with claimed energies when the angular gap is
  // within what those energies allow; anything else is silently dropped
  // (callers over-generate).
  const auto push = [&](double th1, double th2, double w1, double w2) {
    th1 = std::clamp(th1, -kHalfPi, kHalfPi);
    th2 = std::clamp(th2, -kHalfPi, kHalfPi);
    w1 = std::clamp(w1, 0.0, w_pk(0));
    w2 = std::clamp(w2, 0.0, w_pk(1));
    const double allowed =
        2.0 * (std::asin(std::sqrt(w1)) + std::asin(std::sqrt(w2)));
    if (std::abs(th1 - th2) > allowed + 1e-9) return;
    Cand c;
    c.e1 = std::sin(th1);
    c.e2 = std::sin(th2);
    c.w1 = w1;
    c.w2 = w2;
    c.h = inputs.p1 * binary_entropy(c.e1) + inputs.p2 * binary_entropy(c.e2);
    cands.push_back(c);
  };

  // Peak-energy boundary arcs: widest reachable gap on both sides.
  const int n_arc = std::max(grid / 4, 16);
  for (int i = 0; i < n_arc; ++i) {
    const double th = -kHalfPi + kPi * i / (n_arc - 1);
    push(th, th + cap, w_pk(0), w_pk(1));
    push(th, th - cap, w_pk(0), w_pk(1));
  }

  // Deterministic same-sign corners cost no energy.
  push(kHalfPi, kHalfPi, 0.0, 0.0);
  push(-kHalfPi, -kHalfPi, 0.0, 0.0);

  // Opposite corners need the full quarter-turn per preparation.
  if (w_pk(0) + w_pk(1) >= 1.0 - 1e-12) {
    const double tlo = std::max(0.0, kHalfPi - a2);
    const double thi = std::min(a1, kHalfPi);
    for (int i = 0; i <= 16; ++i) {
      const double t = tlo + (thi - tlo) * i / 16.0;
      const double s1 = std::sin(t);
      const double c1 = std::cos(t);
      push(kHalfPi, -kHalfPi, s1 * s1, c1 * c1);
      push(-kHalfPi, kHalfPi, s1 * s1, c1 * c1);
    }
  }

  // Sub-peak boundary curves: cheaper energies with a narrower gap, several
  // ways of splitting the gap between the two preparations.
  const int n_sub = std::max(grid / 80, 9);
  for (int m = 1; m < 5; ++m) {
    const double g = std::min(cap, kPi) * m / 5.0;
    for (int s = 0; s <= 4; ++s) {
      const double lo = std::max(0.0, g / 2.0 - a2);
      const double hi = std::min(a1, g / 2.0);
      if (lo > hi + 1e-12) continue;
      const double s1 = lo + (hi - lo) * s / 4.0;
      const double s2 = g / 2.0 - s1;
      const double w1 = std::sin(s1) * std::sin(s1);
      const double w2 = std::sin(s2) * std::sin(s2);
      for (int i = 0; i < n_sub; ++i) {
        const double th = -kHalfPi + kPi * i / (n_sub - 1);
        push(th, th + g, w1, w2);
        push(th, th - g, w1, w2);
      }
    }
  }

  // Equal correlations cost no energy.
  const int n_eq = std::max(grid / 10, 16);
  for (int i = 0; i < n_eq; ++i) {
    const double th = -kHalfPi + kPi * i / (n_eq - 1);
    push(th, th, 0.0, 0.0);
  }

  // Target-adapted points: the target itself at its cheapest energy splits
  // (which guarantees LP feasibility whenever the average bound equals the
  // peak bound), plus arcs through each target coordinate.
  const double th1t = std::asin(std::clamp(b.e1, -1.0, 1.0));
  const double th2t = std::asin(std::clamp(b.e2, -1.0, 1.0));
  {
    const double g = std::abs(th1t - th2t);
    const double lo = std::max(0.0, g / 2.0 - a2);
    const double hi = std::min(a1, g / 2.0);
    for (int s = 0; s <= 8; ++s) {
      const double s1 = lo + (hi - lo) * s / 8.0;
      const double s2 = g / 2.0 - s1;
      push(th1t, th2t, std::sin(s1) * std::sin(s1),
           std::sin(s2) * std::sin(s2));
    }
    push(th1t, th2t, w_pk(0), w_pk(1));
  }
  for (int i = 0; i <= 32; ++i) {
    const double th = -kHalfPi + kPi * i / 32.0;
    push(th1t, th, w_pk(0), w_pk(1));
    push(th, th2t, w_pk(0), w_pk(1));
  }

  const int n = static_cast<int>(cands.size());
  VectorXd cost(n);
  MatrixXd aeq(3, n);
  MatrixXd aub(2, n);
  for (int j = 0; j < n; ++j) {
    cost(j) = cands[j].h;
    aeq(0, j) = cands[j].e1;
    aeq(1, j) = cands[j].e2;
    aeq(2, j) = 1.0;
    aub(0, j) = cands[j].w1;
    aub(1, j) = cands[j].w2;
  }
  Eigen::Vector3d beq(b.e1, b.e2, 1.0);
  const linprog::LpSolution sol =
      linprog::solve(cost, aeq, beq, aub, energies.avg);
  if (sol.status == linprog::LpStatus::Infeasible)
    throw DecompositionError(
        "decomposition grid too coarse to reproduce the target");
  if (sol.status != linprog::LpStatus::Optimal)
    throw std::runtime_error("decomposition LP did not reach an optimum");

  Decomposition out;
  out.value = std::max(0.0, sol.objective);
  for (const int j : sol.basis) {
    if (j < n && sol.x(j) > 1e-10) {
      SupportPoint p;
      p.weight = sol.x(j);
      p.behaviour = Behaviour(cands[j].e1, cands[j].e2);
      p.omega = Vector2d(cands[j].w1, cands[j].w2);
      out.support.push_back(p);
    }
  }
  return out;
}

double ook_entropy_analytic(const InputDistribution& inputs, double e2,
                            double wpk2) {
  if (!(wpk2 > 0.0) || wpk2 > 1.0 + 1e-12)
    throw std::domain_error("ook_entropy_analytic: wpk2 must be in (0, 1]");
  wpk2 = std::min(wpk2, 1.0);
  if (e2 < -1.0 - 1e-9 || e2 > -1.0 + 2.0 * wpk2 + 1e-9)
    throw std::domain_error(
        "ook_entropy_analytic: e2 must be in [-1, -1 + 2 wpk2]");
  e2 = std::clamp(e2, -1.0, -1.0 + 2.0 * wpk2);
  return inputs.p1 * (1.0 + e2) / (2.0 * wpk2) *
         binary_entropy(2.0 * wpk2 - 1.0);
}

}  // namespace eqr
