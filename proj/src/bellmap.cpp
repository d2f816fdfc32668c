#include "eqr/bellmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eqr {
namespace {

using Eigen::Matrix4d;
using Eigen::Vector2d;
using Eigen::VectorXd;

double clamp_correlator(double c, const char* what) {
  if (std::abs(c) > 1.0 + 1e-9)
    throw std::domain_error(std::string(what) +
                            ": correlator outside [-1, 1]");
  return std::clamp(c, -1.0, 1.0);
}

// Feasibility program over x = (u, v).
sdp::SdpProblem bell_membership_problem(const BellBehaviour& bb) {
  sdp::SdpProblem p;
  p.objective = VectorXd::Zero(2);

  sdp::LmiBlock gram;
  gram.constant = Matrix4d::Identity();
  gram.constant(0, 2) = gram.constant(2, 0) = bb.ab11;
  gram.constant(0, 3) = gram.constant(3, 0) = bb.ab12;
  gram.constant(1, 2) = gram.constant(2, 1) = bb.ab21;
  gram.constant(1, 3) = gram.constant(3, 1) = bb.ab22;
  auto sym_unit = [](int i, int j) {
    Matrix4d m = Matrix4d::Zero();
    m(i, j) = m(j, i) = 1.0;
    return m;
  };
  gram.coeff = {sym_unit(0, 1), sym_unit(2, 3)};
  p.blocks.push_back(std::move(gram));
  return p;
}

// Cap-semantics program over x = (u, v, h1, h2) with h_x <= <A_xB2>.
sdp::SdpProblem capped_membership_problem(const BellBehaviour& bb) {
  sdp::SdpProblem p;
  p.objective = Eigen::VectorXd::Zero(4);

  sdp::LmiBlock gram;
  gram.constant = Matrix4d::Identity();
  gram.constant(0, 2) = gram.constant(2, 0) = bb.ab11;
  gram.constant(1, 2) = gram.constant(2, 1) = bb.ab21;
  auto sym_unit = [](int i, int j) {
    Matrix4d m = Matrix4d::Zero();
    m(i, j) = m(j, i) = 1.0;
    return m;
  };
  gram.coeff = {sym_unit(0, 1), sym_unit(2, 3), sym_unit(0, 3),
                sym_unit(1, 3)};
  p.blocks.push_back(std::move(gram));

  const double caps[2] = {bb.ab12, bb.ab22};
  for (int x = 0; x < 2; ++x) {
    sdp::LinearConstraint row;
    row.a = Eigen::VectorXd::Zero(4);
    row.a(2 + x) = 1.0;
    row.bound = caps[x];
    row.sense = sdp::Sense::LessEqual;
    p.linear.push_back(std::move(row));
  }
  return p;
}

}  // namespace

BellBehaviour::BellBehaviour(double ab11_in, double ab12_in, double ab21_in,
                             double ab22_in)
    : ab11(clamp_correlator(ab11_in, "BellBehaviour")),
      ab12(clamp_correlator(ab12_in, "BellBehaviour")),
      ab21(clamp_correlator(ab21_in, "BellBehaviour")),
      ab22(clamp_correlator(ab22_in, "BellBehaviour")) {}

BellBehaviour pm_to_bell(const Behaviour& b, const Eigen::Vector2d& w) {
  const Vector2d wc(std::clamp(w(0), 0.0, 1.0), std::clamp(w(1), 0.0, 1.0));
  if ((w - wc).cwiseAbs().maxCoeff() > 1e-9)
    throw std::domain_error("pm_to_bell: energies outside [0, 1]");
  return BellBehaviour(b.e1, 2.0 * wc(0) - 1.0, b.e2, 2.0 * wc(1) - 1.0);
}

bool bell_quantum_membership(const BellBehaviour& bb, double margin,
                             const sdp::SolveOptions& opts) {
  const auto report = sdp::max_slack(bell_membership_problem(bb), opts);
  if (!report.converged && std::abs(report.slack) <= 10.0 * margin)
    throw sdp::SolverError(
        sdp::SolveStatus::NumericalFailure,
        "bell_quantum_membership: phase-I did not resolve the verdict");
  return report.slack >= -margin;
}

bool bell_image_quantum_membership(const BellBehaviour& bb, double margin,
                                   const sdp::SolveOptions& opts) {
  const auto report = sdp::max_slack(capped_membership_problem(bb), opts);
  if (!report.converged && std::abs(report.slack) <= 10.0 * margin)
    throw sdp::SolverError(
        sdp::SolveStatus::NumericalFailure,
        "bell_image_quantum_membership: phase-I did not resolve the verdict");
  return report.slack >= -margin;
}

std::pair<double, double> chsh_values(const BellBehaviour& bb) {
  const double shared = -bb.ab12 - bb.ab22;
  const double swing = bb.ab11 - bb.ab21;
  return {swing + shared, -swing + shared};
}

}  // namespace eqr
