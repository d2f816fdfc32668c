#include "eqr/qset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqr {
namespace {

using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846264338327950288;

double clamp_correlation(double e, const char* what) {
  if (std::abs(e) > 1.0 + 1e-9)
    throw std::domain_error(std::string(what) + ": correlation outside [-1, 1]");
  return std::clamp(e, -1.0, 1.0);
}

double clamp_energy(double w, const char* what) {
  if (w < 0.0) throw std::domain_error(std::string(what) + ": negative energy bound");
  return std::min(w, 1.0);
}

Vector2d clamp_energy_pair(const Eigen::Vector2d& w, const char* what) {
  return Vector2d(clamp_energy(w(0), what), clamp_energy(w(1), what));
}

// Membership program variables: x = (u, v, eta1, eta2).
sdp::SdpProblem membership_problem(const Behaviour& b, const Vector2d& w) {
  sdp::SdpProblem p;
  p.objective = VectorXd::Zero(4);

  sdp::LmiBlock gram;
  gram.constant = Matrix4d::Identity();
  gram.constant(0, 2) = gram.constant(2, 0) = b.e1;
  gram.constant(1, 2) = gram.constant(2, 1) = b.e2;
  gram.constant(0, 3) = gram.constant(3, 0) = -1.0;
  gram.constant(1, 3) = gram.constant(3, 1) = -1.0;
  auto sym_unit = [](int i, int j) {
    Matrix4d m = Matrix4d::Zero();
    m(i, j) = m(j, i) = 1.0;
    return m;
  };
  gram.coeff = {sym_unit(0, 1), sym_unit(2, 3), 2.0 * sym_unit(0, 3),
                2.0 * sym_unit(1, 3)};
  p.blocks.push_back(std::move(gram));

  for (int x = 0; x < 2; ++x) {
    sdp::LinearConstraint row;
    row.a = VectorXd::Zero(4);
    row.a(2 + x) = 1.0;
    row.bound = w(x);
    row.sense = sdp::Sense::LessEqual;
    p.linear.push_back(std::move(row));
  }
  return p;
}

// Deterministic completion of an orthonormal basis for the span of the
// given vectors (modified Gram-Schmidt over the vectors, then canonical
// axes), returning exactly `dim` columns.
MatrixXd orthonormal_span(const std::vector<Eigen::Vector4d>& vecs, int dim) {
  MatrixXd basis(4, dim);
  int have = 0;
  auto try_add = [&](Eigen::Vector4d v) {
    for (int i = 0; i < have; ++i) v -= basis.col(i).dot(v) * basis.col(i);
    const double norm = v.norm();
    if (norm > 1e-10 && have < dim) basis.col(have++) = v / norm;
  };
  for (const auto& v : vecs) try_add(v);
  for (int a = 0; a < 4 && have < dim; ++a)
    try_add(Eigen::Vector4d::Unit(a));
  return basis;
}

}  // namespace

Behaviour::Behaviour(double e1_in, double e2_in)
    : e1(clamp_correlation(e1_in, "Behaviour")),
      e2(clamp_correlation(e2_in, "Behaviour")) {}

EnergyBounds::EnergyBounds(const Eigen::Vector2d& avg_in,
                           const Eigen::Vector2d& pk_in)
    : avg(clamp_energy_pair(avg_in, "EnergyBounds")),
      pk(clamp_energy_pair(pk_in, "EnergyBounds")) {
  avg = avg.cwiseMin(pk);
}

GramMatrix GramMatrix::from_parts(double u, double v, const Behaviour& b,
                                  double eta1, double eta2) {
  GramMatrix g;
  g.m.setIdentity();
  g.m(0, 1) = g.m(1, 0) = u;
  g.m(2, 3) = g.m(3, 2) = v;
  g.m(0, 2) = g.m(2, 0) = b.e1;
  g.m(1, 2) = g.m(2, 1) = b.e2;
  g.m(0, 3) = g.m(3, 0) = 2.0 * eta1 - 1.0;
  g.m(1, 3) = g.m(3, 1) = 2.0 * eta2 - 1.0;
  return g;
}

bool in_quantum_set_closed_form(const Behaviour& b, const Eigen::Vector2d& w_pk,
                                double tol) {
  const Vector2d w = clamp_energy_pair(w_pk, "in_quantum_set_closed_form");
  if (w(0) + w(1) >= 1.0) return true;

  const double arc_cap = 2.0 * (std::asin(std::sqrt(w(0))) + std::asin(std::sqrt(w(1))));
  const double margin_trig = arc_cap - std::abs(std::asin(b.e1) - std::asin(b.e2));
  const bool member_trig = margin_trig >= -tol;

  const double lhs = 0.5 * (std::sqrt((1.0 + b.e1) * (1.0 + b.e2)) +
                            std::sqrt((1.0 - b.e1) * (1.0 - b.e2)));
  const double rhs = std::sqrt((1.0 - w(0)) * (1.0 - w(1))) -
                     std::sqrt(w(0) * w(1));
  const double margin_alg = lhs - rhs;
  const bool member_alg = margin_alg >= -tol;

  if (member_trig != member_alg && std::abs(margin_trig) > 100.0 * tol &&
      std::abs(margin_alg) > 100.0 * tol)
    throw std::logic_error(
        "in_quantum_set_closed_form: equivalent forms disagree beyond tolerance");
  return member_trig;
}

bool in_quantum_set_sdp(const Behaviour& b, const Eigen::Vector2d& w_pk,
                        double margin, const sdp::SolveOptions& opts) {
  const Vector2d w = clamp_energy_pair(w_pk, "in_quantum_set_sdp");
  const auto report = sdp::max_slack(membership_problem(b, w), opts);
  if (!report.converged && std::abs(report.slack) <= 10.0 * margin)
    throw sdp::SolverError(sdp::SolveStatus::NumericalFailure,
                           "in_quantum_set_sdp: phase-I did not resolve the verdict");
  return report.slack >= -margin;
}

std::optional<GramMatrix> quantum_gram(const Behaviour& b,
                                       const Eigen::Vector2d& w_pk,
                                       double margin,
                                       const sdp::SolveOptions& opts) {
  const Vector2d w = clamp_energy_pair(w_pk, "quantum_gram");
  const auto report = sdp::max_slack(membership_problem(b, w), opts);
  if (!report.converged && std::abs(report.slack) <= 10.0 * margin)
    throw sdp::SolverError(sdp::SolveStatus::NumericalFailure,
                           "quantum_gram: phase-I did not resolve the verdict");
  if (report.slack < -margin) return std::nullopt;
  return GramMatrix::from_parts(report.x(0), report.x(1), b,
                                std::clamp(report.x(2), 0.0, w(0)),
                                std::clamp(report.x(3), 0.0, w(1)));
}

double support_function(const Eigen::Vector2d& c, const Eigen::Vector2d& w_pk) {
  const Vector2d w = clamp_energy_pair(w_pk, "support_function");
  const double cap =
      2.0 * (std::asin(std::sqrt(w(0))) + std::asin(std::sqrt(w(1))));
  if (cap >= kPi) return std::abs(c(0)) + std::abs(c(1));

  double best = -std::numeric_limits<double>::infinity();
  // Unconstrained optimum if the two arcs fit within the cap.
  {
    const double t1 = c(0) >= 0.0 ? kPi / 2 : -kPi / 2;
    const double t2 = c(1) >= 0.0 ? kPi / 2 : -kPi / 2;
    if (std::abs(t1 - t2) <= cap)
      best = std::max(best, std::abs(c(0)) + std::abs(c(1)));
  }
  // Otherwise the gap constraint is active on one side:
  // theta2 = clamp(theta1 -+ cap).  Each branch is a clamped sinusoid;
  // its maximum sits at an endpoint, a clamp boundary or the interior
  // critical point of A sin(t + phi).
  for (const double s : {1.0, -1.0}) {
    const double shift = s * cap;
    auto eval = [&](double t) {
      t = std::clamp(t, -kPi / 2, kPi / 2);
      const double t2 = std::clamp(t - shift, -kPi / 2, kPi / 2);
      return c(0) * std::sin(t) + c(1) * std::sin(t2);
    };
    const double phi = std::atan2(-c(1) * std::sin(shift),
                                  c(0) + c(1) * std::cos(shift));
    double tcrit = kPi / 2 - phi;
    tcrit = std::atan2(std::sin(tcrit), std::cos(tcrit));  // wrap to (-pi, pi]
    for (const double t : {-kPi / 2, kPi / 2, -kPi / 2 + shift,
                           kPi / 2 + shift, tcrit})
      best = std::max(best, eval(t));
  }
  return best;
}

bool is_classical(const Behaviour& b, const Eigen::Vector2d& w,
                  ClassicalityMode mode, double tol) {
  const Vector2d wc = clamp_energy_pair(w, "is_classical");
  if (mode == ClassicalityMode::MaxAverage)
    return std::abs(b.e1 - b.e2) <= 2.0 * (wc(0) + wc(1)) + tol;
  if (wc(0) + wc(1) >= 1.0) return true;
  return std::abs(b.e1 - b.e2) <= tol;
}

double max_violation(double w) {
  const double wc = clamp_energy(w, "max_violation");
  return 2.0 * std::sqrt(wc * (1.0 - wc));
}

QuantumRepresentation representation_from_gram(const GramMatrix& gram,
                                               double tol) {
  Matrix4d g = 0.5 * (gram.m + gram.m.transpose());
  for (int i = 0; i < 4; ++i)
    if (std::abs(g(i, i) - 1.0) > 1e-8)
      throw std::invalid_argument("representation_from_gram: diagonal must be 1");
  Eigen::SelfAdjointEigenSolver<Matrix4d> es(g);
  Eigen::Vector4d lam = es.eigenvalues();
  if (lam(0) < -tol)
    throw std::domain_error("representation_from_gram: Gram matrix not PSD");
  lam = lam.cwiseMax(0.0);

  // Rows of Q sqrt(Lambda) realize the Gram matrix as inner products.
  const Eigen::Matrix4d pts =
      es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  const Eigen::Vector4d g1 = pts.row(0).transpose(),
                        g2 = pts.row(1).transpose(),
                        g3 = pts.row(2).transpose(),
                        g4 = pts.row(3).transpose();

  const MatrixXd basis = orthonormal_span({g1, g2, g4}, 3);
  QuantumRepresentation rep;
  rep.n1 = basis.transpose() * g1;
  rep.n2 = basis.transpose() * g2;
  rep.m = basis.transpose() * g3;  // projection onto span{n1, n2, k}
  rep.k = basis.transpose() * g4;
  // Projection cannot shrink unit vectors that lie inside the span, but
  // guard against rounding before normalizing.
  for (auto* v : {&rep.n1, &rep.n2, &rep.k}) {
    const double norm = v->norm();
    if (std::abs(norm - 1.0) > 1e-7)
      throw std::logic_error("representation_from_gram: span vector not unit");
    *v /= norm;
  }

  const auto [b, eta] = behaviour_from_representation(rep);
  if (std::abs(b.e1 - g(0, 2)) > 1e-8 || std::abs(b.e2 - g(1, 2)) > 1e-8 ||
      std::abs(2.0 * eta(0) - 1.0 - g(0, 3)) > 1e-8 ||
      std::abs(2.0 * eta(1) - 1.0 - g(1, 3)) > 1e-8)
    throw std::logic_error(
        "representation_from_gram: reconstruction does not reproduce the Gram data");
  return rep;
}

std::pair<Behaviour, Eigen::Vector2d> behaviour_from_representation(
    const QuantumRepresentation& rep) {
  for (const auto* v : {&rep.n1, &rep.n2, &rep.k})
    if (std::abs(v->norm() - 1.0) > 1e-8)
      throw std::domain_error(
          "behaviour_from_representation: n1, n2, k must be unit vectors");
  if (rep.m.norm() > 1.0 + 1e-8)
    throw std::domain_error("behaviour_from_representation: |m| must be <= 1");
  const Behaviour b(std::clamp(rep.n1.dot(rep.m), -1.0, 1.0),
                    std::clamp(rep.n2.dot(rep.m), -1.0, 1.0));
  const Vector2d eta(0.5 * (1.0 + rep.n1.dot(rep.k)),
                     0.5 * (1.0 + rep.n2.dot(rep.k)));
  return {b, eta};
}

}  // namespace eqr
