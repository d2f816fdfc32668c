#include "eqr/sdp.hpp"

#include <cmath>
#include <limits>

#include "ipm.hpp"

namespace eqr::sdp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using detail::ConeBlock;
using detail::ConeProblem;
using detail::IpmOptions;
using detail::IpmResult;
using detail::IpmStatus;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_zero(const MatrixXd& m) { return inf_norm(m) == 0.0; }

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_symmetric(const MatrixXd& m, const char* what) {
  const double scale = 1.0 + inf_norm(m);
  require(inf_norm(m - m.transpose()) <= 1e-10 * scale, what);
}

void validate_problem(const SdpProblem& p) {
  const int n = p.num_vars();
  require(n >= 1 && n <= 64, "sdp: variable count must be in [1, 64]");
  require(!p.blocks.empty() || !p.linear.empty() || p.lower || p.upper,
          "sdp: problem has no constraints");
  for (const auto& blk : p.blocks) {
    const int d = static_cast<int>(blk.constant.rows());
    require(d >= 1 && d <= 8 && blk.constant.cols() == d,
            "sdp: block order must be in [1, 8]");
    require(static_cast<int>(blk.coeff.size()) == n,
            "sdp: block needs one coefficient matrix per variable");
    check_symmetric(blk.constant, "sdp: block constant not symmetric");
    for (const auto& f : blk.coeff) {
      require(f.rows() == d && f.cols() == d, "sdp: coeff dimension mismatch");
      check_symmetric(f, "sdp: block coefficient not symmetric");
    }
  }
  for (const auto& row : p.linear)
    require(static_cast<int>(row.a.size()) == n, "sdp: linear row length mismatch");
  if (p.lower) require(static_cast<int>(p.lower->size()) == n, "sdp: lower bound length");
  if (p.upper) require(static_cast<int>(p.upper->size()) == n, "sdp: upper bound length");
}

// Homogenized view: matrix blocks, then non-Equal rows as 1x1 blocks, then
// finite bounds as 1x1 blocks; Equal rows collected into A x = b.
struct Homogenized {
  std::vector<ConeBlock> blocks;
  MatrixXd Aeq;  // me x nv
  VectorXd beq;
};

Homogenized homogenize(const SdpProblem& p) {
  const int n = p.num_vars();
  Homogenized h;
  for (const auto& blk : p.blocks) {
    ConeBlock cb;
    cb.constant = 0.5 * (blk.constant + blk.constant.transpose());
    for (int i = 0; i < n; ++i) {
      if (is_zero(blk.coeff[i])) continue;
      cb.vars.push_back(i);
      cb.coeff.push_back(0.5 * (blk.coeff[i] + blk.coeff[i].transpose()));
    }
    h.blocks.push_back(std::move(cb));
  }
  std::vector<int> eq_rows;
  for (std::size_t r = 0; r < p.linear.size(); ++r) {
    const auto& row = p.linear[r];
    if (row.sense == Sense::Equal) {
      eq_rows.push_back(static_cast<int>(r));
      continue;
    }
    const double sgn = row.sense == Sense::GreaterEqual ? 1.0 : -1.0;
    ConeBlock cb;
    cb.constant = MatrixXd::Constant(1, 1, -sgn * row.bound);
    for (int i = 0; i < n; ++i) {
      if (row.a(i) == 0.0) continue;
      cb.vars.push_back(i);
      cb.coeff.push_back(MatrixXd::Constant(1, 1, sgn * row.a(i)));
    }
    h.blocks.push_back(std::move(cb));
  }
  auto add_bound = [&](int i, double value, double sgn) {
    // sgn=+1: x_i - value >= 0; sgn=-1: value - x_i >= 0.
    ConeBlock cb;
    cb.constant = MatrixXd::Constant(1, 1, -sgn * value);
    cb.vars.push_back(i);
    cb.coeff.push_back(MatrixXd::Constant(1, 1, sgn));
    h.blocks.push_back(std::move(cb));
  };
  for (int i = 0; i < n; ++i) {
    if (p.lower && (*p.lower)(i) > -kInf) add_bound(i, (*p.lower)(i), 1.0);
    if (p.upper && (*p.upper)(i) < kInf) add_bound(i, (*p.upper)(i), -1.0);
  }
  h.Aeq.resize(static_cast<int>(eq_rows.size()), n);
  h.beq.resize(static_cast<int>(eq_rows.size()));
  for (std::size_t k = 0; k < eq_rows.size(); ++k) {
    h.Aeq.row(static_cast<int>(k)) = p.linear[static_cast<std::size_t>(eq_rows[k])].a;
    h.beq(static_cast<int>(k)) = p.linear[static_cast<std::size_t>(eq_rows[k])].bound;
  }
  return h;
}

// Equality elimination plus removal of variables that touch no block.
struct Reduction {
  enum class Kind { Ok, EqInfeasible, Unbounded, NoVars } kind = Kind::Ok;
  ConeProblem cone;   // reduced problem (blocks ordered like Homogenized)
  VectorXd x0;        // particular solution, length nv
  MatrixXd N;         // nv x (kept reduced vars); x = x0 + N y
  VectorXd eq_y;      // Farkas multipliers when EqInfeasible
  double c_const = 0.0;
};

Reduction reduce(const Homogenized& h, const VectorXd& c) {
  const int n = static_cast<int>(c.size());
  const int me = static_cast<int>(h.Aeq.rows());
  Reduction red;
  red.x0 = VectorXd::Zero(n);

  MatrixXd N;  // kernel basis
  if (me > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(h.Aeq);
    red.x0 = cod.solve(h.beq);
    const VectorXd resid = h.Aeq * red.x0 - h.beq;
    if (resid.cwiseAbs().maxCoeff() > 1e-9 * (1.0 + h.beq.cwiseAbs().maxCoeff())) {
      red.kind = Reduction::Kind::EqInfeasible;
      red.eq_y = -resid / resid.squaredNorm();
      return red;
    }
    Eigen::FullPivLU<MatrixXd> lu(h.Aeq);
    lu.setThreshold(1e-12);
    const MatrixXd kernel = lu.kernel();
    // kernel() returns a single zero column when the kernel is trivial.
    if (kernel.cols() == 1 && kernel.col(0).cwiseAbs().maxCoeff() == 0.0) {
      N.resize(n, 0);
    } else {
      Eigen::HouseholderQR<MatrixXd> qr(kernel);
      N = qr.householderQ() * MatrixXd::Identity(n, static_cast<int>(kernel.cols()));
    }
  } else {
    N = MatrixXd::Identity(n, n);
  }
  red.c_const = c.dot(red.x0);

  const int nk = static_cast<int>(N.cols());
  VectorXd cred = N.transpose() * c;

  // Transform blocks into kernel coordinates.
  std::vector<ConeBlock> blocks;
  blocks.reserve(h.blocks.size());
  std::vector<char> touched(static_cast<std::size_t>(std::max(nk, 1)), 0);
  for (const auto& src : h.blocks) {
    ConeBlock cb;
    cb.constant = src.constant;
    for (std::size_t k = 0; k < src.vars.size(); ++k)
      cb.constant += red.x0(src.vars[k]) * src.coeff[k];
    for (int b = 0; b < nk; ++b) {
      MatrixXd f = MatrixXd::Zero(src.constant.rows(), src.constant.cols());
      for (std::size_t k = 0; k < src.vars.size(); ++k) {
        const double w = N(src.vars[k], b);
        if (w != 0.0) f += w * src.coeff[k];
      }
      if (inf_norm(f) > 0.0) {
        cb.vars.push_back(b);
        cb.coeff.push_back(std::move(f));
        touched[static_cast<std::size_t>(b)] = 1;
      }
    }
    blocks.push_back(std::move(cb));
  }

  // Variables outside every block: improving if they carry objective,
  // otherwise pinned to zero and dropped.
  std::vector<int> keep, remap(static_cast<std::size_t>(nk), -1);
  for (int b = 0; b < nk; ++b) {
    if (touched[static_cast<std::size_t>(b)]) {
      remap[static_cast<std::size_t>(b)] = static_cast<int>(keep.size());
      keep.push_back(b);
    } else if (cred(b) != 0.0) {
      red.kind = Reduction::Kind::Unbounded;
      return red;
    }
  }
  if (keep.empty()) {
    red.kind = Reduction::Kind::NoVars;
    red.N.resize(n, 0);
    red.cone.blocks = std::move(blocks);
    return red;
  }
  red.N.resize(n, static_cast<int>(keep.size()));
  red.cone.c.resize(static_cast<int>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    red.N.col(static_cast<int>(k)) = N.col(keep[k]);
    red.cone.c(static_cast<int>(k)) = cred(keep[k]);
  }
  for (auto& blk : blocks)
    for (auto& v : blk.vars) v = remap[static_cast<std::size_t>(v)];
  red.cone.blocks = std::move(blocks);
  return red;
}

IpmOptions to_ipm(const SolveOptions& o) {
  IpmOptions io;
  io.gap_tol = o.gap_tol;
  io.feas_tol = o.feas_tol;
  io.max_iterations = o.max_iterations;
  return io;
}

// Assembles a trace-normalized certificate from dual blocks given in
// homogenized order; recovers equality multipliers by least squares.
InfeasibilityCertificate assemble_certificate(const Homogenized& h,
                                              std::vector<MatrixXd> Z) {
  const int n = static_cast<int>(h.Aeq.cols());
  const int me = static_cast<int>(h.Aeq.rows());
  VectorXd g = VectorXd::Zero(n);
  double viol = 0.0, tr = 0.0;
  for (std::size_t j = 0; j < h.blocks.size(); ++j) {
    const auto& blk = h.blocks[j];
    viol += (blk.constant.array() * Z[j].array()).sum();
    tr += Z[j].trace();
    for (std::size_t k = 0; k < blk.vars.size(); ++k)
      g(blk.vars[k]) += (blk.coeff[k].array() * Z[j].array()).sum();
  }
  InfeasibilityCertificate cert;
  cert.equality_dual.resize(me);
  if (me > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(MatrixXd(h.Aeq.transpose()));
    cert.equality_dual = cod.solve(-g);
    viol -= h.beq.dot(cert.equality_dual);
  }
  const double s = tr > 0.0 ? tr : 1.0;
  for (auto& z : Z) z /= s;
  cert.equality_dual /= s;
  cert.ray = std::move(Z);
  cert.violation = viol / s;
  return cert;
}

struct PhaseOne {
  double slack = 0.0;
  VectorXd y;                   // reduced coordinates at the max-slack point
  std::vector<MatrixXd> Z;      // duals in homogenized order (cap dropped)
  bool clean = true;            // IPM converged
};

PhaseOne phase_one(const Reduction& red, const SolveOptions& opts) {
  const int nk = red.cone.num_vars();
  double capscale = 1.0;
  for (const auto& blk : red.cone.blocks)
    capscale = std::max(capscale, inf_norm(blk.constant));
  // Variable nk is the slack t, maximized; every block gains a -I coefficient
  // and a 1x1 cap block keeps the problem bounded.
  ConeProblem p1;
  p1.c = VectorXd::Zero(nk + 1);
  p1.c(nk) = -1.0;
  p1.blocks = red.cone.blocks;
  for (auto& blk : p1.blocks) {
    blk.vars.push_back(nk);
    blk.coeff.push_back(
        -MatrixXd::Identity(blk.constant.rows(), blk.constant.cols()));
  }
  ConeBlock cap;
  cap.constant = MatrixXd::Constant(1, 1, 1.0 + capscale);
  cap.vars.push_back(nk);
  cap.coeff.push_back(MatrixXd::Constant(1, 1, -1.0));
  p1.blocks.push_back(std::move(cap));

  IpmResult r = detail::run_ipm(p1, to_ipm(opts));
  PhaseOne out;
  out.clean = r.status == IpmStatus::Converged;
  out.slack = r.x(nk);
  out.y = r.x.head(nk);
  out.Z.assign(r.Z.begin(), r.Z.end() - 1);
  return out;
}

SdpSolution lift_optimal(const Reduction& red, const VectorXd& y,
                         const std::vector<MatrixXd>& Z, double dobj_reduced,
                         const VectorXd& c, int iterations) {
  SdpSolution sol;
  sol.status = SolveStatus::Optimal;
  sol.x = red.x0 + red.N * y;
  sol.dual = Z;
  sol.objective = c.dot(sol.x);
  sol.dual_objective = dobj_reduced + red.c_const;
  sol.gap = std::abs(sol.objective - sol.dual_objective);
  sol.iterations = iterations;
  return sol;
}

// Smallest eigenvalue across constant blocks (NoVars feasibility check).
double min_const_eig(const std::vector<ConeBlock>& blocks, std::size_t* worst,
                     VectorXd* vec) {
  double best = kInf;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(blocks[j].constant);
    if (es.eigenvalues()(0) < best) {
      best = es.eigenvalues()(0);
      if (worst) *worst = j;
      if (vec) *vec = es.eigenvectors().col(0);
    }
  }
  return best;
}

SdpSolution certificate_solution(const Homogenized& h, std::vector<MatrixXd> Z,
                                 int iterations) {
  SdpSolution sol;
  sol.status = SolveStatus::Infeasible;
  sol.iterations = iterations;
  sol.certificate = assemble_certificate(h, std::move(Z));
  return sol;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

SdpSolution solve(const SdpProblem& problem, const SolveOptions& opts) {
  validate_problem(problem);
  const Homogenized h = homogenize(problem);
  Reduction red = reduce(h, problem.objective);

  SdpSolution sol;
  if (red.kind == Reduction::Kind::EqInfeasible) {
    sol.status = SolveStatus::Infeasible;
    InfeasibilityCertificate cert;
    for (const auto& blk : h.blocks)
      cert.ray.push_back(MatrixXd::Zero(blk.constant.rows(), blk.constant.cols()));
    cert.equality_dual = red.eq_y;
    cert.violation = -h.beq.dot(red.eq_y);
    sol.certificate = std::move(cert);
    return sol;
  }
  if (red.kind == Reduction::Kind::Unbounded) {
    sol.status = SolveStatus::Unbounded;
    return sol;
  }
  if (red.kind == Reduction::Kind::NoVars) {
    std::size_t worst = 0;
    VectorXd v;
    const double lmin = min_const_eig(red.cone.blocks, &worst, &v);
    double scale = 1.0;
    for (const auto& blk : red.cone.blocks)
      scale = std::max(scale, inf_norm(blk.constant));
    if (lmin >= -opts.feas_tol * scale) {
      sol.status = SolveStatus::Optimal;
      sol.x = red.x0;
      sol.objective = sol.dual_objective = red.c_const;
      for (const auto& blk : h.blocks)
        sol.dual.push_back(MatrixXd::Zero(blk.constant.rows(), blk.constant.cols()));
      return sol;
    }
    std::vector<MatrixXd> Z;
    for (const auto& blk : h.blocks)
      Z.push_back(MatrixXd::Zero(blk.constant.rows(), blk.constant.cols()));
    Z[worst] = v * v.transpose();
    return certificate_solution(h, std::move(Z), 0);
  }

  // Pure feasibility problems go straight to the phase-I probe.
  if (problem.objective.cwiseAbs().maxCoeff() == 0.0) {
    PhaseOne p1 = phase_one(red, opts);
    if (!p1.clean && std::abs(p1.slack) <= 10 * opts.feas_tol) {
      sol.status = SolveStatus::NumericalFailure;
      return sol;
    }
    if (p1.slack >= -opts.feas_tol)
      return lift_optimal(red, p1.y, p1.Z, -red.c_const, problem.objective, 0);
    return certificate_solution(h, std::move(p1.Z), 0);
  }

  IpmResult r = detail::run_ipm(red.cone, to_ipm(opts));
  if (r.status == IpmStatus::Converged)
    return lift_optimal(red, r.x, r.Z, r.dobj, problem.objective, r.iterations);
  if (r.status == IpmStatus::PrimalDiverging) {
    sol.status = SolveStatus::Unbounded;
    sol.iterations = r.iterations;
    return sol;
  }
  // Dual divergence, iteration cap or breakdown: arbitrate with phase-I.
  PhaseOne p1 = phase_one(red, opts);
  if (p1.clean && p1.slack < -opts.feas_tol)
    return certificate_solution(h, std::move(p1.Z), r.iterations);
  sol.status = SolveStatus::NumericalFailure;
  sol.iterations = r.iterations;
  return sol;
}

FeasibilityReport max_slack(const SdpProblem& problem, const SolveOptions& opts) {
  validate_problem(problem);
  const Homogenized h = homogenize(problem);
  Reduction red = reduce(h, VectorXd::Zero(problem.num_vars()));

  FeasibilityReport rep;
  if (red.kind == Reduction::Kind::EqInfeasible) {
    rep.slack = -kInf;
    InfeasibilityCertificate cert;
    for (const auto& blk : h.blocks)
      cert.ray.push_back(MatrixXd::Zero(blk.constant.rows(), blk.constant.cols()));
    cert.equality_dual = red.eq_y;
    cert.violation = -h.beq.dot(red.eq_y);
    rep.certificate = std::move(cert);
    return rep;
  }
  if (red.kind == Reduction::Kind::NoVars) {
    std::size_t worst = 0;
    VectorXd v;
    rep.slack = min_const_eig(red.cone.blocks, &worst, &v);
    rep.x = red.x0;
    if (rep.slack < -opts.feas_tol) {
      std::vector<MatrixXd> Z;
      for (const auto& blk : h.blocks)
        Z.push_back(MatrixXd::Zero(blk.constant.rows(), blk.constant.cols()));
      Z[worst] = v * v.transpose();
      rep.certificate = assemble_certificate(h, std::move(Z));
    }
    return rep;
  }

  PhaseOne p1 = phase_one(red, opts);
  rep.slack = p1.slack;
  rep.x = red.x0 + red.N * p1.y;
  rep.converged = p1.clean;
  if (p1.slack < -opts.feas_tol)
    rep.certificate = assemble_certificate(h, std::move(p1.Z));
  return rep;
}

bool check_feasible(const SdpProblem& problem, double margin,
                    const SolveOptions& opts) {
  return max_slack(problem, opts).slack >= -margin;
}

bool verify_infeasibility(const SdpProblem& problem,
                          const InfeasibilityCertificate& cert, double tol) {
  validate_problem(problem);
  const Homogenized h = homogenize(problem);
  if (cert.ray.size() != h.blocks.size()) return false;
  if (cert.equality_dual.size() != h.Aeq.rows()) return false;

  const int n = problem.num_vars();
  VectorXd g = VectorXd::Zero(n);
  double viol = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < h.blocks.size(); ++j) {
    const auto& z = cert.ray[j];
    const auto& blk = h.blocks[j];
    if (z.rows() != blk.constant.rows() || z.cols() != blk.constant.cols())
      return false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(z);
    scale = std::max(scale, inf_norm(z));
    if (es.eigenvalues()(0) < -tol * std::max(1.0, inf_norm(z))) return false;
    viol += (blk.constant.array() * z.array()).sum();
    for (std::size_t k = 0; k < blk.vars.size(); ++k)
      g(blk.vars[k]) += (blk.coeff[k].array() * z.array()).sum();
  }
  if (h.Aeq.rows() > 0) {
    g += h.Aeq.transpose() * cert.equality_dual;
    viol -= h.beq.dot(cert.equality_dual);
    scale = std::max(scale, cert.equality_dual.cwiseAbs().maxCoeff());
  }
  if (g.cwiseAbs().maxCoeff() > tol * std::max(1.0, scale)) return false;
  return viol <= -tol;
}

}  // namespace eqr::sdp
