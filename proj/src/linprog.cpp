#include "eqr/linprog.hpp"

#include <cmath>
#include <stdexcept>

namespace eqr::linprog {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kReducedTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr double kPhase1Tol = 1e-9;

struct Tableau {
  MatrixXd A;          // m x ntot, real columns then artificials
  VectorXd b;          // >= 0 after row flips
  int nreal = 0;       // structural + slack columns
  int nstruct = 0;
  std::vector<int> basis;  // size m, column index per row
};

// One simplex phase over the given costs; artificial columns never enter.
// Returns false when the problem is unbounded in this phase.
bool run_phase(Tableau& t, const VectorXd& cost, int enter_limit,
               int* iterations) {
  const int m = static_cast<int>(t.A.rows());
  int degenerate_run = 0;
  bool bland = false;
  const int cap = 2000 + 40 * (enter_limit + m);
  for (int it = 0; it < cap; ++it) {
    ++*iterations;
    MatrixXd B(m, m);
    VectorXd cb(m);
    for (int i = 0; i < m; ++i) {
      B.col(i) = t.A.col(t.basis[static_cast<std::size_t>(i)]);
      cb(i) = cost(t.basis[static_cast<std::size_t>(i)]);
    }
    Eigen::PartialPivLU<MatrixXd> lu(B);
    const VectorXd xb = lu.solve(t.b);
    const VectorXd y = lu.transpose().solve(cb);

    int enter = -1;
    double best = -kReducedTol;
    for (int j = 0; j < enter_limit; ++j) {
      const double rj = cost(j) - y.dot(t.A.col(j));
      if (bland) {
        if (rj < -kReducedTol) {
          enter = j;
          break;
        }
      } else if (rj < best) {
        best = rj;
        enter = j;
      }
    }
    if (enter < 0) return true;  // optimal for this phase

    const VectorXd d = lu.solve(t.A.col(enter));
    int leave = -1;
    double ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (d(i) <= kPivotTol) continue;
      const double r = xb(i) / d(i);
      if (leave < 0 || r < ratio - 1e-12 ||
          (std::abs(r - ratio) <= 1e-12 &&
           t.basis[static_cast<std::size_t>(i)] <
               t.basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        ratio = r;
      }
    }
    if (leave < 0) return false;  // unbounded direction

    if (ratio <= 1e-12) {
      if (++degenerate_run > 3 * m) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
    t.basis[static_cast<std::size_t>(leave)] = enter;
  }
  throw std::runtime_error("linprog: iteration cap exceeded");
}

}  // namespace

LpSolution solve(const Eigen::VectorXd& c, const Eigen::MatrixXd& Aeq,
                 const Eigen::VectorXd& beq, const Eigen::MatrixXd& Aub,
                 const Eigen::VectorXd& bub) {
  const int n = static_cast<int>(c.size());
  const int me = static_cast<int>(Aeq.rows());
  const int mu = static_cast<int>(Aub.rows());
  if ((me > 0 && Aeq.cols() != n) || (mu > 0 && Aub.cols() != n) ||
      beq.size() != me || bub.size() != mu)
    throw std::invalid_argument("linprog: dimension mismatch");
  const int m = me + mu;
  if (m == 0 || n == 0) throw std::invalid_argument("linprog: empty problem");

  Tableau t;
  t.nstruct = n;
  t.nreal = n + mu;
  const int ntot = t.nreal + m;
  t.A = MatrixXd::Zero(m, ntot);
  t.b = VectorXd::Zero(m);
  if (me > 0) {
    t.A.topLeftCorner(me, n) = Aeq;
    t.b.head(me) = beq;
  }
  if (mu > 0) {
    t.A.bottomLeftCorner(mu, n) = Aub;
    t.A.block(me, n, mu, mu).setIdentity();
    t.b.tail(mu) = bub;
  }
  for (int i = 0; i < m; ++i) {
    if (t.b(i) < 0.0) {
      t.A.row(i) = -t.A.row(i);
      t.b(i) = -t.b(i);
    }
    t.A(i, t.nreal + i) = 1.0;
    t.basis.push_back(t.nreal + i);
  }

  LpSolution sol;

  // Phase 1: minimize the artificial mass.
  VectorXd cost1 = VectorXd::Zero(ntot);
  cost1.tail(m).setOnes();
  if (!run_phase(t, cost1, t.nreal, &sol.iterations))
    throw std::runtime_error("linprog: phase-1 unbounded");
  {
    MatrixXd B(m, m);
    for (int i = 0; i < m; ++i)
      B.col(i) = t.A.col(t.basis[static_cast<std::size_t>(i)]);
    const VectorXd xb = Eigen::PartialPivLU<MatrixXd>(B).solve(t.b);
    double artificial = 0.0;
    for (int i = 0; i < m; ++i)
      if (t.basis[static_cast<std::size_t>(i)] >= t.nreal)
        artificial += std::abs(xb(i));
    if (artificial > kPhase1Tol) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
  }

  // Drive basic artificials out of the basis; a row where no real column
  // can pivot is redundant and keeps its zero-level artificial harmlessly.
  for (int i = 0; i < m; ++i) {
    if (t.basis[static_cast<std::size_t>(i)] < t.nreal) continue;
    MatrixXd B(m, m);
    for (int r = 0; r < m; ++r)
      B.col(r) = t.A.col(t.basis[static_cast<std::size_t>(r)]);
    const VectorXd w =
        Eigen::PartialPivLU<MatrixXd>(B).transpose().solve(VectorXd::Unit(m, i));
    std::vector<char> basic(static_cast<std::size_t>(t.nreal), 0);
    for (int r = 0; r < m; ++r)
      if (t.basis[static_cast<std::size_t>(r)] < t.nreal)
        basic[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(r)])] = 1;
    for (int j = 0; j < t.nreal; ++j) {
      if (basic[static_cast<std::size_t>(j)]) continue;
      if (std::abs(w.dot(t.A.col(j))) > 1e-9) {
        t.basis[static_cast<std::size_t>(i)] = j;
        break;
      }
    }
  }

  // Phase 2 over the real costs; artificials stay priced out.
  VectorXd cost2 = VectorXd::Zero(ntot);
  cost2.head(n) = c;
  if (!run_phase(t, cost2, t.nreal, &sol.iterations)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  MatrixXd B(m, m);
  for (int i = 0; i < m; ++i)
    B.col(i) = t.A.col(t.basis[static_cast<std::size_t>(i)]);
  const VectorXd xb = Eigen::PartialPivLU<MatrixXd>(B).solve(t.b);
  sol.status = LpStatus::Optimal;
  sol.x = VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int col = t.basis[static_cast<std::size_t>(i)];
    if (col < n) {
      sol.x(col) = std::max(0.0, xb(i));
      sol.basis.push_back(col);
    }
  }
  sol.objective = c.dot(sol.x);
  return sol;
}

}  // namespace eqr::linprog
