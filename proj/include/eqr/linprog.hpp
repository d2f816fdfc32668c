#pragma once

#include <Eigen/Dense>
#include <vector>

namespace eqr::linprog {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;        ///< structural variables (iff Optimal)
  double objective = 0.0;
  std::vector<int> basis;   ///< basic structural variable indices
  int iterations = 0;
};

/**
 * Dense two-phase revised simplex for
 *
 *   minimize    c . x
 *   subject to  Aeq x  = beq,
 *               Aub x <= bub,
 *               x >= 0.
 *
 * Pivoting uses the most-negative reduced cost with an automatic switch to
 * Bland's rule after a run of degenerate steps, so the method terminates.
 * Designed for few rows and possibly many columns (pricing is dense).
 * Returns a basic optimal solution, so at most rows(Aeq)+rows(Aub)
 * structural variables are nonzero.
 */
LpSolution solve(const Eigen::VectorXd& c, const Eigen::MatrixXd& Aeq,
                 const Eigen::VectorXd& beq, const Eigen::MatrixXd& Aub,
                 const Eigen::VectorXd& bub);

}  // namespace eqr::linprog
