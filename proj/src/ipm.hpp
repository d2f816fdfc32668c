#pragma once

// Internal Nesterov-Todd primal-dual interior-point core.  Both the public
// sdp facade and the entropy dual solver sit on top of this; it is not part
// of the installed API.

#include <Eigen/Dense>
#include <vector>

namespace eqr::detail {

/// One PSD block of the cone program, with a sparse variable list:
/// constant + sum_k x[vars[k]] * coeff[k] must stay PSD.
struct ConeBlock {
  Eigen::MatrixXd constant;
  std::vector<int> vars;                // strictly increasing variable indices
  std::vector<Eigen::MatrixXd> coeff;   // parallel to vars
  int group = -1;                       // owning group, or -1 (shared-only)
};

/**
 * minimize c . x  subject to every ConeBlock staying PSD.
 *
 * When num_shared >= 0 the problem is block-angular: variables
 * [0, num_shared) are shared, group g owns [group_begin[g], group_begin[g+1])
 * and a block tagged with group g may reference shared variables plus that
 * group's variables only.  The Schur complement is then eliminated group by
 * group instead of being materialized, which is what makes dual problems
 * with thousands of small blocks tractable.
 */
struct ConeProblem {
  Eigen::VectorXd c;
  std::vector<ConeBlock> blocks;
  int num_shared = -1;                  // -1: unstructured (dense Schur)
  std::vector<int> group_begin;         // size ngroups+1 when structured

  int num_vars() const { return static_cast<int>(c.size()); }
};

enum class IpmStatus {
  Converged,
  MaxIterations,
  PrimalDiverging,   // objective heading to -inf with small primal residual
  DualDiverging,     // dual objective heading to +inf (primal likely infeasible)
  Stalled,           // numerical stop near the optimum; best iterate returned
  Breakdown,
};

struct IpmResult {
  IpmStatus status = IpmStatus::Breakdown;
  Eigen::VectorXd x;
  std::vector<Eigen::MatrixXd> Z;       // dual blocks, same order as input
  double pobj = 0.0;
  double dobj = 0.0;
  double mu = 0.0;
  double rel_gap = 1.0;                 // complementarity over 1+|pobj|+|dobj|
  double primal_res = 0.0;              // relative inf-norm residuals
  double dual_res = 0.0;
  int iterations = 0;
};

struct IpmOptions {
  double gap_tol = 1e-9;
  double feas_tol = 1e-9;
  int max_iterations = 200;
  double divergence_bound = 1e9;
};

IpmResult run_ipm(const ConeProblem& prob, const IpmOptions& opts);

}  // namespace eqr::detail
