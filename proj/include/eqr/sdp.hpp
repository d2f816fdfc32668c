#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqr::sdp {

/**
 * Small dense semidefinite programs in the form
 *
 *   minimize    c . x
 *   subject to  F0_j + sum_i x_i Fi_j  is PSD   for every block j,
 *               a . x  {<=, ==, >=}  bound      for every linear row,
 *               lo <= x <= hi                   (optional, per variable).
 *
 * Targets problems with at most 64 variables and blocks of order at most 8.
 * All matrices are dense and symmetric; solutions are deterministic
 * (bit-for-bit reproducible for identical input on one platform).
 */

enum class Sense { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  Eigen::VectorXd a;  ///< coefficient vector, length = number of variables
  double bound = 0.0;
  Sense sense = Sense::LessEqual;
};

/// One linear matrix inequality block: constant + sum_i x_i coeff[i] PSD.
struct LmiBlock {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coeff;  ///< one symmetric matrix per variable
};

struct SdpProblem {
  Eigen::VectorXd objective;  ///< minimized
  std::vector<LmiBlock> blocks;
  std::vector<LinearConstraint> linear;
  /// Optional box bounds; entries may be +-infinity for one-sided bounds.
  std::optional<Eigen::VectorXd> lower, upper;

  int num_vars() const { return static_cast<int>(objective.size()); }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus s);

/**
 * Farkas-style witness of primal infeasibility: PSD matrices Z_j and
 * equality multipliers y with
 *   sum_j <Fi_j, Z_j> + (A^T y)_i = 0  for every variable i   and
 *   sum_j <F0_j, Z_j> - b . y < 0,
 * where A x = b collects the Equal rows.  No primal-feasible point can
 * coexist with such a ray.  Blocks are indexed against the homogenized
 * problem: matrix blocks first, then one 1x1 block per non-Equal linear
 * row in declaration order, then per variable a 1x1 block for each finite
 * lower and upper bound (lower before upper).  The ray is normalized to
 * total trace 1 whenever it is produced by this module.
 */
struct InfeasibilityCertificate {
  std::vector<Eigen::MatrixXd> ray;
  Eigen::VectorXd equality_dual;  ///< one multiplier per Equal row
  double violation = 0.0;         ///< <F0, Z> - b . y at the ray (negative)
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;                   ///< primal point (meaningful iff Optimal)
  /// Dual block matrices (iff Optimal), indexed like the certificate ray.
  std::vector<Eigen::MatrixXd> dual;
  double objective = 0.0;              ///< c . x
  double dual_objective = 0.0;         ///< -sum_j <F0_j, Z_j>
  double gap = 0.0;                    ///< |objective - dual_objective| scale
  int iterations = 0;
  std::optional<InfeasibilityCertificate> certificate;  ///< iff Infeasible
};

struct SolveOptions {
  double gap_tol = 1e-9;      ///< relative duality-gap target
  double feas_tol = 1e-9;     ///< residual tolerance (relative)
  int max_iterations = 200;
};

/// Thrown when the interior-point method breaks down numerically.
struct SolverError : std::runtime_error {
  SolveStatus status;
  explicit SolverError(SolveStatus s, const std::string& what)
      : std::runtime_error(what), status(s) {}
};

/**
 * Solves the SDP.  Returns status Optimal with a primal/dual pair whose
 * objectives bracket the optimum within the gap tolerance, Infeasible
 * with a machine-checkable certificate, or Unbounded when an improving
 * ray is detected.  Malformed input (non-symmetric blocks, dimension or
 * variable-count limits exceeded, size mismatches) throws
 * std::invalid_argument; numerical breakdown throws nothing but is
 * reported as status NumericalFailure.
 */
SdpSolution solve(const SdpProblem& problem, const SolveOptions& opts = {});

/**
 * Phase-I feasibility probe: maximizes the smallest slack t such that
 * every block of F(x) - t I stays PSD (linear rows are shifted the same
 * way).  Returns true iff the attained slack is >= -margin.  The probe
 * is always strictly feasible, so it cannot itself be infeasible.
 */
bool check_feasible(const SdpProblem& problem, double margin,
                    const SolveOptions& opts = {});

/// Phase-I detail: attained slack and, when the slack is negative beyond
/// the tolerance, the infeasibility certificate assembled from the dual.
struct FeasibilityReport {
  double slack = 0.0;
  Eigen::VectorXd x;  ///< variable values at the max-slack point
  bool converged = true;  ///< false when the probe hit its iteration cap
  std::optional<InfeasibilityCertificate> certificate;
};

FeasibilityReport max_slack(const SdpProblem& problem,
                            const SolveOptions& opts = {});

/**
 * Checks an infeasibility certificate against a problem: all ray blocks
 * PSD (eigenvalues >= -tol), all variable pairings |<Fi, Z>| <= tol, and
 * <F0, Z> <= -tol.  The certificate must be indexed against the
 * homogenized block list (matrix blocks, then linear rows as 1x1 blocks,
 * then box bounds as 1x1 blocks, lower before upper, in variable order).
 */
bool verify_infeasibility(const SdpProblem& problem,
                          const InfeasibilityCertificate& cert,
                          double tol = 1e-7);

}  // namespace eqr::sdp
