#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "eqr/sdp.hpp"

namespace eqr {

/**
 * Correlations of a two-preparation, binary-outcome device: E_x is the
 * expectation of the +-1 outcome under preparation x.  Values within 1e-9
 * of +-1 are clamped onto the boundary; anything further out is a domain
 * error.
 */
struct Behaviour {
  double e1 = 0.0;
  double e2 = 0.0;

  Behaviour() = default;
  Behaviour(double e1_in, double e2_in);
};

/**
 * Energy constraints per preparation, dimensionless in [0, 1] (fraction of
 * the excited-state weight).  `avg` bounds the ensemble average, `pk` the
 * peak over the ensemble.  Negative inputs are a domain error; values above
 * 1 are clamped to 1, and an average bound looser than the peak bound is
 * tightened to the peak (it would be vacuous otherwise).
 */
struct EnergyBounds {
  Eigen::Vector2d avg;
  Eigen::Vector2d pk;

  EnergyBounds(const Eigen::Vector2d& avg_in, const Eigen::Vector2d& pk_in);

  /// Peak-only constraint: the average bound coincides with the peak.
  static EnergyBounds peak_only(const Eigen::Vector2d& pk_in) {
    return EnergyBounds(pk_in, pk_in);
  }
};

/// Bloch-style description: unit vectors n1, n2 (preparations), k (energy
/// reference) and a measurement vector m with |m| <= 1.
struct QuantumRepresentation {
  Eigen::Vector3d n1, n2, m, k;
};

/**
 * Gram matrix of the vectors (n1, n2, m, k) in that row order.  Membership
 * of a behaviour at peak energies (w1, w2) is equivalent to PSD-ness of
 *
 *   [ 1        u        E1   2 eta1 - 1 ]
 *   [ u        1        E2   2 eta2 - 1 ]
 *   [ E1       E2       1    v          ]
 *   [ 2eta1-1  2eta2-1  v    1          ]
 *
 * for some u, v and 0 <= eta_x <= w_x (the PSD minors already force
 * eta_x >= 0, so only the upper bounds are imposed).
 */
struct GramMatrix {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

  double u() const { return m(0, 1); }
  double v() const { return m(2, 3); }
  double e1() const { return m(0, 2); }
  double e2() const { return m(1, 2); }
  double eta1() const { return 0.5 * (m(0, 3) + 1.0); }
  double eta2() const { return 0.5 * (m(1, 3) + 1.0); }

  static GramMatrix from_parts(double u, double v, const Behaviour& b,
                               double eta1, double eta2);
};

/**
 * Closed-form membership test for the quantum set at peak energies w:
 * trivially true when w1 + w2 >= 1, otherwise
 *
 *   |asin E1 - asin E2| <= 2 (asin sqrt(w1) + asin sqrt(w2)).
 *
 * The equivalent algebraic form
 *
 *   (sqrt((1+E1)(1+E2)) + sqrt((1-E1)(1-E2))) / 2
 *       >= sqrt((1-w1)(1-w2)) - sqrt(w1 w2)
 *
 * is evaluated on every call as a cross-check; verdict disagreement with
 * both margins clear of the tolerance band is an internal error.  Negative
 * w is a domain error; w above 1 is clamped.
 */
bool in_quantum_set_closed_form(const Behaviour& b, const Eigen::Vector2d& w_pk,
                                double tol = 1e-9);

/**
 * Membership via the Gram-matrix feasibility program, decided by a phase-I
 * max-slack solve: member iff the attained slack is >= -margin.  Throws
 * sdp::SolverError when the solver cannot resolve the verdict.
 */
bool in_quantum_set_sdp(const Behaviour& b, const Eigen::Vector2d& w_pk,
                        double margin = 1e-7,
                        const sdp::SolveOptions& opts = {});

/// Feasible Gram matrix at the max-slack point, or nullopt for non-members.
std::optional<GramMatrix> quantum_gram(const Behaviour& b,
                                       const Eigen::Vector2d& w_pk,
                                       double margin = 1e-7,
                                       const sdp::SolveOptions& opts = {});

/**
 * Support function of the quantum set at peak energies: max of c . E over
 * all member behaviours.  Exact up to floating-point evaluation.
 */
double support_function(const Eigen::Vector2d& c, const Eigen::Vector2d& w_pk);

/// Which classical (deterministic-mixture) set to test against.
enum class ClassicalityMode {
  MaxAverage,  ///< energies bounded on ensemble average: |E1-E2| <= 2(w1+w2)
  MaxPeak,     ///< energies bounded pointwise: E1 == E2 unless w1+w2 >= 1
};

bool is_classical(const Behaviour& b, const Eigen::Vector2d& w,
                  ClassicalityMode mode, double tol = 1e-9);

/// Largest classical violation |E1-E2|/2 reachable at symmetric peak
/// energies (w, w): 2 sqrt(w (1-w)).
double max_violation(double w);

/**
 * Recovers a three-dimensional representation from a PSD Gram matrix:
 * eigenvalues below -tol are a domain error, small negatives are clamped,
 * and the measurement vector is the projection of the third Gram vector
 * onto span{n1, n2, k}.  The result reproduces the Gram data to 1e-8.
 */
QuantumRepresentation representation_from_gram(const GramMatrix& gram,
                                               double tol = 1e-9);

/// Behaviour and energies (eta1, eta2) realized by a representation.
std::pair<Behaviour, Eigen::Vector2d> behaviour_from_representation(
    const QuantumRepresentation& rep);

}  // namespace eqr
