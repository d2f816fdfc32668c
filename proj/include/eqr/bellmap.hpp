#pragma once

#include <utility>

#include <Eigen/Dense>

#include "eqr/qset.hpp"
#include "eqr/sdp.hpp"

namespace eqr {

/// Two-party binary-measurement Bell correlators, ordered
/// (<A1B1>, <A1B2>, <A2B1>, <A2B2>).
struct BellBehaviour {
  double ab11 = 0.0;
  double ab12 = 0.0;
  double ab21 = 0.0;
  double ab22 = 0.0;

  BellBehaviour() = default;

  /// Validates every correlator against [-1, 1] (1e-9 slack, then clamped).
  /// Throws std::domain_error otherwise.
  BellBehaviour(double ab11_in, double ab12_in, double ab21_in, double ab22_in);
};

/// Dictionary from a prepare-and-measure behaviour with energies w to Bell
/// correlators: <A_xB1> = E_x and <A_xB2> = 2 w_x - 1, treating the energy
/// observable as a second measurement on the receiving side and saturating
/// the energy bound.
///
/// The saturated image is a faithful witness in one direction only: if the
/// image is Bell-quantum (pinned semantics) the source behaviour is
/// quantum, but a quantum behaviour can have a non-quantum saturated image
/// because the optimal preparation does not always use the full energy
/// budget. Exact two-way membership transport uses
/// bell_image_quantum_membership, which keeps the B2 column as upper
/// bounds. Classicality transports exactly for all w either way: the
/// classical band |E_1 - E_2| <= 2(w_1 + w_2) maps onto the two CHSH
/// inequalities by a term-for-term rewrite.
BellBehaviour pm_to_bell(const Behaviour& b, const Eigen::Vector2d& w);

/// Quantum membership of a Bell behaviour: feasibility of the 4x4 Gram
/// matrix
///   [ 1  u  <A1B1>  <A1B2> ]
///   [ .  1  <A2B1>  <A2B2> ]
///   [ .  .    1       v    ]
///   [ .  .    .       1    ]
/// over the free entries (u, v), decided by semidefinite programming.
/// `margin` gives the feasibility slack below which a behaviour is still
/// accepted, mirroring in_quantum_set_sdp. Throws sdp::SolverError when the
/// solver cannot resolve a verdict this close to the boundary.
bool bell_quantum_membership(const BellBehaviour& bb, double margin = 1e-7,
                             const sdp::SolveOptions& opts = {});

/// Quantum membership of a prepare-and-measure image with energy-cap
/// semantics: feasibility of the same Gram matrix with <A_xB1> pinned and
/// the B2 column replaced by free entries h_x <= <A_xB2>. This is the exact
/// Bell-side transport of the prepare-and-measure energy constraint, so on
/// images of pm_to_bell it agrees with quantum-set membership for every
/// behaviour and energy pair, including the cases where the saturated
/// (pinned) image leaves the Bell quantum set.
bool bell_image_quantum_membership(const BellBehaviour& bb,
                                   double margin = 1e-7,
                                   const sdp::SolveOptions& opts = {});

/// The two CHSH combinations +-(<A1B1> - <A2B1>) - <A1B2> - <A2B2>,
/// returned as (plus, minus). Classical behaviours obey both <= 2; quantum
/// behaviours reach 2*sqrt(2).
std::pair<double, double> chsh_values(const BellBehaviour& bb);

}  // namespace eqr
