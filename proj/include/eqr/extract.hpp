#pragma once

#include <cstdint>

#include "eqr/bits.hpp"

namespace eqr {

/// Parameter set of a seeded Toeplitz extraction: n raw bits hashed down to
/// sigma output bits using an l-bit seed, sound whenever the raw string
/// carries sigma_h bits of smooth min-entropy.
struct ExtractorParams {
  long long n = 0;        ///< input length (bits)
  long long l = 0;        ///< seed length (bits), n + sigma - 1
  double sigma_h = 0.0;   ///< min-entropy budget (bits)
  long long sigma = 0;    ///< output length (bits)
  double eps_ext = 0.0;   ///< extraction error (trace distance)
};

/// Leftover-hash accounting: sigma = max(0, floor(sigma_h - 2 log2(1/eps)))
/// and l = n + sigma - 1 (zero when nothing is extractable). The 2 log2
/// penalty is the trace-distance form of the leftover hash lemma, which is
/// conservative relative to some collision-entropy statements. Throws
/// std::domain_error for sigma_h < 0 or eps outside (0, 1).
ExtractorParams plan(long long n, double sigma_h, double eps_ext);

/**
 * Multiplies the raw string by the seeded Toeplitz matrix over GF(2):
 * K = T(s) a with T of shape sigma x n and
 *
 *   T[i][j] = s[sigma - 1 + j - i],
 *
 * so the seed fills the first column bottom-to-top (s[0] at row sigma-1 up
 * to s[sigma-1] in the corner) and then the first row left-to-right
 * (s[sigma-1] .. s[n+sigma-2]). Constant diagonals make T Toeplitz and the
 * family two-universal. Serialized form is hex with bits MSB-first per
 * byte (BitVec convention).
 *
 * Throws std::invalid_argument when a or s does not match p.
 */
BitVec toeplitz_extract(const BitVec& a, const BitVec& s,
                        const ExtractorParams& p);

}  // namespace eqr
