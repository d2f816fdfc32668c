#include "eqr/extract.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace eqr {

ExtractorParams plan(long long n, double sigma_h, double eps_ext) {
  if (n < 0) throw std::domain_error("plan: negative input length");
  if (sigma_h < 0.0 || !std::isfinite(sigma_h))
    throw std::domain_error("plan: min-entropy budget must be >= 0");
  if (!(eps_ext > 0.0 && eps_ext < 1.0))
    throw std::domain_error("plan: extraction error must be in (0, 1)");

  ExtractorParams p;
  p.n = n;
  p.sigma_h = sigma_h;
  p.eps_ext = eps_ext;
  const double raw = sigma_h - 2.0 * (-std::log2(eps_ext));
  p.sigma = raw > 0.0 ? static_cast<long long>(std::floor(raw)) : 0;
  if (p.sigma > n) p.sigma = n;  // hashing cannot output more than it reads
  p.l = p.sigma > 0 ? n + p.sigma - 1 : 0;
  return p;
}

namespace {

// Word j of the seed shifted right by `off` bits, i.e. bits
// s[off + 64 j .. off + 64 j + 63] packed LSB-first. Out-of-range seed
// bits read as zero; callers mask against the input string anyway.
inline std::uint64_t shifted_word(const std::vector<std::uint64_t>& w,
                                  std::size_t off, std::size_t j) {
  const std::size_t base = (off >> 6) + j;
  const unsigned sh = static_cast<unsigned>(off & 63);
  std::uint64_t lo = base < w.size() ? w[base] : 0;
  if (sh == 0) return lo;
  std::uint64_t hi = base + 1 < w.size() ? w[base + 1] : 0;
  return (lo >> sh) | (hi << (64 - sh));
}

}  // namespace

BitVec toeplitz_extract(const BitVec& a, const BitVec& s,
                        const ExtractorParams& p) {
  if (static_cast<long long>(a.size()) != p.n)
    throw std::invalid_argument("toeplitz_extract: input length mismatch");
  if (static_cast<long long>(s.size()) != p.l)
    throw std::invalid_argument("toeplitz_extract: seed length mismatch");
  const std::size_t sigma = static_cast<std::size_t>(p.sigma);
  BitVec key(sigma);
  if (sigma == 0) return key;

  // Row i of T(s) holds the seed window starting at bit sigma - 1 - i, so
  // K[i] is the parity of (s >> (sigma - 1 - i)) AND a. Trailing bits of
  // a's last word are zero by construction, which masks seed overrun.
  const auto& aw = a.words();
  const auto& sw = s.words();
  for (std::size_t i = 0; i < sigma; ++i) {
    const std::size_t off = sigma - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < aw.size(); ++j)
      acc ^= aw[j] & shifted_word(sw, off, j);
    key.set(i, std::popcount(acc) & 1u);
  }
  return key;
}

}  // namespace eqr
