#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqr {

/**
 * Packed bit string.  Bit i lives at word i/64, position i%64 (LSB-first
 * packing).  Hex serialization is MSB-first per byte so that dumps read
 * naturally left to right; the packing order is an internal detail and
 * round-trips exactly.
 */
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t nbits)
      : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

  std::size_t size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  /// Number of set bits.
  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool operator==(const BitVec& o) const {
    return nbits_ == o.nbits_ && words_ == o.words_;
  }

  /// Hex string, 4 bits per character, MSB-first within each byte.
  /// A vector whose length is not a multiple of 8 is zero-padded at the end.
  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    const std::size_t nbytes = (nbits_ + 7) / 8;
    std::string out;
    out.reserve(2 * nbytes);
    for (std::size_t b = 0; b < nbytes; ++b) {
      std::uint8_t byte = 0;
      for (int k = 0; k < 8; ++k) {
        const std::size_t i = 8 * b + static_cast<std::size_t>(k);
        if (i < nbits_ && get(i)) byte |= static_cast<std::uint8_t>(1u << (7 - k));
      }
      out.push_back(digits[byte >> 4]);
      out.push_back(digits[byte & 0xf]);
    }
    return out;
  }

  /// Inverse of to_hex for a known bit count.
  static BitVec from_hex(const std::string& hex, std::size_t nbits) {
    if (hex.size() * 4 < nbits)
      throw std::invalid_argument("BitVec::from_hex: string too short");
    BitVec v(nbits);
    for (std::size_t i = 0; i < nbits; ++i) {
      const char c = hex[i / 4];
      int nibble;
      if (c >= '0' && c <= '9')
        nibble = c - '0';
      else if (c >= 'a' && c <= 'f')
        nibble = 10 + (c - 'a');
      else if (c >= 'A' && c <= 'F')
        nibble = 10 + (c - 'A');
      else
        throw std::invalid_argument("BitVec::from_hex: bad hex digit");
      const int bit_in_byte = static_cast<int>(i % 8);
      const int pos = bit_in_byte < 4 ? 3 - bit_in_byte : 7 - bit_in_byte;
      v.set(i, (nibble >> pos) & 1);
    }
    return v;
  }

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace eqr
