#pragma once

// Independent reference implementations used only by the test suites. These
// deliberately take different routes than the library: explicit level scans,
// a literal transcription of the forward-pass pseudocode with a floating
// log, and exact rational arithmetic on the IEEE bit patterns.

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "shiftlif/quantizer.hpp"

namespace oracles {

// Largest admissible level <= v over the explicit list (clamped to [0, 1]).
inline double floor_scan(const shiftlif::LevelSet& set, double v) {
  double c = std::clamp(v, 0.0, 1.0);
  double best = 0.0;
  for (double level : set.levels) {
    if (level <= c && level > best) best = level;
  }
  return best;
}

// Literal transcription of the ShiftLIF spike-generation steps, including
// the floating-point log the library avoids.
inline double alg1_transcription(double v, int K) {
  double c = std::max(0.0, std::min(v, 1.0));
  if (c < std::pow(2.0, -(K + 1))) return 0.0;
  int k = static_cast<int>(std::ceil(-std::log2(c)));
  return std::pow(2.0, -std::min(k, K));
}

// Linear interval scan for the integer grid.
inline int int_scan(double v, int K) {
  if (v < 0.5) return 0;
  for (int j = 1; j <= K; ++j) {
    if (v >= j - 0.5 && v < j + 0.5) return j;
  }
  return K + 1;
}

// Nearest level of {j/(K+1)} with ties toward the larger level, decided in
// exact rational arithmetic on the bit pattern (v = a / 2^s).
inline int uniform_scan(double v, int K) {
  double c = std::clamp(v, 0.0, 1.0);
  if (c == 0.0) return 0;
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(c);
  const int biased = static_cast<int>((bits >> 52) & 0x7ff);
  const std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);
  std::uint64_t a;
  int s;
  if (biased == 0) {
    a = frac;
    s = 1074;
  } else {
    a = frac | (std::uint64_t{1} << 52);
    s = 1075 - biased;
  }
  const int n = K + 1;
  if (s > 80) return 0;  // far below the first midpoint 1/(2n)
  // c < midpoint(j, j+1) = (2j+1)/(2n)  <=>  2*n*a < (2j+1) * 2^s
  const auto lhs = static_cast<__int128>(2) * n * a;
  for (int j = 0; j <= K; ++j) {
    const auto rhs = static_cast<__int128>(2 * j + 1) << s;
    if (lhs < rhs) return j;
  }
  return K + 1;
}

// Exact accumulator value as an integer numerator over 2^(f+K).
inline __int128 exact_row_numerator(const std::vector<std::int64_t>& weights,
                                    const std::vector<int>& exponents, int K) {
  __int128 sum = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (exponents[j] < 0) continue;  // silent
    sum += static_cast<__int128>(weights[j]) << (K - exponents[j]);
  }
  return sum;
}

}  // namespace oracles
