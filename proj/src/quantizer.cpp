#include "shiftlif/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftlif {

namespace {

void check_precision(int precision) {
  if (precision < 0 || precision > kMaxPrecision) {
    throw std::invalid_argument("precision factor K must be in [0, " +
                                std::to_string(kMaxPrecision) + "], got " +
                                std::to_string(precision));
  }
}

void check_finite(double v) {
  if (!std::isfinite(v)) {
    throw std::domain_error("quantizer input must be finite");
  }
}

}  // namespace

LevelSet make_level_set(LevelKind kind, int precision, ShiftMode mode) {
  check_precision(precision);
  LevelSet set;
  set.kind = kind;
  set.precision = precision;
  set.shift_mode = mode;
  set.levels.reserve(static_cast<std::size_t>(precision) + 2);
  set.levels.push_back(0.0);
  switch (kind) {
    case LevelKind::Shift:
      for (int k = precision; k >= 0; --k) set.levels.push_back(std::ldexp(1.0, -k));
      break;
    case LevelKind::Int:
      for (int j = 1; j <= precision + 1; ++j) set.levels.push_back(static_cast<double>(j));
      break;
    case LevelKind::Uniform:
      for (int j = 1; j <= precision + 1; ++j)
        set.levels.push_back(static_cast<double>(j) / (precision + 1));
      break;
  }
  return set;
}

SpikeLevel q_shift(double v, int precision, ShiftMode mode) {
  check_precision(precision);
  check_finite(v);
  double c = std::clamp(v, 0.0, 1.0);
  double cutoff =
      std::ldexp(1.0, mode == ShiftMode::AlgorithmicClamp ? -(precision + 1) : -precision);
  if (c < cutoff) return {0, 0.0};
  // c = m * 2^e with m in [0.5, 1) makes ceil(-log2 c) == 1 - e, which on
  // [2^-K, 1] coincides with the floor rule. Only the boundary shell below
  // 2^-K ever trips the exponent clamp.
  int e = 0;
  (void)std::frexp(c, &e);
  int k = 1 - e;
  if (k > precision) k = precision;
  return {precision + 1 - k, std::ldexp(1.0, -k)};
}

SpikeLevel q_int(double v, int precision) {
  check_precision(precision);
  check_finite(v);
  if (v < 0.0) {
    throw std::invalid_argument("q_int requires a nonnegative input");
  }
  if (v < 0.5) return {0, 0.0};
  if (v >= precision + 0.5) {
    return {precision + 1, static_cast<double>(precision + 1)};
  }
  // v - floor(v) is exact for v >= 0, so the half-open bin test is exact.
  double whole = std::floor(v);
  double frac = v - whole;
  auto j = static_cast<std::int32_t>(whole) + (frac >= 0.5 ? 1 : 0);
  return {j, static_cast<double>(j)};
}

SpikeLevel q_uniform(double v, int precision) {
  check_precision(precision);
  check_finite(v);
  double c = std::clamp(v, 0.0, 1.0);
  const int n = precision + 1;
  // Decide index j = max{ j : c >= (2j-1)/(2n) } exactly. With c = M * 2^-s
  // (M, s integers) the test is 2*n*M >= (2j-1) * 2^s, so ties sit exactly on
  // the real midpoints and resolve toward the larger level.
  int e = 0;
  double m = std::frexp(c, &e);
  auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));  // exact
  int s = 53 - e;
  std::int32_t j = 0;
  if (s < 60) {  // otherwise c < 2^-6 / n and only the silent level qualifies
    const auto lhs = static_cast<__int128>(2) * n * mant;
    for (int cand = 1; cand <= n; ++cand) {
      const auto rhs = static_cast<__int128>(2 * cand - 1) << s;
      if (lhs >= rhs) {
        j = cand;
      } else {
        break;
      }
    }
  }
  if (j == 0) return {0, 0.0};
  return {j, static_cast<double>(j) / n};
}

SpikeLevel quantize(const LevelSet& set, double v) {
  switch (set.kind) {
    case LevelKind::Shift:
      return q_shift(v, set.precision, set.shift_mode);
    case LevelKind::Int:
      return q_int(v, set.precision);
    case LevelKind::Uniform:
      return q_uniform(v, set.precision);
  }
  throw std::logic_error("unreachable level kind");
}

int shift_exponent(const SpikeLevel& s, int precision) {
  check_precision(precision);
  if (s.index <= 0 || s.index > precision + 1) {
    throw std::invalid_argument("spike has no shift exponent");
  }
  return precision + 1 - s.index;
}

}  // namespace shiftlif
