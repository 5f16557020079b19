#pragma once

#include <cstdint>
#include <vector>

namespace shiftlif {

enum class LevelKind { Shift, Int, Uniform };

// Behaviour of the shift quantizer on the boundary shell [2^-(K+1), 2^-K).
// AlgorithmicClamp clamps the extracted exponent to K and emits 2^-K there;
// FloorAdmissible emits the largest level not exceeding the input, i.e. 0.
// The two rules agree everywhere else. Neurons run AlgorithmicClamp, the
// error/entropy analysis runs FloorAdmissible.
enum class ShiftMode { AlgorithmicClamp, FloorAdmissible };

// One emitted spike: position in the ordered level list plus the amplitude it
// denotes. index 0 is always the silent level (amplitude 0).
struct SpikeLevel {
  std::int32_t index = 0;
  double amplitude = 0.0;

  bool operator==(const SpikeLevel&) const = default;
};

// A quantizer's discrete output alphabet together with its decision-rule
// parameters. All three kinds have exactly precision + 2 levels.
struct LevelSet {
  LevelKind kind = LevelKind::Shift;
  int precision = 0;  // K: smallest nonzero shift amplitude is 2^-K
  ShiftMode shift_mode = ShiftMode::AlgorithmicClamp;
  std::vector<double> levels;  // strictly increasing, levels[0] == 0

  std::size_t size() const { return levels.size(); }
};

// Largest K for which every shift amplitude is an exact binary fraction in a
// double and the integer decision arithmetic stays in range.
inline constexpr int kMaxPrecision = 30;

LevelSet make_level_set(LevelKind kind, int precision,
                        ShiftMode mode = ShiftMode::AlgorithmicClamp);

// Shift quantizer: input clamped to [0, 1], exponent recovered from the
// binary representation (never a floating-point log).
SpikeLevel q_shift(double v, int precision, ShiftMode mode);

// Integer-grid quantizer: 0 below 1/2, nearest integer with left-closed bins
// up to K, saturating at K+1. Requires v >= 0.
SpikeLevel q_int(double v, int precision);

// Uniform grid {j/(K+1)}: input clamped to [0, 1], nearest level with ties
// resolved toward the larger level. The tie decision is taken in exact
// rational arithmetic, not on rounded level values.
SpikeLevel q_uniform(double v, int precision);

// Dispatch on the level-set kind.
SpikeLevel quantize(const LevelSet& set, double v);

// Shift exponent k of a non-silent Shift-kind spike (amplitude == 2^-k).
int shift_exponent(const SpikeLevel& s, int precision);

}  // namespace shiftlif
