#include "shiftlif/synapse.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shiftlif/numeric.hpp"

namespace shiftlif {

std::vector<double> Accumulator::as_real() const {
  std::vector<double> out(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out[i] = std::ldexp(static_cast<double>(sums[i]), -frac_bits);
  }
  return out;
}

FixedPointMatrix quantize_weights(const Matrix& w, int frac_bits, int storage_bits) {
  if (frac_bits < 0 || storage_bits < 2 || storage_bits > 63) {
    throw std::invalid_argument("bad fixed-point geometry");
  }
  FixedPointMatrix fp;
  fp.rows = w.rows;
  fp.cols = w.cols;
  fp.frac_bits = frac_bits;
  fp.storage_bits = storage_bits;
  fp.data.resize(w.data.size());
  const auto bound = std::int64_t{1} << (storage_bits - 1);
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    if (!std::isfinite(w.data[i])) throw std::domain_error("weight is not finite");
    // nearbyint rounds ties to even under the default FP environment.
    double scaled = std::nearbyint(std::ldexp(w.data[i], frac_bits));
    if (scaled >= static_cast<double>(bound) || scaled < static_cast<double>(-bound)) {
      throw std::range_error("weight " + std::to_string(w.data[i]) + " overflows " +
                             std::to_string(storage_bits) + "-bit storage at f=" +
                             std::to_string(frac_bits));
    }
    fp.data[i] = static_cast<std::int64_t>(scaled);
  }
  return fp;
}

Accumulator shift_accumulate(const FixedPointMatrix& w, std::span<const SpikeLevel> spikes,
                             const LevelSet& levels, ShiftAccumMode mode) {
  if (levels.kind != LevelKind::Shift) {
    throw std::invalid_argument("shift_accumulate requires a Shift spike alphabet");
  }
  if (spikes.size() != w.cols) {
    throw std::invalid_argument("spike vector length does not match weight columns");
  }
  const int K = levels.precision;
  // Worst-case accumulator magnitude: weight width, K guard bits, one bit per
  // doubling of the column count, one sign bit. Must fit the 64-bit sums.
  const int needed = w.storage_bits + K + ceil_log2(w.cols ? w.cols : 1) + 1;
  if (needed > 64) {
    throw std::range_error("accumulator width budget exceeded: need " + std::to_string(needed) +
                           " bits");
  }

  Accumulator acc;
  acc.sums.assign(w.rows, 0);
  acc.frac_bits = mode == ShiftAccumMode::Exact ? w.frac_bits + K : w.frac_bits;

  for (std::size_t j = 0; j < spikes.size(); ++j) {
    const SpikeLevel& s = spikes[j];
    if (s.index == 0) {
      acc.skipped += w.rows;
      continue;  // event-driven skip: the column is never read
    }
    const int k = shift_exponent(s, K);
    acc.visits += w.rows;
    acc.acc_ops += w.rows;
    if (k > 0) acc.shift_ops += w.rows;
    for (std::size_t i = 0; i < w.rows; ++i) {
      const std::int64_t wij = w.at(i, j);
      if (mode == ShiftAccumMode::Exact) {
        acc.sums[i] += wij << (K - k);
      } else {
        acc.sums[i] += wij >> k;  // arithmetic shift: floors toward -inf
      }
    }
  }
  return acc;
}

std::vector<double> float_reference(const Matrix& w, std::span<const double> amplitudes) {
  if (amplitudes.size() != w.cols) {
    throw std::invalid_argument("amplitude vector length does not match weight columns");
  }
  std::vector<double> out(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) sum += w(i, j) * amplitudes[j];
    out[i] = sum;
  }
  return out;
}

OpCounts op_counter(const SpikeTensor& spikes, std::size_t fan_out) {
  OpCounts counts;
  const int top = static_cast<int>(spikes.levels.size()) - 1;
  for (std::int32_t idx : spikes.index) {
    if (idx == 0) {
      counts.skipped += fan_out;
      continue;
    }
    counts.synaptic_visits += fan_out;
    counts.acc_ops += fan_out;
    // Shift alphabets: every level below the top one needs an actual shift
    // (top level is 2^0). Non-shift alphabets count every visit as a shift
    // candidate only if a real multiplier-free path existed, so report 0.
    if (spikes.levels.kind == LevelKind::Shift && idx < top) counts.shift_ops += fan_out;
  }
  return counts;
}

}  // namespace shiftlif
