#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shiftlif/matrix.hpp"
#include "shiftlif/neuron.hpp"
#include "shiftlif/quantizer.hpp"

namespace shiftlif {

// Integer weight matrix with a shared fractional-bit exponent:
// real value = data / 2^frac_bits. Every entry fits storage_bits signed.
struct FixedPointMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int frac_bits = 0;
  int storage_bits = 16;
  std::vector<std::int64_t> data;  // row-major

  std::int64_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Exact left-shifts each weight into K guard fractional bits, so the result
// equals the real dot product bit for bit. Lossy is the plain hardware
// right-shift W >> k, flooring toward -inf on negatives.
enum class ShiftAccumMode { Exact, Lossy };

struct Accumulator {
  std::vector<std::int64_t> sums;  // one per output row
  int frac_bits = 0;               // f + K in Exact mode, f in Lossy mode
  std::uint64_t visits = 0;        // synapses actually touched
  std::uint64_t skipped = 0;       // synapses skipped on zero spikes
  std::uint64_t shift_ops = 0;     // touched synapses with a nonzero shift
  std::uint64_t acc_ops = 0;       // integer additions performed

  std::vector<double> as_real() const;  // sums * 2^-frac_bits, exact
};

// Round-to-nearest-even encoding at the given scale. Values that do not fit
// the declared storage width raise a range error.
FixedPointMatrix quantize_weights(const Matrix& w, int frac_bits, int storage_bits = 16);

// Multiplier-free synaptic sum over one spike vector. Spikes must come from a
// Shift alphabet; zero spikes are skipped without touching their column.
Accumulator shift_accumulate(const FixedPointMatrix& w, std::span<const SpikeLevel> spikes,
                             const LevelSet& levels, ShiftAccumMode mode);

// Dense real dot product, the ground truth for equivalence tests.
std::vector<double> float_reference(const Matrix& w, std::span<const double> amplitudes);

// Operation counts predicted from a spike train alone, for the energy model
// and for checking the kernel's event-driven skip.
struct OpCounts {
  std::uint64_t synaptic_visits = 0;
  std::uint64_t skipped = 0;
  std::uint64_t shift_ops = 0;
  std::uint64_t acc_ops = 0;
};

OpCounts op_counter(const SpikeTensor& spikes, std::size_t fan_out);

}  // namespace shiftlif
