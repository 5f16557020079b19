#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "shiftlif/matrix.hpp"
#include "shiftlif/quantizer.hpp"

namespace shiftlif {

// Lif is the binary baseline; the multi-level kinds share the same charge
// dynamics and proportional soft reset and differ only in the quantizer.
// UniformLif exists for the grid ablation (same level budget, uniform grid).
enum class NeuronKind { Lif, ShiftLif, IntLif, UniformLif };

const char* to_string(NeuronKind kind);
NeuronKind neuron_kind_from_string(const std::string& name);

struct NeuronParams {
  NeuronKind kind = NeuronKind::ShiftLif;
  double tau = 2.0;      // membrane time constant, in steps
  double v_th = 1.0;     // firing threshold
  double v_reset = 0.0;  // resting potential
  int precision = 2;     // K; ignored by Lif

  void validate() const;
  // Output alphabet. Lif reports the binary Int(K=0) alphabet {0, 1}.
  LevelSet level_set() const;
};

struct NeuronState {
  std::vector<double> v;           // membrane potential per neuron
  std::vector<double> prev_spike;  // previous spike, used only by Lif whose
                                   // soft reset folds into the next charge
};

NeuronState make_state(const NeuronParams& params, std::size_t neurons);

// One timestep each. State is updated in place; the emitted levels are
// returned. Input length must match the state width.
std::vector<SpikeLevel> lif_step(NeuronState& state, std::span<const double> x,
                                 const NeuronParams& params);
std::vector<SpikeLevel> shiftlif_step(NeuronState& state, std::span<const double> x,
                                      const NeuronParams& params);
std::vector<SpikeLevel> intlif_step(NeuronState& state, std::span<const double> x,
                                    const NeuronParams& params);
std::vector<SpikeLevel> uniformlif_step(NeuronState& state, std::span<const double> x,
                                        const NeuronParams& params);
std::vector<SpikeLevel> neuron_step(NeuronState& state, std::span<const double> x,
                                    const NeuronParams& params);

// Spike train of one layer over a simulation window, stored as level indices.
struct SpikeTensor {
  std::size_t timesteps = 0;
  std::size_t neurons = 0;
  LevelSet levels;
  std::vector<std::int32_t> index;  // row-major timesteps x neurons

  std::int32_t level(std::size_t t, std::size_t n) const { return index[t * neurons + n]; }
  double amplitude(std::size_t t, std::size_t n) const { return levels.levels[level(t, n)]; }
  std::size_t entries() const { return index.size(); }
};

struct RunResult {
  SpikeTensor spikes;
  // Charged (post-integration, pre-reset) membrane values, one row per step.
  std::optional<Matrix> membrane;
};

// Simulate a fresh layer over a T x N input-current matrix. The state starts
// at v_reset and is not carried across calls.
RunResult run_sequence(const NeuronParams& params, const Matrix& inputs,
                       bool record_membrane = false);

}  // namespace shiftlif
