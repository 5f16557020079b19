#include "shiftlif/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "shiftlif/numeric.hpp"

namespace shiftlif {

void EnergyConstants::validate() const {
  if (e_acc_pj < 0.0 || e_move_pj < 0.0 || e_weight_pj < 0.0) {
    throw std::invalid_argument("energy constants must be nonnegative");
  }
}

double spike_rate(const SpikeTensor& spikes) {
  if (spikes.entries() == 0) throw std::invalid_argument("spike tensor is empty");
  KahanSum sum;
  for (std::int32_t idx : spikes.index) sum.add(std::fabs(spikes.levels.levels[idx]));
  return sum.value() / static_cast<double>(spikes.entries());
}

double event_frequency(const SpikeTensor& spikes) {
  if (spikes.entries() == 0) throw std::invalid_argument("spike tensor is empty");
  std::size_t nonzero = 0;
  for (std::int32_t idx : spikes.index) nonzero += idx != 0;
  return static_cast<double>(nonzero) / static_cast<double>(spikes.entries());
}

double layer_energy_mj(std::size_t timesteps, double rate, std::size_t synapse_count,
                       const EnergyConstants& constants) {
  constants.validate();
  if (timesteps < 1) throw std::invalid_argument("timesteps must be >= 1");
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("spike rate must be finite and nonnegative");
  }
  const double pj = static_cast<double>(timesteps) * rate * constants.per_event_pj() *
                    static_cast<double>(synapse_count);
  return pj * 1e-9;  // pJ -> mJ
}

LayerEnergy measure_layer(std::string name, const SpikeTensor& spikes,
                          std::size_t synapse_count, const EnergyConstants& constants) {
  LayerEnergy layer;
  layer.name = std::move(name);
  layer.timesteps = spikes.timesteps;
  layer.rate = spike_rate(spikes);
  layer.events_per_step = event_frequency(spikes);
  layer.synapse_count = synapse_count;
  layer.energy_mj = layer_energy_mj(spikes.timesteps, layer.rate, synapse_count, constants);
  return layer;
}

}  // namespace shiftlif
