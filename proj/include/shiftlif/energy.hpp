#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shiftlif/neuron.hpp"

namespace shiftlif {

// Per-event energy constants in pJ. These are configuration, not silicon
// ground truth; profiles let different neuron kinds carry different costs.
struct EnergyConstants {
  double e_acc_pj = 0.9;
  double e_move_pj = 1.2;
  double e_weight_pj = 2.5;
  std::string profile = "default";

  void validate() const;
  double per_event_pj() const { return e_acc_pj + e_move_pj + e_weight_pj; }
};

// Mean absolute spike amplitude over all (timestep, neuron) entries.
double spike_rate(const SpikeTensor& spikes);

// Fraction of entries that are nonzero events, reported alongside the
// amplitude-based rate since multi-level spikes make the two differ.
double event_frequency(const SpikeTensor& spikes);

// E = T * s * (E_ACC + E_move + E_weight) * synapse_count, returned in mJ.
double layer_energy_mj(std::size_t timesteps, double rate, std::size_t synapse_count,
                       const EnergyConstants& constants);

struct LayerEnergy {
  std::string name;
  std::size_t timesteps = 0;
  double rate = 0.0;
  double events_per_step = 0.0;  // nonzero-entry frequency
  std::size_t synapse_count = 0;
  double energy_mj = 0.0;
};

struct EnergyReport {
  std::vector<LayerEnergy> layers;
  double total_mj = 0.0;
};

LayerEnergy measure_layer(std::string name, const SpikeTensor& spikes,
                          std::size_t synapse_count, const EnergyConstants& constants);

}  // namespace shiftlif
