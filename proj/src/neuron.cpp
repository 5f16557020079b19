#include "shiftlif/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftlif {

namespace {

void check_width(const NeuronState& state, std::span<const double> x) {
  if (state.v.size() != x.size()) {
    throw std::invalid_argument("input width " + std::to_string(x.size()) +
                                " does not match layer width " + std::to_string(state.v.size()));
  }
}

// Leaky integration, Alg. 1 step 2: V <- V + (V_reset - V) / tau + X.
double charge(double v, double x, const NeuronParams& p) {
  return v + (p.v_reset - v) / p.tau + x;
}

}  // namespace

const char* to_string(NeuronKind kind) {
  switch (kind) {
    case NeuronKind::Lif: return "lif";
    case NeuronKind::ShiftLif: return "shiftlif";
    case NeuronKind::IntLif: return "intlif";
    case NeuronKind::UniformLif: return "uniformlif";
  }
  throw std::logic_error("unreachable neuron kind");
}

NeuronKind neuron_kind_from_string(const std::string& name) {
  if (name == "lif") return NeuronKind::Lif;
  if (name == "shiftlif") return NeuronKind::ShiftLif;
  if (name == "intlif") return NeuronKind::IntLif;
  if (name == "uniformlif") return NeuronKind::UniformLif;
  throw std::invalid_argument("unknown neuron kind '" + name + "'");
}

void NeuronParams::validate() const {
  std::string err;
  if (!(tau >= 1.0)) err += "tau must be >= 1; ";
  if (!(v_th > v_reset)) err += "v_th must exceed v_reset; ";
  if (precision < 0 || precision > kMaxPrecision) err += "K out of range; ";
  if (!err.empty()) throw std::invalid_argument("invalid neuron parameters: " + err);
}

LevelSet NeuronParams::level_set() const {
  switch (kind) {
    case NeuronKind::Lif:
      return make_level_set(LevelKind::Int, 0);
    case NeuronKind::ShiftLif:
      return make_level_set(LevelKind::Shift, precision, ShiftMode::AlgorithmicClamp);
    case NeuronKind::IntLif:
      return make_level_set(LevelKind::Int, precision);
    case NeuronKind::UniformLif:
      return make_level_set(LevelKind::Uniform, precision);
  }
  throw std::logic_error("unreachable neuron kind");
}

NeuronState make_state(const NeuronParams& params, std::size_t neurons) {
  params.validate();
  NeuronState state;
  state.v.assign(neurons, params.v_reset);
  state.prev_spike.assign(neurons, 0.0);
  return state;
}

std::vector<SpikeLevel> lif_step(NeuronState& state, std::span<const double> x,
                                 const NeuronParams& p) {
  check_width(state, x);
  std::vector<SpikeLevel> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Soft reset from the previous step lands here, after the leak.
    double u = charge(state.v[i], x[i], p) - state.prev_spike[i] * p.v_th;
    bool fired = u >= p.v_th;
    out[i] = fired ? SpikeLevel{1, 1.0} : SpikeLevel{0, 0.0};
    state.v[i] = u;
    state.prev_spike[i] = fired ? 1.0 : 0.0;
  }
  return out;
}

std::vector<SpikeLevel> shiftlif_step(NeuronState& state, std::span<const double> x,
                                      const NeuronParams& p) {
  check_width(state, x);
  std::vector<SpikeLevel> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double u = charge(state.v[i], x[i], p);
    // The clamp bounds only the quantizer argument; the reset below acts on
    // the unclamped membrane, so super-threshold residue is retained.
    double bounded = std::clamp(u, 0.0, p.v_th) / p.v_th;
    SpikeLevel s = q_shift(bounded, p.precision, ShiftMode::AlgorithmicClamp);
    out[i] = s;
    state.v[i] = u - s.amplitude * p.v_th;
  }
  return out;
}

std::vector<SpikeLevel> intlif_step(NeuronState& state, std::span<const double> x,
                                    const NeuronParams& p) {
  check_width(state, x);
  std::vector<SpikeLevel> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double u = charge(state.v[i], x[i], p);
    SpikeLevel s = q_int(std::max(u, 0.0) / p.v_th, p.precision);
    out[i] = s;
    // Proportional soft reset; may overshoot below v_reset by design.
    state.v[i] = u - s.amplitude * p.v_th;
  }
  return out;
}

std::vector<SpikeLevel> uniformlif_step(NeuronState& state, std::span<const double> x,
                                        const NeuronParams& p) {
  check_width(state, x);
  std::vector<SpikeLevel> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double u = charge(state.v[i], x[i], p);
    SpikeLevel s = q_uniform(std::clamp(u, 0.0, p.v_th) / p.v_th, p.precision);
    out[i] = s;
    state.v[i] = u - s.amplitude * p.v_th;
  }
  return out;
}

std::vector<SpikeLevel> neuron_step(NeuronState& state, std::span<const double> x,
                                    const NeuronParams& p) {
  switch (p.kind) {
    case NeuronKind::Lif:
      return lif_step(state, x, p);
    case NeuronKind::ShiftLif:
      return shiftlif_step(state, x, p);
    case NeuronKind::IntLif:
      return intlif_step(state, x, p);
    case NeuronKind::UniformLif:
      return uniformlif_step(state, x, p);
  }
  throw std::logic_error("unreachable neuron kind");
}

RunResult run_sequence(const NeuronParams& params, const Matrix& inputs, bool record_membrane) {
  params.validate();
  if (inputs.rows == 0) {
    throw std::invalid_argument("run_sequence needs at least one timestep");
  }
  NeuronState state = make_state(params, inputs.cols);

  RunResult result;
  result.spikes.timesteps = inputs.rows;
  result.spikes.neurons = inputs.cols;
  result.spikes.levels = params.level_set();
  result.spikes.index.resize(inputs.rows * inputs.cols);
  if (record_membrane) result.membrane = Matrix(inputs.rows, inputs.cols);

  for (std::size_t t = 0; t < inputs.rows; ++t) {
    // Record the charged value before the step's reset lands. For Lif the
    // deferred reset of step t-1 is part of step t's charge, so recompute it
    // the same way the step does.
    if (record_membrane) {
      for (std::size_t i = 0; i < inputs.cols; ++i) {
        double u = charge(state.v[i], inputs(t, i), params);
        if (params.kind == NeuronKind::Lif) u -= state.prev_spike[i] * params.v_th;
        (*result.membrane)(t, i) = u;
      }
    }
    auto spikes = neuron_step(state, inputs.row(t), params);
    for (std::size_t i = 0; i < inputs.cols; ++i) {
      result.spikes.index[t * inputs.cols + i] = spikes[i].index;
    }
  }
  return result;
}

}  // namespace shiftlif
