#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shiftlif/matrix.hpp"
#include "shiftlif/neuron.hpp"

namespace shiftlif {

enum class ReadoutMode { MeanOverTime };

// Fully connected spiking network: widths = {input, hidden..., classes}.
// Every hidden layer is spiking; the readout is a plain linear layer applied
// per timestep and averaged.
struct NetworkSpec {
  std::vector<std::size_t> widths;
  std::vector<NeuronParams> hidden;  // one per spiking layer
  std::size_t timesteps = 4;
  ReadoutMode readout = ReadoutMode::MeanOverTime;

  static NetworkSpec uniform(std::vector<std::size_t> widths, const NeuronParams& params,
                             std::size_t timesteps);
  void validate() const;
  std::size_t spiking_layers() const { return hidden.size(); }
};

struct TrainConfig {
  std::size_t epochs = 40;
  double learning_rate = 0.1;
  double lambda_sr = 0.0;
  double r_star = 0.05;
  std::uint64_t seed = 1;
  std::size_t batch_size = 8;

  void validate() const;
};

struct LinearParams {
  Matrix w;  // out x in
  std::vector<double> b;
};

struct Network {
  NetworkSpec spec;
  std::vector<LinearParams> layers;  // hidden linears then the readout

  static Network init(const NetworkSpec& spec, std::uint64_t seed);
  std::size_t parameter_count() const;
};

struct Sample {
  Matrix inputs;  // T x input_dim current sequences
  int label = 0;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::size_t classes = 0;
  std::size_t input_dim = 0;
  std::size_t timesteps = 0;
};

// Deterministic synthetic temporal-classification task: each class is an
// amplitude-and-phase-coded sinusoidal current template plus seeded noise.
// Both splits contain exactly samples_per_class sequences per class.
Dataset synth_dataset(std::uint64_t seed, std::size_t classes, std::size_t samples_per_class,
                      std::size_t timesteps, std::size_t input_dim, double noise = 0.25);

// Straight-through gradient mask: 1 on the closed quantizer support [0, 1].
double ste_mask(double u);
std::vector<double> ste_mask(std::span<const double> u);

// Spikes one layer emitted during the current mini-batch.
struct SpikeBuffer {
  std::vector<double> amplitudes;
  double mean_abs() const;
  void clear() { amplitudes.clear(); }
};

// One-sided activity penalty: mean over layers of [mean|S| - r*]+.
double spike_rate_loss(std::span<const SpikeBuffer> buffers, double r_star);

// Softmax cross-entropy (natural log, mean over the batch).
double cross_entropy(const Matrix& logits, std::span<const int> labels);
double total_loss(const Matrix& logits, std::span<const int> labels,
                  std::span<const SpikeBuffer> buffers, double lambda_sr, double r_star);

struct BackwardOptions {
  // Replace the spike quantizer by the clamp(v, 0, 1) identity whose true
  // derivative equals the STE mask; used by the finite-difference oracle.
  bool identity_quantizer = false;
  // Treat the reset subtraction as a constant during backprop. The oracle
  // turns this off because finite differences probe the attached function.
  bool detach_reset = true;
};

struct Gradients {
  std::vector<LinearParams> layers;
  static Gradients zeros_like(const Network& net);
};

struct BatchResult {
  double loss = 0.0;
  double ce = 0.0;
  double sr_loss = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
  std::vector<double> layer_rates;  // mean |S| per spiking layer
};

// BPTT over the batch; gradients are written (not accumulated) into grads.
BatchResult forward_backward(const Network& net, std::span<const Sample* const> batch,
                             const TrainConfig& config, Gradients& grads,
                             const BackwardOptions& options = {});

// Forward pass only.
BatchResult evaluate_batch(const Network& net, std::span<const Sample* const> batch,
                           const TrainConfig& config, const BackwardOptions& options = {});
double evaluate_accuracy(const Network& net, const std::vector<Sample>& samples,
                         const BackwardOptions& options = {});

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double ce = 0.0;
  double sr_loss = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> layer_rates;
};

struct FitResult {
  Network net;  // best-test-accuracy parameters
  double best_accuracy = 0.0;
  std::vector<EpochStats> history;
};

FitResult fit(const Network& net, const Dataset& data, const TrainConfig& config,
              const BackwardOptions& options = {});

// Self-describing versioned checkpoint (JSON text).
void save_checkpoint(const Network& net, std::ostream& out);
Network load_checkpoint(std::istream& in);

// Deployment check: hidden and readout synapses computed with the exact
// shift-accumulate kernel on fixed-point weights (Shift-alphabet nets only;
// other kinds fall back to dequantized real weights).
struct DeploymentEval {
  double float_accuracy = 0.0;
  double fixed_point_accuracy = 0.0;
  int frac_bits = 0;
};
DeploymentEval fixed_point_eval(const Network& net, const std::vector<Sample>& samples,
                                int frac_bits, int storage_bits = 16);

void history_to_csv(std::span<const EpochStats> history, std::ostream& out);

}  // namespace shiftlif
