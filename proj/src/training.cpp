#include "shiftlif/training.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shiftlif/numeric.hpp"
#include "shiftlif/quantizer.hpp"
#include "shiftlif/synapse.hpp"

namespace shiftlif {

namespace {

double charge(double carry, double x, const NeuronParams& p) {
  return carry + (p.v_reset - carry) / p.tau + x;
}

// Forward spike value for a charged membrane u.
double spike_of(double u, const NeuronParams& p, bool identity) {
  if (identity) return std::clamp(u / p.v_th, 0.0, 1.0);
  switch (p.kind) {
    case NeuronKind::Lif:
      return u >= p.v_th ? 1.0 : 0.0;
    case NeuronKind::ShiftLif:
      return q_shift(std::clamp(u, 0.0, p.v_th) / p.v_th, p.precision, ShiftMode::AlgorithmicClamp)
          .amplitude;
    case NeuronKind::IntLif:
      return q_int(std::max(u, 0.0) / p.v_th, p.precision).amplitude;
    case NeuronKind::UniformLif:
      return q_uniform(std::clamp(u, 0.0, p.v_th) / p.v_th, p.precision).amplitude;
  }
  throw std::logic_error("unreachable neuron kind");
}

// Surrogate derivative d spike / d membrane. The binary baseline uses a unit
// rectangle around the threshold; the multi-level kinds pass gradients on the
// closed quantizer support.
double surrogate_of(double u, const NeuronParams& p, bool identity) {
  if (identity || p.kind == NeuronKind::ShiftLif || p.kind == NeuronKind::UniformLif) {
    return ste_mask(u / p.v_th) / p.v_th;
  }
  if (p.kind == NeuronKind::Lif) {
    return std::fabs(u - p.v_th) <= 0.5 ? 1.0 : 0.0;
  }
  // IntLif: support runs up to the saturation boundary K + 1/2.
  double x = u / p.v_th;
  return (x >= 0.0 && x <= p.precision + 0.5) ? 1.0 / p.v_th : 0.0;
}

double reset_carry(double u, double spike, const NeuronParams& p) {
  if (p.kind == NeuronKind::Lif) return u;  // Lif folds the reset into the next charge
  return u - spike * p.v_th;
}

struct LayerTrace {
  Matrix charged;  // T x n
  Matrix spikes;   // T x n amplitudes
};

struct SampleTrace {
  std::vector<LayerTrace> layers;
  std::vector<double> sbar;    // time-averaged final spikes
  std::vector<double> logits;  // classes
};

void matvec(const LinearParams& lin, std::span<const double> in, std::span<double> out) {
  for (std::size_t r = 0; r < lin.w.rows; ++r) {
    double sum = lin.b[r];
    const double* row = lin.w.data.data() + r * lin.w.cols;
    for (std::size_t c = 0; c < lin.w.cols; ++c) sum += row[c] * in[c];
    out[r] = sum;
  }
}

void forward_sample(const Network& net, const Sample& sample, bool identity, SampleTrace& tr) {
  const auto& spec = net.spec;
  const std::size_t T = spec.timesteps;
  const std::size_t L = spec.spiking_layers();
  if (sample.inputs.rows != T || sample.inputs.cols != spec.widths.front()) {
    throw std::invalid_argument("sample shape does not match network spec");
  }

  tr.layers.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    tr.layers[l].charged = Matrix(T, spec.widths[l + 1]);
    tr.layers[l].spikes = Matrix(T, spec.widths[l + 1]);
  }

  std::vector<std::vector<double>> carry(L);
  std::vector<std::vector<double>> prev_spike(L);
  for (std::size_t l = 0; l < L; ++l) {
    carry[l].assign(spec.widths[l + 1], spec.hidden[l].v_reset);
    prev_spike[l].assign(spec.widths[l + 1], 0.0);
  }

  const std::size_t classes = spec.widths.back();
  tr.sbar.assign(spec.widths[L], 0.0);
  tr.logits.assign(classes, 0.0);
  std::vector<double> z;

  for (std::size_t t = 0; t < T; ++t) {
    std::span<const double> in = sample.inputs.row(t);
    for (std::size_t l = 0; l < L; ++l) {
      const NeuronParams& p = spec.hidden[l];
      const std::size_t n = spec.widths[l + 1];
      z.assign(n, 0.0);
      matvec(net.layers[l], in, z);
      for (std::size_t i = 0; i < n; ++i) {
        double u = charge(carry[l][i], z[i], p);
        if (p.kind == NeuronKind::Lif) u -= prev_spike[l][i] * p.v_th;
        double s = spike_of(u, p, identity);
        tr.layers[l].charged(t, i) = u;
        tr.layers[l].spikes(t, i) = s;
        carry[l][i] = reset_carry(u, s, p);
        prev_spike[l][i] = s;
      }
      in = tr.layers[l].spikes.row(t);
    }
    for (std::size_t i = 0; i < spec.widths[L]; ++i) {
      tr.sbar[i] += tr.layers[L - 1].spikes(t, i) / static_cast<double>(T);
    }
  }
  matvec(net.layers[L], tr.sbar, tr.logits);
}

std::vector<double> softmax(std::span<const double> logits) {
  double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

BatchResult run_batch(const Network& net, std::span<const Sample* const> batch,
                      const TrainConfig& config, Gradients* grads,
                      const BackwardOptions& options) {
  net.spec.validate();
  config.validate();
  if (batch.empty()) throw std::invalid_argument("batch is empty");
  const auto& spec = net.spec;
  const std::size_t L = spec.spiking_layers();
  const std::size_t T = spec.timesteps;
  const std::size_t B = batch.size();
  const std::size_t classes = spec.widths.back();

  // Spike buffers start empty on every pass.
  std::vector<SpikeBuffer> buffers(L);
  std::vector<SampleTrace> traces(B);
  Matrix logits(B, classes);
  std::vector<int> labels(B);

  for (std::size_t b = 0; b < B; ++b) {
    forward_sample(net, *batch[b], options.identity_quantizer, traces[b]);
    labels[b] = batch[b]->label;
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes) {
      throw std::invalid_argument("label out of range");
    }
    for (std::size_t c = 0; c < classes; ++c) logits(b, c) = traces[b].logits[c];
    for (std::size_t l = 0; l < L; ++l) {
      const auto& s = traces[b].layers[l].spikes.data;
      buffers[l].amplitudes.insert(buffers[l].amplitudes.end(), s.begin(), s.end());
    }
  }

  BatchResult result;
  result.count = B;
  result.ce = cross_entropy(logits, labels);
  result.sr_loss = spike_rate_loss(buffers, config.r_star);
  result.loss = result.ce + config.lambda_sr * result.sr_loss;
  result.layer_rates.resize(L);
  for (std::size_t l = 0; l < L; ++l) result.layer_rates[l] = buffers[l].mean_abs();
  for (std::size_t b = 0; b < B; ++b) {
    if (argmax(logits.row(b)) == static_cast<std::size_t>(labels[b])) ++result.correct;
  }
  if (!std::isfinite(result.loss)) {
    std::ostringstream err;
    err << "training fault: non-finite loss (ce=" << result.ce << ", sr=" << result.sr_loss
        << ", batch=" << B << ")";
    throw std::runtime_error(err.str());
  }
  if (grads == nullptr) return result;

  *grads = Gradients::zeros_like(net);
  // Constant regularizer gradient per spike entry for layers above target.
  std::vector<double> reg_grad(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    if (config.lambda_sr > 0.0 && result.layer_rates[l] > config.r_star) {
      reg_grad[l] = config.lambda_sr /
                    (static_cast<double>(L) * static_cast<double>(buffers[l].amplitudes.size()));
    }
  }

  std::vector<double> du, dnext, dlogit;
  for (std::size_t b = 0; b < B; ++b) {
    const SampleTrace& tr = traces[b];
    auto p_hat = softmax(tr.logits);
    dlogit.assign(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      dlogit[c] = (p_hat[c] - (static_cast<int>(c) == labels[b] ? 1.0 : 0.0)) /
                  static_cast<double>(B);
    }
    LinearParams& g_read = grads->layers[L];
    const LinearParams& readout = net.layers[L];
    for (std::size_t c = 0; c < classes; ++c) {
      g_read.b[c] += dlogit[c];
      for (std::size_t i = 0; i < spec.widths[L]; ++i) {
        g_read.w(c, i) += dlogit[c] * tr.sbar[i];
      }
    }

    // d loss / d spike for every layer and step; seeded with the readout path
    // (same value at each step, the readout averages over time) and the
    // regularizer constant.
    std::vector<Matrix> dspike(L);
    for (std::size_t l = 0; l < L; ++l) dspike[l] = Matrix(T, spec.widths[l + 1], reg_grad[l]);
    for (std::size_t i = 0; i < spec.widths[L]; ++i) {
      double g = 0.0;
      for (std::size_t c = 0; c < classes; ++c) g += readout.w(c, i) * dlogit[c];
      g /= static_cast<double>(T);
      for (std::size_t t = 0; t < T; ++t) dspike[L - 1](t, i) += g;
    }

    for (std::size_t l = L; l-- > 0;) {
      const NeuronParams& p = spec.hidden[l];
      const std::size_t n = spec.widths[l + 1];
      const double gamma = 1.0 - 1.0 / p.tau;
      LinearParams& g_lin = grads->layers[l];
      const LinearParams& lin = net.layers[l];
      du.assign(n, 0.0);
      dnext.assign(n, 0.0);
      for (std::size_t t = T; t-- > 0;) {
        for (std::size_t i = 0; i < n; ++i) {
          const double u = tr.layers[l].charged(t, i);
          const double mask = surrogate_of(u, p, options.identity_quantizer);
          double path = gamma;
          if (!options.detach_reset) {
            if (p.kind == NeuronKind::Lif) {
              path = gamma - p.v_th * mask;
            } else {
              path = gamma * (1.0 - p.v_th * mask);
            }
          }
          du[i] = dspike[l](t, i) * mask + dnext[i] * path;
        }
        std::span<const double> in =
            l == 0 ? batch[b]->inputs.row(t) : tr.layers[l - 1].spikes.row(t);
        for (std::size_t i = 0; i < n; ++i) {
          g_lin.b[i] += du[i];
          double* grow = g_lin.w.data.data() + i * g_lin.w.cols;
          for (std::size_t c = 0; c < g_lin.w.cols; ++c) grow[c] += du[i] * in[c];
        }
        if (l > 0) {
          for (std::size_t c = 0; c < spec.widths[l]; ++c) {
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += lin.w(i, c) * du[i];
            dspike[l - 1](t, c) += g;
          }
        }
        std::swap(du, dnext);
      }
    }
  }
  return result;
}

std::mt19937_64 seeded_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

NetworkSpec NetworkSpec::uniform(std::vector<std::size_t> widths, const NeuronParams& params,
                                 std::size_t timesteps) {
  NetworkSpec spec;
  spec.widths = std::move(widths);
  if (spec.widths.size() >= 2) {
    spec.hidden.assign(spec.widths.size() - 2, params);
  }
  spec.timesteps = timesteps;
  spec.validate();
  return spec;
}

void NetworkSpec::validate() const {
  std::string err;
  if (widths.size() < 3) err += "need input, at least one hidden, and output widths; ";
  for (std::size_t w : widths) {
    if (w == 0) {
      err += "layer widths must be >= 1; ";
      break;
    }
  }
  if (widths.size() >= 2 && hidden.size() != widths.size() - 2) {
    err += "one NeuronParams entry per hidden layer required; ";
  }
  if (timesteps == 0) err += "timesteps must be >= 1; ";
  if (!err.empty()) throw std::invalid_argument("invalid network spec: " + err);
  for (const auto& p : hidden) p.validate();
}

void TrainConfig::validate() const {
  std::string err;
  if (!(learning_rate > 0.0)) err += "learning rate must be positive; ";
  if (lambda_sr < 0.0) err += "lambda_sr must be >= 0; ";
  if (r_star < 0.0 || r_star > 1.0) err += "r_star must be in [0, 1]; ";
  if (batch_size == 0) err += "batch size must be >= 1; ";
  if (!err.empty()) throw std::invalid_argument("invalid train config: " + err);
}

Network Network::init(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  auto rng = seeded_rng(seed);
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    LinearParams lin;
    lin.w = Matrix(fan_out, fan_in);
    lin.b.assign(fan_out, 0.0);
    for (auto& w : lin.w.data) w = dist(rng);
    net.layers.push_back(std::move(lin));
  }
  return net;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& lin : layers) n += lin.w.data.size() + lin.b.size();
  return n;
}

Dataset synth_dataset(std::uint64_t seed, std::size_t classes, std::size_t samples_per_class,
                      std::size_t timesteps, std::size_t input_dim, double noise) {
  if (classes < 2 || samples_per_class == 0 || timesteps == 0 || input_dim == 0 || noise < 0.0) {
    throw std::invalid_argument("invalid synthetic dataset spec");
  }
  Dataset data;
  data.classes = classes;
  data.input_dim = input_dim;
  data.timesteps = timesteps;

  auto rng = seeded_rng(seed);
  std::uniform_real_distribution<double> amp_dist(0.2, 1.0);
  std::normal_distribution<double> noise_dist(0.0, 1.0);
  constexpr double two_pi = 6.283185307179586;

  // Per-class amplitude profile and phase; the class identity lives in the
  // time-averaged input once the noise is removed.
  std::vector<std::vector<double>> amps(classes, std::vector<double>(input_dim));
  for (auto& a : amps) {
    for (auto& v : a) v = amp_dist(rng);
  }

  auto make_sample = [&](std::size_t c) {
    Sample s;
    s.label = static_cast<int>(c);
    s.inputs = Matrix(timesteps, input_dim);
    const double phase = two_pi * static_cast<double>(c) / static_cast<double>(classes);
    for (std::size_t t = 0; t < timesteps; ++t) {
      for (std::size_t i = 0; i < input_dim; ++i) {
        double wave = std::sin(two_pi * static_cast<double>(t) / static_cast<double>(timesteps) +
                               phase + two_pi * static_cast<double>(i) / static_cast<double>(input_dim));
        s.inputs(t, i) = amps[c][i] * (0.55 + 0.45 * wave) + noise * noise_dist(rng);
      }
    }
    return s;
  };

  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < samples_per_class; ++k) data.train.push_back(make_sample(c));
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < samples_per_class; ++k) data.test.push_back(make_sample(c));
  }
  return data;
}

double ste_mask(double u) { return (u >= 0.0 && u <= 1.0) ? 1.0 : 0.0; }

std::vector<double> ste_mask(std::span<const double> u) {
  std::vector<double> mask(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) mask[i] = ste_mask(u[i]);
  return mask;
}

double SpikeBuffer::mean_abs() const {
  if (amplitudes.empty()) throw std::invalid_argument("spike buffer is empty");
  KahanSum sum;
  for (double a : amplitudes) sum.add(std::fabs(a));
  return sum.value() / static_cast<double>(amplitudes.size());
}

double spike_rate_loss(std::span<const SpikeBuffer> buffers, double r_star) {
  if (buffers.empty()) throw std::invalid_argument("no spike buffers");
  KahanSum sum;
  for (const auto& buf : buffers) sum.add(std::max(0.0, buf.mean_abs() - r_star));
  return sum.value() / static_cast<double>(buffers.size());
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows != labels.size()) throw std::invalid_argument("label count mismatch");
  KahanSum sum;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    auto p = softmax(logits.row(b));
    sum.add(-std::log(std::max(p[static_cast<std::size_t>(labels[b])], 1e-300)));
  }
  return sum.value() / static_cast<double>(logits.rows);
}

double total_loss(const Matrix& logits, std::span<const int> labels,
                  std::span<const SpikeBuffer> buffers, double lambda_sr, double r_star) {
  return cross_entropy(logits, labels) + lambda_sr * spike_rate_loss(buffers, r_star);
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& lin : net.layers) {
    LinearParams z;
    z.w = Matrix(lin.w.rows, lin.w.cols);
    z.b.assign(lin.b.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

BatchResult forward_backward(const Network& net, std::span<const Sample* const> batch,
                             const TrainConfig& config, Gradients& grads,
                             const BackwardOptions& options) {
  return run_batch(net, batch, config, &grads, options);
}

BatchResult evaluate_batch(const Network& net, std::span<const Sample* const> batch,
                           const TrainConfig& config, const BackwardOptions& options) {
  return run_batch(net, batch, config, nullptr, options);
}

double evaluate_accuracy(const Network& net, const std::vector<Sample>& samples,
                         const BackwardOptions& options) {
  if (samples.empty()) throw std::invalid_argument("no samples to evaluate");
  std::size_t correct = 0;
  SampleTrace tr;
  for (const auto& sample : samples) {
    forward_sample(net, sample, options.identity_quantizer, tr);
    if (argmax(tr.logits) == static_cast<std::size_t>(sample.label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

FitResult fit(const Network& net, const Dataset& data, const TrainConfig& config,
              const BackwardOptions& options) {
  config.validate();
  net.spec.validate();
  if (data.train.empty() || data.test.empty()) {
    throw std::invalid_argument("dataset must contain train and test samples");
  }

  FitResult result;
  result.net = net;
  Network current = net;
  if (config.epochs == 0) return result;

  auto rng = seeded_rng(config.seed);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grads;
  const std::size_t L = net.spec.spiking_layers();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0, ce_sum = 0.0, sr_sum = 0.0;
    std::vector<double> rate_sum(L, 0.0);
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<const Sample*> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&data.train[order[i]]);

      BatchResult br = forward_backward(current, batch, config, grads, options);
      for (std::size_t l = 0; l < current.layers.size(); ++l) {
        auto& lin = current.layers[l];
        const auto& g = grads.layers[l];
        for (std::size_t i = 0; i < lin.w.data.size(); ++i) {
          lin.w.data[i] -= config.learning_rate * g.w.data[i];
        }
        for (std::size_t i = 0; i < lin.b.size(); ++i) {
          lin.b[i] -= config.learning_rate * g.b[i];
        }
      }
      loss_sum += br.loss;
      ce_sum += br.ce;
      sr_sum += br.sr_loss;
      for (std::size_t l = 0; l < L; ++l) rate_sum[l] += br.layer_rates[l];
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(batches);
    stats.ce = ce_sum / static_cast<double>(batches);
    stats.sr_loss = sr_sum / static_cast<double>(batches);
    stats.layer_rates.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      stats.layer_rates[l] = rate_sum[l] / static_cast<double>(batches);
    }
    stats.test_accuracy = evaluate_accuracy(current, data.test, options);
    if (stats.test_accuracy > result.best_accuracy) {
      result.best_accuracy = stats.test_accuracy;
      result.net = current;
    }
    result.history.push_back(std::move(stats));
  }
  return result;
}

void save_checkpoint(const Network& net, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "shiftlif-checkpoint";
  j["version"] = 1;
  j["spec"]["widths"] = net.spec.widths;
  j["spec"]["timesteps"] = net.spec.timesteps;
  for (const auto& p : net.spec.hidden) {
    j["spec"]["hidden"].push_back({{"kind", to_string(p.kind)},
                                   {"tau", p.tau},
                                   {"v_th", p.v_th},
                                   {"v_reset", p.v_reset},
                                   {"K", p.precision}});
  }
  for (const auto& lin : net.layers) {
    j["layers"].push_back(
        {{"rows", lin.w.rows}, {"cols", lin.w.cols}, {"w", lin.w.data}, {"b", lin.b}});
  }
  out << j.dump(2) << '\n';
}

Network load_checkpoint(std::istream& in) {
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "shiftlif-checkpoint") {
    throw std::invalid_argument("not a shiftlif checkpoint");
  }
  if (j.value("version", 0) != 1) {
    throw std::invalid_argument("unsupported checkpoint version");
  }
  Network net;
  net.spec.widths = j.at("spec").at("widths").get<std::vector<std::size_t>>();
  net.spec.timesteps = j.at("spec").at("timesteps").get<std::size_t>();
  for (const auto& h : j.at("spec").at("hidden")) {
    NeuronParams p;
    p.kind = neuron_kind_from_string(h.at("kind").get<std::string>());
    p.tau = h.at("tau").get<double>();
    p.v_th = h.at("v_th").get<double>();
    p.v_reset = h.at("v_reset").get<double>();
    p.precision = h.at("K").get<int>();
    net.spec.hidden.push_back(p);
  }
  for (const auto& l : j.at("layers")) {
    LinearParams lin;
    lin.w.rows = l.at("rows").get<std::size_t>();
    lin.w.cols = l.at("cols").get<std::size_t>();
    lin.w.data = l.at("w").get<std::vector<double>>();
    lin.b = l.at("b").get<std::vector<double>>();
    if (lin.w.data.size() != lin.w.rows * lin.w.cols || lin.b.size() != lin.w.rows) {
      throw std::invalid_argument("checkpoint layer shape mismatch");
    }
    net.layers.push_back(std::move(lin));
  }
  net.spec.validate();
  return net;
}

DeploymentEval fixed_point_eval(const Network& net, const std::vector<Sample>& samples,
                                int frac_bits, int storage_bits) {
  if (samples.empty()) throw std::invalid_argument("no samples to evaluate");
  net.spec.validate();
  const auto& spec = net.spec;
  const std::size_t L = spec.spiking_layers();
  const std::size_t T = spec.timesteps;

  DeploymentEval eval;
  eval.frac_bits = frac_bits;
  eval.float_accuracy = evaluate_accuracy(net, samples);

  // Quantize every linear once. Dequantized copies serve the paths whose
  // inputs are not Shift spikes (the first layer sees real currents).
  std::vector<FixedPointMatrix> fixed;
  std::vector<Matrix> dequant_w;
  std::vector<std::vector<double>> dequant_b;
  for (const auto& lin : net.layers) {
    FixedPointMatrix fp = quantize_weights(lin.w, frac_bits, storage_bits);
    Matrix dq(lin.w.rows, lin.w.cols);
    for (std::size_t i = 0; i < dq.data.size(); ++i) {
      dq.data[i] = std::ldexp(static_cast<double>(fp.data[i]), -frac_bits);
    }
    Matrix bias_row(1, lin.b.size());
    bias_row.data = lin.b;
    FixedPointMatrix bq = quantize_weights(bias_row, frac_bits, storage_bits);
    std::vector<double> dqb(lin.b.size());
    for (std::size_t i = 0; i < dqb.size(); ++i) {
      dqb[i] = std::ldexp(static_cast<double>(bq.data[i]), -frac_bits);
    }
    fixed.push_back(std::move(fp));
    dequant_w.push_back(std::move(dq));
    dequant_b.push_back(std::move(dqb));
  }

  std::size_t correct = 0;
  std::vector<std::vector<double>> carry(L);
  std::vector<std::vector<double>> prev(L);
  std::vector<std::vector<SpikeLevel>> spikes(L);
  for (const auto& sample : samples) {
    for (std::size_t l = 0; l < L; ++l) {
      carry[l].assign(spec.widths[l + 1], spec.hidden[l].v_reset);
      prev[l].assign(spec.widths[l + 1], 0.0);
      spikes[l].assign(spec.widths[l + 1], SpikeLevel{});
    }
    std::vector<double> logits(spec.widths.back(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t l = 0; l < L; ++l) {
        const NeuronParams& p = spec.hidden[l];
        const std::size_t n = spec.widths[l + 1];
        std::vector<double> z(n, 0.0);
        const bool shift_input = l > 0 && spec.hidden[l - 1].kind == NeuronKind::ShiftLif;
        if (l == 0 || !shift_input) {
          std::vector<double> in;
          if (l == 0) {
            auto row = sample.inputs.row(t);
            in.assign(row.begin(), row.end());
          } else {
            in.resize(spec.widths[l]);
            for (std::size_t c = 0; c < in.size(); ++c) in[c] = spikes[l - 1][c].amplitude;
          }
          for (std::size_t i = 0; i < n; ++i) {
            double sum = dequant_b[l][i];
            for (std::size_t c = 0; c < in.size(); ++c) sum += dequant_w[l](i, c) * in[c];
            z[i] = sum;
          }
        } else {
          const LevelSet levels = spec.hidden[l - 1].level_set();
          Accumulator acc =
              shift_accumulate(fixed[l], spikes[l - 1], levels, ShiftAccumMode::Exact);
          auto real = acc.as_real();
          for (std::size_t i = 0; i < n; ++i) z[i] = real[i] + dequant_b[l][i];
        }
        for (std::size_t i = 0; i < n; ++i) {
          double u = charge(carry[l][i], z[i], p);
          if (p.kind == NeuronKind::Lif) u -= prev[l][i] * p.v_th;
          SpikeLevel s;
          switch (p.kind) {
            case NeuronKind::Lif:
              s = u >= p.v_th ? SpikeLevel{1, 1.0} : SpikeLevel{0, 0.0};
              break;
            case NeuronKind::ShiftLif:
              s = q_shift(std::clamp(u, 0.0, p.v_th) / p.v_th, p.precision,
                          ShiftMode::AlgorithmicClamp);
              break;
            case NeuronKind::IntLif:
              s = q_int(std::max(u, 0.0) / p.v_th, p.precision);
              break;
            case NeuronKind::UniformLif:
              s = q_uniform(std::clamp(u, 0.0, p.v_th) / p.v_th, p.precision);
              break;
          }
          spikes[l][i] = s;
          prev[l][i] = s.amplitude;
          carry[l][i] = p.kind == NeuronKind::Lif ? u : u - s.amplitude * p.v_th;
        }
      }
      // Readout per step on the final spikes.
      const bool shift_last = spec.hidden[L - 1].kind == NeuronKind::ShiftLif;
      if (shift_last) {
        const LevelSet levels = spec.hidden[L - 1].level_set();
        Accumulator acc = shift_accumulate(fixed[L], spikes[L - 1], levels, ShiftAccumMode::Exact);
        auto real = acc.as_real();
        for (std::size_t c = 0; c < logits.size(); ++c) {
          logits[c] += (real[c] + dequant_b[L][c]) / static_cast<double>(T);
        }
      } else {
        for (std::size_t c = 0; c < logits.size(); ++c) {
          double sum = dequant_b[L][c];
          for (std::size_t i = 0; i < spec.widths[L]; ++i) {
            sum += dequant_w[L](c, i) * spikes[L - 1][i].amplitude;
          }
          logits[c] += sum / static_cast<double>(T);
        }
      }
    }
    if (argmax(logits) == static_cast<std::size_t>(sample.label)) ++correct;
  }
  eval.fixed_point_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return eval;
}

void history_to_csv(std::span<const EpochStats> history, std::ostream& out) {
  std::size_t layers = history.empty() ? 0 : history.front().layer_rates.size();
  out << "epoch,train_loss,ce,sr_loss,test_accuracy";
  for (std::size_t l = 0; l < layers; ++l) out << ",rate_layer" << (l + 1);
  out << '\n';
  out.precision(17);
  for (const auto& row : history) {
    out << row.epoch << ',' << row.train_loss << ',' << row.ce << ',' << row.sr_loss << ','
        << row.test_accuracy;
    for (double r : row.layer_rates) out << ',' << r;
    out << '\n';
  }
}

}  // namespace shiftlif
