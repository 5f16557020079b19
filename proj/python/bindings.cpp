#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "shiftlif/analysis.hpp"
#include "shiftlif/energy.hpp"
#include "shiftlif/neuron.hpp"
#include "shiftlif/quantizer.hpp"
#include "shiftlif/synapse.hpp"
#include "shiftlif/training.hpp"

namespace py = pybind11;
using namespace shiftlif;

namespace {

Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                         const char* what) {
  if (a.ndim() != 2) throw std::invalid_argument(std::string(what) + " must be 2-d");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::array_t<double> array_from_matrix(const Matrix& m) {
  py::array_t<double> a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

SampleSet samples_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<double> v(a.data(), a.data() + a.size());
  return make_sample_set(std::move(v), "python");
}

LevelSet set_for(const std::string& kind, int K, const std::string& mode) {
  ShiftMode m = mode == "clamp" ? ShiftMode::AlgorithmicClamp : ShiftMode::FloorAdmissible;
  if (kind == "shift") return make_level_set(LevelKind::Shift, K, m);
  if (kind == "int") return make_level_set(LevelKind::Int, K);
  if (kind == "uniform") return make_level_set(LevelKind::Uniform, K);
  throw std::invalid_argument("kind must be shift|int|uniform");
}

NeuronParams params_from(const std::string& kind, double tau, double v_th, double v_reset,
                         int K) {
  NeuronParams p;
  p.kind = neuron_kind_from_string(kind);
  p.tau = tau;
  p.v_th = v_th;
  p.v_reset = v_reset;
  p.precision = K;
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-level power-of-two spiking neurons: quantizers, neuron "
            "dynamics, the shift-accumulate kernel, distribution analysis, "
            "the energy model and a small training harness.";

  py::class_<SpikeLevel>(m, "SpikeLevel")
      .def_readonly("index", &SpikeLevel::index)
      .def_readonly("amplitude", &SpikeLevel::amplitude)
      .def("__repr__", [](const SpikeLevel& s) {
        std::ostringstream out;
        out << "SpikeLevel(index=" << s.index << ", amplitude=" << s.amplitude << ")";
        return out.str();
      });

  m.def("make_level_set",
        [](const std::string& kind, int K, const std::string& mode) {
          return set_for(kind, K, mode).levels;
        },
        py::arg("kind"), py::arg("K"), py::arg("mode") = "clamp",
        "Ordered output alphabet of a quantizer (K+2 levels).");

  m.def("q_shift",
        [](double v, int K, const std::string& mode) {
          return q_shift(v, K,
                         mode == "clamp" ? ShiftMode::AlgorithmicClamp
                                         : ShiftMode::FloorAdmissible);
        },
        py::arg("v"), py::arg("K"), py::arg("mode") = "clamp");
  m.def("q_int", &q_int, py::arg("v"), py::arg("K"));
  m.def("q_uniform", &q_uniform, py::arg("v"), py::arg("K"));

  m.def("run_sequence",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& inputs,
           const std::string& kind, double tau, double v_th, double v_reset, int K,
           bool record_membrane) {
          Matrix currents = matrix_from_array(inputs, "inputs");
          RunResult res = run_sequence(params_from(kind, tau, v_th, v_reset, K), currents,
                                       record_membrane);
          py::array_t<double> amps({res.spikes.timesteps, res.spikes.neurons});
          py::array_t<std::int32_t> idx({res.spikes.timesteps, res.spikes.neurons});
          for (std::size_t t = 0; t < res.spikes.timesteps; ++t) {
            for (std::size_t i = 0; i < res.spikes.neurons; ++i) {
              amps.mutable_at(t, i) = res.spikes.amplitude(t, i);
              idx.mutable_at(t, i) = res.spikes.level(t, i);
            }
          }
          py::dict out;
          out["amplitudes"] = amps;
          out["indices"] = idx;
          if (res.membrane) out["membrane"] = array_from_matrix(*res.membrane);
          return out;
        },
        py::arg("inputs"), py::arg("kind") = "shiftlif", py::arg("tau") = 2.0,
        py::arg("v_th") = 1.0, py::arg("v_reset") = 0.0, py::arg("K") = 2,
        py::arg("record_membrane") = false,
        "Simulate one spiking layer over a T x N input-current array.");

  m.def("shift_matvec",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& amplitudes,
           int K, int frac_bits, int storage_bits, const std::string& mode) {
          Matrix w = matrix_from_array(weights, "weights");
          if (amplitudes.ndim() != 1 ||
              static_cast<std::size_t>(amplitudes.shape(0)) != w.cols) {
            throw std::invalid_argument("amplitudes must be 1-d with len == weights.cols");
          }
          LevelSet levels = make_level_set(LevelKind::Shift, K);
          std::vector<SpikeLevel> spikes(w.cols);
          for (std::size_t j = 0; j < w.cols; ++j) {
            double a = amplitudes.at(j);
            SpikeLevel s = q_shift(a, K, ShiftMode::FloorAdmissible);
            if (s.amplitude != a) {
              throw std::invalid_argument("amplitude is not a level of the Shift alphabet");
            }
            spikes[j] = s;
          }
          FixedPointMatrix fp = quantize_weights(w, frac_bits, storage_bits);
          Accumulator acc = shift_accumulate(
              fp, spikes, levels,
              mode == "lossy" ? ShiftAccumMode::Lossy : ShiftAccumMode::Exact);
          py::dict out;
          out["values"] = py::cast(acc.as_real());
          out["visits"] = acc.visits;
          out["skipped"] = acc.skipped;
          out["shift_ops"] = acc.shift_ops;
          out["acc_ops"] = acc.acc_ops;
          out["frac_bits"] = acc.frac_bits;
          return out;
        },
        py::arg("weights"), py::arg("amplitudes"), py::arg("K") = 2, py::arg("frac_bits") = 8,
        py::arg("storage_bits") = 16, py::arg("mode") = "exact",
        "Multiplier-free synaptic sum of fixed-point weights with power-of-two spikes.");

  m.def("float_reference",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
           const std::vector<double>& amplitudes) {
          return float_reference(matrix_from_array(weights, "weights"), amplitudes);
        },
        py::arg("weights"), py::arg("amplitudes"));

  m.def("expected_abs_error",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
           const std::string& kind, int K, const std::string& mode) {
          return expected_abs_error(samples_from_array(samples), set_for(kind, K, mode));
        },
        py::arg("samples"), py::arg("kind"), py::arg("K"), py::arg("mode") = "floor");

  m.def("output_entropy",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
           const std::string& kind, int K, const std::string& mode) {
          return output_entropy(samples_from_array(samples), set_for(kind, K, mode));
        },
        py::arg("samples"), py::arg("kind"), py::arg("K"), py::arg("mode") = "floor");

  m.def("bit_utilization",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
           const std::string& kind, int K, const std::string& mode) {
          return bit_utilization(samples_from_array(samples), set_for(kind, K, mode));
        },
        py::arg("samples"), py::arg("kind"), py::arg("K"), py::arg("mode") = "floor");

  m.def("lemma1_condition",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples, int K) {
          Lemma1Result r = lemma1_condition(samples_from_array(samples), K);
          py::dict out;
          out["lhs"] = r.lhs;
          out["rhs"] = r.rhs;
          out["holds"] = r.holds;
          out["gap"] = r.empirical_gap;
          out["gap_std_error"] = r.gap_std_error;
          return out;
        },
        py::arg("samples"), py::arg("K"));

  m.def("delta_pointwise",
        [](double v, int K) {
          DeltaResult r = delta_pointwise(v, K);
          return py::make_tuple(r.delta, r.lower_bound);
        },
        py::arg("v"), py::arg("K"));

  m.def("entropy_decomposition",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples, int K) {
          EntropyDecomposition d = entropy_decomposition(samples_from_array(samples), K);
          py::dict out;
          out["r"] = d.r;
          out["m"] = d.m;
          out["c"] = d.c;
          out["h2_r"] = d.h2_r;
          out["shell_probs"] = py::cast(d.shell_probs);
          out["vdist"] = py::make_tuple(d.vdist[0], d.vdist[1]);
          out["tdist"] = py::cast(d.tdist);
          out["shift_entropy"] = d.shift_entropy_direct;
          out["int_entropy"] = d.int_entropy_direct;
          out["criterion_lhs"] = d.criterion_lhs;
          out["criterion_rhs"] = d.criterion_rhs;
          out["shift_preferred"] = d.shift_preferred;
          return out;
        },
        py::arg("samples"), py::arg("K"));

  m.def("spike_rate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& amplitudes) {
          double sum = 0.0;
          for (py::ssize_t i = 0; i < amplitudes.size(); ++i) {
            sum += std::fabs(amplitudes.data()[i]);
          }
          if (amplitudes.size() == 0) throw std::invalid_argument("empty spike array");
          return sum / static_cast<double>(amplitudes.size());
        },
        py::arg("amplitudes"), "Mean absolute spike amplitude of an array.");

  m.def("layer_energy_mj",
        [](std::size_t timesteps, double rate, std::size_t synapses, double e_acc, double e_move,
           double e_weight) {
          EnergyConstants c;
          c.e_acc_pj = e_acc;
          c.e_move_pj = e_move;
          c.e_weight_pj = e_weight;
          return layer_energy_mj(timesteps, rate, synapses, c);
        },
        py::arg("timesteps"), py::arg("rate"), py::arg("synapses"), py::arg("e_acc") = 0.9,
        py::arg("e_move") = 1.2, py::arg("e_weight") = 2.5);

  m.def("ste_mask", [](double u) { return ste_mask(u); }, py::arg("u"));

  m.def("synth_dataset",
        [](std::uint64_t seed, std::size_t classes, std::size_t samples_per_class,
           std::size_t timesteps, std::size_t input_dim, double noise) {
          Dataset d = synth_dataset(seed, classes, samples_per_class, timesteps, input_dim, noise);
          auto pack = [&](const std::vector<Sample>& split) {
            py::array_t<double> x({split.size(), timesteps, input_dim});
            py::array_t<int> y(static_cast<py::ssize_t>(split.size()));
            for (std::size_t s = 0; s < split.size(); ++s) {
              y.mutable_data()[s] = split[s].label;
              std::copy(split[s].inputs.data.begin(), split[s].inputs.data.end(),
                        x.mutable_data() + s * timesteps * input_dim);
            }
            return py::make_tuple(x, y);
          };
          py::dict out;
          out["train"] = pack(d.train);
          out["test"] = pack(d.test);
          return out;
        },
        py::arg("seed"), py::arg("classes") = 3, py::arg("samples_per_class") = 40,
        py::arg("timesteps") = 4, py::arg("input_dim") = 16, py::arg("noise") = 0.25);

  m.def("train_synthetic",
        [](std::uint64_t seed, const std::string& kind, int K, std::vector<std::size_t> widths,
           std::size_t timesteps, std::size_t epochs, double lr, double lambda_sr, double r_star,
           std::size_t batch, std::size_t samples_per_class, double noise) {
          NeuronParams p = params_from(kind, 2.0, 1.0, 0.0, K);
          NetworkSpec spec = NetworkSpec::uniform(std::move(widths), p, timesteps);
          Dataset data = synth_dataset(seed, spec.widths.back(), samples_per_class, timesteps,
                                       spec.widths.front(), noise);
          TrainConfig cfg;
          cfg.epochs = epochs;
          cfg.learning_rate = lr;
          cfg.lambda_sr = lambda_sr;
          cfg.r_star = r_star;
          cfg.seed = seed;
          cfg.batch_size = batch;
          FitResult result = fit(Network::init(spec, seed), data, cfg);
          py::dict out;
          out["best_accuracy"] = result.best_accuracy;
          std::vector<double> acc, ce, sr;
          std::vector<std::vector<double>> rates;
          for (const auto& row : result.history) {
            acc.push_back(row.test_accuracy);
            ce.push_back(row.ce);
            sr.push_back(row.sr_loss);
            rates.push_back(row.layer_rates);
          }
          out["test_accuracy"] = py::cast(acc);
          out["ce"] = py::cast(ce);
          out["sr_loss"] = py::cast(sr);
          out["layer_rates"] = py::cast(rates);
          return out;
        },
        py::arg("seed") = 1, py::arg("kind") = "shiftlif", py::arg("K") = 2,
        py::arg("widths") = std::vector<std::size_t>{16, 24, 24, 3}, py::arg("timesteps") = 4,
        py::arg("epochs") = 10, py::arg("lr") = 0.1, py::arg("lambda_sr") = 0.0,
        py::arg("r_star") = 0.05, py::arg("batch") = 8, py::arg("samples_per_class") = 40,
        py::arg("noise") = 0.25,
        "Train a small spiking classifier on the synthetic task; returns history.");
}
