#include "cli/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "shiftlif/analysis.hpp"
#include "shiftlif/synapse.hpp"

namespace shiftlif::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

fs::path prepare_out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string timestamp_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The manifest is the one file that carries a timestamp; everything else a
// run writes is a pure function of the config and seed.
void write_manifest(const fs::path& dir, const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::parse(config_to_json(cfg));
  nlohmann::json manifest;
  manifest["config"] = j;
  manifest["timestamp"] = timestamp_now();
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

NetworkSpec spec_from(const ExperimentConfig& cfg) {
  NetworkSpec spec = NetworkSpec::uniform(cfg.widths, cfg.neuron, cfg.timesteps);
  return spec;
}

Dataset dataset_from(const ExperimentConfig& cfg) {
  return synth_dataset(cfg.seed, cfg.data.classes, cfg.data.samples_per_class, cfg.timesteps,
                       cfg.data.input_dim, cfg.data.noise);
}

TrainConfig train_config_from(const ExperimentConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  return tc;
}

std::vector<double> layer_currents(const LinearParams& lin, std::span<const double> in) {
  std::vector<double> z(lin.w.rows);
  for (std::size_t r = 0; r < lin.w.rows; ++r) {
    double sum = lin.b[r];
    for (std::size_t c = 0; c < lin.w.cols; ++c) sum += lin.w(r, c) * in[c];
    z[r] = sum;
  }
  return z;
}

// Run the network over samples through the public neuron API, collecting one
// stacked SpikeTensor per hidden layer (time axis = samples x T) and,
// optionally, every charged membrane value normalized by the threshold.
struct CollectedRun {
  std::vector<SpikeTensor> layer_spikes;
  std::vector<double> membranes;  // max(0, u / v_th), all layers pooled
};

CollectedRun collect_run(const Network& net, const std::vector<Sample>& samples,
                         bool want_membranes) {
  const auto& spec = net.spec;
  const std::size_t L = spec.spiking_layers();
  const std::size_t T = spec.timesteps;

  CollectedRun run;
  run.layer_spikes.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    run.layer_spikes[l].timesteps = 0;
    run.layer_spikes[l].neurons = spec.widths[l + 1];
    run.layer_spikes[l].levels = spec.hidden[l].level_set();
  }

  for (const auto& sample : samples) {
    Matrix in = sample.inputs;
    for (std::size_t l = 0; l < L; ++l) {
      Matrix currents(T, spec.widths[l + 1]);
      for (std::size_t t = 0; t < T; ++t) {
        auto z = layer_currents(net.layers[l], in.row(t));
        std::copy(z.begin(), z.end(), currents.row(t).begin());
      }
      RunResult res = run_sequence(spec.hidden[l], currents, want_membranes);
      if (want_membranes) {
        for (double u : res.membrane->data) {
          run.membranes.push_back(std::max(0.0, u / spec.hidden[l].v_th));
        }
      }
      auto& tensor = run.layer_spikes[l];
      tensor.index.insert(tensor.index.end(), res.spikes.index.begin(), res.spikes.index.end());
      tensor.timesteps += T;
      // Next layer consumes this layer's amplitudes.
      Matrix amps(T, spec.widths[l + 1]);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < spec.widths[l + 1]; ++i) {
          amps(t, i) = res.spikes.amplitude(t, i);
        }
      }
      in = std::move(amps);
    }
  }
  return run;
}

SampleSet samples_from(const ExperimentConfig& cfg) {
  const auto& d = cfg.distribution;
  if (d.family == "exponential") return draw_exponential(d.rate, d.samples, cfg.seed);
  if (d.family == "uniform") return draw_uniform(d.lo, d.hi, d.samples, cfg.seed);
  if (d.family == "point") return point_mass(d.value, d.samples);
  if (d.family == "mixture") return draw_mixture(d.mix_p, d.rate, d.lo, d.hi, d.samples, cfg.seed);
  if (d.family == "membrane") {
    Network net = Network::init(spec_from(cfg), cfg.seed);
    Dataset data = dataset_from(cfg);
    CollectedRun run = collect_run(net, data.train, true);
    std::ostringstream tag;
    tag << "membrane(widths=" << cfg.widths.size() << " layers,kind="
        << to_string(cfg.neuron.kind) << ",seed=" << cfg.seed << ")";
    return make_sample_set(std::move(run.membranes), tag.str());
  }
  throw ConfigError("unknown distribution family '" + d.family + "'");
}

void run_analyze(const ExperimentConfig& cfg, const fs::path& dir) {
  SampleSet samples = samples_from(cfg);
  for (int k : cfg.k_list) {
    if (k < 1) throw ConfigError("analyze requires K >= 1 (lemma machinery)");
    AnalysisReport report = analyze(samples, k, cfg.hist_bins, cfg.hist_vmax);
    std::ostringstream csv;
    report_to_csv(report, csv);
    write_text(dir / ("analysis_K" + std::to_string(k) + ".json"), report_to_json(report) + "\n");
    write_text(dir / ("analysis_K" + std::to_string(k) + ".csv"), csv.str());
  }
}

nlohmann::json summary_common(const FitResult& fit_result) {
  nlohmann::json j;
  j["best_test_accuracy"] = fit_result.best_accuracy;
  if (!fit_result.history.empty()) {
    const auto& last = fit_result.history.back();
    j["final_test_accuracy"] = last.test_accuracy;
    j["final_layer_rates"] = last.layer_rates;
    j["final_train_loss"] = last.train_loss;
  }
  return j;
}

void run_train(const ExperimentConfig& cfg, const fs::path& dir) {
  Dataset data = dataset_from(cfg);
  Network net = Network::init(spec_from(cfg), cfg.seed);
  FitResult result = fit(net, data, train_config_from(cfg));

  std::ostringstream history;
  history_to_csv(result.history, history);
  write_text(dir / "history.csv", history.str());

  std::ostringstream ckpt;
  save_checkpoint(result.net, ckpt);
  write_text(dir / "checkpoint.json", ckpt.str());

  nlohmann::json summary = summary_common(result);
  DeploymentEval deploy =
      fixed_point_eval(result.net, data.test, cfg.kernel.frac_bits, cfg.kernel.storage_bits);
  summary["deployment"] = {{"frac_bits", deploy.frac_bits},
                           {"float_accuracy", deploy.float_accuracy},
                           {"fixed_point_accuracy", deploy.fixed_point_accuracy}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void run_ablate_k(const ExperimentConfig& cfg, const fs::path& dir) {
  Dataset data = dataset_from(cfg);
  std::ostringstream csv;
  csv << "K,best_test_accuracy,final_test_accuracy,final_mean_rate\n";
  csv.precision(17);
  nlohmann::json rows = nlohmann::json::array();
  for (int k : cfg.k_list) {
    ExperimentConfig variant = cfg;
    variant.neuron.precision = k;
    Network net = Network::init(spec_from(variant), cfg.seed);
    FitResult result = fit(net, data, train_config_from(cfg));
    double final_acc = result.history.empty() ? 0.0 : result.history.back().test_accuracy;
    double rate = 0.0;
    if (!result.history.empty()) {
      for (double r : result.history.back().layer_rates) rate += r;
      rate /= static_cast<double>(result.history.back().layer_rates.size());
    }
    if (!std::isfinite(result.best_accuracy) || !std::isfinite(final_acc)) {
      throw CheckFailure("ablate-K produced a non-finite accuracy at K=" + std::to_string(k));
    }
    csv << k << ',' << result.best_accuracy << ',' << final_acc << ',' << rate << '\n';
    rows.push_back({{"K", k},
                    {"best_test_accuracy", result.best_accuracy},
                    {"final_test_accuracy", final_acc},
                    {"final_mean_rate", rate}});
  }
  write_text(dir / "ablate_k.csv", csv.str());
  write_text(dir / "ablate_k.json", rows.dump(2) + "\n");
}

void run_ablate_grid(const ExperimentConfig& cfg, const fs::path& dir) {
  Dataset data = dataset_from(cfg);
  std::ostringstream csv;
  csv << "grid,best_test_accuracy,final_test_accuracy,final_mean_rate\n";
  csv.precision(17);
  nlohmann::json rows = nlohmann::json::array();
  for (NeuronKind kind : {NeuronKind::ShiftLif, NeuronKind::UniformLif}) {
    ExperimentConfig variant = cfg;
    variant.neuron.kind = kind;
    Network net = Network::init(spec_from(variant), cfg.seed);
    FitResult result = fit(net, data, train_config_from(cfg));
    double final_acc = result.history.empty() ? 0.0 : result.history.back().test_accuracy;
    double rate = 0.0;
    if (!result.history.empty()) {
      for (double r : result.history.back().layer_rates) rate += r;
      rate /= static_cast<double>(result.history.back().layer_rates.size());
    }
    const char* label = kind == NeuronKind::ShiftLif ? "logarithmic" : "uniform";
    csv << label << ',' << result.best_accuracy << ',' << final_acc << ',' << rate << '\n';
    rows.push_back({{"grid", label},
                    {"best_test_accuracy", result.best_accuracy},
                    {"final_test_accuracy", final_acc},
                    {"final_mean_rate", rate}});
  }
  write_text(dir / "ablate_grid.csv", csv.str());
  write_text(dir / "ablate_grid.json", rows.dump(2) + "\n");
}

void run_energy(const ExperimentConfig& cfg, const fs::path& dir) {
  Dataset data = dataset_from(cfg);
  Network net = Network::init(spec_from(cfg), cfg.seed);
  FitResult result = fit(net, data, train_config_from(cfg));
  const Network& model = cfg.train.epochs == 0 ? net : result.net;

  CollectedRun run = collect_run(model, data.test, false);
  const EnergyConstants& constants = profile_for(cfg, cfg.neuron.kind);

  std::ostringstream csv;
  csv << "layer,timesteps,spike_rate,event_frequency,synapses,energy_mJ\n";
  csv.precision(17);
  EnergyReport report;
  for (std::size_t l = 0; l < run.layer_spikes.size(); ++l) {
    const std::size_t fan_out = model.spec.widths[l + 2];
    const std::size_t synapses = model.spec.widths[l + 1] * fan_out;
    // Rate is per (step, neuron) over the whole test set; energy uses the
    // per-sample window length and sums over test samples.
    LayerEnergy layer;
    layer.name = "spiking_layer" + std::to_string(l + 1);
    layer.timesteps = model.spec.timesteps;
    layer.rate = spike_rate(run.layer_spikes[l]);
    layer.events_per_step = event_frequency(run.layer_spikes[l]);
    layer.synapse_count = synapses;
    layer.energy_mj = layer_energy_mj(model.spec.timesteps, layer.rate, synapses, constants) *
                      static_cast<double>(data.test.size());
    report.total_mj += layer.energy_mj;
    csv << layer.name << ',' << layer.timesteps << ',' << layer.rate << ','
        << layer.events_per_step << ',' << layer.synapse_count << ',' << layer.energy_mj << '\n';
    report.layers.push_back(std::move(layer));
  }

  nlohmann::json j;
  j["profile"] = constants.profile;
  j["per_event_pj"] = constants.per_event_pj();
  j["total_mJ"] = report.total_mj;
  j["test_accuracy"] = cfg.train.epochs == 0 ? 0.0 : result.best_accuracy;
  for (const auto& layer : report.layers) {
    j["layers"].push_back({{"name", layer.name},
                           {"timesteps", layer.timesteps},
                           {"spike_rate", layer.rate},
                           {"event_frequency", layer.events_per_step},
                           {"synapses", layer.synapse_count},
                           {"energy_mJ", layer.energy_mj}});
  }
  write_text(dir / "energy.csv", csv.str());
  write_text(dir / "energy.json", j.dump(2) + "\n");
}

void run_kernel_check(const ExperimentConfig& cfg, const fs::path& dir) {
  std::mt19937_64 rng(cfg.seed);
  const auto& spec = cfg.kernel;
  std::size_t failures = 0;
  std::ostringstream detail;

  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    std::uniform_int_distribution<std::size_t> dim_dist(1, spec.max_dim);
    std::uniform_int_distribution<int> k_dist(0, spec.max_precision);
    const std::size_t rows = dim_dist(rng);
    const std::size_t cols = dim_dist(rng);
    const int K = k_dist(rng);

    const double bound = std::ldexp(1.0, spec.storage_bits - spec.frac_bits - 1) - 1.0;
    std::uniform_real_distribution<double> w_dist(-bound, bound);
    Matrix w(rows, cols);
    for (auto& x : w.data) x = w_dist(rng);
    FixedPointMatrix fp = quantize_weights(w, spec.frac_bits, spec.storage_bits);
    Matrix dequant(rows, cols);
    for (std::size_t i = 0; i < dequant.data.size(); ++i) {
      dequant.data[i] = std::ldexp(static_cast<double>(fp.data[i]), -spec.frac_bits);
    }

    const LevelSet levels = make_level_set(LevelKind::Shift, K);
    std::uniform_int_distribution<std::int32_t> level_dist(0, K + 1);
    std::vector<SpikeLevel> spikes(cols);
    std::vector<double> amps(cols);
    std::size_t nonzero = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      std::int32_t idx = level_dist(rng);
      spikes[j] = {idx, levels.levels[static_cast<std::size_t>(idx)]};
      amps[j] = spikes[j].amplitude;
      nonzero += idx != 0;
    }

    Accumulator exact = shift_accumulate(fp, spikes, levels, ShiftAccumMode::Exact);
    Accumulator lossy = shift_accumulate(fp, spikes, levels, ShiftAccumMode::Lossy);
    auto reference = float_reference(dequant, amps);
    auto exact_real = exact.as_real();

    bool ok = exact.visits == nonzero * rows;
    for (std::size_t i = 0; ok && i < rows; ++i) {
      if (exact_real[i] != reference[i]) ok = false;
      // Lossy floors each visited term by less than one LSB.
      double gap = exact_real[i] - std::ldexp(static_cast<double>(lossy.sums[i]), -spec.frac_bits);
      if (gap < 0.0 || gap >= std::ldexp(static_cast<double>(nonzero), -spec.frac_bits)) ok = false;
    }
    if (!ok) {
      ++failures;
      detail << "trial " << trial << " failed (rows=" << rows << ", cols=" << cols
             << ", K=" << K << ")\n";
    }
  }

  nlohmann::json j;
  j["trials"] = spec.trials;
  j["failures"] = failures;
  j["max_dim"] = spec.max_dim;
  j["max_K"] = spec.max_precision;
  j["frac_bits"] = spec.frac_bits;
  write_text(dir / "kernel_check.json", j.dump(2) + "\n");
  if (failures > 0) {
    throw CheckFailure("kernel-check: " + std::to_string(failures) + " of " +
                       std::to_string(spec.trials) + " trials failed\n" + detail.str());
  }
}

void run_gen_data(const ExperimentConfig& cfg, const fs::path& dir) {
  Dataset data = dataset_from(cfg);
  auto dump_split = [&](const std::vector<Sample>& samples, const fs::path& path) {
    std::ostringstream csv;
    csv << "label";
    for (std::size_t t = 0; t < data.timesteps; ++t) {
      for (std::size_t i = 0; i < data.input_dim; ++i) csv << ",x_t" << t << "_d" << i;
    }
    csv << '\n';
    csv.precision(17);
    for (const auto& s : samples) {
      csv << s.label;
      for (double x : s.inputs.data) csv << ',' << x;
      csv << '\n';
    }
    write_text(path, csv.str());
  };
  dump_split(data.train, dir / "train.csv");
  dump_split(data.test, dir / "test.csv");

  nlohmann::json meta;
  meta["classes"] = data.classes;
  meta["input_dim"] = data.input_dim;
  meta["timesteps"] = data.timesteps;
  meta["train_samples"] = data.train.size();
  meta["test_samples"] = data.test.size();
  meta["noise"] = cfg.data.noise;
  meta["seed"] = cfg.seed;
  write_text(dir / "dataset.json", meta.dump(2) + "\n");
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg) {
  const fs::path dir = prepare_out_dir(cfg);
  write_manifest(dir, cfg);
  if (cfg.kind == "analyze") return run_analyze(cfg, dir);
  if (cfg.kind == "train") return run_train(cfg, dir);
  if (cfg.kind == "ablate-K") return run_ablate_k(cfg, dir);
  if (cfg.kind == "ablate-grid") return run_ablate_grid(cfg, dir);
  if (cfg.kind == "energy") return run_energy(cfg, dir);
  if (cfg.kind == "kernel-check") return run_kernel_check(cfg, dir);
  if (cfg.kind == "gen-data") return run_gen_data(cfg, dir);
  throw ConfigError("unknown experiment '" + cfg.kind + "'");
}

}  // namespace shiftlif::cli
