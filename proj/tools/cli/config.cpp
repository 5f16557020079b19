#include "cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace shiftlif::cli {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail_at(const std::string& name, int line, const std::string& msg) {
  std::ostringstream err;
  err << name << ":" << line << ": " << msg;
  throw ConfigError(err.str());
}

double parse_double(const std::string& name, int line, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail_at(name, line, "key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

std::uint64_t parse_u64(const std::string& name, int line, const std::string& key,
                        const std::string& value) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail_at(name, line, "key '" + key + "': cannot parse '" + value + "' as an unsigned integer");
  }
}

int parse_int(const std::string& name, int line, const std::string& key,
              const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail_at(name, line, "key '" + key + "': cannot parse '" + value + "' as an integer");
  }
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& name, int line, const std::string& key,
                          const std::string& value, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail_at(name, line, "key '" + key + "': empty list element");
    out.push_back(parse(name, line, key, item));
  }
  if (out.empty()) fail_at(name, line, "key '" + key + "': empty list");
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& name, bool strict,
                              std::ostream& warnings) {
  ExperimentConfig cfg;

  using Setter = std::function<void(int line, const std::string& key, const std::string& value)>;
  std::map<std::string, Setter> setters;

  auto dbl = [&](double* target) {
    return Setter([&, target](int line, const std::string& key, const std::string& value) {
      *target = parse_double(name, line, key, value);
    });
  };
  auto u64 = [&](std::uint64_t* target) {
    return Setter([&, target](int line, const std::string& key, const std::string& value) {
      *target = parse_u64(name, line, key, value);
    });
  };
  auto usize = [&](std::size_t* target) {
    return Setter([&, target](int line, const std::string& key, const std::string& value) {
      *target = static_cast<std::size_t>(parse_u64(name, line, key, value));
    });
  };
  auto integer = [&](int* target) {
    return Setter([&, target](int line, const std::string& key, const std::string& value) {
      *target = parse_int(name, line, key, value);
    });
  };
  auto text = [&](std::string* target) {
    return Setter([target](int, const std::string&, const std::string& value) { *target = value; });
  };

  setters["experiment.kind"] = text(&cfg.kind);
  setters["experiment.seed"] = u64(&cfg.seed);
  setters["experiment.out"] = text(&cfg.out_dir);

  setters["neuron.kind"] = [&](int line, const std::string& key, const std::string& value) {
    try {
      cfg.neuron.kind = neuron_kind_from_string(value);
    } catch (const std::exception& e) {
      fail_at(name, line, "key '" + key + "': " + e.what());
    }
  };
  setters["neuron.tau"] = dbl(&cfg.neuron.tau);
  setters["neuron.v_th"] = dbl(&cfg.neuron.v_th);
  setters["neuron.v_reset"] = dbl(&cfg.neuron.v_reset);
  setters["neuron.K"] = integer(&cfg.neuron.precision);

  setters["network.widths"] = [&](int line, const std::string& key, const std::string& value) {
    auto list = parse_list<std::uint64_t>(name, line, key, value, parse_u64);
    cfg.widths.assign(list.begin(), list.end());
  };
  setters["network.T"] = usize(&cfg.timesteps);

  setters["data.classes"] = usize(&cfg.data.classes);
  setters["data.samples_per_class"] = usize(&cfg.data.samples_per_class);
  setters["data.input_dim"] = usize(&cfg.data.input_dim);
  setters["data.noise"] = dbl(&cfg.data.noise);

  setters["train.epochs"] = usize(&cfg.train.epochs);
  setters["train.lr"] = dbl(&cfg.train.learning_rate);
  setters["train.lambda_sr"] = dbl(&cfg.train.lambda_sr);
  setters["train.r_star"] = dbl(&cfg.train.r_star);
  setters["train.batch"] = usize(&cfg.train.batch_size);

  setters["distribution.family"] = text(&cfg.distribution.family);
  setters["distribution.rate"] = dbl(&cfg.distribution.rate);
  setters["distribution.lo"] = dbl(&cfg.distribution.lo);
  setters["distribution.hi"] = dbl(&cfg.distribution.hi);
  setters["distribution.value"] = dbl(&cfg.distribution.value);
  setters["distribution.mix_p"] = dbl(&cfg.distribution.mix_p);
  setters["distribution.samples"] = usize(&cfg.distribution.samples);

  setters["analysis.K_list"] = [&](int line, const std::string& key, const std::string& value) {
    cfg.k_list = parse_list<int>(name, line, key, value, parse_int);
  };
  setters["analysis.hist_bins"] = usize(&cfg.hist_bins);
  setters["analysis.hist_vmax"] = dbl(&cfg.hist_vmax);

  setters["energy.e_acc"] = dbl(&cfg.energy.e_acc_pj);
  setters["energy.e_move"] = dbl(&cfg.energy.e_move_pj);
  setters["energy.e_weight"] = dbl(&cfg.energy.e_weight_pj);
  setters["energy.profile"] = text(&cfg.energy.profile);
  for (const char* kind : {"lif", "shiftlif", "intlif", "uniformlif"}) {
    const std::string section = std::string("energy.") + kind;
    auto ensure = [&cfg, kind]() -> EnergyConstants& {
      auto [it, inserted] = cfg.energy_profiles.try_emplace(kind);
      if (inserted) it->second.profile = kind;
      return it->second;
    };
    setters[section + ".e_acc"] = [&, ensure](int line, const std::string& key,
                                              const std::string& value) {
      ensure().e_acc_pj = parse_double(name, line, key, value);
    };
    setters[section + ".e_move"] = [&, ensure](int line, const std::string& key,
                                               const std::string& value) {
      ensure().e_move_pj = parse_double(name, line, key, value);
    };
    setters[section + ".e_weight"] = [&, ensure](int line, const std::string& key,
                                                 const std::string& value) {
      ensure().e_weight_pj = parse_double(name, line, key, value);
    };
  }

  setters["kernel.trials"] = usize(&cfg.kernel.trials);
  setters["kernel.max_dim"] = usize(&cfg.kernel.max_dim);
  setters["kernel.max_K"] = integer(&cfg.kernel.max_precision);
  setters["kernel.frac_bits"] = integer(&cfg.kernel.frac_bits);
  setters["kernel.storage_bits"] = integer(&cfg.kernel.storage_bits);

  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto comment = raw.find_first_of("#;");
    if (comment != std::string::npos) raw.erase(comment);
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(name, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail_at(name, line_no, "empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(name, line_no, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_at(name, line_no, "empty key");
    if (section.empty()) fail_at(name, line_no, "key '" + key + "' outside any section");

    const std::string full = section + "." + key;
    auto it = setters.find(full);
    if (it == setters.end()) {
      if (strict) fail_at(name, line_no, "unknown key '" + full + "'");
      warnings << name << ":" << line_no << ": warning: ignoring unknown key '" << full << "'\n";
      continue;
    }
    it->second(line_no, key, value);
  }

  // Validate everything and report all violations together.
  std::vector<std::string> violations;
  auto check = [&](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      violations.emplace_back(e.what());
    }
  };
  check([&] { cfg.neuron.validate(); });
  check([&] { cfg.train.validate(); });
  check([&] { cfg.energy.validate(); });
  for (const auto& [kind, constants] : cfg.energy_profiles) {
    check([&] { constants.validate(); });
  }
  if (cfg.widths.size() < 3) violations.emplace_back("network.widths needs >= 3 entries");
  if (std::any_of(cfg.widths.begin(), cfg.widths.end(), [](std::size_t w) { return w == 0; })) {
    violations.emplace_back("network.widths entries must be >= 1");
  }
  if (cfg.timesteps == 0) violations.emplace_back("network.T must be >= 1");
  if (cfg.data.classes < 2) violations.emplace_back("data.classes must be >= 2");
  if (cfg.data.samples_per_class == 0) violations.emplace_back("data.samples_per_class must be >= 1");
  if (cfg.data.input_dim == 0) violations.emplace_back("data.input_dim must be >= 1");
  if (cfg.data.noise < 0.0) violations.emplace_back("data.noise must be >= 0");
  if (cfg.distribution.samples == 0) violations.emplace_back("distribution.samples must be >= 1");
  static const char* families[] = {"exponential", "uniform", "point", "mixture", "membrane"};
  if (std::find(std::begin(families), std::end(families), cfg.distribution.family) ==
      std::end(families)) {
    violations.emplace_back("distribution.family '" + cfg.distribution.family + "' is unknown");
  }
  if (cfg.k_list.empty()) violations.emplace_back("analysis.K_list must be nonempty");
  for (int k : cfg.k_list) {
    if (k < 0 || k > kMaxPrecision) {
      violations.emplace_back("analysis.K_list entries must be in [0, 30]");
      break;
    }
  }
  if (cfg.hist_bins == 0) violations.emplace_back("analysis.hist_bins must be >= 1");
  if (!(cfg.hist_vmax > 0.0)) violations.emplace_back("analysis.hist_vmax must be positive");
  if (cfg.kernel.trials == 0) violations.emplace_back("kernel.trials must be >= 1");
  if (cfg.kernel.max_dim == 0) violations.emplace_back("kernel.max_dim must be >= 1");
  if (cfg.kernel.max_precision < 0 || cfg.kernel.max_precision > kMaxPrecision) {
    violations.emplace_back("kernel.max_K must be in [0, 30]");
  }
  if (cfg.kernel.frac_bits < 0) violations.emplace_back("kernel.frac_bits must be >= 0");
  if (cfg.kernel.storage_bits < 2 || cfg.kernel.storage_bits > 63) {
    violations.emplace_back("kernel.storage_bits must be in [2, 63]");
  }

  if (!violations.empty()) {
    std::ostringstream err;
    err << name << ": invalid configuration:";
    for (const auto& v : violations) err << "\n  - " << v;
    throw ConfigError(err.str());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, bool strict, std::ostream& warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path, strict, warnings);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = {{"kind", cfg.kind}, {"seed", cfg.seed}, {"out", cfg.out_dir}};
  j["neuron"] = {{"kind", to_string(cfg.neuron.kind)},
                 {"tau", cfg.neuron.tau},
                 {"v_th", cfg.neuron.v_th},
                 {"v_reset", cfg.neuron.v_reset},
                 {"K", cfg.neuron.precision}};
  j["network"] = {{"widths", cfg.widths}, {"T", cfg.timesteps}};
  j["data"] = {{"classes", cfg.data.classes},
               {"samples_per_class", cfg.data.samples_per_class},
               {"input_dim", cfg.data.input_dim},
               {"noise", cfg.data.noise}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"lr", cfg.train.learning_rate},
                {"lambda_sr", cfg.train.lambda_sr},
                {"r_star", cfg.train.r_star},
                {"batch", cfg.train.batch_size},
                {"seed", cfg.train.seed}};
  j["distribution"] = {{"family", cfg.distribution.family},
                       {"rate", cfg.distribution.rate},
                       {"lo", cfg.distribution.lo},
                       {"hi", cfg.distribution.hi},
                       {"value", cfg.distribution.value},
                       {"mix_p", cfg.distribution.mix_p},
                       {"samples", cfg.distribution.samples}};
  j["analysis"] = {{"K_list", cfg.k_list},
                   {"hist_bins", cfg.hist_bins},
                   {"hist_vmax", cfg.hist_vmax}};
  j["energy"] = {{"e_acc", cfg.energy.e_acc_pj},
                 {"e_move", cfg.energy.e_move_pj},
                 {"e_weight", cfg.energy.e_weight_pj},
                 {"profile", cfg.energy.profile}};
  for (const auto& [kind, constants] : cfg.energy_profiles) {
    j["energy"]["profiles"][kind] = {{"e_acc", constants.e_acc_pj},
                                     {"e_move", constants.e_move_pj},
                                     {"e_weight", constants.e_weight_pj}};
  }
  j["kernel"] = {{"trials", cfg.kernel.trials},
                 {"max_dim", cfg.kernel.max_dim},
                 {"max_K", cfg.kernel.max_precision},
                 {"frac_bits", cfg.kernel.frac_bits},
                 {"storage_bits", cfg.kernel.storage_bits}};
  return j.dump(2);
}

const EnergyConstants& profile_for(const ExperimentConfig& config, NeuronKind kind) {
  auto it = config.energy_profiles.find(to_string(kind));
  return it == config.energy_profiles.end() ? config.energy : it->second;
}

}  // namespace shiftlif::cli
