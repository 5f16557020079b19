#include "shiftlif/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shiftlif/numeric.hpp"

namespace shiftlif {

namespace {

void check_nonempty(const SampleSet& samples) {
  if (samples.values.empty()) throw std::invalid_argument("sample set is empty");
}

void check_lemma_precision(int precision) {
  if (precision < 1 || precision > kMaxPrecision) {
    throw std::invalid_argument("lemma machinery needs K >= 1");
  }
}

LevelSet floor_shift_set(int precision) {
  return make_level_set(LevelKind::Shift, precision, ShiftMode::FloorAdmissible);
}

// Entropy in bits of a probability vector; 0 log 0 := 0.
double entropy_bits(std::span<const double> p) {
  KahanSum h;
  for (double q : p) {
    if (q > 0.0) h.add(-q * std::log2(q));
  }
  return h.value();
}

double binary_entropy(double r) {
  double h = 0.0;
  if (r > 0.0) h -= r * std::log2(r);
  if (r < 1.0) h -= (1.0 - r) * std::log2(1.0 - r);
  return h;
}

// Empirical output distribution (by level index) under a quantizer.
std::vector<double> output_distribution(const SampleSet& samples, const LevelSet& quantizer) {
  std::vector<std::size_t> counts(quantizer.size(), 0);
  for (double x : samples.values) ++counts[quantize(quantizer, x).index];
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(samples.values.size());
  }
  return p;
}

}  // namespace

SampleSet make_sample_set(std::vector<double> values, std::string source) {
  if (values.empty()) throw std::invalid_argument("sample set is empty");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("samples must be finite and nonnegative");
    }
  }
  return {std::move(values), std::move(source)};
}

SampleSet draw_exponential(double rate, std::size_t n, std::uint64_t seed) {
  if (!(rate > 0.0) || n == 0) throw std::invalid_argument("bad exponential spec");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> dist(rate);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  std::ostringstream tag;
  tag << "exponential(rate=" << rate << ",n=" << n << ",seed=" << seed << ")";
  return {std::move(v), tag.str()};
}

SampleSet draw_uniform(double lo, double hi, std::size_t n, std::uint64_t seed) {
  if (!(hi > lo) || lo < 0.0 || n == 0) throw std::invalid_argument("bad uniform spec");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  std::ostringstream tag;
  tag << "uniform(lo=" << lo << ",hi=" << hi << ",n=" << n << ",seed=" << seed << ")";
  return {std::move(v), tag.str()};
}

SampleSet point_mass(double value, std::size_t n) {
  if (!std::isfinite(value) || value < 0.0 || n == 0) throw std::invalid_argument("bad point mass");
  std::ostringstream tag;
  tag << "point(value=" << value << ",n=" << n << ")";
  return {std::vector<double>(n, value), tag.str()};
}

SampleSet draw_mixture(double p, double rate, double lo, double hi, std::size_t n,
                       std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0) || !(rate > 0.0) || !(hi > lo) || lo < 0.0 || n == 0) {
    throw std::invalid_argument("bad mixture spec");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pick(p);
  std::exponential_distribution<double> exp_dist(rate);
  std::uniform_real_distribution<double> uni_dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = pick(rng) ? exp_dist(rng) : uni_dist(rng);
  std::ostringstream tag;
  tag << "mixture(p=" << p << ",rate=" << rate << ",lo=" << lo << ",hi=" << hi << ",n=" << n
      << ",seed=" << seed << ")";
  return {std::move(v), tag.str()};
}

double expected_abs_error(const SampleSet& samples, const LevelSet& quantizer) {
  check_nonempty(samples);
  KahanSum sum;
  for (double x : samples.values) sum.add(std::fabs(x - quantize(quantizer, x).amplitude));
  return sum.value() / static_cast<double>(samples.values.size());
}

Lemma1Result lemma1_condition(const SampleSet& samples, int precision) {
  check_nonempty(samples);
  check_lemma_precision(precision);
  const double tiny = std::ldexp(1.0, -precision);
  const double n = static_cast<double>(samples.values.size());

  std::size_t in_shell = 0, in_high = 0, in_tail = 0;
  for (double x : samples.values) {
    if (x >= tiny && x < 0.5) ++in_shell;
    if (x >= 0.75 && x < 1.0) ++in_high;
    if (x >= 1.5) ++in_tail;
  }

  Lemma1Result result;
  result.lhs = tiny * (in_shell / n);
  result.rhs = 0.5 * (in_high / n) + precision * (in_tail / n);
  result.holds = result.lhs > result.rhs;

  // Per-sample error difference, so the gap comes with a standard error.
  const LevelSet shift = floor_shift_set(precision);
  const LevelSet integer = make_level_set(LevelKind::Int, precision);
  KahanSum sum, sum_sq;
  for (double x : samples.values) {
    double d = std::fabs(x - quantize(integer, x).amplitude) -
               std::fabs(x - quantize(shift, x).amplitude);
    sum.add(d);
    sum_sq.add(d * d);
  }
  result.empirical_gap = sum.value() / n;
  double var = std::max(0.0, sum_sq.value() / n - result.empirical_gap * result.empirical_gap);
  result.gap_std_error = std::sqrt(var / n);
  return result;
}

DeltaResult delta_pointwise(double v, int precision) {
  check_lemma_precision(precision);
  if (!(v >= 0.0)) throw std::invalid_argument("delta_pointwise requires v >= 0");
  DeltaResult r;
  double q_s = q_shift(v, precision, ShiftMode::FloorAdmissible).amplitude;
  double q_i = q_int(v, precision).amplitude;
  r.delta = std::fabs(v - q_i) - (v - q_s);
  const double tiny = std::ldexp(1.0, -precision);
  r.lower_bound = 0.0;
  if (v >= tiny && v < 0.5) r.lower_bound += tiny;
  if (v >= 0.75 && v < 1.0) r.lower_bound -= 0.5;
  if (v >= 1.5) r.lower_bound -= precision;
  return r;
}

double output_entropy(const SampleSet& samples, const LevelSet& quantizer) {
  check_nonempty(samples);
  return entropy_bits(output_distribution(samples, quantizer));
}

double bit_utilization(const SampleSet& samples, const LevelSet& quantizer) {
  const int bits = ceil_log2(quantizer.size());
  return output_entropy(samples, quantizer) / bits;
}

EntropyDecomposition entropy_decomposition(const SampleSet& samples, int precision) {
  check_nonempty(samples);
  check_lemma_precision(precision);
  const int K = precision;
  const double n = static_cast<double>(samples.values.size());

  std::size_t below = 0, mid = 0, high = 0;
  // Dyadic shells below 1/2: [0, 2^-K) plus [2^-k, 2^-k+1) for k = K..2.
  std::vector<std::size_t> shell_counts(static_cast<std::size_t>(K), 0);
  std::vector<std::size_t> t_counts(static_cast<std::size_t>(K) + 1, 0);
  const LevelSet integer = make_level_set(LevelKind::Int, K);

  for (double x : samples.values) {
    if (x < 0.5) {
      ++below;
      if (x < std::ldexp(1.0, -K)) {
        ++shell_counts[0];
      } else {
        int e = 0;
        (void)std::frexp(x, &e);
        int k = 1 - e;  // x in [2^-k, 2^-k+1), k in 2..K here
        shell_counts[static_cast<std::size_t>(k) - 1] += 1;
      }
    } else {
      if (x < 1.0) ++mid;
      else ++high;
      ++t_counts[static_cast<std::size_t>(q_int(x, K).index) - 1];
    }
  }

  EntropyDecomposition d;
  d.r = below / n;
  d.m = mid / n;
  d.c = high / n;
  d.h2_r = binary_entropy(d.r);

  d.shell_probs.assign(shell_counts.size(), 0.0);
  if (below > 0) {
    for (std::size_t i = 0; i < shell_counts.size(); ++i) {
      d.shell_probs[i] = static_cast<double>(shell_counts[i]) / below;
    }
  }
  const std::size_t above = samples.values.size() - below;
  d.tdist.assign(t_counts.size(), 0.0);
  if (above > 0) {
    d.vdist = {static_cast<double>(mid) / above, static_cast<double>(high) / above};
    for (std::size_t i = 0; i < t_counts.size(); ++i) {
      d.tdist[i] = static_cast<double>(t_counts[i]) / above;
    }
  }

  const double h_r = entropy_bits(d.shell_probs);
  const double h_v = above > 0 ? entropy_bits(d.vdist) : 0.0;
  const double h_t = entropy_bits(d.tdist);
  d.shift_entropy_chain = d.h2_r + d.r * h_r + (1.0 - d.r) * h_v;
  d.int_entropy_chain = d.h2_r + (1.0 - d.r) * h_t;
  d.criterion_lhs = d.r * h_r + (1.0 - d.r) * h_v;
  d.criterion_rhs = (1.0 - d.r) * h_t;
  d.shift_preferred = d.criterion_lhs > d.criterion_rhs;

  d.shift_entropy_direct = output_entropy(samples, floor_shift_set(K));
  d.int_entropy_direct = output_entropy(samples, integer);

  if (std::fabs(d.shift_entropy_direct - d.shift_entropy_chain) > 1e-9 ||
      std::fabs(d.int_entropy_direct - d.int_entropy_chain) > 1e-9) {
    throw std::logic_error("entropy chain-rule identity violated");
  }
  return d;
}

std::size_t Histogram::mode_bin() const {
  return static_cast<std::size_t>(
      std::max_element(density.begin(), density.end()) - density.begin());
}

Histogram membrane_histogram(std::span<const double> trace, std::size_t bins, double v_max) {
  if (trace.empty()) throw std::invalid_argument("membrane trace is empty");
  if (bins == 0 || !(v_max > 0.0)) throw std::invalid_argument("bad histogram spec");
  Histogram h;
  h.lo = 0.0;
  h.hi = v_max;
  h.density.assign(bins, 0.0);
  const double inv = 1.0 / static_cast<double>(trace.size());
  for (double raw : trace) {
    double x = std::clamp(raw, 0.0, v_max);
    auto bin = static_cast<std::size_t>(x / v_max * bins);
    if (bin >= bins) bin = bins - 1;
    h.density[bin] += inv;
  }
  return h;
}

AnalysisReport analyze(const SampleSet& samples, int precision, std::size_t hist_bins,
                       double hist_vmax) {
  check_nonempty(samples);
  AnalysisReport report;
  report.source = samples.source;
  report.precision = precision;
  report.sample_count = samples.values.size();

  const LevelSet sets[] = {floor_shift_set(precision), make_level_set(LevelKind::Int, precision),
                           make_level_set(LevelKind::Uniform, precision)};
  const char* names[] = {"shift_floor", "int", "uniform"};
  for (int i = 0; i < 3; ++i) {
    QuantizerStats stats;
    stats.name = names[i];
    stats.e_abs = expected_abs_error(samples, sets[i]);
    stats.entropy = output_entropy(samples, sets[i]);
    stats.utilization = bit_utilization(samples, sets[i]);
    if (stats.utilization < 0.0 || stats.utilization > 1.0 || stats.e_abs < 0.0) {
      throw std::logic_error("analysis invariant violated (utilization or error out of range)");
    }
    report.per_quantizer.push_back(std::move(stats));
  }
  report.lemma1 = lemma1_condition(samples, precision);
  report.lemma2 = entropy_decomposition(samples, precision);
  report.histogram = membrane_histogram(samples.values, hist_bins, hist_vmax);
  return report;
}

std::string report_to_json(const AnalysisReport& report) {
  nlohmann::json j;
  j["source"] = report.source;
  j["precision"] = report.precision;
  j["samples"] = report.sample_count;
  for (const auto& q : report.per_quantizer) {
    j["quantizers"][q.name] = {
        {"expected_abs_error", q.e_abs}, {"entropy_bits", q.entropy},
        {"bit_utilization", q.utilization}};
  }
  j["lemma1"] = {{"lhs", report.lemma1.lhs},
                 {"rhs", report.lemma1.rhs},
                 {"holds", report.lemma1.holds},
                 {"error_gap_int_minus_shift", report.lemma1.empirical_gap},
                 {"gap_std_error", report.lemma1.gap_std_error}};
  const auto& d = report.lemma2;
  j["lemma2"] = {{"r", d.r},
                 {"m", d.m},
                 {"c", d.c},
                 {"h2_r", d.h2_r},
                 {"shell_probs", d.shell_probs},
                 {"vdist", d.vdist},
                 {"tdist", d.tdist},
                 {"shift_entropy_direct", d.shift_entropy_direct},
                 {"shift_entropy_chain", d.shift_entropy_chain},
                 {"int_entropy_direct", d.int_entropy_direct},
                 {"int_entropy_chain", d.int_entropy_chain},
                 {"criterion_lhs", d.criterion_lhs},
                 {"criterion_rhs", d.criterion_rhs},
                 {"shift_preferred", d.shift_preferred}};
  j["histogram"] = {{"lo", report.histogram.lo},
                    {"hi", report.histogram.hi},
                    {"density", report.histogram.density}};
  return j.dump(2);
}

void report_to_csv(const AnalysisReport& report, std::ostream& out) {
  out << "metric,quantizer,K,value\n";
  out.precision(17);
  for (const auto& q : report.per_quantizer) {
    out << "expected_abs_error," << q.name << ',' << report.precision << ',' << q.e_abs << '\n';
    out << "entropy_bits," << q.name << ',' << report.precision << ',' << q.entropy << '\n';
    out << "bit_utilization," << q.name << ',' << report.precision << ',' << q.utilization
        << '\n';
  }
  out << "lemma1_lhs,," << report.precision << ',' << report.lemma1.lhs << '\n';
  out << "lemma1_rhs,," << report.precision << ',' << report.lemma1.rhs << '\n';
  out << "lemma1_holds,," << report.precision << ',' << (report.lemma1.holds ? 1 : 0) << '\n';
  out << "lemma1_gap,," << report.precision << ',' << report.lemma1.empirical_gap << '\n';
  out << "lemma2_criterion_lhs,," << report.precision << ',' << report.lemma2.criterion_lhs
      << '\n';
  out << "lemma2_criterion_rhs,," << report.precision << ',' << report.lemma2.criterion_rhs
      << '\n';
  out << "lemma2_shift_preferred,," << report.precision << ','
      << (report.lemma2.shift_preferred ? 1 : 0) << '\n';
}

}  // namespace shiftlif
