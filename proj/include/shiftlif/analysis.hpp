#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shiftlif/matrix.hpp"
#include "shiftlif/quantizer.hpp"

namespace shiftlif {

// Realizations of the normalized membrane potential X >= 0, plus a tag that
// records where they came from (synthetic family or a recorded trace).
struct SampleSet {
  std::vector<double> values;
  std::string source;
};

SampleSet make_sample_set(std::vector<double> values, std::string source);

// Synthetic families used by the distribution-level experiments.
SampleSet draw_exponential(double rate, std::size_t n, std::uint64_t seed);
SampleSet draw_uniform(double lo, double hi, std::size_t n, std::uint64_t seed);
SampleSet point_mass(double value, std::size_t n);
// Two-component mixture: Exp(rate) with probability p, else U[lo, hi].
SampleSet draw_mixture(double p, double rate, double lo, double hi, std::size_t n,
                       std::uint64_t seed);

// Mean |x - Q(x)| over the sample set.
double expected_abs_error(const SampleSet& samples, const LevelSet& quantizer);

// Sufficient condition for E_shift < E_int:
//   2^-K Pr(2^-K <= X < 1/2)  >  1/2 Pr(3/4 <= X < 1) + K Pr(X >= 3/2).
struct Lemma1Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double empirical_gap = 0.0;   // E_int - E_shift on the same samples
  double gap_std_error = 0.0;   // Monte Carlo standard error of the gap
};
Lemma1Result lemma1_condition(const SampleSet& samples, int precision);

// Pointwise error difference Delta(v) = |v - Q_int(v)| - (v - Q_shift(v)) and
// the proof's indicator lower bound. delta >= lower_bound must hold.
struct DeltaResult {
  double delta = 0.0;
  double lower_bound = 0.0;
};
DeltaResult delta_pointwise(double v, int precision);

// Shannon entropy (bits) of the empirical output distribution.
double output_entropy(const SampleSet& samples, const LevelSet& quantizer);

// Normalized output entropy H(Q(X)) / ceil(log2(K+2)).
double bit_utilization(const SampleSet& samples, const LevelSet& quantizer);

// Split of both output entropies at the 1/2 boundary:
//   H(Q_shift(X)) = h2(r) + r H(R) + (1-r) H(V)
//   H(Q_int(X))   = h2(r) + (1-r) H(T)
// shell_probs holds (R_0, R_2, ..., R_K); the k=1 shell belongs to vdist.
struct EntropyDecomposition {
  double r = 0.0, m = 0.0, c = 0.0;
  std::vector<double> shell_probs;   // conditional on X < 1/2
  std::array<double, 2> vdist{0.0, 0.0};  // (m, c) / (1 - r)
  std::vector<double> tdist;         // T_1..T_{K+1}, conditional on X >= 1/2
  double h2_r = 0.0;
  double shift_entropy_direct = 0.0, shift_entropy_chain = 0.0;
  double int_entropy_direct = 0.0, int_entropy_chain = 0.0;
  double criterion_lhs = 0.0;  // r H(R) + (1-r) H(V)
  double criterion_rhs = 0.0;  // (1-r) H(T)
  bool shift_preferred = false;
};
// Verifies both chain-rule identities against the directly computed
// entropies to 1e-9 and throws std::logic_error if either fails.
EntropyDecomposition entropy_decomposition(const SampleSet& samples, int precision);

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<double> density;  // normalized bin masses, sum == 1
  std::size_t mode_bin() const;
};
// Values are clamped into [0, v_max] before binning.
Histogram membrane_histogram(std::span<const double> trace, std::size_t bins, double v_max);

struct QuantizerStats {
  std::string name;
  double e_abs = 0.0;
  double entropy = 0.0;
  double utilization = 0.0;
};

struct AnalysisReport {
  std::string source;
  int precision = 0;
  std::size_t sample_count = 0;
  std::vector<QuantizerStats> per_quantizer;  // shift (floor), int, uniform
  Lemma1Result lemma1;
  EntropyDecomposition lemma2;
  Histogram histogram;
};

AnalysisReport analyze(const SampleSet& samples, int precision, std::size_t hist_bins = 40,
                       double hist_vmax = 1.5);

std::string report_to_json(const AnalysisReport& report);
// Flat table: one row per quantizer plus lemma rows.
void report_to_csv(const AnalysisReport& report, std::ostream& out);

}  // namespace shiftlif
