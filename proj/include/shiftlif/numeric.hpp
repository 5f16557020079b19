#pragma once

#include <cmath>
#include <cstdint>

namespace shiftlif {

// Kahan compensated accumulator. Error/entropy sums must not depend on how
// the sample set is partitioned, so every statistic in `analysis` runs
// through this instead of a bare +=.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ceil(log2(n)) for n >= 1.
inline int ceil_log2(std::uint64_t n) {
  int bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

}  // namespace shiftlif
