#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "shiftlif/quantizer.hpp"

using namespace shiftlif;

TEST_SUITE("quantizer") {

TEST_CASE("shift alphabet structure") {
  auto set = make_level_set(LevelKind::Shift, 2);
  CHECK(set.levels == std::vector<double>{0.0, 0.25, 0.5, 1.0});

  auto nine = make_level_set(LevelKind::Shift, 7);
  CHECK(nine.levels.size() == 9);
  CHECK(nine.levels[1] == std::ldexp(1.0, -7));

  for (int k = 0; k <= 10; ++k) {
    auto s = make_level_set(LevelKind::Shift, k);
    CHECK(s.levels.size() == static_cast<std::size_t>(k) + 2);
    CHECK(s.levels.front() == 0.0);
    for (std::size_t i = 1; i < s.levels.size(); ++i) CHECK(s.levels[i - 1] < s.levels[i]);
  }
}

TEST_CASE("int alphabet recovers binary LIF at K=0") {
  auto set = make_level_set(LevelKind::Int, 0);
  CHECK(set.levels == std::vector<double>{0.0, 1.0});
}

TEST_CASE("uniform alphabet") {
  auto set = make_level_set(LevelKind::Uniform, 2);
  REQUIRE(set.levels.size() == 4);
  CHECK(set.levels[0] == 0.0);
  CHECK(set.levels[1] == doctest::Approx(1.0 / 3.0));
  CHECK(set.levels[3] == 1.0);
}

TEST_CASE("level set rejects out-of-range K") {
  CHECK_THROWS_AS(make_level_set(LevelKind::Shift, -1), std::invalid_argument);
  CHECK_THROWS_AS(make_level_set(LevelKind::Shift, 31), std::invalid_argument);
}

TEST_CASE("q_shift worked values") {
  CHECK(q_shift(0.6, 2, ShiftMode::AlgorithmicClamp).amplitude == 0.5);
  CHECK(q_shift(0.6, 2, ShiftMode::FloorAdmissible).amplitude == 0.5);
  CHECK(q_shift(0.0, 2, ShiftMode::AlgorithmicClamp).amplitude == 0.0);
  CHECK(q_shift(0.0, 5, ShiftMode::FloorAdmissible).index == 0);
  CHECK(q_shift(1.0, 2, ShiftMode::AlgorithmicClamp).amplitude == 1.0);
  CHECK(q_shift(1.7, 2, ShiftMode::AlgorithmicClamp).amplitude == 1.0);

  // The divergent shell [2^-(K+1), 2^-K): clamp emits 2^-K, floor emits 0.
  CHECK(q_shift(0.2, 2, ShiftMode::AlgorithmicClamp).amplitude == 0.25);
  CHECK(q_shift(0.2, 2, ShiftMode::FloorAdmissible).amplitude == 0.0);
}

TEST_CASE("q_shift maps exact powers of two to themselves") {
  for (int K : {1, 2, 7, 30}) {
    for (int k = 0; k <= K; ++k) {
      double level = std::ldexp(1.0, -k);
      CHECK(q_shift(level, K, ShiftMode::AlgorithmicClamp).amplitude == level);
      CHECK(q_shift(level, K, ShiftMode::FloorAdmissible).amplitude == level);
    }
  }
}

TEST_CASE("q_shift rejects non-finite input") {
  CHECK_THROWS_AS(q_shift(std::nan(""), 2, ShiftMode::AlgorithmicClamp), std::domain_error);
  CHECK_THROWS_AS(q_shift(INFINITY, 2, ShiftMode::FloorAdmissible), std::domain_error);
}

TEST_CASE("q_int worked values") {
  CHECK(q_int(0.4, 2).amplitude == 0.0);
  CHECK(q_int(0.5, 2).amplitude == 1.0);  // left-closed bin
  CHECK(q_int(2.6, 2).amplitude == 3.0);  // saturation
  CHECK(q_int(1.4999, 2).amplitude == 1.0);
  CHECK(q_int(1.5, 2).amplitude == 2.0);
  CHECK_THROWS_AS(q_int(std::nan(""), 2), std::domain_error);
  CHECK_THROWS_AS(q_int(-0.1, 2), std::invalid_argument);
}

TEST_CASE("q_uniform worked values") {
  CHECK(q_uniform(0.0, 2).amplitude == 0.0);
  CHECK(q_uniform(0.49, 2).index == 1);  // nearest of {0, 1/3, 2/3, 1}
  CHECK(q_uniform(1.2, 2).amplitude == 1.0);
  // 0.5 is the exact real midpoint of 1/3 and 2/3: ties round up.
  CHECK(q_uniform(0.5, 2).index == 2);
  CHECK_THROWS_AS(q_uniform(std::nan(""), 2), std::domain_error);
}

TEST_CASE("oracle equivalence on random inputs") {
  std::mt19937_64 rng(7001);
  for (int K : {0, 1, 2, 7}) {
    auto shift_floor = make_level_set(LevelKind::Shift, K, ShiftMode::FloorAdmissible);
    std::uniform_real_distribution<double> dist(0.0, std::max(1.0, 2.0 * K));
    for (int i = 0; i < 20000; ++i) {
      double v = dist(rng);
      CHECK(q_shift(v, K, ShiftMode::FloorAdmissible).amplitude ==
            oracles::floor_scan(shift_floor, v));
      CHECK(q_shift(v, K, ShiftMode::AlgorithmicClamp).amplitude ==
            oracles::alg1_transcription(v, K));
      CHECK(q_int(v, K).index == oracles::int_scan(v, K));
      CHECK(q_uniform(v, K).index == oracles::uniform_scan(v, K));
    }
  }
}

TEST_CASE("idempotence") {
  std::mt19937_64 rng(7002);
  std::uniform_real_distribution<double> dist(0.0, 4.0);
  for (int K : {0, 1, 2, 5}) {
    for (int i = 0; i < 5000; ++i) {
      double v = dist(rng);
      for (ShiftMode mode : {ShiftMode::AlgorithmicClamp, ShiftMode::FloorAdmissible}) {
        auto s = q_shift(v, K, mode);
        CHECK(q_shift(s.amplitude, K, mode) == s);
      }
      auto si = q_int(v, K);
      CHECK(q_int(si.amplitude, K) == si);
      auto su = q_uniform(v, K);
      CHECK(q_uniform(su.amplitude, K) == su);
    }
  }
}

TEST_CASE("monotonicity") {
  std::mt19937_64 rng(7003);
  std::uniform_real_distribution<double> dist(0.0, 4.0);
  const int K = 3;
  for (int i = 0; i < 5000; ++i) {
    double a = dist(rng), b = dist(rng);
    if (a > b) std::swap(a, b);
    for (ShiftMode mode : {ShiftMode::AlgorithmicClamp, ShiftMode::FloorAdmissible}) {
      CHECK(q_shift(a, K, mode).amplitude <= q_shift(b, K, mode).amplitude);
    }
    CHECK(q_int(a, K).amplitude <= q_int(b, K).amplitude);
    CHECK(q_uniform(a, K).amplitude <= q_uniform(b, K).amplitude);
  }
}

TEST_CASE("floor property: FloorAdmissible never exceeds the input") {
  std::mt19937_64 rng(7004);
  std::uniform_real_distribution<double> dist(0.0, 4.0);
  for (int K : {1, 2, 8}) {
    for (int i = 0; i < 5000; ++i) {
      double v = dist(rng);
      CHECK(q_shift(v, K, ShiftMode::FloorAdmissible).amplitude <= std::clamp(v, 0.0, 1.0));
    }
  }
}

TEST_CASE("shift amplitudes are exact binary fractions") {
  for (int K : {2, 17, 30}) {
    auto set = make_level_set(LevelKind::Shift, K);
    for (int k = 0; k <= K; ++k) {
      double amp = set.levels[static_cast<std::size_t>(K - k) + 1];
      CHECK(amp == std::ldexp(1.0, -k));
      CHECK(std::ldexp(amp, k) == 1.0);  // no rounding anywhere
    }
  }
}

TEST_CASE("shift_exponent round trip") {
  const int K = 4;
  for (int k = 0; k <= K; ++k) {
    auto s = q_shift(std::ldexp(1.0, -k), K, ShiftMode::AlgorithmicClamp);
    CHECK(shift_exponent(s, K) == k);
  }
  CHECK_THROWS_AS(shift_exponent(SpikeLevel{0, 0.0}, K), std::invalid_argument);
}

}  // TEST_SUITE
