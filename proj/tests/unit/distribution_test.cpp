// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hyperscope/distribution.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

using namespace hyperscope;
using doctest::Approx;

namespace {

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t v, double spread = 3.0) {
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<double> z(v);
  for (auto& x : z) x = normal(rng);
  return z;
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform at any temperature") {
  const std::vector<double> z(4, 0.0);
  for (double t : {0.01, 0.5, 1.0, 7.0}) {
    for (double p : softmax_with_temperature(z, t)) CHECK(p == Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("softmax matches a high-precision evaluation") {
  const std::vector<double> z{2.0, 1.0, 0.0};
  const auto p = softmax_with_temperature(z, 1.0);
  const auto ref = oracle::softmax(z, 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p[i] - ref[i]) < 1e-15);
  CHECK(p[0] == Approx(0.66524096).epsilon(1e-7));
  CHECK(p[1] == Approx(0.24472847).epsilon(1e-7));
  CHECK(p[2] == Approx(0.09003057).epsilon(1e-6));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto zz = random_logits(rng, 20, 10.0);
    const double t = 0.05 + 3.0 * (i % 7) / 7.0;
    const auto got = softmax_with_temperature(zz, t);
    const auto want = oracle::softmax(zz, t);
    double sum = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(std::abs(got[k] - want[k]) < 1e-13);
      sum += got[k];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("softmax survives extreme logits and is shift invariant") {
  const std::vector<double> big{1000.0, 999.0, -1000.0};
  const auto p = softmax_with_temperature(big, 1.0);
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] + p[1] + p[2] == Approx(1.0));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    auto z = random_logits(rng, 16);
    auto shifted = z;
    for (auto& v : shifted) v += 123.456;
    const auto a = softmax_with_temperature(z, 0.7);
    const auto b = softmax_with_temperature(shifted, 0.7);
    for (std::size_t k = 0; k < z.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-12);
  }
}

TEST_CASE("softmax rejects non-positive temperatures") {
  const std::vector<double> z{1.0, 2.0};
  CHECK(error_of([&] { softmax_with_temperature(z, 0.0); }) == Errc::non_positive_temperature);
  CHECK(error_of([&] { softmax_with_temperature(z, -1.0); }) == Errc::non_positive_temperature);
  CHECK(error_of([&] { solve_temperature_for_entropy(std::vector<double>{0.0, 1.0}, 0.0); }) ==
        Errc::target_out_of_range);
}

TEST_CASE("entropy of reference distributions") {
  const std::vector<double> uniform(4, 0.25);
  CHECK(entropy(uniform) == Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(entropy(std::vector<double>{0.0, 1.0, 0.0}) == 0.0);
  const std::vector<double> z{2.0, 1.0, 0.0};
  CHECK(entropy(softmax_with_temperature(z, 1.0)) == Approx(0.8323955818399389).epsilon(1e-14));
  CHECK(entropy_at_temperature(z, 1.0) == Approx(0.8323955818399389).epsilon(1e-14));
}

TEST_CASE("entropy at temperature agrees with the high-precision oracle") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto z = random_logits(rng, 30, 5.0);
    const double t = std::exp(std::uniform_real_distribution<double>(-3.0, 2.0)(rng));
    CHECK(std::abs(entropy_at_temperature(z, t) - oracle::entropy(z, t)) < 1e-11);
  }
}

TEST_CASE("ranks and argmax follow the tie-break convention") {
  CHECK(ranks_of(std::vector<double>{5.0, 1.0, 3.0}) == RankVector{1, 3, 2});
  CHECK(ranks_of(std::vector<double>{2.0, 2.0, 2.0}) == RankVector{1, 2, 3});
  CHECK(argmax_token(std::vector<double>{1.0, 9.0, 9.0}) == 1);
  CHECK(argmax_token(std::vector<double>{0.0, 0.0, 7.0}) == 2);

  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> small(0, 4);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> z(25);
    // Coarse values force many ties.
    for (auto& v : z) v = i % 2 ? small(rng) : std::normal_distribution<double>()(rng);
    const auto r = ranks_of(z);
    CHECK(r == oracle::ranks(z));
    CHECK(r[argmax_token(z)] == 1);
    std::vector<std::uint32_t> sorted = r;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) CHECK(sorted[k] == k + 1);
  }
}

TEST_CASE("temperature scaling never changes ranks or argmax") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto z = random_logits(rng, 50);
    const auto base = ranks_of(z);
    for (double t : {0.1, 0.59, 1.0, 3.0}) {
      std::vector<double> scaled(z);
      for (auto& v : scaled) v /= t;
      CHECK(ranks_of(scaled) == base);
      CHECK(argmax_token(scaled) == argmax_token(z));
      const auto p = softmax_with_temperature(z, t);
      CHECK(ranks_of(p) == base);
    }
  }
}

TEST_CASE("entropy increases strictly with temperature") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> log_t(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const auto z = random_logits(rng, 12);
    double t1 = std::exp(log_t(rng));
    double t2 = std::exp(log_t(rng));
    if (t1 == t2) continue;
    if (t1 > t2) std::swap(t1, t2);
    CHECK(entropy_at_temperature(z, t1) < entropy_at_temperature(z, t2));
  }
}

TEST_CASE("solver hits the target entropy") {
  const std::vector<double> z{2.0, 1.0, 0.0};
  SUBCASE("fixed point at temperature one") {
    const auto r = solve_temperature_for_entropy(z, entropy_at_temperature(z, 1.0));
    CHECK_FALSE(r.clamped);
    CHECK(r.t_star == Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("target 0.5 re-evaluated independently") {
    const auto r = solve_temperature_for_entropy(z, 0.5);
    CHECK_FALSE(r.clamped);
    CHECK(std::abs(oracle::entropy(z, r.t_star) - 0.5) <= 1e-6);
    CHECK(r.t_star < 1.0);
  }
  SUBCASE("random logits and targets") {
    std::mt19937_64 rng(10);
    for (int i = 0; i < 300; ++i) {
      const auto zz = random_logits(rng, 40, 4.0);
      const double lo = 0.05;
      const double hi = std::log(40.0) - 0.05;
      const double target = std::uniform_real_distribution<double>(lo, hi)(rng);
      const auto r = solve_temperature_for_entropy(zz, target);
      CHECK_FALSE(r.clamped);
      CHECK(std::abs(oracle::entropy(zz, r.t_star) - target) <= 1e-6);
      CHECK(std::abs(r.achieved_entropy - target) <= 1e-6);
    }
  }
}

TEST_CASE("solver reports unreachable inputs") {
  CHECK(error_of([] { solve_temperature_for_entropy(std::vector<double>{1.0, 1.0, 1.0}, 0.5); }) ==
        Errc::constant_logits);
  CHECK(error_of([] {
          solve_temperature_for_entropy(std::vector<double>{0.0, 1.0}, std::log(2.0));
        }) == Errc::target_out_of_range);
  // Nearly uniform target from a sharply peaked vector needs a wide bracket;
  // a narrow limit forces a clamped answer instead.
  TemperatureSolveOptions narrow;
  narrow.lower = 0.5;
  narrow.upper = 2.0;
  narrow.lower_limit = 0.5;
  narrow.upper_limit = 2.0;
  const std::vector<double> peaked{50.0, 0.0, 0.0, 0.0};
  const auto r = solve_temperature_for_entropy(peaked, 1.3, narrow);
  CHECK(r.clamped);
  CHECK(r.t_star == Approx(2.0));
}

TEST_CASE("global temperature matches the mean entropy") {
  std::mt19937_64 rng(11);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 20; ++i) {
    std::vector<float> row(16);
    for (auto& v : row) v = static_cast<float>(std::normal_distribution<double>(0.0, 2.0)(rng));
    rows.push_back(row);
  }
  std::vector<std::span<const float>> spans(rows.begin(), rows.end());
  const double target = 1.2;
  const auto r = solve_global_temperature(spans, target);
  CHECK_FALSE(r.clamped);
  double mean = 0.0;
  for (const auto& row : rows) mean += oracle::entropy(row, r.t_star);
  mean /= static_cast<double>(rows.size());
  CHECK(std::abs(mean - target) <= 1e-6);

  // Rows scaled by two are matched by halving the temperature of the originals.
  std::vector<std::vector<float>> sharp = rows;
  for (auto& row : sharp) {
    for (auto& v : row) v *= 2.0f;
  }
  double sharp_mean = 0.0;
  for (const auto& row : sharp) sharp_mean += entropy_at_temperature(std::span<const float>(row), 1.0);
  sharp_mean /= static_cast<double>(sharp.size());
  CHECK(solve_global_temperature(spans, sharp_mean).t_star == Approx(0.5).epsilon(1e-5));
}
