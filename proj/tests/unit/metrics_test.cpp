// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "hyperscope/distribution.hpp"
#include "hyperscope/metrics.hpp"
#include "hyperscope/synthetic.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

using namespace hyperscope;
using doctest::Approx;

namespace {

TeacherForcedTrace with_b(TeacherForcedTrace t, float (*f)(float)) {
  for (std::size_t i = 0; i < t.logits_a.size(); ++i) t.logits_b[i] = f(t.logits_a[i]);
  return t;
}

float same(float x) { return x; }
float negated(float x) { return -x; }

// B's top token is always A's second-ranked token.
TeacherForcedTrace rank_two_trace(std::mt19937_64& rng) {
  auto t = oracle::random_trace(rng, 30, 20);
  for (std::size_t p = 0; p < t.positions(); ++p) {
    const auto za = t.logits(Model::a, p);
    const auto r = ranks_of(za);
    auto zb = t.logits(Model::b, p);
    for (std::size_t v = 0; v < zb.size(); ++v) zb[v] = r[v] == 2 ? 100.0f : za[v];
  }
  return t;
}

}  // namespace

TEST_CASE("agreement, correlation and provenance of identical logits") {
  std::mt19937_64 rng(31);
  const auto t = with_b(oracle::random_trace(rng, 40, 25), same);
  CHECK(top1_agreement(t).mean == 1.0);
  CHECK(spearman_rho_per_step(t).mean == 1.0);
  const auto h = provenance_histogram(t);
  CHECK(h.rank1 == 25);
  CHECK(h.total() == 25);
  const auto series = rank_shift_series(std::vector<TeacherForcedTrace>{t});
  REQUIRE(series.snapshots.size() == 1);
  CHECK(series.snapshots[0].fractions()[0] == 1.0);
}

TEST_CASE("negated logits never agree and are perfectly anti-correlated") {
  std::mt19937_64 rng(32);
  const auto t = with_b(oracle::random_trace(rng, 40, 25), negated);
  CHECK(top1_agreement(t).mean == 0.0);
  CHECK(spearman_rho_per_step(t).mean == Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("spearman of small rank vectors") {
  const std::vector<std::uint32_t> a{1, 2, 3, 4};
  const std::vector<std::uint32_t> b{2, 1, 4, 3};
  CHECK(spearman_rho_of_ranks(a, b) == Approx(0.6).epsilon(1e-15));
  std::mt19937_64 rng(33);
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_trace(rng, 17, 3);
    const auto series = spearman_rho_series(t);
    for (std::size_t p = 0; p < t.positions(); ++p) {
      const auto za = t.logits(Model::a, p);
      const auto zb = t.logits(Model::b, p);
      const double want = oracle::permutation_spearman(
          oracle::ranks(std::vector<float>(za.begin(), za.end())),
          oracle::ranks(std::vector<float>(zb.begin(), zb.end())));
      CHECK(series[p] == Approx(want).epsilon(1e-14));
    }
  }
}

TEST_CASE("provenance bins") {
  std::mt19937_64 rng(34);
  const auto t = rank_two_trace(rng);
  const auto h = provenance_histogram(t);
  CHECK(h.rank2_10 == t.positions());
  CHECK(h.fractions()[1] == 1.0);

  ProvenanceHistogram bins;
  for (std::uint32_t r : {1u, 2u, 10u, 11u, 199u, 200u, 5000u}) bins.add(r);
  CHECK(bins.rank1 == 1);
  CHECK(bins.rank2_10 == 2);
  CHECK(bins.rank11_199 == 2);
  CHECK(bins.rank200_plus == 2);
  const auto f = bins.fractions();
  CHECK(f[0] + f[1] + f[2] + f[3] == Approx(1.0).epsilon(1e-15));
  const auto c = bins.coarse_fractions();
  CHECK(c[2] == Approx(4.0 / 7.0));
  CHECK(ProvenanceHistogram{}.fractions()[0] == 0.0);

  const auto series = rank_shift_series(std::vector<TeacherForcedTrace>{with_b(t, same), t});
  REQUIRE(series.snapshots.size() == 2);
  CHECK(series.snapshots[0].fractions() == std::array<double, 4>{1, 0, 0, 0});
  CHECK(series.snapshots[1].fractions() == std::array<double, 4>{0, 1, 0, 0});

  const auto other = oracle::random_trace(rng, 31, 4);
  CHECK(error_of([&] { rank_shift_series(std::vector<TeacherForcedTrace>{t, other}); }) ==
        Errc::vocab_mismatch);
}

TEST_CASE("temperature rescaling of one side changes no rank metric") {
  std::mt19937_64 rng(35);
  for (int i = 0; i < 50; ++i) {
    const auto t = oracle::random_trace(rng, 64, 10);
    for (float temp : {0.1f, 0.59f, 3.0f}) {
      auto scaled = t;
      for (auto& v : scaled.logits_a) v /= temp;
      CHECK(top1_agreement(scaled) == top1_agreement(t));
      CHECK(provenance_histogram(scaled) == provenance_histogram(t));
      CHECK(spearman_rho_per_step(scaled) == spearman_rho_per_step(t));
    }
  }
}

TEST_CASE("top-1 error rate") {
  std::mt19937_64 rng(36);
  auto t = oracle::random_trace(rng, 8, 12);
  for (std::size_t p = 0; p + 1 < t.positions(); ++p) {
    auto z = t.logits(Model::a, p);
    for (auto& v : z) v = 0.0f;
    z[t.tokens[p + 1]] = 5.0f;
    auto zb = t.logits(Model::b, p);
    for (auto& v : zb) v = 0.0f;
    zb[(t.tokens[p + 1] + 1) % 8] = 5.0f;
  }
  CHECK(top1_error_rate(t, Model::a).mean == 0.0);
  CHECK(top1_error_rate(t, Model::a).n == 11);
  CHECK(top1_error_rate(t, Model::b).mean == 1.0);

  auto single = oracle::random_trace(rng, 8, 1);
  CHECK(error_of([&] { top1_error_rate(single, Model::a); }) == Errc::trace_too_short);
}

TEST_CASE("top-1 error of random synthetic traces is close to chance") {
  // Tokens are drawn independently of the logits, so a hit has probability 1/V.
  double total = 0.0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    std::vector<TokenId> tokens(64);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      tokens[i] = static_cast<TokenId>(mix64(1000 + s, i) % 16);
    }
    SyntheticModelParams pa;
    pa.seed = static_cast<std::uint64_t>(s);
    SyntheticTraceOptions opts;
    opts.vocab_size = 16;
    const auto t = gen_synthetic_trace(pa, pa, tokens, opts);
    total += top1_error_rate(t, Model::a).mean;
  }
  CHECK(std::abs(total / seeds - (1.0 - 1.0 / 16.0)) <= 0.05);
}

TEST_CASE("collections aggregate per sequence") {
  std::mt19937_64 rng(37);
  const auto a = with_b(oracle::random_trace(rng, 10, 7), same);
  const auto b = with_b(oracle::random_trace(rng, 10, 3), negated);
  const std::vector<TeacherForcedTrace> both{a, b};
  const auto s = top1_agreement(both);
  CHECK(s.n == 2);
  CHECK(s.mean == 0.5);
  CHECK(s.standard_error == Approx(0.5));
  const auto rho = spearman_rho_per_step(both);
  CHECK(rho.mean == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("type-token ratio") {
  CHECK(ttr(std::vector<TokenId>{1, 2, 1, 3}) == 0.75);
  CHECK(ttr(std::vector<TokenId>(10, 4)) == Approx(0.1));
  CHECK(ttr(std::vector<TokenId>{1, 2, 3, 4, 5}) == 1.0);
  CHECK(error_of([] { ttr(std::vector<TokenId>{}); }) == Errc::empty_sequence);
}

TEST_CASE("n-gram repetition") {
  CHECK(ngram_repetition(std::vector<TokenId>{1, 2, 1, 2, 1}, 2) == 0.5);
  CHECK(ngram_repetition(std::vector<TokenId>{1, 2, 3, 4}, 2) == 0.0);
  for (std::size_t m : {3u, 10u, 50u}) {
    CHECK(ngram_repetition(std::vector<TokenId>(m, 9), 2) == Approx(1.0 - 1.0 / (m - 1)));
  }
  CHECK(ngram_repetition(std::vector<TokenId>{1, 2, 3, 1, 2, 3}, 3) == Approx(0.25));
  CHECK(error_of([] { ngram_repetition(std::vector<TokenId>{1, 2}, 3); }) ==
        Errc::sequence_shorter_than_n);

  std::mt19937_64 rng(38);
  std::uniform_int_distribution<TokenId> tok(0, 5);
  for (int i = 0; i < 200; ++i) {
    std::vector<TokenId> s(3 + i % 40);
    for (auto& v : s) v = tok(rng);
    const double t = ttr(s);
    CHECK(t > 0.0);
    CHECK(t <= 1.0);
    for (std::size_t n : {2u, 3u}) {
      const double r = ngram_repetition(s, n);
      CHECK(r >= 0.0);
      CHECK(r < 1.0);
    }
  }
}

TEST_CASE("diversity report summarizes per sequence") {
  const std::vector<std::vector<TokenId>> seqs{{1, 2, 1, 2, 1}, {1, 2, 3, 4, 5}};
  const auto d = diversity_report(seqs);
  CHECK(d.ttr.n == 2);
  CHECK(d.ttr.mean == Approx((0.4 + 1.0) / 2));
  CHECK(d.bigram_rep.mean == Approx(0.25));
  CHECK(d.trigram_rep.mean == Approx((1.0 - 2.0 / 3.0) / 2));
}
