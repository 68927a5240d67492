// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hyperscope/geometry.hpp"
#include "hyperscope/synthetic.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

using namespace hyperscope;
using doctest::Approx;

namespace {

ActivationSample gaussian_sample(std::mt19937_64& rng, std::size_t n,
                                 const std::vector<double>& variances) {
  ActivationSample s;
  s.rows = n;
  s.cols = variances.size();
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : variances) s.values.push_back(std::sqrt(v) * g(rng));
  }
  return s;
}

double analytic_pr(const std::vector<double>& lambda) {
  double s = 0.0, q = 0.0;
  for (double v : lambda) {
    s += v;
    q += v * v;
  }
  return s * s / q;
}

Eigen::MatrixXd as_matrix(const ActivationSample& s) {
  Eigen::MatrixXd m(s.rows, s.cols);
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) m(i, j) = s.values[i * s.cols + j];
  }
  return m;
}

ActivationSample from_matrix(const Eigen::MatrixXd& m) {
  ActivationSample s;
  s.rows = static_cast<std::size_t>(m.rows());
  s.cols = static_cast<std::size_t>(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) s.values.push_back(m(i, j));
  }
  return s;
}

// Direct D x D covariance eigenvalues, descending.
std::vector<double> direct_spectrum(const ActivationSample& s) {
  Eigen::MatrixXd x = as_matrix(s);
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd c = x.transpose() * x / static_cast<double>(s.rows - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + c.rows());
  std::sort(out.rbegin(), out.rend());
  return out;
}

TeacherForcedTrace hidden_trace(std::uint32_t positions, std::uint32_t dim) {
  std::mt19937_64 rng(41);
  return oracle::random_trace(rng, 4, positions, 3, 2, dim);
}

}  // namespace

TEST_CASE("participation ratio of explicit spectra") {
  for (std::size_t d : {1u, 2u, 7u, 64u}) {
    const std::vector<double> flat(d, 2.5);
    CHECK(participation_ratio_of_spectrum(flat) == static_cast<double>(d));
  }
  CHECK(participation_ratio_of_spectrum(std::vector<double>{3.0, 1.0}) ==
        Approx(1.6).epsilon(1e-9));
  CHECK(participation_ratio_of_spectrum(std::vector<double>{5.0, 0.0, 0.0}) == 1.0);
  CHECK(participation_ratio_of_spectrum(std::vector<double>{0.0, 0.0}) == 1.0);
}

TEST_CASE("participation ratio of a large gaussian sample") {
  std::mt19937_64 rng(42);
  const std::vector<double> lambda{9, 5, 3, 2, 1, 1, 0.5, 0.25, 0.1, 0.05};
  const auto s = gaussian_sample(rng, 10000, lambda);
  const double pr = participation_ratio(s);
  CHECK(std::abs(pr - analytic_pr(lambda)) <= 0.05 * analytic_pr(lambda));
  const auto iso = gaussian_sample(rng, 10000, std::vector<double>(12, 1.0));
  CHECK(std::abs(participation_ratio(iso) - 12.0) <= 0.05 * 12.0);
}

TEST_CASE("participation ratio is rotation and scale invariant") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 10; ++i) {
    const auto s = gaussian_sample(rng, 200, {4, 2, 1, 0.5, 0.2, 0.1});
    const double base = participation_ratio(s);
    std::normal_distribution<double> g;
    Eigen::MatrixXd r(6, 6);
    for (Eigen::Index a = 0; a < 6; ++a) {
      for (Eigen::Index b = 0; b < 6; ++b) r(a, b) = g(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
    const auto rotated = from_matrix(as_matrix(s) * q);
    CHECK(std::abs(participation_ratio(rotated) - base) <= 1e-6);
    const auto scaled = from_matrix(as_matrix(s) * 3.7);
    CHECK(std::abs(participation_ratio(scaled) - base) <= 1e-6);
  }
}

TEST_CASE("covariance spectrum agrees with a direct eigendecomposition") {
  std::mt19937_64 rng(44);
  SUBCASE("more samples than dimensions") {
    const auto s = gaussian_sample(rng, 60, {3, 2, 1, 1, 0.5});
    const auto got = covariance_spectrum(s);
    const auto want = direct_spectrum(s);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-9));
  }
  SUBCASE("fewer samples than dimensions uses the Gram matrix") {
    const auto s = gaussian_sample(rng, 6, std::vector<double>(40, 1.0));
    const auto got = covariance_spectrum(s);
    const auto want = direct_spectrum(s);
    for (std::size_t i = 0; i < 5; ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-9));
    for (std::size_t i = 5; i < got.size(); ++i) CHECK(got[i] == 0.0);
    CHECK(participation_ratio(s) == Approx(participation_ratio_of_spectrum(want)).epsilon(1e-9));
  }
  SUBCASE("too few samples") {
    const auto s = gaussian_sample(rng, 1, {1, 1});
    CHECK(error_of([&] { covariance_spectrum(s); }) == Errc::degenerate_sample);
  }
}

TEST_CASE("cosine and L2 of constructed hidden states") {
  auto t = hidden_trace(3, 3);
  // Position 0: orthogonal unit vectors. Position 1: B = 2A. Position 2: A = 0.
  auto a0 = t.hidden(Model::a, 0, 1);
  auto b0 = t.hidden(Model::b, 0, 1);
  std::fill(a0.begin(), a0.end(), 0.0f);
  std::fill(b0.begin(), b0.end(), 0.0f);
  a0[0] = 1.0f;
  b0[1] = 1.0f;
  auto a1 = t.hidden(Model::a, 1, 1);
  auto b1 = t.hidden(Model::b, 1, 1);
  a1[0] = 1.0f;
  a1[1] = 2.0f;
  a1[2] = 2.0f;
  for (std::size_t i = 0; i < 3; ++i) b1[i] = 2.0f * a1[i];
  auto a2 = t.hidden(Model::a, 2, 1);
  auto b2 = t.hidden(Model::b, 2, 1);
  std::fill(a2.begin(), a2.end(), 0.0f);
  b2[0] = 0.0f;
  b2[1] = 3.0f;
  b2[2] = 4.0f;

  const std::vector<std::size_t> p0{0}, p1{1}, p2{2};
  CHECK(layer_cosine(t, 1, p0).mean == Approx(0.0));
  CHECK(layer_l2(t, 1, p0).mean == Approx(std::sqrt(2.0)));
  CHECK(layer_cosine(t, 1, p1).mean == Approx(1.0));
  CHECK(layer_l2(t, 1, p1).mean == Approx(3.0));
  CHECK(layer_cosine(t, 1, p2).mean == 0.0);
  CHECK(layer_l2(t, 1, p2).mean == Approx(5.0));
  const auto all = layer_cosine(t, 1);
  CHECK(all.n == 3);
  CHECK(all.mean == Approx(1.0 / 3.0));
}

TEST_CASE("geometry rejects missing or out-of-range hidden states") {
  std::mt19937_64 rng(45);
  const auto only_a = oracle::random_trace(rng, 4, 5, 1, 2, 3);
  CHECK(error_of([&] { layer_cosine(only_a, 0); }) == Errc::missing_hidden_states);
  CHECK(error_of([&] { delta_dim_profile(only_a, {}); }) == Errc::missing_hidden_states);
  const auto both = hidden_trace(5, 3);
  CHECK(error_of([&] { layer_l2(both, 2); }) == Errc::layer_out_of_range);
  const std::vector<std::size_t> p{0, 1};
  CHECK(error_of([&] { layer_sample(both, Model::b, 7, p); }) == Errc::layer_out_of_range);
}

TEST_CASE("position sampling is sorted, unique and reproducible") {
  PositionSampling policy;
  policy.kind = PositionSampling::Kind::uniform;
  policy.count = 25;
  policy.seed = 9;
  const auto p = sample_positions(100, policy);
  CHECK(p.size() == 25);
  CHECK(std::is_sorted(p.begin(), p.end()));
  CHECK(std::adjacent_find(p.begin(), p.end()) == p.end());
  CHECK(p.back() < 100);
  CHECK(sample_positions(100, policy) == p);
  policy.seed = 10;
  CHECK(sample_positions(100, policy) != p);
  policy.count = 500;
  CHECK(sample_positions(100, policy).size() == 100);
  CHECK(sample_positions(7, PositionSampling{}).size() == 7);
}

TEST_CASE("delta-dim profile recovers configured spectra") {
  const std::uint32_t d = 8;
  SyntheticModelParams pa;
  pa.seed = 1;
  SyntheticModelParams pb = pa;
  pb.seed = 2;
  // Level 0 shared, level 1 anisotropic for B, level 2 strongly anisotropic.
  const std::vector<double> flat(d, 1.0);
  const std::vector<double> mild{4, 3, 2, 1, 1, 1, 0.5, 0.5};
  const std::vector<double> sharp{10, 1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  pb.layer_spectra = {flat, mild, sharp};

  SyntheticTraceOptions opts;
  opts.vocab_size = 5;
  opts.with_hidden = true;
  opts.hidden = HiddenLayout{3, d, 77};
  std::vector<TokenId> tokens(6000);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<TokenId>(mix64(5, i) % 5);
  const auto trace = gen_synthetic_trace(pa, pb, tokens, opts);

  const auto report = delta_dim_profile(trace, PositionSampling{});
  REQUIRE(report.layers.size() == 3);
  CHECK(report.positions.size() == tokens.size());
  const std::vector<std::vector<double>> spectra{flat, mild, sharp};
  double running = 0.0;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& g = report.layers[l];
    CHECK(std::abs(g.pr_a - d) <= 0.05 * d);
    const double want_b = analytic_pr(spectra[l]);
    CHECK(std::abs(g.pr_b - want_b) <= 0.05 * want_b);
    CHECK(g.delta_dim == Approx(g.pr_b - g.pr_a));
    running += g.delta_dim;
    CHECK(report.cumulative_delta_dim[l] == Approx(running));
  }
  CHECK(std::abs(report.layers[0].delta_dim) <= 0.5);
  CHECK(report.layers[2].delta_dim < -5.0);

  PositionSampling sub;
  sub.kind = PositionSampling::Kind::uniform;
  sub.count = 3000;
  sub.seed = 4;
  const auto sampled = delta_dim_profile(trace, sub);
  CHECK(sampled.positions.size() == 3000);
  CHECK(std::abs(sampled.layers[2].pr_b - analytic_pr(sharp)) <= 0.1 * analytic_pr(sharp));
}

TEST_CASE("participation ratio stays within its rank bounds") {
  std::mt19937_64 rng(46);
  std::uniform_int_distribution<std::size_t> n(2, 30), d(1, 30);
  std::uniform_real_distribution<double> l(0.0, 5.0);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> lambda(d(rng));
    for (auto& v : lambda) v = l(rng);
    const auto s = gaussian_sample(rng, n(rng), lambda);
    const double pr = participation_ratio(s);
    const double cap = static_cast<double>(std::min(s.cols, s.rows - 1));
    CHECK(pr >= 1.0 - 1e-9);
    CHECK(pr <= cap + 1e-9);
  }
}
