// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "hyperscope/error.hpp"
#include "hyperscope/synthetic.hpp"

namespace hyperscope {
namespace {

constexpr double kRelativeEigenFloor = 1e-10;

void require_hidden(const TeacherForcedTrace& trace, std::size_t level) {
  if (!trace.header.has_both_hidden()) {
    throw Error(Errc::missing_hidden_states, "trace lacks hidden states for both models");
  }
  if (level >= trace.header.layer_count) {
    throw Error(Errc::layer_out_of_range, "level " + std::to_string(level) + " >= " +
                                              std::to_string(trace.header.layer_count));
  }
}

std::vector<std::size_t> all_positions(const TeacherForcedTrace& trace) {
  std::vector<std::size_t> p(trace.positions());
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double l2_distance(std::span<const float> a, std::span<const float> b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

MetricSummary per_position(const TeacherForcedTrace& trace, std::size_t level,
                           std::span<const std::size_t> positions,
                           const std::function<double(std::span<const float>, std::span<const float>)>& f) {
  require_hidden(trace, level);
  std::vector<double> values;
  values.reserve(positions.size());
  for (std::size_t t : positions) {
    values.push_back(f(trace.hidden(Model::a, t, level), trace.hidden(Model::b, t, level)));
  }
  return mean_se(values);
}

}  // namespace

std::vector<double> covariance_spectrum(const ActivationSample& sample) {
  if (sample.rows < 2) throw Error(Errc::degenerate_sample, "need at least two samples");
  const auto n = static_cast<Eigen::Index>(sample.rows);
  const auto d = static_cast<Eigen::Index>(sample.cols);
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> raw(sample.values.data(), n, d);
  const Eigen::MatrixXd centered = raw.rowwise() - raw.colwise().mean();
  const Eigen::MatrixXd scatter = n <= d ? Eigen::MatrixXd(centered * centered.transpose())
                                         : Eigen::MatrixXd(centered.transpose() * centered);
  const Eigen::MatrixXd cov = scatter / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  std::vector<double> eig(solver.eigenvalues().data(),
                          solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(eig.begin(), eig.end(), std::greater<>());
  const double floor = eig.empty() ? 0.0 : std::max(0.0, eig.front()) * kRelativeEigenFloor;
  for (auto& v : eig) {
    if (v < floor || v < 0.0) v = 0.0;
  }
  return eig;
}

double participation_ratio_of_spectrum(std::span<const double> eigenvalues) {
  double top = 0.0;
  for (double v : eigenvalues) top = std::max(top, std::abs(v));
  if (top == 0.0) return 1.0;
  // Scaling by the largest value keeps the squares in range and makes a flat
  // spectrum come out as exactly its length.
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : eigenvalues) {
    const double u = v / top;
    sum += u;
    sum_sq += u * u;
  }
  return sum * sum / sum_sq;
}

double participation_ratio(const ActivationSample& sample) {
  return participation_ratio_of_spectrum(covariance_spectrum(sample));
}

std::vector<std::size_t> sample_positions(std::size_t position_count,
                                          const PositionSampling& policy) {
  std::vector<std::size_t> all(position_count);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (policy.kind == PositionSampling::Kind::all || policy.count >= position_count) return all;
  // Partial Fisher-Yates driven by splitmix64 so the draw is identical on
  // every standard library.
  std::uint64_t state = mix64(policy.seed);
  for (std::size_t i = 0; i < policy.count; ++i) {
    state = mix64(state, i);
    const std::size_t span = position_count - i;
    const std::size_t j = i + static_cast<std::size_t>(unit_interval(state) * static_cast<double>(span));
    std::swap(all[i], all[std::min(j, position_count - 1)]);
  }
  all.resize(policy.count);
  std::sort(all.begin(), all.end());
  return all;
}

ActivationSample layer_sample(const TeacherForcedTrace& trace, Model model, std::size_t level,
                              std::span<const std::size_t> positions) {
  if (!trace.header.has_hidden(model)) {
    throw Error(Errc::missing_hidden_states, "trace lacks hidden states for this model");
  }
  if (level >= trace.header.layer_count) {
    throw Error(Errc::layer_out_of_range, "level " + std::to_string(level) + " out of range");
  }
  ActivationSample s;
  s.rows = positions.size();
  s.cols = trace.header.hidden_dim;
  s.values.reserve(s.rows * s.cols);
  for (std::size_t t : positions) {
    const auto h = trace.hidden(model, t, level);
    s.values.insert(s.values.end(), h.begin(), h.end());
  }
  return s;
}

MetricSummary layer_cosine(const TeacherForcedTrace& trace, std::size_t level) {
  return layer_cosine(trace, level, all_positions(trace));
}
MetricSummary layer_cosine(const TeacherForcedTrace& trace, std::size_t level,
                           std::span<const std::size_t> positions) {
  return per_position(trace, level, positions, cosine);
}

MetricSummary layer_l2(const TeacherForcedTrace& trace, std::size_t level) {
  return layer_l2(trace, level, all_positions(trace));
}
MetricSummary layer_l2(const TeacherForcedTrace& trace, std::size_t level,
                       std::span<const std::size_t> positions) {
  return per_position(trace, level, positions, l2_distance);
}

GeometryReport delta_dim_profile(const TeacherForcedTrace& trace, const PositionSampling& policy) {
  if (!trace.header.has_both_hidden()) {
    throw Error(Errc::missing_hidden_states, "trace lacks hidden states for both models");
  }
  GeometryReport report;
  report.positions = sample_positions(trace.positions(), policy);
  double running = 0.0;
  for (std::size_t l = 0; l < trace.header.layer_count; ++l) {
    LayerGeometry g;
    g.level = l;
    g.cosine = layer_cosine(trace, l, report.positions);
    g.l2 = layer_l2(trace, l, report.positions);
    g.pr_a = participation_ratio(layer_sample(trace, Model::a, l, report.positions));
    g.pr_b = participation_ratio(layer_sample(trace, Model::b, l, report.positions));
    g.delta_dim = g.pr_b - g.pr_a;
    running += g.delta_dim;
    report.layers.push_back(g);
    report.cumulative_delta_dim.push_back(running);
  }
  return report;
}

}  // namespace hyperscope
