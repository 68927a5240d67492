// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperscope/stats.hpp"
#include "hyperscope/trace.hpp"

namespace hyperscope {

/// N sample vectors of dimension D, row-major.
struct ActivationSample {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const noexcept {
    return {values.data() + i * cols, cols};
  }
};

/// Eigenvalues of the mean-centered, (N-1)-normalized covariance, sorted
/// descending. Values below 1e-10 * max are clamped to zero. Uses the
/// N x N Gram matrix when N <= D. Throws DegenerateSample if N < 2.
std::vector<double> covariance_spectrum(const ActivationSample& sample);

/// (sum lambda)^2 / sum lambda^2, or 1 for an all-zero spectrum.
double participation_ratio_of_spectrum(std::span<const double> eigenvalues);

double participation_ratio(const ActivationSample& sample);

struct PositionSampling {
  enum class Kind { all, uniform };
  Kind kind = Kind::all;
  std::size_t count = 0;  // uniform only; clipped to T
  std::uint64_t seed = 0;
};

/// Sorted position indices. Uniform sampling is without replacement and
/// reproducible across platforms for a given seed.
std::vector<std::size_t> sample_positions(std::size_t position_count,
                                          const PositionSampling& policy);

/// Hidden vectors of one model at level l for the given positions.
ActivationSample layer_sample(const TeacherForcedTrace& trace, Model model, std::size_t level,
                              std::span<const std::size_t> positions);

/// Mean over positions of cos(h_A, h_B) at level l; a zero vector
/// contributes cosine 0. Throws MissingHiddenStates, LayerOutOfRange.
MetricSummary layer_cosine(const TeacherForcedTrace& trace, std::size_t level);
MetricSummary layer_cosine(const TeacherForcedTrace& trace, std::size_t level,
                           std::span<const std::size_t> positions);

/// Mean over positions of ||h_A - h_B||_2 at level l.
MetricSummary layer_l2(const TeacherForcedTrace& trace, std::size_t level);
MetricSummary layer_l2(const TeacherForcedTrace& trace, std::size_t level,
                       std::span<const std::size_t> positions);

struct LayerGeometry {
  std::size_t level = 0;
  MetricSummary cosine;
  MetricSummary l2;
  double pr_a = 1.0;
  double pr_b = 1.0;
  double delta_dim = 0.0;  // pr_b - pr_a
};

struct GeometryReport {
  std::vector<LayerGeometry> layers;  // levels 0..L
  std::vector<double> cumulative_delta_dim;
  std::vector<std::size_t> positions;
};

/// Per-level cosine, L2, participation ratios and their difference over the
/// sampled positions, plus the running sum of the differences.
GeometryReport delta_dim_profile(const TeacherForcedTrace& trace, const PositionSampling& policy);

}  // namespace hyperscope
