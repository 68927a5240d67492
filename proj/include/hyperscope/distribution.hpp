// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hyperscope/trace.hpp"

namespace hyperscope {

using ProbVector = std::vector<double>;
/// 1-indexed ranks; rank 1 is the largest logit.
using RankVector = std::vector<std::uint32_t>;

/// p_i = exp(z_i/T - m) / sum_j exp(z_j/T - m), m = max_j z_j/T.
ProbVector softmax_with_temperature(std::span<const double> z, double temperature);
ProbVector softmax_with_temperature(std::span<const float> z, double temperature);

/// Shannon entropy in nats, with 0 ln 0 = 0.
double entropy(std::span<const double> p);

/// Entropy of softmax(z / T), computed in log space without materializing p.
double entropy_at_temperature(std::span<const double> z, double temperature);
double entropy_at_temperature(std::span<const float> z, double temperature);

/// Descending-logit ranks; ties broken by ascending token id.
RankVector ranks_of(std::span<const double> z);
RankVector ranks_of(std::span<const float> z);

/// Smallest token id among the maxima.
TokenId argmax_token(std::span<const double> z);
TokenId argmax_token(std::span<const float> z);

struct TemperatureSolveOptions {
  double tolerance = 1e-6;
  int max_iterations = 200;
  double lower = 1e-3;
  double upper = 1e3;
  // Geometric bracket expansion stops at these limits.
  double lower_limit = 1e-12;
  double upper_limit = 1e12;
};

struct TemperatureSolveResult {
  double t_star = 1.0;
  double achieved_entropy = 0.0;
  int iterations = 0;
  bool clamped = false;
};

/// Bisection in log-temperature for H(softmax(z, T)) = target.
///
/// Throws ConstantLogits when every logit is equal (entropy is ln V at every
/// T) and TargetOutOfRange unless 0 < target < ln V. A target below the
/// T -> 0 limit (ln of the multiplicity of the maximum) or above what the
/// expanded bracket reaches returns clamped = true at the nearest bound.
TemperatureSolveResult solve_temperature_for_entropy(std::span<const double> z, double target,
                                                     const TemperatureSolveOptions& options = {});
TemperatureSolveResult solve_temperature_for_entropy(std::span<const float> z, double target,
                                                     const TemperatureSolveOptions& options = {});

/// Single temperature at which the mean entropy over `rows` equals target.
/// Rows that are constant contribute ln V at every temperature.
TemperatureSolveResult solve_global_temperature(std::span<const std::span<const float>> rows,
                                                double target,
                                                const TemperatureSolveOptions& options = {});

/// Generic monotone bisection used by both solvers. `f` must be continuous
/// and nondecreasing in T.
TemperatureSolveResult bisect_temperature(const std::function<double(double)>& f, double target,
                                          const TemperatureSolveOptions& options);

}  // namespace hyperscope
