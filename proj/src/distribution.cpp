// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hyperscope/error.hpp"

namespace hyperscope {
namespace {

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::non_positive_temperature, "temperature must be finite and > 0");
  }
}

template <typename F>
ProbVector softmax_impl(std::span<const F> z, double temperature) {
  check_temperature(temperature);
  ProbVector p(z.size());
  if (z.empty()) return p;
  double m = -std::numeric_limits<double>::infinity();
  for (F v : z) m = std::max(m, static_cast<double>(v) / temperature);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(static_cast<double>(z[i]) / temperature - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

template <typename F>
double entropy_at_temperature_impl(std::span<const F> z, double temperature) {
  check_temperature(temperature);
  if (z.empty()) return 0.0;
  double m = -std::numeric_limits<double>::infinity();
  for (F v : z) m = std::max(m, static_cast<double>(v) / temperature);
  // H = ln S - sum_i p_i (s_i - m), s_i = z_i / T, S = sum_i exp(s_i - m).
  double sum = 0.0;
  double weighted = 0.0;
  for (F v : z) {
    const double shifted = static_cast<double>(v) / temperature - m;
    const double e = std::exp(shifted);
    sum += e;
    weighted += e * shifted;
  }
  return std::max(0.0, std::log(sum) - weighted / sum);
}

template <typename F>
RankVector ranks_impl(std::span<const F> z) {
  std::vector<std::uint32_t> order(z.size());
  std::iota(order.begin(), order.end(), 0U);
  std::sort(order.begin(), order.end(), [&z](std::uint32_t a, std::uint32_t b) {
    return z[a] > z[b] || (z[a] == z[b] && a < b);
  });
  RankVector ranks(z.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<std::uint32_t>(r + 1);
  return ranks;
}

template <typename F>
TokenId argmax_impl(std::span<const F> z) {
  TokenId best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = static_cast<TokenId>(i);
  }
  return best;
}

template <typename F>
bool is_constant(std::span<const F> z) {
  return std::adjacent_find(z.begin(), z.end(), std::not_equal_to<>()) == z.end();
}

void check_target(double target, std::size_t vocab) {
  const double max_entropy = std::log(static_cast<double>(vocab));
  if (!(target > 0.0) || !(target < max_entropy)) {
    throw Error(Errc::target_out_of_range,
                "target " + std::to_string(target) + " outside (0, ln V = " +
                    std::to_string(max_entropy) + ")");
  }
}

template <typename F>
TemperatureSolveResult solve_impl(std::span<const F> z, double target,
                                  const TemperatureSolveOptions& options) {
  if (z.size() < 2 || is_constant(z)) {
    throw Error(Errc::constant_logits, "entropy is ln V at every temperature");
  }
  check_target(target, z.size());
  return bisect_temperature([z](double t) { return entropy_at_temperature_impl(z, t); }, target,
                            options);
}

}  // namespace

ProbVector softmax_with_temperature(std::span<const double> z, double temperature) {
  return softmax_impl(z, temperature);
}
ProbVector softmax_with_temperature(std::span<const float> z, double temperature) {
  return softmax_impl(z, temperature);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double entropy_at_temperature(std::span<const double> z, double temperature) {
  return entropy_at_temperature_impl(z, temperature);
}
double entropy_at_temperature(std::span<const float> z, double temperature) {
  return entropy_at_temperature_impl(z, temperature);
}

RankVector ranks_of(std::span<const double> z) { return ranks_impl(z); }
RankVector ranks_of(std::span<const float> z) { return ranks_impl(z); }

TokenId argmax_token(std::span<const double> z) { return argmax_impl(z); }
TokenId argmax_token(std::span<const float> z) { return argmax_impl(z); }

TemperatureSolveResult bisect_temperature(const std::function<double(double)>& f, double target,
                                          const TemperatureSolveOptions& options) {
  const double tol = options.tolerance;
  double lo = options.lower;
  double hi = options.upper;
  double f_lo = f(lo);
  double f_hi = f(hi);
  int iterations = 0;
  while (f_lo > target + tol && lo > options.lower_limit) {
    lo = std::max(lo * 1e-3, options.lower_limit);
    f_lo = f(lo);
    ++iterations;
  }
  while (f_hi < target - tol && hi < options.upper_limit) {
    hi = std::min(hi * 1e3, options.upper_limit);
    f_hi = f(hi);
    ++iterations;
  }
  if (std::abs(f_lo - target) <= tol) return {lo, f_lo, iterations, false};
  if (std::abs(f_hi - target) <= tol) return {hi, f_hi, iterations, false};
  if (target < f_lo) return {lo, f_lo, iterations, true};
  if (target > f_hi) return {hi, f_hi, iterations, true};

  double best_t = lo;
  double best_h = f_lo;
  for (int i = 0; i < options.max_iterations; ++i) {
    const double mid = std::sqrt(lo * hi);
    const double h = f(mid);
    ++iterations;
    if (std::abs(h - target) < std::abs(best_h - target)) {
      best_t = mid;
      best_h = h;
    }
    if (std::abs(h - target) <= tol) return {mid, h, iterations, false};
    if (h < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= hi * std::numeric_limits<double>::epsilon()) break;
  }
  // Bracket collapsed to machine precision without meeting tol; report the
  // closest evaluation. |H - target| > tol is visible to the caller.
  return {best_t, best_h, iterations, false};
}

TemperatureSolveResult solve_temperature_for_entropy(std::span<const double> z, double target,
                                                     const TemperatureSolveOptions& options) {
  return solve_impl(z, target, options);
}
TemperatureSolveResult solve_temperature_for_entropy(std::span<const float> z, double target,
                                                     const TemperatureSolveOptions& options) {
  return solve_impl(z, target, options);
}

TemperatureSolveResult solve_global_temperature(std::span<const std::span<const float>> rows,
                                                double target,
                                                const TemperatureSolveOptions& options) {
  if (rows.empty()) throw Error(Errc::invalid_argument, "no logit rows");
  const std::size_t vocab = rows.front().size();
  bool any_varying = false;
  for (const auto& row : rows) {
    if (row.size() != vocab) throw Error(Errc::vocab_mismatch, "logit rows differ in length");
    any_varying = any_varying || (row.size() >= 2 && !is_constant(row));
  }
  if (!any_varying) throw Error(Errc::constant_logits, "every row is constant");
  check_target(target, vocab);
  const auto mean_entropy = [rows](double t) {
    double total = 0.0;
    for (const auto& row : rows) total += entropy_at_temperature_impl(row, t);
    return total / static_cast<double>(rows.size());
  };
  return bisect_temperature(mean_entropy, target, options);
}

}  // namespace hyperscope
