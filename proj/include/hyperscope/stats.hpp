// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace hyperscope {

/// Mean with standard error s / sqrt(n), s using the n-1 denominator.
struct MetricSummary {
  double mean = 0.0;
  double standard_error = 0.0;
  std::uint64_t n = 0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;  // 0 where not applicable
  bool two_sided = true;
  /// Set when the p-value comes from a convention rather than the
  /// distribution (zero-variance Welch inputs).
  bool degenerate = false;
};

MetricSummary mean_se(std::span<const double> samples);

/// Welch two-sample t-test (unequal variances, Welch-Satterthwaite dof).
/// One-sided tests the alternative mean(a) > mean(b).
TestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                        bool two_sided = true);

/// Spearman rank correlation with mid-ranks for ties. Significance from
/// t = rho sqrt((n-2)/(1-rho^2)) with n-2 dof; |rho| = 1 gives p = 0.
TestResult spearman_test(std::span<const double> x, std::span<const double> y);

/// Exact binomial test. Two-sided sums every outcome whose pmf does not
/// exceed pmf(k) (with 1e-7 relative slack); one-sided is the upper tail
/// P(X >= k).
TestResult binomial_test(std::uint64_t k, std::uint64_t n, double p0, bool two_sided = true);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Wilson score interval for a binomial proportion at confidence 1 - alpha.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double alpha = 0.05);

// Special functions (exposed for testing).
double regularized_incomplete_beta(double a, double b, double x);
/// Two-sided tail P(|T| >= |t|) of Student's t with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);
/// Upper tail P(T >= t).
double student_t_upper(double t, double dof);
double normal_quantile(double p);

/// Average ranks (1-based) with ties assigned their mid-rank.
void mid_ranks(std::span<const double> values, std::span<double> out);

}  // namespace hyperscope
