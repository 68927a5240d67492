// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "hyperscope/error.hpp"

namespace hyperscope {
namespace {

constexpr double kCfEpsilon = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kCfMaxIterations = 10000;

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kCfMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kCfEpsilon) break;
  }
  return h;
}

// I_x(a, b) with y = 1 - x supplied separately to keep precision near x = 1.
double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, y) / b;
}

double sample_variance(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  double log_choose = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  return log_choose + kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

double student_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  return std::clamp(incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2), t2 / (dof + t2)), 0.0, 1.0);
}

double student_t_upper(double t, double dof) {
  const double half = student_t_two_sided(t, dof) / 2.0;
  return t >= 0.0 ? half : 1.0 - half;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::invalid_argument, "quantile outside (0, 1)");
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

MetricSummary mean_se(std::span<const double> samples) {
  if (samples.empty()) throw Error(Errc::empty_sample, "mean of an empty sample");
  MetricSummary s;
  s.n = samples.size();
  s.mean = mean_of(samples);
  if (samples.size() > 1) {
    s.standard_error = std::sqrt(sample_variance(samples, s.mean) / static_cast<double>(s.n));
  }
  return s;
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b, bool two_sided) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(Errc::insufficient_samples, "Welch test needs at least two samples per group");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double qa = sample_variance(a, ma) / na;
  const double qb = sample_variance(b, mb) / nb;
  const double se2 = qa + qb;

  TestResult r;
  r.two_sided = two_sided;
  if (se2 == 0.0) {
    r.degenerate = true;
    r.dof = na + nb - 2.0;
    if (ma == mb) {
      r.statistic = 0.0;
      r.p_value = two_sided ? 1.0 : 0.5;
    } else {
      r.statistic = ma > mb ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      r.p_value = (two_sided || ma > mb) ? 0.0 : 1.0;
    }
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p_value = two_sided ? student_t_two_sided(r.statistic, r.dof)
                        : student_t_upper(r.statistic, r.dof);
  return r;
}

void mid_ranks(std::span<const double> values, std::span<double> out) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&values](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank;
    i = j + 1;
  }
}

TestResult spearman_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::length_mismatch, "x and y differ in length");
  if (x.size() < 3) throw Error(Errc::too_few_points, "Spearman test needs n >= 3");
  const std::size_t n = x.size();
  std::vector<double> rx(n);
  std::vector<double> ry(n);
  mid_ranks(x, rx);
  mid_ranks(y, ry);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  TestResult r;
  r.dof = static_cast<double>(n) - 2.0;
  if (sxx == 0.0 || syy == 0.0) {
    // Correlation undefined for a constant input.
    r.degenerate = true;
    return r;
  }
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  r.statistic = rho;
  if (std::abs(rho) >= 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = rho * std::sqrt(r.dof / (1.0 - rho * rho));
    r.p_value = student_t_two_sided(t, r.dof);
  }
  return r;
}

TestResult binomial_test(std::uint64_t k, std::uint64_t n, double p0, bool two_sided) {
  if (k > n) throw Error(Errc::invalid_counts, "k exceeds n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(Errc::invalid_counts, "p0 must lie in (0, 1)");
  TestResult r;
  r.statistic = static_cast<double>(k);
  r.two_sided = two_sided;
  double p = 0.0;
  if (two_sided) {
    const double threshold = log_binomial_pmf(k, n, p0) + std::log1p(1e-7);
    for (std::uint64_t i = 0; i <= n; ++i) {
      const double lp = log_binomial_pmf(i, n, p0);
      if (lp <= threshold) p += std::exp(lp);
    }
  } else {
    for (std::uint64_t i = k; i <= n; ++i) p += std::exp(log_binomial_pmf(i, n, p0));
  }
  r.p_value = std::clamp(p, 0.0, 1.0);
  return r;
}

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double alpha) {
  if (n == 0 || k > n) throw Error(Errc::invalid_counts, "Wilson interval needs 0 <= k <= n, n > 0");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double nd = static_cast<double>(n);
  const double phat = static_cast<double>(k) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double centre = (phat + z2 / (2.0 * nd)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nd + z2 / (4.0 * nd * nd)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace hyperscope
