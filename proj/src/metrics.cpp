// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/metrics.hpp"

#include <numeric>
#include <set>
#include <string>
#include <unordered_set>

#include "hyperscope/distribution.hpp"
#include "hyperscope/error.hpp"

namespace hyperscope {
namespace {

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

template <typename SeriesFn>
MetricSummary across_sequences(std::span<const TeacherForcedTrace> traces, SeriesFn series) {
  std::vector<double> per_sequence;
  per_sequence.reserve(traces.size());
  for (const auto& trace : traces) per_sequence.push_back(mean_of(series(trace)));
  return mean_se(per_sequence);
}

}  // namespace

void ProvenanceHistogram::add(std::uint32_t rank) noexcept {
  if (rank <= 1) {
    ++rank1;
  } else if (rank <= 10) {
    ++rank2_10;
  } else if (rank < 200) {
    ++rank11_199;
  } else {
    ++rank200_plus;
  }
}

std::array<double, 4> ProvenanceHistogram::fractions() const noexcept {
  const auto n = static_cast<double>(total());
  if (n == 0.0) return {0.0, 0.0, 0.0, 0.0};
  return {static_cast<double>(rank1) / n, static_cast<double>(rank2_10) / n,
          static_cast<double>(rank11_199) / n, static_cast<double>(rank200_plus) / n};
}

std::array<double, 3> ProvenanceHistogram::coarse_fractions() const noexcept {
  const auto n = static_cast<double>(total());
  if (n == 0.0) return {0.0, 0.0, 0.0};
  return {static_cast<double>(rank1) / n, static_cast<double>(rank2_10) / n,
          static_cast<double>(rank11_199 + rank200_plus) / n};
}

std::vector<double> top1_agreement_series(const TeacherForcedTrace& trace) {
  std::vector<double> out(trace.positions());
  for (std::size_t t = 0; t < trace.positions(); ++t) {
    out[t] = argmax_token(trace.logits(Model::a, t)) == argmax_token(trace.logits(Model::b, t))
                 ? 1.0
                 : 0.0;
  }
  return out;
}

double spearman_rho_of_ranks(std::span<const std::uint32_t> ranks_a,
                             std::span<const std::uint32_t> ranks_b) {
  if (ranks_a.size() != ranks_b.size()) throw Error(Errc::length_mismatch, "ranking lengths differ");
  const auto v = static_cast<unsigned __int128>(ranks_a.size());
  if (v < 2) throw Error(Errc::too_few_points, "ranking needs at least two items");
  unsigned __int128 sum_d2 = 0;
  for (std::size_t i = 0; i < ranks_a.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(ranks_a[i]) - ranks_b[i];
    sum_d2 += static_cast<unsigned __int128>(d * d);
  }
  const auto denom = v * (v * v - 1);
  return 1.0 - 6.0 * static_cast<double>(sum_d2) / static_cast<double>(denom);
}

std::vector<double> spearman_rho_series(const TeacherForcedTrace& trace) {
  std::vector<double> out(trace.positions());
  for (std::size_t t = 0; t < trace.positions(); ++t) {
    out[t] = spearman_rho_of_ranks(ranks_of(trace.logits(Model::a, t)),
                                   ranks_of(trace.logits(Model::b, t)));
  }
  return out;
}

std::vector<double> top1_error_series(const TeacherForcedTrace& trace, Model model) {
  if (trace.positions() < 2) throw Error(Errc::trace_too_short, "need at least two positions");
  std::vector<double> out(trace.positions() - 1);
  for (std::size_t t = 0; t + 1 < trace.positions(); ++t) {
    out[t] = argmax_token(trace.logits(model, t)) != trace.tokens[t + 1] ? 1.0 : 0.0;
  }
  return out;
}

std::vector<double> entropy_series(const TeacherForcedTrace& trace, Model model,
                                   double temperature) {
  std::vector<double> out(trace.positions());
  for (std::size_t t = 0; t < trace.positions(); ++t) {
    out[t] = entropy_at_temperature(trace.logits(model, t), temperature);
  }
  return out;
}

MetricSummary top1_agreement(const TeacherForcedTrace& trace) {
  return mean_se(top1_agreement_series(trace));
}
MetricSummary top1_agreement(std::span<const TeacherForcedTrace> traces) {
  return across_sequences(traces, top1_agreement_series);
}

MetricSummary spearman_rho_per_step(const TeacherForcedTrace& trace) {
  return mean_se(spearman_rho_series(trace));
}
MetricSummary spearman_rho_per_step(std::span<const TeacherForcedTrace> traces) {
  return across_sequences(traces, spearman_rho_series);
}

MetricSummary top1_error_rate(const TeacherForcedTrace& trace, Model model) {
  return mean_se(top1_error_series(trace, model));
}
MetricSummary top1_error_rate(std::span<const TeacherForcedTrace> traces, Model model) {
  return across_sequences(traces, [model](const TeacherForcedTrace& tr) {
    return top1_error_series(tr, model);
  });
}

ProvenanceHistogram provenance_histogram(const TeacherForcedTrace& trace) {
  ProvenanceHistogram hist;
  for (std::size_t t = 0; t < trace.positions(); ++t) {
    const TokenId winner = argmax_token(trace.logits(Model::b, t));
    const auto ranks = ranks_of(trace.logits(Model::a, t));
    hist.add(ranks[winner]);
  }
  return hist;
}

ProvenanceHistogram provenance_from_ranks(std::span<const std::uint32_t> ranks) {
  ProvenanceHistogram hist;
  for (auto r : ranks) hist.add(r);
  return hist;
}

RankShiftSeries rank_shift_series(std::span<const TeacherForcedTrace> traces) {
  RankShiftSeries series;
  for (const auto& trace : traces) {
    if (trace.vocab() != traces.front().vocab()) {
      throw Error(Errc::vocab_mismatch, "traces in a series must share V");
    }
    series.snapshots.push_back(provenance_histogram(trace));
  }
  return series;
}

double ttr(std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error(Errc::empty_sequence, "TTR of an empty sequence");
  const std::unordered_set<TokenId> unique(tokens.begin(), tokens.end());
  return static_cast<double>(unique.size()) / static_cast<double>(tokens.size());
}

double ngram_repetition(std::span<const TokenId> tokens, std::size_t n) {
  if (n == 0 || tokens.size() < n) {
    throw Error(Errc::sequence_shorter_than_n,
                "length " + std::to_string(tokens.size()) + " < n = " + std::to_string(n));
  }
  const std::size_t total = tokens.size() - n + 1;
  std::set<std::vector<TokenId>> unique;
  for (std::size_t i = 0; i < total; ++i) unique.emplace(tokens.begin() + i, tokens.begin() + i + n);
  return 1.0 - static_cast<double>(unique.size()) / static_cast<double>(total);
}

DiversityReport diversity_report(std::span<const std::vector<TokenId>> sequences) {
  std::vector<double> ttrs;
  std::vector<double> bigrams;
  std::vector<double> trigrams;
  for (const auto& seq : sequences) {
    ttrs.push_back(ttr(seq));
    bigrams.push_back(ngram_repetition(seq, 2));
    trigrams.push_back(ngram_repetition(seq, 3));
  }
  return {mean_se(ttrs), mean_se(bigrams), mean_se(trigrams)};
}

}  // namespace hyperscope
