// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperscope/stats.hpp"
#include "hyperscope/trace.hpp"

// Rank-reordering and diversity diagnostics over traces and generations.
//
// Single-trace overloads summarize over positions (n = positions). Overloads
// taking a collection of traces treat each trace as one sequence: the
// per-position values are averaged within a sequence first, then mean and
// standard error are taken across sequences.

namespace hyperscope {

/// Where the chosen token sat under the reference ranking.
struct ProvenanceHistogram {
  std::uint64_t rank1 = 0;
  std::uint64_t rank2_10 = 0;
  std::uint64_t rank11_199 = 0;
  std::uint64_t rank200_plus = 0;

  std::uint64_t total() const noexcept { return rank1 + rank2_10 + rank11_199 + rank200_plus; }
  void add(std::uint32_t rank) noexcept;
  /// Four-bin fractions; all zero when empty.
  std::array<double, 4> fractions() const noexcept;
  /// Coarse view: rank 1 / 2-10 / >10.
  std::array<double, 3> coarse_fractions() const noexcept;

  friend bool operator==(const ProvenanceHistogram&, const ProvenanceHistogram&) = default;
};

struct RankShiftSeries {
  std::vector<ProvenanceHistogram> snapshots;
};

struct DiversityReport {
  MetricSummary ttr;
  MetricSummary bigram_rep;
  MetricSummary trigram_rep;
};

// Per-position series.
std::vector<double> top1_agreement_series(const TeacherForcedTrace& trace);
std::vector<double> spearman_rho_series(const TeacherForcedTrace& trace);
std::vector<double> top1_error_series(const TeacherForcedTrace& trace, Model model);
std::vector<double> entropy_series(const TeacherForcedTrace& trace, Model model,
                                   double temperature = 1.0);

MetricSummary top1_agreement(const TeacherForcedTrace& trace);
MetricSummary top1_agreement(std::span<const TeacherForcedTrace> traces);

/// Spearman rho between the tie-broken full-vocabulary rankings of A and B,
/// rho = 1 - 6 sum d^2 / (V (V^2 - 1)).
MetricSummary spearman_rho_per_step(const TeacherForcedTrace& trace);
MetricSummary spearman_rho_per_step(std::span<const TeacherForcedTrace> traces);

/// Fraction of positions t < T-1 whose argmax differs from tokens[t+1].
/// Throws TraceTooShort when T < 2.
MetricSummary top1_error_rate(const TeacherForcedTrace& trace, Model model);
MetricSummary top1_error_rate(std::span<const TeacherForcedTrace> traces, Model model);

/// Permutation-formula Spearman rho of two rankings of equal length.
double spearman_rho_of_ranks(std::span<const std::uint32_t> ranks_a,
                             std::span<const std::uint32_t> ranks_b);

/// Bins the rank, under A's logits, of B's argmax at every position.
ProvenanceHistogram provenance_histogram(const TeacherForcedTrace& trace);
ProvenanceHistogram provenance_from_ranks(std::span<const std::uint32_t> ranks);

/// One provenance histogram per trace (checkpoint), in order. Throws
/// VocabMismatch if the traces disagree on V.
RankShiftSeries rank_shift_series(std::span<const TeacherForcedTrace> traces);

/// Unique tokens / total tokens. Throws EmptySequence.
double ttr(std::span<const TokenId> tokens);

/// 1 - unique n-grams / (len - n + 1). Throws SequenceShorterThanN.
double ngram_repetition(std::span<const TokenId> tokens, std::size_t n);

/// TTR and bigram/trigram repetition summarized across sequences.
DiversityReport diversity_report(std::span<const std::vector<TokenId>> sequences);

}  // namespace hyperscope
