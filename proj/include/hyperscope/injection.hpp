// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hyperscope/metrics.hpp"
#include "hyperscope/provider.hpp"
#include "hyperscope/trace.hpp"

namespace hyperscope {

/// Static logit bias z' = z + alpha * delta, with delta supported on at most
/// K promoted tokens and never on an excluded (special) token.
struct InjectionSpec {
  std::uint32_t k = 0;
  double alpha = 0.0;
  std::vector<double> delta;
  std::vector<TokenId> excluded;  // sorted, unique

  /// Throws InvalidInjectionSpec on |support(delta)| > K, support meeting
  /// the excluded set, negative or non-finite alpha, or non-finite delta.
  void validate() const;
};

/// Mean over positions of rank_A(v) - rank_B(v) for every token v.
/// Positive values mean B promotes v.
std::vector<double> mean_rank_improvement(const TeacherForcedTrace& trace);

/// Top-K tokens by mean rank improvement, skipping excluded tokens; ties by
/// ascending token id. Throws KExceedsVocab when K > V.
std::vector<TokenId> extract_rank_improved_tokens(const TeacherForcedTrace& trace, std::uint32_t k,
                                                  std::span<const TokenId> excluded);

/// delta_v = mean_t (logits_B[t][v] - logits_A[t][v]) for v in `selected`,
/// zero elsewhere.
std::vector<double> compute_delta(const TeacherForcedTrace& trace,
                                  std::span<const TokenId> selected);

/// Selection plus delta in one step.
InjectionSpec build_injection_spec(const TeacherForcedTrace& trace, std::uint32_t k,
                                   std::span<const TokenId> excluded, double alpha);

/// Componentwise z + alpha * delta. Throws ShapeMismatch.
std::vector<double> inject_logits(std::span<const double> z, const InjectionSpec& spec);

struct DecodeOptions {
  std::size_t steps = 0;
  /// Decoding stops after emitting this token, if set.
  std::optional<TokenId> stop_token;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // generated tokens only
  /// Rank of each chosen token under the reference logits for the same
  /// context; empty when no reference was given.
  std::vector<std::uint32_t> reference_ranks;
  /// Entropy (nats) of the distribution the token was chosen from.
  std::vector<double> entropies;
  bool stopped = false;

  friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

/// Greedy decoding: at each step fetch logits, apply `spec` if given, append
/// the argmax. When `reference` is the provider itself, ranks are taken
/// from the un-injected logits without a second query.
DecodeResult greedy_decode(LogitProvider& provider, std::span<const TokenId> prompt,
                           const DecodeOptions& options, const InjectionSpec* spec = nullptr,
                           LogitProvider* reference = nullptr);

struct AlphaSweepRow {
  double alpha = 0.0;
  DiversityReport diversity;
  /// Provenance of chosen tokens under the un-injected logits.
  ProvenanceHistogram provenance;
  std::vector<DecodeResult> decodes;  // one per prompt
};

/// Decodes every prompt under spec_base with alpha replaced by each entry of
/// `alphas` and summarizes diversity of the generated tokens.
std::vector<AlphaSweepRow> alpha_sweep(LogitProvider& provider,
                                       std::span<const std::vector<TokenId>> prompts,
                                       const InjectionSpec& spec_base,
                                       std::span<const double> alphas, std::size_t steps);

}  // namespace hyperscope
