// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/injection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hyperscope/distribution.hpp"
#include "hyperscope/error.hpp"

namespace hyperscope {

void InjectionSpec::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(Errc::invalid_injection_spec, "alpha must be finite and >= 0");
  }
  std::size_t support = 0;
  for (std::size_t v = 0; v < delta.size(); ++v) {
    if (!std::isfinite(delta[v])) throw Error(Errc::invalid_injection_spec, "non-finite delta");
    if (delta[v] == 0.0) continue;
    ++support;
    if (std::binary_search(excluded.begin(), excluded.end(), static_cast<TokenId>(v))) {
      throw Error(Errc::invalid_injection_spec,
                  "delta is nonzero on excluded token " + std::to_string(v));
    }
  }
  if (support > k) {
    throw Error(Errc::invalid_injection_spec,
                "delta support " + std::to_string(support) + " exceeds K = " + std::to_string(k));
  }
}

std::vector<double> mean_rank_improvement(const TeacherForcedTrace& trace) {
  std::vector<double> total(trace.vocab(), 0.0);
  for (std::size_t t = 0; t < trace.positions(); ++t) {
    const auto ra = ranks_of(trace.logits(Model::a, t));
    const auto rb = ranks_of(trace.logits(Model::b, t));
    for (std::size_t v = 0; v < total.size(); ++v) {
      total[v] += static_cast<double>(ra[v]) - static_cast<double>(rb[v]);
    }
  }
  for (auto& x : total) x /= static_cast<double>(trace.positions());
  return total;
}

std::vector<TokenId> extract_rank_improved_tokens(const TeacherForcedTrace& trace, std::uint32_t k,
                                                  std::span<const TokenId> excluded) {
  if (k > trace.vocab()) {
    throw Error(Errc::k_exceeds_vocab,
                "K = " + std::to_string(k) + " > V = " + std::to_string(trace.vocab()));
  }
  const auto improvement = mean_rank_improvement(trace);
  std::vector<TokenId> order(trace.vocab());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::sort(order.begin(), order.end(), [&improvement](TokenId a, TokenId b) {
    return improvement[a] > improvement[b] || (improvement[a] == improvement[b] && a < b);
  });
  std::vector<TokenId> skip(excluded.begin(), excluded.end());
  std::sort(skip.begin(), skip.end());
  std::vector<TokenId> selected;
  selected.reserve(k);
  for (TokenId v : order) {
    if (selected.size() == k) break;
    if (!std::binary_search(skip.begin(), skip.end(), v)) selected.push_back(v);
  }
  return selected;
}

std::vector<double> compute_delta(const TeacherForcedTrace& trace,
                                  std::span<const TokenId> selected) {
  std::vector<double> delta(trace.vocab(), 0.0);
  for (TokenId v : selected) {
    if (v >= trace.vocab()) {
      throw Error(Errc::token_id_out_of_range, "selected token " + std::to_string(v) + " >= V");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < trace.positions(); ++t) {
      sum += static_cast<double>(trace.logits(Model::b, t)[v]) -
             static_cast<double>(trace.logits(Model::a, t)[v]);
    }
    delta[v] = sum / static_cast<double>(trace.positions());
  }
  return delta;
}

InjectionSpec build_injection_spec(const TeacherForcedTrace& trace, std::uint32_t k,
                                   std::span<const TokenId> excluded, double alpha) {
  InjectionSpec spec;
  spec.k = k;
  spec.alpha = alpha;
  spec.excluded.assign(excluded.begin(), excluded.end());
  std::sort(spec.excluded.begin(), spec.excluded.end());
  spec.excluded.erase(std::unique(spec.excluded.begin(), spec.excluded.end()), spec.excluded.end());
  spec.delta = compute_delta(trace, extract_rank_improved_tokens(trace, k, spec.excluded));
  spec.validate();
  return spec;
}

std::vector<double> inject_logits(std::span<const double> z, const InjectionSpec& spec) {
  if (spec.delta.size() != z.size()) {
    throw Error(Errc::shape_mismatch, "delta has " + std::to_string(spec.delta.size()) +
                                          " entries, logits have " + std::to_string(z.size()));
  }
  std::vector<double> out(z.begin(), z.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += spec.alpha * spec.delta[i];
  return out;
}

DecodeResult greedy_decode(LogitProvider& provider, std::span<const TokenId> prompt,
                           const DecodeOptions& options, const InjectionSpec* spec,
                           LogitProvider* reference) {
  if (prompt.empty()) throw Error(Errc::invalid_argument, "prompt is empty");
  if (spec != nullptr) spec->validate();
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  DecodeResult result;
  result.tokens.reserve(options.steps);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const std::vector<double> base = provider.logits(context);
    const std::vector<double> scored = spec != nullptr ? inject_logits(base, *spec) : base;
    const TokenId chosen = argmax_token(scored);
    result.entropies.push_back(entropy_at_temperature(std::span<const double>(scored), 1.0));
    if (reference != nullptr) {
      const auto ranks =
          ranks_of(reference == &provider ? std::span<const double>(base)
                                          : std::span<const double>(reference->logits(context)));
      if (chosen >= ranks.size()) {
        throw Error(Errc::vocab_mismatch, "reference vocabulary is smaller than the provider's");
      }
      result.reference_ranks.push_back(ranks[chosen]);
    }
    result.tokens.push_back(chosen);
    context.push_back(chosen);
    if (options.stop_token && chosen == *options.stop_token) {
      result.stopped = true;
      break;
    }
  }
  return result;
}

std::vector<AlphaSweepRow> alpha_sweep(LogitProvider& provider,
                                       std::span<const std::vector<TokenId>> prompts,
                                       const InjectionSpec& spec_base,
                                       std::span<const double> alphas, std::size_t steps) {
  if (alphas.empty()) throw Error(Errc::invalid_argument, "alpha list is empty");
  if (prompts.empty()) throw Error(Errc::invalid_argument, "prompt list is empty");
  std::vector<AlphaSweepRow> rows;
  for (double alpha : alphas) {
    InjectionSpec spec = spec_base;
    spec.alpha = alpha;
    spec.validate();
    AlphaSweepRow row;
    row.alpha = alpha;
    std::vector<std::vector<TokenId>> generations;
    for (const auto& prompt : prompts) {
      auto decoded = greedy_decode(provider, prompt, {steps, std::nullopt}, &spec, &provider);
      for (auto r : decoded.reference_ranks) row.provenance.add(r);
      generations.push_back(decoded.tokens);
      row.decodes.push_back(std::move(decoded));
    }
    row.diversity = diversity_report(generations);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hyperscope
