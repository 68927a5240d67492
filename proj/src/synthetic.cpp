// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hyperscope/error.hpp"

namespace hyperscope {
namespace {

constexpr std::uint64_t kLogitDomain = 0x6c6f67697473ULL;
constexpr std::uint64_t kHiddenDomain = 0x68696464656eULL;
constexpr std::uint64_t kReflectDomain = 0x7265666c6563ULL;

std::uint64_t window_hash(std::uint64_t seed, std::uint32_t k, std::span<const TokenId> context) {
  const std::size_t n = context.size();
  const std::size_t begin = n > k ? n - k : 0;
  std::uint64_t h = mix64(mix64(seed), kLogitDomain);
  h = mix64(h, n - begin);
  for (std::size_t i = begin; i < n; ++i) h = mix64(h, context[i]);
  return h;
}

double gaussian(std::uint64_t key) {
  // Box-Muller; u1 in (0, 1].
  const double u1 = 1.0 - unit_interval(mix64(key, 1));
  const double u2 = unit_interval(mix64(key, 2));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void SyntheticModelParams::validate() const {
  if (context_window < 1) throw Error(Errc::invalid_argument, "context_window must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(Errc::invalid_argument, "scale must be > 0");
  if (!(repetition_attractor >= 0.0) || !std::isfinite(repetition_attractor)) {
    throw Error(Errc::invalid_argument, "repetition_attractor must be finite and >= 0");
  }
  for (const auto& row : layer_spectra) {
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(Errc::invalid_argument, "layer spectra must be finite and >= 0");
      }
    }
  }
}

void synthetic_logits(const SyntheticModelParams& params, std::span<const TokenId> context,
                      std::span<double> out) {
  if (context.empty()) throw Error(Errc::invalid_argument, "empty context");
  const std::uint64_t wh = window_hash(params.seed, params.context_window, context);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = params.scale * unit_interval(mix64(wh, i));
  }
  if (context.size() >= 2) {
    const TokenId attractor = context[context.size() - 2];
    if (attractor < out.size()) out[attractor] += params.repetition_attractor;
  }
}

std::vector<double> level_spectrum(const SyntheticModelParams& params, const HiddenLayout& layout,
                                   std::size_t level) {
  if (params.layer_spectra.empty()) return std::vector<double>(layout.hidden_dim, 1.0);
  if (params.layer_spectra.size() != layout.layer_count ||
      params.layer_spectra[level].size() != layout.hidden_dim) {
    throw Error(Errc::invalid_argument,
                "layer_spectra must have " + std::to_string(layout.layer_count) + " rows of " +
                    std::to_string(layout.hidden_dim) + " values");
  }
  return params.layer_spectra[level];
}

void synthetic_hidden(const SyntheticModelParams& params, const HiddenLayout& layout,
                      std::span<const TokenId> context, std::span<double> out) {
  if (context.empty()) throw Error(Errc::invalid_argument, "empty context");
  const std::size_t d = layout.hidden_dim;
  const std::uint64_t t = context.size() - 1;
  const TokenId current = context.back();
  std::vector<double> v(d);
  for (std::size_t l = 0; l < layout.layer_count; ++l) {
    const auto spectrum = level_spectrum(params, layout, l);
    const std::uint64_t level_key = mix64(mix64(mix64(layout.seed), kHiddenDomain), l);
    const std::uint64_t sample_key = mix64(mix64(level_key, t), current);
    auto x = out.subspan(l * d, d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = std::sqrt(spectrum[j]) * gaussian(mix64(sample_key, j));
    }
    // Householder reflection x -> x - 2 v (v.x) / (v.v).
    const std::uint64_t reflect_key = mix64(level_key, kReflectDomain);
    double vv = 0.0;
    double vx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      v[j] = gaussian(mix64(reflect_key, j));
      vv += v[j] * v[j];
      vx += v[j] * x[j];
    }
    if (vv > 0.0) {
      const double c = 2.0 * vx / vv;
      for (std::size_t j = 0; j < d; ++j) x[j] -= c * v[j];
    }
  }
}

TeacherForcedTrace gen_synthetic_trace(const SyntheticModelParams& params_a,
                                       const SyntheticModelParams& params_b,
                                       std::span<const TokenId> tokens,
                                       const SyntheticTraceOptions& options) {
  params_a.validate();
  params_b.validate();
  if (tokens.empty()) throw Error(Errc::invalid_argument, "token sequence is empty");
  for (TokenId tok : tokens) {
    if (tok >= options.vocab_size) {
      throw Error(Errc::token_id_out_of_range, "token " + std::to_string(tok) + " >= vocab size");
    }
  }

  TraceHeader h;
  h.vocab_size = options.vocab_size;
  h.position_count = static_cast<std::uint32_t>(tokens.size());
  if (options.with_hidden) {
    h.layer_count = options.hidden.layer_count;
    h.hidden_dim = options.hidden.hidden_dim;
    h.flags = TraceHeader::kHiddenA | TraceHeader::kHiddenB;
  }
  auto trace = TeacherForcedTrace::allocate(h);
  std::copy(tokens.begin(), tokens.end(), trace.tokens.begin());

  std::vector<double> logits(h.vocab_size);
  std::vector<double> stack(h.stack_size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto context = tokens.first(t + 1);
    for (Model m : {Model::a, Model::b}) {
      const auto& params = m == Model::a ? params_a : params_b;
      synthetic_logits(params, context, logits);
      std::transform(logits.begin(), logits.end(), trace.logits(m, t).begin(),
                     [](double v) { return static_cast<float>(v); });
      if (options.with_hidden) {
        synthetic_hidden(params, options.hidden, context, stack);
        for (std::size_t l = 0; l < h.layer_count; ++l) {
          auto dst = trace.hidden(m, t, l);
          for (std::size_t j = 0; j < h.hidden_dim; ++j) {
            dst[j] = static_cast<float>(stack[l * h.hidden_dim + j]);
          }
        }
      }
    }
  }
  return trace;
}

}  // namespace hyperscope
