// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyperscope/trace.hpp"

namespace hyperscope {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t h, std::uint64_t v) noexcept { return mix64(h ^ mix64(v)); }

/// Maps a 64-bit hash to [0, 1) using its top 53 bits.
constexpr double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Deterministic stand-in for a language model.
///
/// Logits after context c (position t = |c| - 1) are
///   z_i = scale * u(hash(seed, window, i)) + [i == c[t-1]] * repetition_attractor
/// where window = c[max(0, t-k+1) .. t]. The attractor rewards the token two
/// positions before the one being predicted, so a large attractor locks
/// greedy decoding into a period-2 loop.
///
/// Hidden states at level l are x = R_l (sqrt(lambda_l) .* g) with g a
/// standard Gaussian vector derived from (hidden seed, l, t, c[t]) and R_l a
/// Householder reflection shared by all models using the same hidden seed.
/// The covariance spectrum of level l is therefore exactly lambda_l.
struct SyntheticModelParams {
  std::uint64_t seed = 0;
  std::uint32_t context_window = 1;
  double repetition_attractor = 0.0;
  double scale = 1.0;
  /// Per-level variance spectra (Lp1 rows of D values). Empty means
  /// isotropic unit variance at every level.
  std::vector<std::vector<double>> layer_spectra;

  /// Throws Error(invalid_argument) if k < 1, scale <= 0, r < 0 or non-finite.
  void validate() const;

  friend bool operator==(const SyntheticModelParams&, const SyntheticModelParams&) = default;
};

struct HiddenLayout {
  std::uint32_t layer_count = 0;
  std::uint32_t hidden_dim = 0;
  std::uint64_t seed = 0;
};

/// Writes next-token logits for `context` into `out` (size = vocab).
void synthetic_logits(const SyntheticModelParams& params, std::span<const TokenId> context,
                      std::span<double> out);

/// Writes the Lp1 x D hidden stack for `context` into `out`.
void synthetic_hidden(const SyntheticModelParams& params, const HiddenLayout& layout,
                      std::span<const TokenId> context, std::span<double> out);

/// Variance spectrum used for level l (explicit or isotropic default).
std::vector<double> level_spectrum(const SyntheticModelParams& params, const HiddenLayout& layout,
                                   std::size_t level);

struct SyntheticTraceOptions {
  std::uint32_t vocab_size = 2;
  bool with_hidden = false;
  HiddenLayout hidden;
};

/// Teacher-forced trace of two synthetic models over `tokens`. Pure function
/// of its arguments.
TeacherForcedTrace gen_synthetic_trace(const SyntheticModelParams& params_a,
                                       const SyntheticModelParams& params_b,
                                       std::span<const TokenId> tokens,
                                       const SyntheticTraceOptions& options);

}  // namespace hyperscope
