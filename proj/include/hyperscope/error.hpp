// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperscope {

enum class Errc {
  // trace-io
  bad_magic,
  unsupported_version,
  invalid_header,
  truncated_payload,
  trailing_data,
  non_finite_float,
  token_id_out_of_range,
  io_error,
  // distribution
  non_positive_temperature,
  constant_logits,
  target_out_of_range,
  // decode-metrics
  trace_too_short,
  empty_sequence,
  sequence_shorter_than_n,
  vocab_mismatch,
  // injection / providers
  k_exceeds_vocab,
  shape_mismatch,
  invalid_injection_spec,
  provider_exhausted,
  context_mismatch,
  remote_protocol_error,
  remote_error,
  // geometry
  missing_hidden_states,
  layer_out_of_range,
  degenerate_sample,
  // stats
  empty_sample,
  insufficient_samples,
  length_mismatch,
  too_few_points,
  invalid_counts,
  // orchestration
  invalid_argument,
  config_error,
};

std::string_view errc_name(Errc code) noexcept;

/// Errors that reject caller input (exit status 2) as opposed to runtime or
/// protocol failures (exit status 3).
bool is_validation_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hyperscope
