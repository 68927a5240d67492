// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/error.hpp"

namespace hyperscope {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::bad_magic: return "BadMagic";
    case Errc::unsupported_version: return "UnsupportedVersion";
    case Errc::invalid_header: return "InvalidHeader";
    case Errc::truncated_payload: return "TruncatedPayload";
    case Errc::trailing_data: return "TrailingData";
    case Errc::non_finite_float: return "NonFiniteFloat";
    case Errc::token_id_out_of_range: return "TokenIdOutOfRange";
    case Errc::io_error: return "IoError";
    case Errc::non_positive_temperature: return "NonPositiveTemperature";
    case Errc::constant_logits: return "ConstantLogits";
    case Errc::target_out_of_range: return "TargetOutOfRange";
    case Errc::trace_too_short: return "TraceTooShort";
    case Errc::empty_sequence: return "EmptySequence";
    case Errc::sequence_shorter_than_n: return "SequenceShorterThanN";
    case Errc::vocab_mismatch: return "VocabMismatch";
    case Errc::k_exceeds_vocab: return "KExceedsVocab";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::invalid_injection_spec: return "InvalidInjectionSpec";
    case Errc::provider_exhausted: return "ProviderExhausted";
    case Errc::context_mismatch: return "ContextMismatch";
    case Errc::remote_protocol_error: return "RemoteProtocolError";
    case Errc::remote_error: return "RemoteError";
    case Errc::missing_hidden_states: return "MissingHiddenStates";
    case Errc::layer_out_of_range: return "LayerOutOfRange";
    case Errc::degenerate_sample: return "DegenerateSample";
    case Errc::empty_sample: return "EmptySample";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::invalid_counts: return "InvalidCounts";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

bool is_validation_error(Errc code) noexcept {
  switch (code) {
    case Errc::io_error:
    case Errc::provider_exhausted:
    case Errc::remote_protocol_error:
    case Errc::remote_error:
      return false;
    default:
      return true;
  }
}

}  // namespace hyperscope
