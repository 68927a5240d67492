// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hyperscope/trace.hpp"

// HFLP/1 logit-serving protocol.
//
// Frame: u32 LE payload length | u8 message type | payload
//
//   1 LogitsRequest   u8 flags (bit0: want hidden) | u32 n | n x u32 token ids
//   2 LogitsResponse  u32 V | V x f32 | u8 has_hidden
//                     [| u32 Lp1 | u32 D | Lp1*D x f32]
//   3 Error           u32 code | UTF-8 message (rest of payload)
//
// One response per request; pipelining is not allowed.

namespace hyperscope::hflp {

class ByteStream;

enum class MessageType : std::uint8_t {
  logits_request = 1,
  logits_response = 2,
  error = 3,
};

/// Codes carried by Error frames.
enum class ErrorCode : std::uint32_t {
  malformed_request = 1,
  empty_context = 2,
  token_out_of_range = 3,
  hidden_unavailable = 4,
  internal = 5,
};

inline constexpr std::uint8_t kWantHidden = 0x1;
inline constexpr std::size_t kFrameHeaderSize = 5;
/// Upper bound on accepted payloads (256 MiB).
inline constexpr std::uint32_t kMaxPayload = 1U << 28;

struct LogitsRequest {
  bool want_hidden = false;
  std::vector<TokenId> tokens;
  friend bool operator==(const LogitsRequest&, const LogitsRequest&) = default;
};

struct HiddenPayload {
  std::uint32_t layer_count = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<float> values;
  friend bool operator==(const HiddenPayload&, const HiddenPayload&) = default;
};

struct LogitsResponse {
  std::vector<float> logits;
  std::optional<HiddenPayload> hidden;
  friend bool operator==(const LogitsResponse&, const LogitsResponse&) = default;
};

struct ErrorMessage {
  std::uint32_t code = 0;
  std::string message;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using Message = std::variant<LogitsRequest, LogitsResponse, ErrorMessage>;

/// Complete frame bytes for `msg`.
std::vector<std::uint8_t> encode_frame(const Message& msg);

/// Parses one payload of the given type. Any malformation throws
/// Error(remote_protocol_error).
Message decode_payload(std::uint8_t type, std::span<const std::uint8_t> payload);

/// Parses a buffer holding exactly one frame.
Message decode_frame(std::span<const std::uint8_t> frame);

/// Reads one frame. Returns nullopt on a clean end of stream before the
/// first header byte; throws Error(remote_protocol_error) on anything else
/// that is not a well-formed frame.
std::optional<Message> read_message(ByteStream& stream);
void write_message(ByteStream& stream, const Message& msg);

}  // namespace hyperscope::hflp
