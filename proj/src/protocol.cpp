// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/protocol.hpp"

#include <cmath>
#include <algorithm>
#include <string>

#include "hyperscope/bytes.hpp"
#include "hyperscope/error.hpp"
#include "hyperscope/transport.hpp"

namespace hyperscope::hflp {
namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(Errc::remote_protocol_error, what);
}

template <typename T>
T need(std::optional<T> v, const char* field) {
  if (!v) malformed(std::string("payload truncated at ") + field);
  return *v;
}

bool valid_utf8(std::span<const std::uint8_t> s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const std::uint8_t c = s[i];
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (s[i + k] & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range code points.
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

void read_floats(bytes::Reader& r, std::vector<float>& out, std::size_t count, const char* field) {
  if (r.remaining() / 4 < count) malformed(std::string("payload truncated at ") + field);
  out.resize(count);
  for (auto& v : out) {
    v = *r.f32();
    if (!std::isfinite(v)) malformed(std::string("non-finite float in ") + field);
  }
}

LogitsRequest decode_request(bytes::Reader& r) {
  LogitsRequest req;
  const std::uint8_t flags = need(r.u8(), "flags");
  if ((flags & ~kWantHidden) != 0) malformed("unknown request flag bits");
  req.want_hidden = (flags & kWantHidden) != 0;
  const std::uint32_t n = need(r.u32(), "token count");
  if (r.remaining() / 4 < n) malformed("payload truncated at token ids");
  req.tokens.resize(n);
  for (auto& tok : req.tokens) tok = *r.u32();
  return req;
}

LogitsResponse decode_response(bytes::Reader& r) {
  LogitsResponse resp;
  const std::uint32_t vocab = need(r.u32(), "vocab size");
  if (vocab < 2) malformed("vocab size must be >= 2");
  read_floats(r, resp.logits, vocab, "logits");
  const std::uint8_t has_hidden = need(r.u8(), "has_hidden");
  if (has_hidden > 1) malformed("has_hidden must be 0 or 1");
  if (has_hidden == 1) {
    HiddenPayload hidden;
    hidden.layer_count = need(r.u32(), "layer count");
    hidden.hidden_dim = need(r.u32(), "hidden dim");
    if (hidden.layer_count == 0 || hidden.hidden_dim == 0) malformed("empty hidden shape");
    const std::uint64_t count = std::uint64_t{hidden.layer_count} * hidden.hidden_dim;
    if (count > r.remaining() / 4) malformed("payload truncated at hidden states");
    read_floats(r, hidden.values, static_cast<std::size_t>(count), "hidden states");
    resp.hidden = std::move(hidden);
  }
  return resp;
}

ErrorMessage decode_error(bytes::Reader& r) {
  ErrorMessage err;
  err.code = need(r.u32(), "error code");
  const auto text = *r.take(r.remaining());
  if (!valid_utf8(text)) malformed("error message is not valid UTF-8");
  err.message.assign(text.begin(), text.end());
  return err;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Message& msg) {
  std::vector<std::uint8_t> payload;
  std::uint8_t type = 0;
  if (const auto* req = std::get_if<LogitsRequest>(&msg)) {
    type = static_cast<std::uint8_t>(MessageType::logits_request);
    bytes::put_u8(payload, req->want_hidden ? kWantHidden : 0);
    bytes::put_u32(payload, static_cast<std::uint32_t>(req->tokens.size()));
    for (TokenId t : req->tokens) bytes::put_u32(payload, t);
  } else if (const auto* resp = std::get_if<LogitsResponse>(&msg)) {
    type = static_cast<std::uint8_t>(MessageType::logits_response);
    bytes::put_u32(payload, static_cast<std::uint32_t>(resp->logits.size()));
    for (float v : resp->logits) bytes::put_f32(payload, v);
    bytes::put_u8(payload, resp->hidden ? 1 : 0);
    if (resp->hidden) {
      if (resp->hidden->values.size() !=
          std::size_t{resp->hidden->layer_count} * resp->hidden->hidden_dim) {
        throw Error(Errc::shape_mismatch, "hidden payload size does not match its shape");
      }
      bytes::put_u32(payload, resp->hidden->layer_count);
      bytes::put_u32(payload, resp->hidden->hidden_dim);
      for (float v : resp->hidden->values) bytes::put_f32(payload, v);
    }
  } else {
    const auto& err = std::get<ErrorMessage>(msg);
    type = static_cast<std::uint8_t>(MessageType::error);
    bytes::put_u32(payload, err.code);
    payload.insert(payload.end(), err.message.begin(), err.message.end());
  }
  if (payload.size() > kMaxPayload) throw Error(Errc::invalid_argument, "payload exceeds limit");

  std::vector<std::uint8_t> frame;
  frame.reserve(kFrameHeaderSize + payload.size());
  bytes::put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  bytes::put_u8(frame, type);
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

Message decode_payload(std::uint8_t type, std::span<const std::uint8_t> payload) {
  bytes::Reader r(payload);
  Message msg;
  switch (static_cast<MessageType>(type)) {
    case MessageType::logits_request: msg = decode_request(r); break;
    case MessageType::logits_response: msg = decode_response(r); break;
    case MessageType::error: msg = decode_error(r); break;
    default: malformed("unknown message type " + std::to_string(type));
  }
  if (r.remaining() != 0) malformed(std::to_string(r.remaining()) + " trailing payload bytes");
  return msg;
}

Message decode_frame(std::span<const std::uint8_t> frame) {
  if (frame.size() < kFrameHeaderSize) malformed("frame shorter than its header");
  const std::uint32_t length = bytes::load_u32(frame.data());
  if (length > kMaxPayload) malformed("payload length exceeds limit");
  if (frame.size() - kFrameHeaderSize != length) {
    malformed("frame length " + std::to_string(frame.size() - kFrameHeaderSize) +
              " disagrees with declared " + std::to_string(length));
  }
  return decode_payload(frame[4], frame.subspan(kFrameHeaderSize));
}

std::optional<Message> read_message(ByteStream& stream) {
  std::uint8_t header[kFrameHeaderSize];
  if (!stream.read_exact(header)) return std::nullopt;
  const std::uint32_t length = bytes::load_u32(header);
  if (length > kMaxPayload) malformed("payload length exceeds limit");
  // Grow in chunks so a bogus length cannot force a large allocation up front.
  constexpr std::size_t kChunk = std::size_t{1} << 20;
  std::vector<std::uint8_t> payload;
  while (payload.size() < length) {
    const std::size_t old = payload.size();
    payload.resize(old + std::min<std::size_t>(kChunk, length - old));
    if (!stream.read_exact(std::span(payload).subspan(old))) {
      malformed("stream ended inside a frame");
    }
  }
  return decode_payload(header[4], payload);
}

void write_message(ByteStream& stream, const Message& msg) { stream.write_all(encode_frame(msg)); }

}  // namespace hyperscope::hflp
