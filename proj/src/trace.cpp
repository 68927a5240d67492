// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>

#include "hyperscope/bytes.hpp"
#include "hyperscope/error.hpp"

namespace hyperscope {
namespace {

// Payload bytes after the header, or nullopt on 64-bit overflow.
std::optional<std::uint64_t> payload_size(const TraceHeader& h) {
  using u128 = unsigned __int128;
  const u128 t = h.position_count;
  u128 per_position = u128{2} * h.vocab_size * 4;
  const u128 stack_bytes = u128{h.layer_count} * h.hidden_dim * 4;
  if (h.has_hidden(Model::a)) per_position += stack_bytes;
  if (h.has_hidden(Model::b)) per_position += stack_bytes;
  const u128 total = t * 4 + t * per_position;
  if (total > std::numeric_limits<std::uint64_t>::max() - kTraceHeaderSize) return std::nullopt;
  return static_cast<std::uint64_t>(total);
}

[[noreturn]] void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

TraceHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kTraceMagic.data(), 4) != 0) {
    fail(Errc::bad_magic, "expected \"HFT1\"");
  }
  // A short prefix that disagrees with the magic is still a magic error.
  for (std::size_t i = 0; i < std::min<std::size_t>(bytes.size(), 4); ++i) {
    if (static_cast<char>(bytes[i]) != kTraceMagic[i]) fail(Errc::bad_magic, "expected \"HFT1\"");
  }
  if (bytes.size() < kTraceHeaderSize) {
    fail(Errc::truncated_payload, "header is " + std::to_string(bytes.size()) + " bytes");
  }
  bytes::Reader r(bytes.subspan(4));
  const std::uint32_t version = *r.u32();
  if (version != kTraceVersion) {
    fail(Errc::unsupported_version, "version " + std::to_string(version));
  }
  TraceHeader h;
  h.vocab_size = *r.u32();
  h.layer_count = *r.u32();
  h.hidden_dim = *r.u32();
  h.position_count = *r.u32();
  h.flags = *r.u8();
  h.validate();
  return h;
}

std::size_t stored_hidden(const TraceHeader& h, Model m) {
  return h.has_hidden(m) ? static_cast<std::size_t>(h.position_count) * h.stack_size() : 0;
}

}  // namespace

std::uint64_t TraceHeader::serialized_size() const noexcept {
  const auto payload = payload_size(*this);
  return payload ? kTraceHeaderSize + *payload : std::numeric_limits<std::uint64_t>::max();
}

void TraceHeader::validate() const {
  if (vocab_size < 2) fail(Errc::invalid_header, "vocab_size must be >= 2");
  if (position_count < 1) fail(Errc::invalid_header, "position_count must be >= 1");
  if ((flags & ~(kHiddenA | kHiddenB)) != 0) fail(Errc::invalid_header, "unknown flag bits");
  if ((flags != 0) && (layer_count < 1 || hidden_dim < 1)) {
    fail(Errc::invalid_header, "hidden states flagged with empty layer_count or hidden_dim");
  }
  if (!payload_size(*this)) fail(Errc::invalid_header, "declared size overflows");
}

TeacherForcedTrace TeacherForcedTrace::allocate(const TraceHeader& h) {
  h.validate();
  TeacherForcedTrace tr;
  tr.header = h;
  const std::size_t t = h.position_count;
  tr.tokens.assign(t, 0);
  tr.logits_a.assign(t * h.vocab_size, 0.0F);
  tr.logits_b.assign(t * h.vocab_size, 0.0F);
  tr.hidden_a.assign(stored_hidden(h, Model::a), 0.0F);
  tr.hidden_b.assign(stored_hidden(h, Model::b), 0.0F);
  return tr;
}

void TeacherForcedTrace::validate() const {
  header.validate();
  const std::size_t t = header.position_count;
  if (tokens.size() != t || logits_a.size() != t * header.vocab_size ||
      logits_b.size() != t * header.vocab_size ||
      hidden_a.size() != stored_hidden(header, Model::a) ||
      hidden_b.size() != stored_hidden(header, Model::b)) {
    fail(Errc::shape_mismatch, "trace storage does not match header");
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (tokens[i] >= header.vocab_size) {
      fail(Errc::token_id_out_of_range,
           "token " + std::to_string(tokens[i]) + " at position " + std::to_string(i));
    }
  }
  for (const auto* block : {&logits_a, &logits_b, &hidden_a, &hidden_b}) {
    if (!std::all_of(block->begin(), block->end(), [](float v) { return std::isfinite(v); })) {
      fail(Errc::non_finite_float, "trace contains NaN or infinity");
    }
  }
}

std::vector<std::uint8_t> encode_trace(const TeacherForcedTrace& trace) {
  trace.validate();
  const auto& h = trace.header;
  std::vector<std::uint8_t> out;
  out.reserve(h.serialized_size());
  out.insert(out.end(), kTraceMagic.begin(), kTraceMagic.end());
  bytes::put_u32(out, kTraceVersion);
  bytes::put_u32(out, h.vocab_size);
  bytes::put_u32(out, h.layer_count);
  bytes::put_u32(out, h.hidden_dim);
  bytes::put_u32(out, h.position_count);
  bytes::put_u8(out, h.flags);
  for (TokenId tok : trace.tokens) bytes::put_u32(out, tok);
  const std::size_t stack = h.stack_size();
  for (std::size_t t = 0; t < trace.positions(); ++t) {
    for (float v : trace.logits(Model::a, t)) bytes::put_f32(out, v);
    for (float v : trace.logits(Model::b, t)) bytes::put_f32(out, v);
    if (h.has_hidden(Model::a)) {
      for (std::size_t i = 0; i < stack; ++i) bytes::put_f32(out, trace.hidden_a[t * stack + i]);
    }
    if (h.has_hidden(Model::b)) {
      for (std::size_t i = 0; i < stack; ++i) bytes::put_f32(out, trace.hidden_b[t * stack + i]);
    }
  }
  return out;
}

std::uint64_t write_trace(const TeacherForcedTrace& trace, std::ostream& sink) {
  const auto encoded = encode_trace(trace);
  sink.write(reinterpret_cast<const char*>(encoded.data()),
             static_cast<std::streamsize>(encoded.size()));
  if (!sink) fail(Errc::io_error, "write failed");
  return encoded.size();
}

TeacherForcedTrace decode_trace(std::span<const std::uint8_t> data) {
  const TraceHeader h = parse_header(data);
  const std::uint64_t expected = h.serialized_size();
  if (data.size() < expected) {
    fail(Errc::truncated_payload, "have " + std::to_string(data.size()) + " of " +
                                      std::to_string(expected) + " bytes");
  }
  if (data.size() > expected) {
    fail(Errc::trailing_data, std::to_string(data.size() - expected) + " bytes after payload");
  }

  auto tr = TeacherForcedTrace::allocate(h);
  bytes::Reader r(data.subspan(kTraceHeaderSize));
  for (auto& tok : tr.tokens) tok = *r.u32();
  const std::size_t stack = h.stack_size();
  auto read_floats = [&r](std::span<float> dst) {
    for (auto& v : dst) v = *r.f32();
  };
  for (std::size_t t = 0; t < tr.positions(); ++t) {
    read_floats(tr.logits(Model::a, t));
    read_floats(tr.logits(Model::b, t));
    if (h.has_hidden(Model::a)) read_floats({tr.hidden_a.data() + t * stack, stack});
    if (h.has_hidden(Model::b)) read_floats({tr.hidden_b.data() + t * stack, stack});
  }
  tr.validate();
  return tr;
}

TeacherForcedTrace read_trace(std::istream& source) {
  std::vector<std::uint8_t> buf(kTraceHeaderSize);
  source.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  buf.resize(static_cast<std::size_t>(source.gcount()));
  const TraceHeader h = parse_header(buf);

  // Grow in bounded chunks so a corrupt header cannot force a huge
  // allocation before truncation is detected.
  const std::uint64_t expected = h.serialized_size();
  constexpr std::size_t kChunk = std::size_t{1} << 20;
  while (buf.size() < expected) {
    const std::size_t want =
        static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, expected - buf.size()));
    const std::size_t old = buf.size();
    buf.resize(old + want);
    source.read(reinterpret_cast<char*>(buf.data() + old), static_cast<std::streamsize>(want));
    const auto got = static_cast<std::size_t>(source.gcount());
    if (got < want) {
      buf.resize(old + got);
      break;
    }
  }
  if (buf.size() == expected && source.peek() != std::char_traits<char>::eof()) {
    fail(Errc::trailing_data, "bytes after payload");
  }
  return decode_trace(buf);
}

TeacherForcedTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  return read_trace(in);
}

void save_trace(const TeacherForcedTrace& trace, const std::string& path) {
  const auto encoded = encode_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(encoded.data()),
            static_cast<std::streamsize>(encoded.size()));
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

}  // namespace hyperscope
