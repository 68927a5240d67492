// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

// HFT1 teacher-forced trace file format. All integers and floats are
// little-endian.
//
//   magic          4 bytes  "HFT1"
//   version        u32      = 1
//   vocab_size     u32      V >= 2
//   layer_count    u32      Lp1 (hidden levels, embedding output included)
//   hidden_dim     u32      D
//   position_count u32      T >= 1
//   flags          u8       bit0: hidden A present, bit1: hidden B present
//   tokens         T x u32
//   per position t:
//     logits_a     V x f32
//     logits_b     V x f32
//     hidden_a     Lp1 x D x f32   (if bit0)
//     hidden_b     Lp1 x D x f32   (if bit1)

namespace hyperscope {

using TokenId = std::uint32_t;

inline constexpr std::array<char, 4> kTraceMagic{'H', 'F', 'T', '1'};
inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderSize = 4 + 4 * 5 + 1;

enum class Model : std::uint8_t { a, b };

struct TraceHeader {
  static constexpr std::uint8_t kHiddenA = 0x1;
  static constexpr std::uint8_t kHiddenB = 0x2;

  std::uint32_t vocab_size = 0;
  std::uint32_t layer_count = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t position_count = 0;
  std::uint8_t flags = 0;

  bool has_hidden(Model m) const noexcept {
    return (flags & (m == Model::a ? kHiddenA : kHiddenB)) != 0;
  }
  bool has_both_hidden() const noexcept { return has_hidden(Model::a) && has_hidden(Model::b); }

  /// Floats in one hidden stack (one model, one position).
  std::size_t stack_size() const noexcept {
    return static_cast<std::size_t>(layer_count) * hidden_dim;
  }

  /// Exact serialized length of a trace with this header.
  std::uint64_t serialized_size() const noexcept;

  /// Throws Error(invalid_header) when the header invariants do not hold.
  void validate() const;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// Aligned per-position logits (and optional hidden stacks) of two models
/// over one token sequence. Position t holds next-token outputs after
/// consuming tokens[0..t].
struct TeacherForcedTrace {
  TraceHeader header;
  std::vector<TokenId> tokens;
  std::vector<float> logits_a;  // T x V
  std::vector<float> logits_b;  // T x V
  std::vector<float> hidden_a;  // T x Lp1 x D, empty unless flagged
  std::vector<float> hidden_b;

  std::size_t positions() const noexcept { return header.position_count; }
  std::size_t vocab() const noexcept { return header.vocab_size; }

  std::span<const float> logits(Model m, std::size_t t) const noexcept {
    const auto& src = m == Model::a ? logits_a : logits_b;
    return {src.data() + t * vocab(), vocab()};
  }
  std::span<float> logits(Model m, std::size_t t) noexcept {
    auto& src = m == Model::a ? logits_a : logits_b;
    return {src.data() + t * vocab(), vocab()};
  }

  /// Hidden vector of model m at position t and level l (D floats).
  std::span<const float> hidden(Model m, std::size_t t, std::size_t l) const noexcept {
    const auto& src = m == Model::a ? hidden_a : hidden_b;
    const std::size_t d = header.hidden_dim;
    return {src.data() + t * header.stack_size() + l * d, d};
  }
  std::span<float> hidden(Model m, std::size_t t, std::size_t l) noexcept {
    auto& src = m == Model::a ? hidden_a : hidden_b;
    const std::size_t d = header.hidden_dim;
    return {src.data() + t * header.stack_size() + l * d, d};
  }

  /// Allocates zeroed storage consistent with `h`.
  static TeacherForcedTrace allocate(const TraceHeader& h);

  /// Throws the first violated invariant as a typed Error.
  void validate() const;

  friend bool operator==(const TeacherForcedTrace&, const TeacherForcedTrace&) = default;
};

/// Serializes a validated trace. Nothing is written if validation fails.
/// Returns the number of bytes written.
std::uint64_t write_trace(const TeacherForcedTrace& trace, std::ostream& sink);
std::vector<std::uint8_t> encode_trace(const TeacherForcedTrace& trace);

/// Parses and validates a trace. Either returns a fully valid trace or
/// throws a typed Error (BadMagic, UnsupportedVersion, InvalidHeader,
/// TruncatedPayload, TrailingData, NonFiniteFloat, TokenIdOutOfRange).
TeacherForcedTrace read_trace(std::istream& source);
TeacherForcedTrace decode_trace(std::span<const std::uint8_t> bytes);

TeacherForcedTrace load_trace(const std::string& path);
void save_trace(const TeacherForcedTrace& trace, const std::string& path);

}  // namespace hyperscope
