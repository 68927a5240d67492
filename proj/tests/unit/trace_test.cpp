// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hyperscope/bytes.hpp"
#include "hyperscope/trace.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

using namespace hyperscope;

namespace {

std::uint64_t expected_size(const TraceHeader& h) {
  std::uint64_t size = 25 + 4ULL * h.position_count +
                       2ULL * h.position_count * h.vocab_size * 4;
  const std::uint64_t stack = 4ULL * h.position_count * h.layer_count * h.hidden_dim;
  if (h.flags & 1) size += stack;
  if (h.flags & 2) size += stack;
  return size;
}

TeacherForcedTrace small_trace() {
  std::mt19937_64 rng(7);
  return oracle::random_trace(rng, 5, 3, 3, 2, 4);
}

}  // namespace

TEST_CASE("minimal trace has the documented byte length") {
  TraceHeader h;
  h.vocab_size = 2;
  h.position_count = 1;
  auto trace = TeacherForcedTrace::allocate(h);
  const auto bytes = encode_trace(trace);
  CHECK(bytes.size() == 4 + 4 * 5 + 1 + 4 + 2 * 2 * 4);
  CHECK(std::memcmp(bytes.data(), "HFT1", 4) == 0);
  CHECK(bytes::load_u32(bytes.data() + 4) == 1);
}

TEST_CASE("header fields are little-endian in declared order") {
  TraceHeader h;
  h.vocab_size = 4;
  h.layer_count = 2;
  h.hidden_dim = 3;
  h.position_count = 1;
  h.flags = 2;
  const auto trace = TeacherForcedTrace::allocate(h);
  const auto bytes = encode_trace(trace);
  CHECK(bytes::load_u32(bytes.data() + 8) == 4);
  CHECK(bytes::load_u32(bytes.data() + 12) == 2);
  CHECK(bytes::load_u32(bytes.data() + 16) == 3);
  CHECK(bytes::load_u32(bytes.data() + 20) == 1);
  CHECK(bytes[24] == 2);
  CHECK(bytes.size() == expected_size(trace.header));
}

TEST_CASE("random traces round-trip and serialize deterministically") {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<std::uint32_t> vocab(2, 40);
  std::uniform_int_distribution<std::uint32_t> positions(1, 12);
  std::uniform_int_distribution<std::uint32_t> shape(1, 5);
  std::uniform_int_distribution<int> flags(0, 3);
  for (int i = 0; i < 200; ++i) {
    const auto f = static_cast<std::uint8_t>(flags(rng));
    const auto trace = oracle::random_trace(rng, vocab(rng), positions(rng), f,
                                            f ? shape(rng) : 0, f ? shape(rng) : 0);
    const auto bytes = encode_trace(trace);
    REQUIRE(bytes.size() == expected_size(trace.header));
    CHECK(bytes.size() == trace.header.serialized_size());
    CHECK(decode_trace(bytes) == trace);
    CHECK(encode_trace(trace) == bytes);

    std::ostringstream sink;
    CHECK(write_trace(trace, sink) == bytes.size());
    std::istringstream source(sink.str());
    CHECK(read_trace(source) == trace);
  }
}

TEST_CASE("traces round-trip through files") {
  const auto path = std::filesystem::temp_directory_path() / "hyperscope_trace_test.hft1";
  const auto trace = small_trace();
  save_trace(trace, path.string());
  CHECK(load_trace(path.string()) == trace);
  std::filesystem::remove(path);
  CHECK(error_of([&] { load_trace(path.string()); }) == Errc::io_error);
}

TEST_CASE("decoding names each corruption distinctly") {
  const auto trace = small_trace();
  const auto good = encode_trace(trace);

  SUBCASE("first byte corrupted") {
    auto bytes = good;
    bytes[0] = 'X';
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::bad_magic);
  }
  SUBCASE("unknown version") {
    auto bytes = good;
    bytes[4] = 2;
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::unsupported_version);
  }
  SUBCASE("payload one float short") {
    std::vector<std::uint8_t> bytes(good.begin(), good.end() - 4);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::truncated_payload);
  }
  SUBCASE("extra bytes after the payload") {
    auto bytes = good;
    bytes.push_back(0);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::trailing_data);
  }
  SUBCASE("non-finite logit") {
    auto bytes = good;
    const std::size_t first_logit = 25 + 4 * trace.positions();
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + first_logit, &nan, 4);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::non_finite_float);
  }
  SUBCASE("non-finite hidden value") {
    auto bytes = good;
    const float inf = std::numeric_limits<float>::infinity();
    std::memcpy(bytes.data() + bytes.size() - 4, &inf, 4);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::non_finite_float);
  }
  SUBCASE("token id out of range") {
    auto bytes = good;
    bytes[25] = 5;  // V = 5
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::token_id_out_of_range);
  }
  SUBCASE("vocabulary below two") {
    auto bytes = good;
    bytes[8] = 1;
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::invalid_header);
  }
  SUBCASE("zero positions") {
    auto bytes = good;
    std::memset(bytes.data() + 20, 0, 4);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::invalid_header);
  }
  SUBCASE("unknown flag bits") {
    auto bytes = good;
    bytes[24] |= 0x80;
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::invalid_header);
  }
  SUBCASE("hidden flag with empty shape") {
    auto bytes = good;
    std::memset(bytes.data() + 16, 0, 4);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::invalid_header);
  }
  SUBCASE("header cut short") {
    std::vector<std::uint8_t> bytes(good.begin(), good.begin() + 10);
    CHECK(error_of([&] { decode_trace(bytes); }) == Errc::truncated_payload);
  }
}

TEST_CASE("every truncation and random corruption yields a typed error or a valid trace") {
  const auto good = encode_trace(small_trace());
  for (std::size_t len = 0; len < good.size(); ++len) {
    std::vector<std::uint8_t> prefix(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
    CHECK(error_of([&] { decode_trace(prefix); }).has_value());
  }
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> where(0, good.size() - 1);
  std::uniform_int_distribution<int> value(0, 255);
  for (int i = 0; i < 2000; ++i) {
    auto bytes = good;
    const int edits = 1 + i % 4;
    for (int e = 0; e < edits; ++e) bytes[where(rng)] = static_cast<std::uint8_t>(value(rng));
    try {
      const auto t = decode_trace(bytes);
      CHECK_NOTHROW(t.validate());
    } catch (const Error&) {
    }
  }
}

TEST_CASE("writing rejects an invalid trace before emitting bytes") {
  auto trace = small_trace();
  trace.tokens[0] = 99;
  std::ostringstream sink;
  CHECK(error_of([&] { write_trace(trace, sink); }) == Errc::token_id_out_of_range);
  CHECK(sink.str().empty());

  trace = small_trace();
  trace.logits_b[3] = std::numeric_limits<float>::infinity();
  CHECK(error_of([&] { write_trace(trace, sink); }) == Errc::non_finite_float);
  CHECK(sink.str().empty());

  trace = small_trace();
  trace.hidden_a.pop_back();
  CHECK(error_of([&] { write_trace(trace, sink); }).has_value());
  CHECK(sink.str().empty());
}

TEST_CASE("declared sizes that overflow are rejected as invalid headers") {
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), {'H', 'F', 'T', '1'});
  bytes::put_u32(bytes, 1);
  bytes::put_u32(bytes, 0xFFFFFFFF);
  bytes::put_u32(bytes, 0xFFFFFFFF);
  bytes::put_u32(bytes, 0xFFFFFFFF);
  bytes::put_u32(bytes, 0xFFFFFFFF);
  bytes::put_u8(bytes, 3);
  const auto code = error_of([&] { decode_trace(bytes); });
  REQUIRE(code.has_value());
  CHECK((*code == Errc::invalid_header || *code == Errc::truncated_payload));
}
