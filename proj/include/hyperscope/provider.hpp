// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hyperscope/synthetic.hpp"
#include "hyperscope/trace.hpp"

namespace hyperscope {

namespace hflp {
class ByteStream;
class TcpListener;
}  // namespace hflp

struct HiddenStack {
  std::uint32_t layer_count = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<double> values;  // layer-major
};

struct ProviderOutput {
  std::vector<double> logits;
  std::optional<HiddenStack> hidden;
};

/// Source of next-token logits for a token context.
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  /// Vocabulary size, or 0 if not yet known (remote providers learn it from
  /// the first response).
  virtual std::uint32_t vocab_size() const = 0;
  virtual bool supports_hidden() const { return false; }
  virtual ProviderOutput query(std::span<const TokenId> context, bool want_hidden) = 0;

  std::vector<double> logits(std::span<const TokenId> context) {
    return query(context, false).logits;
  }
};

/// Replays one model's side of a teacher-forced trace. Only contexts that
/// are prefixes of the trace's token sequence can be answered.
class TraceReplayProvider final : public LogitProvider {
 public:
  /// The trace must outlive the provider.
  TraceReplayProvider(const TeacherForcedTrace& trace, Model model);

  std::uint32_t vocab_size() const override { return trace_->header.vocab_size; }
  bool supports_hidden() const override { return trace_->header.has_hidden(model_); }
  /// Throws ProviderExhausted past the last position and ContextMismatch
  /// when the context diverges from the recorded tokens.
  ProviderOutput query(std::span<const TokenId> context, bool want_hidden) override;

 private:
  const TeacherForcedTrace* trace_;
  Model model_;
};

/// Free-running synthetic model; see SyntheticModelParams.
class SyntheticModel final : public LogitProvider {
 public:
  SyntheticModel(SyntheticModelParams params, std::uint32_t vocab_size,
                 std::optional<HiddenLayout> hidden = std::nullopt);

  std::uint32_t vocab_size() const override { return vocab_size_; }
  bool supports_hidden() const override { return hidden_.has_value(); }
  ProviderOutput query(std::span<const TokenId> context, bool want_hidden) override;

  const SyntheticModelParams& params() const noexcept { return params_; }

 private:
  SyntheticModelParams params_;
  std::uint32_t vocab_size_;
  std::optional<HiddenLayout> hidden_;
};

/// Divides another provider's logits by a fixed temperature. Hidden states
/// pass through unchanged.
class TemperatureScaledProvider final : public LogitProvider {
 public:
  /// `inner` must outlive this object. Throws NonPositiveTemperature.
  TemperatureScaledProvider(LogitProvider& inner, double temperature);

  std::uint32_t vocab_size() const override { return inner_->vocab_size(); }
  bool supports_hidden() const override { return inner_->supports_hidden(); }
  ProviderOutput query(std::span<const TokenId> context, bool want_hidden) override;

 private:
  LogitProvider* inner_;
  double temperature_;
};

/// HFLP/1 client. Holds one connection; not safe for concurrent use.
class RemoteModel final : public LogitProvider {
 public:
  explicit RemoteModel(std::unique_ptr<hflp::ByteStream> stream);
  ~RemoteModel() override;

  std::uint32_t vocab_size() const override { return vocab_size_; }
  bool supports_hidden() const override { return true; }
  /// Throws RemoteProtocolError for malformed or unexpected frames and
  /// RemoteError when the server answers with an Error frame.
  ProviderOutput query(std::span<const TokenId> context, bool want_hidden) override;

 private:
  std::unique_ptr<hflp::ByteStream> stream_;
  std::uint32_t vocab_size_ = 0;
};

/// Answers HFLP/1 requests from `provider` until the peer closes the
/// stream. Malformed frames get an Error frame and end the session. Returns
/// the number of requests answered.
std::uint64_t serve_stream(LogitProvider& provider, hflp::ByteStream& stream);

/// Accepts and serves connections one at a time. Stops after
/// `max_connections` sessions (0 = unlimited).
void serve_tcp(LogitProvider& provider, hflp::TcpListener& listener,
               std::uint64_t max_connections = 0);

}  // namespace hyperscope
