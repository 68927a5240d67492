// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/provider.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperscope/error.hpp"
#include "hyperscope/protocol.hpp"
#include "hyperscope/transport.hpp"

namespace hyperscope {

TraceReplayProvider::TraceReplayProvider(const TeacherForcedTrace& trace, Model model)
    : trace_(&trace), model_(model) {}

ProviderOutput TraceReplayProvider::query(std::span<const TokenId> context, bool want_hidden) {
  if (context.empty()) throw Error(Errc::invalid_argument, "empty context");
  const std::size_t t = context.size() - 1;
  if (t >= trace_->positions()) {
    throw Error(Errc::provider_exhausted, "trace replay has " +
                                              std::to_string(trace_->positions()) +
                                              " positions; asked for position " + std::to_string(t));
  }
  if (!std::equal(context.begin(), context.end(), trace_->tokens.begin())) {
    throw Error(Errc::context_mismatch, "trace replay cannot answer a context that diverges "
                                        "from the recorded tokens");
  }
  ProviderOutput out;
  const auto row = trace_->logits(model_, t);
  out.logits.assign(row.begin(), row.end());
  if (want_hidden) {
    if (!supports_hidden()) throw Error(Errc::missing_hidden_states, "trace has no hidden states");
    HiddenStack stack;
    stack.layer_count = trace_->header.layer_count;
    stack.hidden_dim = trace_->header.hidden_dim;
    for (std::size_t l = 0; l < stack.layer_count; ++l) {
      const auto h = trace_->hidden(model_, t, l);
      stack.values.insert(stack.values.end(), h.begin(), h.end());
    }
    out.hidden = std::move(stack);
  }
  return out;
}

SyntheticModel::SyntheticModel(SyntheticModelParams params, std::uint32_t vocab_size,
                               std::optional<HiddenLayout> hidden)
    : params_(std::move(params)), vocab_size_(vocab_size), hidden_(hidden) {
  params_.validate();
  if (vocab_size_ < 2) throw Error(Errc::invalid_argument, "vocab_size must be >= 2");
}

ProviderOutput SyntheticModel::query(std::span<const TokenId> context, bool want_hidden) {
  for (TokenId tok : context) {
    if (tok >= vocab_size_) {
      throw Error(Errc::token_id_out_of_range, "token " + std::to_string(tok) + " >= vocab size");
    }
  }
  ProviderOutput out;
  out.logits.resize(vocab_size_);
  synthetic_logits(params_, context, out.logits);
  if (want_hidden) {
    if (!hidden_) throw Error(Errc::missing_hidden_states, "synthetic model has no hidden layout");
    HiddenStack stack;
    stack.layer_count = hidden_->layer_count;
    stack.hidden_dim = hidden_->hidden_dim;
    stack.values.resize(std::size_t{stack.layer_count} * stack.hidden_dim);
    synthetic_hidden(params_, *hidden_, context, stack.values);
    out.hidden = std::move(stack);
  }
  return out;
}

TemperatureScaledProvider::TemperatureScaledProvider(LogitProvider& inner, double temperature)
    : inner_(&inner), temperature_(temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::non_positive_temperature, "temperature must be positive and finite");
  }
}

ProviderOutput TemperatureScaledProvider::query(std::span<const TokenId> context,
                                                bool want_hidden) {
  ProviderOutput out = inner_->query(context, want_hidden);
  for (auto& v : out.logits) v /= temperature_;
  return out;
}

RemoteModel::RemoteModel(std::unique_ptr<hflp::ByteStream> stream) : stream_(std::move(stream)) {}

RemoteModel::~RemoteModel() = default;

ProviderOutput RemoteModel::query(std::span<const TokenId> context, bool want_hidden) {
  hflp::LogitsRequest req;
  req.want_hidden = want_hidden;
  req.tokens.assign(context.begin(), context.end());
  hflp::write_message(*stream_, req);

  auto reply = hflp::read_message(*stream_);
  if (!reply) throw Error(Errc::remote_protocol_error, "server closed the connection");
  if (const auto* err = std::get_if<hflp::ErrorMessage>(&*reply)) {
    throw Error(Errc::remote_error, "server error " + std::to_string(err->code) + ": " + err->message);
  }
  auto* resp = std::get_if<hflp::LogitsResponse>(&*reply);
  if (resp == nullptr) throw Error(Errc::remote_protocol_error, "expected a LogitsResponse frame");
  const auto vocab = static_cast<std::uint32_t>(resp->logits.size());
  if (vocab_size_ != 0 && vocab != vocab_size_) {
    throw Error(Errc::remote_protocol_error, "vocab size changed between responses");
  }
  vocab_size_ = vocab;
  if (want_hidden && !resp->hidden) {
    throw Error(Errc::remote_protocol_error, "hidden states requested but not returned");
  }

  ProviderOutput out;
  out.logits.assign(resp->logits.begin(), resp->logits.end());
  if (resp->hidden) {
    HiddenStack stack;
    stack.layer_count = resp->hidden->layer_count;
    stack.hidden_dim = resp->hidden->hidden_dim;
    stack.values.assign(resp->hidden->values.begin(), resp->hidden->values.end());
    out.hidden = std::move(stack);
  }
  return out;
}

namespace {

hflp::ErrorMessage error_frame(hflp::ErrorCode code, std::string message) {
  return {static_cast<std::uint32_t>(code), std::move(message)};
}

hflp::Message answer(LogitProvider& provider, const hflp::LogitsRequest& req) {
  if (req.tokens.empty()) return error_frame(hflp::ErrorCode::empty_context, "empty context");
  const std::uint32_t vocab = provider.vocab_size();
  if (vocab != 0) {
    for (TokenId tok : req.tokens) {
      if (tok >= vocab) {
        return error_frame(hflp::ErrorCode::token_out_of_range,
                           "token " + std::to_string(tok) + " >= vocab size " +
                               std::to_string(vocab));
      }
    }
  }
  if (req.want_hidden && !provider.supports_hidden()) {
    return error_frame(hflp::ErrorCode::hidden_unavailable, "hidden states not available");
  }
  try {
    auto out = provider.query(req.tokens, req.want_hidden);
    hflp::LogitsResponse resp;
    resp.logits.assign(out.logits.begin(), out.logits.end());
    if (out.hidden) {
      hflp::HiddenPayload hidden;
      hidden.layer_count = out.hidden->layer_count;
      hidden.hidden_dim = out.hidden->hidden_dim;
      hidden.values.assign(out.hidden->values.begin(), out.hidden->values.end());
      resp.hidden = std::move(hidden);
    }
    return resp;
  } catch (const Error& e) {
    return error_frame(hflp::ErrorCode::internal, e.what());
  }
}

}  // namespace

std::uint64_t serve_stream(LogitProvider& provider, hflp::ByteStream& stream) {
  std::uint64_t answered = 0;
  for (;;) {
    std::optional<hflp::Message> msg;
    try {
      msg = hflp::read_message(stream);
    } catch (const Error& e) {
      if (e.code() != Errc::remote_protocol_error) throw;
      hflp::write_message(stream, error_frame(hflp::ErrorCode::malformed_request, e.what()));
      return answered;
    }
    if (!msg) return answered;
    const auto* req = std::get_if<hflp::LogitsRequest>(&*msg);
    if (req == nullptr) {
      hflp::write_message(stream,
                          error_frame(hflp::ErrorCode::malformed_request, "expected a LogitsRequest"));
      return answered;
    }
    hflp::write_message(stream, answer(provider, *req));
    ++answered;
  }
}

void serve_tcp(LogitProvider& provider, hflp::TcpListener& listener,
               std::uint64_t max_connections) {
  for (std::uint64_t served = 0; max_connections == 0 || served < max_connections; ++served) {
    auto conn = listener.accept();
    try {
      serve_stream(provider, *conn);
    } catch (const Error&) {
      // A broken connection ends that session only.
    }
  }
}

}  // namespace hyperscope
