// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hyperscope/distribution.hpp"
#include "hyperscope/geometry.hpp"
#include "hyperscope/provider.hpp"
#include "hyperscope/synthetic.hpp"
#include "json.hpp"

// Experiment configuration. Every config parses strictly (unknown keys are
// rejected) and echoes back with all defaults filled in, so an echoed config
// fed back in yields the same experiment.

namespace hyperscope::config {

using nlohmann::json;

struct SyntheticProviderConfig {
  std::uint32_t vocab_size = 2;
  SyntheticModelParams params;
  std::optional<HiddenLayout> hidden;
};

struct RemoteProviderConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Runs a child process that speaks HFLP/1 on stdin/stdout.
struct CommandProviderConfig {
  std::vector<std::string> argv;
};

/// Replays the recorded logits of one side of a trace.
struct TraceProviderConfig {
  std::string path;
  Model model = Model::a;
};

using ProviderConfig = std::variant<SyntheticProviderConfig, RemoteProviderConfig,
                                    CommandProviderConfig, TraceProviderConfig>;

/// Either an explicit list or `count` random prompts of `length` ids drawn
/// from [0, vocab_size).
struct PromptConfig {
  std::vector<std::vector<TokenId>> explicit_prompts;
  std::size_t count = 0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::uint32_t vocab_size = 0;

  std::vector<std::vector<TokenId>> materialize() const;
};

struct GenerationConfig {
  ProviderConfig model_a;
  ProviderConfig model_b;
  PromptConfig prompts;
  std::size_t steps = 256;
};

enum class SampleUnit { automatic, sequences, positions };

struct EntropyMatchConfig {
  std::vector<std::string> traces;
  TemperatureSolveOptions solver;
  SampleUnit sample_unit = SampleUnit::automatic;
  std::optional<GenerationConfig> generation;
};

struct RankConfig {
  std::vector<std::string> traces;
  bool include_series = true;
  /// Free-running provenance: B decodes greedily, A supplies the ranks.
  std::optional<GenerationConfig> free_running;
};

struct SingleModelGeneration {
  ProviderConfig model;
  PromptConfig prompts;
  std::size_t steps = 256;
};

struct DiversityConfig {
  std::vector<std::vector<TokenId>> sequences;
  std::vector<std::string> traces;  // their token sequences are analyzed
  std::optional<SingleModelGeneration> generation;
};

struct GeometryConfig {
  std::string trace;
  PositionSampling sampling;
};

struct AblationConfig {
  std::string trace;  // teacher-forced pair used to extract delta
  std::uint32_t k = 20;
  std::vector<TokenId> excluded;
  std::vector<double> alphas;
  ProviderConfig provider;
  PromptConfig prompts;
  std::size_t steps = 256;
};

struct GenSynthConfig {
  std::uint32_t vocab_size = 2;
  SyntheticModelParams model_a;
  SyntheticModelParams model_b;
  std::vector<TokenId> tokens;  // explicit; wins over the random fields
  std::size_t length = 0;
  std::uint64_t token_seed = 0;
  std::optional<HiddenLayout> hidden;

  std::vector<TokenId> materialize_tokens() const;
};

struct ValidateConfig {
  std::vector<std::string> traces;
};

using ExperimentConfig = std::variant<EntropyMatchConfig, RankConfig, DiversityConfig,
                                      GeometryConfig, AblationConfig, GenSynthConfig,
                                      ValidateConfig>;

/// Throws Error(config_error) on schema violations and on referenced input
/// files that do not exist.
ExperimentConfig parse(const json& doc);
json echo(const ExperimentConfig& config);
std::string experiment_name(const ExperimentConfig& config);

ProviderConfig parse_provider(const json& doc);
json echo_provider(const ProviderConfig& config);

/// Builds the provider. Trace providers own their loaded trace.
std::unique_ptr<LogitProvider> make_provider(const ProviderConfig& config);

}  // namespace hyperscope::config
