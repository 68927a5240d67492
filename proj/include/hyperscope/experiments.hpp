// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "hyperscope/config.hpp"
#include "hyperscope/metrics.hpp"
#include "hyperscope/report.hpp"

namespace hyperscope {

Report run_entropy_match(const config::EntropyMatchConfig& cfg);
Report run_rank(const config::RankConfig& cfg);
Report run_diversity(const config::DiversityConfig& cfg);
Report run_geometry(const config::GeometryConfig& cfg);
Report run_ablation(const config::AblationConfig& cfg);
Report run_validate(const config::ValidateConfig& cfg);

/// Generates the trace, writes it to `out_path` and reports its header and
/// checksum.
Report run_gen_synth(const config::GenSynthConfig& cfg, const std::string& out_path);

/// Dispatches every kind except gen-synth, which needs an output path.
Report run_experiment(const config::ExperimentConfig& cfg);

nlohmann::json to_json(const MetricSummary& s);
nlohmann::json to_json(const TestResult& t);
nlohmann::json to_json(const ProvenanceHistogram& h);

}  // namespace hyperscope
