// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hyperscope {

inline constexpr std::string_view kToolkitName = "hyperscope";
inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// Deterministic JSON: object keys sorted, two-space indentation, floats
/// printed with 17 significant digits, non-finite floats as null.
std::string to_canonical_json(const nlohmann::json& value);

/// One CSV-able metric family.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

struct Report {
  std::string experiment;
  nlohmann::json config;       // normalized echo; feeding it back reproduces the report
  nlohmann::json inputs;       // provenance: paths, checksums, endpoints
  nlohmann::json results;
  nlohmann::json conventions;  // definitions that affect how numbers read
  std::vector<Table> tables;

  nlohmann::json to_json() const;
};

enum class ReportFormat { json, csv };

ReportFormat parse_report_format(std::string_view name);

std::string render_json(const Report& report);
/// Header line plus one line per row; fields are quoted only when needed.
std::string render_csv(const Table& table);

/// Writes the report. JSON goes to `out_path`. CSV writes one file per
/// table, `<stem>.<table>.csv`, where stem is `out_path` without a trailing
/// ".csv". Returns the paths written.
std::vector<std::string> emit_report(const Report& report, const std::string& out_path,
                                     ReportFormat format);

/// FNV-1a 64-bit checksum of a file's bytes, as 16 lowercase hex digits.
std::string file_checksum(const std::string& path);

}  // namespace hyperscope
