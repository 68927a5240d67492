// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "hyperscope/error.hpp"

namespace hyperscope {
namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf);
  // Keep floats recognizable as floats after a round trip.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void write_canonical(const nlohmann::json& v, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map order: sorted
        if (!first) out += ",\n";
        first = false;
        out += inner;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        write_canonical(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",\n";
        out += inner;
        write_canonical(v[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(v.get<double>());
      return;
    default:
      out += v.dump();
      return;
  }
}

std::string csv_field(const nlohmann::json& v) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_number_float()) {
    s = format_double(v.get<double>());
    if (s == "null") s.clear();
  } else if (v.is_null()) {
    s.clear();
  } else {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error(Errc::io_error, "write failed: " + path);
}

}  // namespace

std::string to_canonical_json(const nlohmann::json& value) {
  std::string out;
  write_canonical(value, out, 0);
  out += "\n";
  return out;
}

nlohmann::json Report::to_json() const {
  nlohmann::json doc;
  doc["toolkit"] = {{"name", kToolkitName}, {"version", kToolkitVersion}};
  doc["experiment"] = experiment;
  doc["config"] = config;
  doc["inputs"] = inputs.is_null() ? nlohmann::json::object() : inputs;
  doc["results"] = results.is_null() ? nlohmann::json::object() : results;
  doc["conventions"] = conventions.is_null() ? nlohmann::json::object() : conventions;
  nlohmann::json tables_json = nlohmann::json::object();
  for (const auto& t : tables) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back(r);
    tables_json[t.name] = {{"columns", t.columns}, {"rows", rows}};
  }
  doc["tables"] = tables_json;
  return doc;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(Errc::config_error, "unknown report format: " + std::string(name));
}

std::string render_json(const Report& report) { return to_canonical_json(report.to_json()); }

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> emit_report(const Report& report, const std::string& out_path,
                                     ReportFormat format) {
  if (format == ReportFormat::json) {
    write_file(out_path, render_json(report));
    return {out_path};
  }
  std::string stem = out_path;
  if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".csv") == 0) stem.resize(stem.size() - 4);
  std::vector<std::string> written;
  for (const auto& table : report.tables) {
    const std::string path = stem + "." + table.name + ".csv";
    write_file(path, render_csv(table));
    written.push_back(path);
  }
  return written;
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<std::uint8_t>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace hyperscope
