// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "hyperscope/config.hpp"
#include "hyperscope/error.hpp"
#include "hyperscope/experiments.hpp"
#include "hyperscope/provider.hpp"
#include "hyperscope/report.hpp"
#include "hyperscope/transport.hpp"

namespace hyperscope::cli {
namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "cannot read config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, path + ": " + e.what());
  }
}

// Loads a config and checks that its experiment field, if present, matches
// the subcommand.
config::ExperimentConfig load_config(const std::string& path, const std::string& kind) {
  json doc = read_json(path);
  if (!doc.is_object()) throw Error(Errc::config_error, path + ": expected an object");
  if (!doc.contains("experiment")) doc["experiment"] = kind;
  if (doc["experiment"] != kind) {
    throw Error(Errc::config_error, path + ": config is for '" +
                                        doc["experiment"].dump() + "', not '" + kind + "'");
  }
  return config::parse(doc);
}

void emit(const Report& report, const std::string& out_path, const std::string& format,
          std::ostream& out) {
  const ReportFormat fmt = parse_report_format(format);
  if (out_path.empty()) {
    if (fmt == ReportFormat::csv) throw UsageError("--format csv needs --out");
    out << render_json(report);
    return;
  }
  emit_report(report, out_path, fmt);
}

struct Options {
  std::string config;
  std::string out;
  std::string format = "json";
};

void add_report_options(CLI::App* cmd, Options& o, bool require_config) {
  auto* c = cmd->add_option("--config", o.config, "Experiment config (JSON)");
  if (require_config) c->required();
  cmd->add_option("--out", o.out, "Output path; JSON to stdout when omitted");
  cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differential analysis of paired language-model traces", "hyperscope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  Options opts;
  std::vector<std::string> validate_paths;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  bool use_stdio = false;
  std::uint64_t max_connections = 0;

  auto* trace = app.add_subcommand("trace", "Trace files")->require_subcommand(1);
  auto* gen = trace->add_subcommand("gen-synth", "Write a synthetic HFT1 trace");
  gen->add_option("--config", opts.config, "Generator config (JSON)")->required();
  gen->add_option("--out", opts.out, "Trace path")->required();
  auto* validate = trace->add_subcommand("validate", "Check HFT1 files");
  add_report_options(validate, opts, false);
  validate->add_option("traces", validate_paths, "Trace files");

  auto* analyze = app.add_subcommand("analyze", "Teacher-forced and generation analyses")
                      ->require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::string>> analyses;
  for (const char* kind : {"entropy-match", "rank", "diversity", "geometry"}) {
    auto* cmd = analyze->add_subcommand(kind, std::string("Run the ") + kind + " analysis");
    add_report_options(cmd, opts, true);
    analyses.emplace_back(cmd, kind);
  }

  auto* ablate = app.add_subcommand("ablate", "Static logit injection")->require_subcommand(1);
  auto* inject = ablate->add_subcommand("inject", "Sweep the injection strength");
  add_report_options(inject, opts, true);

  auto* serve = app.add_subcommand("serve", "Serve logits over HFLP/1")->require_subcommand(1);
  auto* synth = serve->add_subcommand("synth", "Serve a synthetic or trace-replay provider");
  synth->add_option("--config", opts.config, "Provider config (JSON)")->required();
  synth->add_option("--host", host, "Bind address");
  synth->add_option("--port", port, "TCP port; 0 picks a free one");
  synth->add_flag("--stdio", use_stdio, "Serve one session on stdin/stdout");
  synth->add_option("--max-connections", max_connections, "Exit after this many; 0 = unlimited");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*gen) {
      const auto cfg = load_config(opts.config, "gen-synth");
      const auto report = run_gen_synth(std::get<config::GenSynthConfig>(cfg), opts.out);
      out << render_json(report);
      return kSuccess;
    }
    if (*validate) {
      config::ValidateConfig cfg;
      if (!opts.config.empty()) cfg = std::get<config::ValidateConfig>(load_config(opts.config, "validate"));
      cfg.traces.insert(cfg.traces.end(), validate_paths.begin(), validate_paths.end());
      if (cfg.traces.empty()) throw UsageError("give trace paths or --config");
      json doc = config::echo(cfg);
      emit(run_validate(std::get<config::ValidateConfig>(config::parse(doc))), opts.out, opts.format, out);
      return kSuccess;
    }
    for (const auto& [cmd, kind] : analyses) {
      if (*cmd) {
        emit(run_experiment(load_config(opts.config, kind)), opts.out, opts.format, out);
        return kSuccess;
      }
    }
    if (*inject) {
      emit(run_experiment(load_config(opts.config, "ablation")), opts.out, opts.format, out);
      return kSuccess;
    }
    if (*synth) {
      const auto provider_cfg = config::parse_provider(read_json(opts.config));
      if (std::holds_alternative<config::RemoteProviderConfig>(provider_cfg) ||
          std::holds_alternative<config::CommandProviderConfig>(provider_cfg)) {
        throw Error(Errc::config_error, "serve needs a synthetic or trace provider");
      }
      auto provider = config::make_provider(provider_cfg);
      if (use_stdio) {
        hflp::FdStream stdio(0, 1, false);
        serve_stream(*provider, stdio);
        return kSuccess;
      }
      hflp::TcpListener listener(host, port);
      err << "listening on " << host << ":" << listener.port() << std::endl;
      serve_tcp(*provider, listener, max_connections);
      return kSuccess;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kValidation : kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace hyperscope::cli
