// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "hyperscope/trace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = hyperscope::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const json& doc) { std::ofstream(p) << doc.dump(); }

// A scratch directory holding one synthetic trace with hidden states.
struct Fixture {
  fs::path dir;
  fs::path trace;

  Fixture() {
    dir = fs::temp_directory_path() / "hyperscope_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    trace = dir / "t.hft1";
    put(dir / "gen.json", {{"vocab_size", 48},
                           {"length", 30},
                           {"token_seed", 3},
                           {"model_a", {{"seed", 1}}},
                           {"model_b", {{"seed", 2}, {"scale", 2.0}}},
                           {"hidden", {{"layer_count", 2}, {"hidden_dim", 4}, {"seed", 5}}}});
    const auto r = run({"trace", "gen-synth", "--config", path("gen.json"), "--out", trace.string()});
    REQUIRE(r.code == 0);
  }
  ~Fixture() { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

json synthetic(std::uint64_t seed) {
  return {{"kind", "synthetic"}, {"vocab_size", 48}, {"params", {{"seed", seed}}}};
}

}  // namespace

TEST_CASE("gen-synth writes a valid trace and reports it") {
  Fixture fx;
  const auto t = hyperscope::load_trace(fx.trace.string());
  CHECK(t.vocab() == 48);
  CHECK(t.positions() == 30);
  CHECK(t.header.has_both_hidden());
  const auto first = slurp(fx.trace);
  run({"trace", "gen-synth", "--config", fx.path("gen.json"), "--out", fx.trace.string()});
  CHECK(slurp(fx.trace) == first);

  const auto v = run({"trace", "validate", fx.trace.string()});
  CHECK(v.code == 0);
  CHECK(json::parse(v.out)["experiment"] == "validate");
}

TEST_CASE("analyses are byte-identical across runs and reproducible from the echoed config") {
  Fixture fx;
  const std::string t = fx.trace.string();
  const std::vector<std::pair<std::vector<std::string>, json>> cases{
      {{"analyze", "entropy-match"}, {{"traces", {t, t}}}},
      {{"analyze", "rank"}, {{"traces", {t}}}},
      {{"analyze", "diversity"}, {{"traces", {t}}, {"sequences", {{1, 2, 1, 2}}}}},
      {{"analyze", "geometry"}, {{"trace", t}}},
      {{"ablate", "inject"},
       {{"trace", t},
        {"k", 4},
        {"alphas", {0.0, 1.0, 3.0}},
        {"provider", synthetic(1)},
        {"prompts", {{"count", 2}, {"length", 2}, {"seed", 1}, {"vocab_size", 48}}},
        {"steps", 12}}},
  };
  for (const auto& [cmd, cfg] : cases) {
    CAPTURE(cmd[1]);
    put(fx.dir / "cfg.json", cfg);
    auto args = cmd;
    args.insert(args.end(), {"--config", fx.path("cfg.json")});
    const auto first = run(args);
    REQUIRE(first.code == 0);
    CHECK(run(args).out == first.out);

    const auto doc = json::parse(first.out);
    put(fx.dir / "echo.json", doc["config"]);
    auto again = cmd;
    again.insert(again.end(), {"--config", fx.path("echo.json")});
    CHECK(run(again).out == first.out);

    auto to_file = args;
    to_file.insert(to_file.end(), {"--out", fx.path("report.json")});
    CHECK(run(to_file).code == 0);
    CHECK(slurp(fx.dir / "report.json") == first.out);
  }
}

TEST_CASE("csv output writes one file per table") {
  Fixture fx;
  put(fx.dir / "rank.json", {{"traces", {fx.trace.string()}}});
  const auto r = run({"analyze", "rank", "--config", fx.path("rank.json"), "--format", "csv",
                      "--out", fx.path("rank.csv")});
  REQUIRE(r.code == 0);
  for (const char* table : {"summary", "series", "provenance", "rank_shift"}) {
    CHECK(fs::exists(fx.dir / (std::string("rank.") + table + ".csv")));
  }
  CHECK(slurp(fx.dir / "rank.summary.csv").rfind("metric", 0) == 0);
}

TEST_CASE("exit codes") {
  Fixture fx;
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"analyze", "rank"}).code == 1);
  CHECK(run({"--version"}).code == 0);

  put(fx.dir / "rank.json", {{"traces", {fx.trace.string()}}});
  CHECK(run({"analyze", "rank", "--config", fx.path("rank.json"), "--format", "csv"}).code == 1);
  CHECK(run({"analyze", "rank", "--config", fx.path("rank.json"), "--format", "xml"}).code == 1);

  put(fx.dir / "extra.json", {{"traces", {fx.trace.string()}}, {"bogus_key", 1}});
  CHECK(run({"analyze", "rank", "--config", fx.path("extra.json")}).code == 2);
  put(fx.dir / "wrong.json", {{"experiment", "geometry"}, {"trace", fx.trace.string()}});
  CHECK(run({"analyze", "rank", "--config", fx.path("wrong.json")}).code == 2);
  put(fx.dir / "missing.json", {{"traces", {fx.path("nope.hft1")}}});
  CHECK(run({"analyze", "rank", "--config", fx.path("missing.json")}).code == 2);
  CHECK(run({"analyze", "rank", "--config", fx.path("absent.json")}).code == 2);

  std::ofstream(fx.dir / "junk.hft1") << "not a trace";
  const auto bad = run({"trace", "validate", fx.path("junk.hft1")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("BadMagic") != std::string::npos);

  // Replaying past the end of a recorded trace is a runtime failure.
  const auto tokens = hyperscope::load_trace(fx.trace.string()).tokens;
  put(fx.dir / "replay.json",
      {{"generation",
        {{"model", {{"kind", "trace"}, {"path", fx.trace.string()}, {"model", "a"}}},
         {"prompts", json::array({tokens})},
         {"steps", 5}}}});
  const auto replay = run({"analyze", "diversity", "--config", fx.path("replay.json")});
  CHECK(replay.code == 3);
  CHECK(replay.err.find("ProviderExhausted") != std::string::npos);
}
