// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "hyperscope/error.hpp"
#include "hyperscope/transport.hpp"

namespace hyperscope::config {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(Errc::config_error, where + ": " + what);
}

// Reads fields of one JSON object and remembers which keys were consumed so
// leftovers can be reported.
class Fields {
 public:
  Fields(const json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc.is_object()) bad(where_, "expected an object");
  }

  const std::string& where() const { return where_; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) bad(where_, "missing required field '" + key + "'");
    return *v;
  }

  std::uint64_t u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (v == nullptr) return *fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      bad(where_, "'" + key + "' must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::uint32_t u32(const std::string& key, std::optional<std::uint32_t> fallback = std::nullopt) {
    const std::uint64_t v = u64(key, fallback);
    if (v > 0xFFFFFFFFULL) bad(where_, "'" + key + "' exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (v == nullptr) return *fallback;
    return as_number(*v, key);
  }

  double as_number(const json& v, const std::string& what) const {
    if (!v.is_number()) bad(where_, "'" + what + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(where_, "'" + what + "' must be finite");
    return d;
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (v == nullptr) return *fallback;
    if (!v->is_string()) bad(where_, "'" + key + "' must be a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) bad(where_, "'" + key + "' must be a boolean");
    return v->get<bool>();
  }

  std::vector<std::string> strings(const std::string& key) {
    const json* v = find(key);
    std::vector<std::string> out;
    if (v == nullptr) return out;
    if (!v->is_array()) bad(where_, "'" + key + "' must be an array of strings");
    for (const auto& e : *v) {
      if (!e.is_string()) bad(where_, "'" + key + "' must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key);
    std::vector<double> out;
    if (v == nullptr) return out;
    if (!v->is_array()) bad(where_, "'" + key + "' must be an array of numbers");
    for (const auto& e : *v) out.push_back(as_number(e, key));
    return out;
  }

  std::vector<TokenId> tokens(const json& v, const std::string& what) const {
    if (!v.is_array()) bad(where_, "'" + what + "' must be an array of token ids");
    std::vector<TokenId> out;
    out.reserve(v.size());
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0 ||
          e.get<std::uint64_t>() > 0xFFFFFFFFULL) {
        bad(where_, "'" + what + "' must hold token ids in [0, 2^32)");
      }
      out.push_back(e.get<TokenId>());
    }
    return out;
  }

  std::vector<TokenId> token_list(const std::string& key) {
    const json* v = find(key);
    return v == nullptr ? std::vector<TokenId>{} : tokens(*v, key);
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) bad(where_, "unknown field '" + it.key() + "'");
    }
  }

 private:
  const json& doc_;
  std::string where_;
  std::set<std::string> seen_;
};

void require_file(const std::string& path, const std::string& where) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) bad(where, "input file not found: " + path);
}

SyntheticModelParams parse_params(const json& doc, const std::string& where) {
  Fields f(doc, where);
  SyntheticModelParams p;
  p.seed = f.u64("seed", 0);
  p.context_window = f.u32("context_window", 1);
  p.repetition_attractor = f.number("repetition_attractor", 0.0);
  p.scale = f.number("scale", 1.0);
  if (const json* spectra = f.find("layer_spectra")) {
    if (!spectra->is_array()) bad(where, "'layer_spectra' must be an array of arrays");
    for (const auto& level : *spectra) {
      if (!level.is_array()) bad(where, "'layer_spectra' must be an array of arrays");
      std::vector<double> row;
      for (const auto& v : level) row.push_back(f.as_number(v, "layer_spectra"));
      p.layer_spectra.push_back(std::move(row));
    }
  }
  f.finish();
  try {
    p.validate();
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return p;
}

json echo_params(const SyntheticModelParams& p) {
  json spectra = json::array();
  for (const auto& level : p.layer_spectra) spectra.push_back(level);
  return {{"seed", p.seed},
          {"context_window", p.context_window},
          {"repetition_attractor", p.repetition_attractor},
          {"scale", p.scale},
          {"layer_spectra", spectra}};
}

std::optional<HiddenLayout> parse_hidden(Fields& f) {
  const json* doc = f.find("hidden");
  if (doc == nullptr) return std::nullopt;
  Fields h(*doc, f.where() + ".hidden");
  HiddenLayout layout;
  layout.layer_count = h.u32("layer_count");
  layout.hidden_dim = h.u32("hidden_dim");
  layout.seed = h.u64("seed", 0);
  h.finish();
  if (layout.layer_count == 0 || layout.hidden_dim == 0) bad(h.where(), "empty hidden shape");
  return layout;
}

json echo_hidden(const std::optional<HiddenLayout>& layout) {
  if (!layout) return nullptr;
  return {{"layer_count", layout->layer_count},
          {"hidden_dim", layout->hidden_dim},
          {"seed", layout->seed}};
}

void check_spectra(const SyntheticModelParams& p, const std::optional<HiddenLayout>& layout,
                   const std::string& where) {
  if (p.layer_spectra.empty()) return;
  if (!layout) bad(where, "'layer_spectra' given without a hidden layout");
  if (p.layer_spectra.size() != layout->layer_count) {
    bad(where, "'layer_spectra' needs one row per level");
  }
  for (const auto& row : p.layer_spectra) {
    if (row.size() != layout->hidden_dim) bad(where, "'layer_spectra' rows need hidden_dim values");
    for (double v : row) {
      if (v < 0.0) bad(where, "'layer_spectra' values must be non-negative");
    }
  }
}

PromptConfig parse_prompts(const json& doc, const std::string& where) {
  PromptConfig p;
  if (doc.is_array()) {
    static const json kEmpty = json::object();
    Fields dummy(kEmpty, where);
    for (const auto& prompt : doc) {
      p.explicit_prompts.push_back(dummy.tokens(prompt, "prompts"));
      if (p.explicit_prompts.back().empty()) bad(where, "prompts must be non-empty");
    }
    if (p.explicit_prompts.empty()) bad(where, "prompt list is empty");
    return p;
  }
  Fields f(doc, where);
  p.count = f.u64("count");
  p.length = f.u64("length");
  p.seed = f.u64("seed", 0);
  p.vocab_size = f.u32("vocab_size");
  f.finish();
  if (p.count == 0 || p.length == 0 || p.vocab_size == 0) {
    bad(where, "count, length and vocab_size must be positive");
  }
  return p;
}

json echo_prompts(const PromptConfig& p) {
  if (!p.explicit_prompts.empty()) {
    json out = json::array();
    for (const auto& prompt : p.explicit_prompts) out.push_back(prompt);
    return out;
  }
  return {{"count", p.count}, {"length", p.length}, {"seed", p.seed}, {"vocab_size", p.vocab_size}};
}

std::size_t parse_steps(Fields& f) {
  const std::size_t steps = f.u64("steps", 256);
  if (steps < 3) bad(f.where(), "'steps' must be at least 3");
  return steps;
}

GenerationConfig parse_generation(const json& doc, const std::string& where) {
  Fields f(doc, where);
  GenerationConfig g;
  g.model_a = parse_provider(f.require("model_a"));
  g.model_b = parse_provider(f.require("model_b"));
  g.prompts = parse_prompts(f.require("prompts"), where + ".prompts");
  g.steps = parse_steps(f);
  f.finish();
  return g;
}

json echo_generation(const std::optional<GenerationConfig>& g) {
  if (!g) return nullptr;
  return {{"model_a", echo_provider(g->model_a)},
          {"model_b", echo_provider(g->model_b)},
          {"prompts", echo_prompts(g->prompts)},
          {"steps", g->steps}};
}

std::vector<std::string> parse_traces(Fields& f, bool required) {
  auto traces = f.strings("traces");
  if (required && traces.empty()) bad(f.where(), "'traces' must list at least one trace");
  for (const auto& t : traces) require_file(t, f.where());
  return traces;
}

std::string_view model_name(Model m) { return m == Model::a ? "a" : "b"; }

Model parse_model(const std::string& s, const std::string& where) {
  if (s == "a") return Model::a;
  if (s == "b") return Model::b;
  bad(where, "'model' must be \"a\" or \"b\"");
}

std::string_view unit_name(SampleUnit u) {
  switch (u) {
    case SampleUnit::sequences: return "sequences";
    case SampleUnit::positions: return "positions";
    default: return "auto";
  }
}

EntropyMatchConfig parse_entropy_match(Fields& f) {
  EntropyMatchConfig c;
  c.traces = parse_traces(f, true);
  if (const json* s = f.find("solver")) {
    Fields sf(*s, "config.solver");
    c.solver.tolerance = sf.number("tolerance", c.solver.tolerance);
    c.solver.max_iterations = static_cast<int>(sf.u32("max_iterations", 200));
    c.solver.lower = sf.number("lower", c.solver.lower);
    c.solver.upper = sf.number("upper", c.solver.upper);
    sf.finish();
    if (!(c.solver.tolerance > 0.0) || c.solver.max_iterations < 1 || !(c.solver.lower > 0.0) ||
        !(c.solver.upper > c.solver.lower)) {
      bad("config.solver", "need tolerance > 0, max_iterations >= 1, 0 < lower < upper");
    }
  }
  const std::string unit = f.string("sample_unit", "auto");
  if (unit == "auto") {
    c.sample_unit = SampleUnit::automatic;
  } else if (unit == "sequences") {
    c.sample_unit = SampleUnit::sequences;
  } else if (unit == "positions") {
    c.sample_unit = SampleUnit::positions;
  } else {
    bad(f.where(), "'sample_unit' must be auto, sequences or positions");
  }
  if (const json* g = f.find("generation")) c.generation = parse_generation(*g, "config.generation");
  return c;
}

RankConfig parse_rank(Fields& f) {
  RankConfig c;
  c.traces = parse_traces(f, true);
  c.include_series = f.boolean("include_series", true);
  if (const json* g = f.find("free_running")) {
    c.free_running = parse_generation(*g, "config.free_running");
  }
  return c;
}

DiversityConfig parse_diversity(Fields& f) {
  DiversityConfig c;
  if (const json* seqs = f.find("sequences")) {
    if (!seqs->is_array()) bad(f.where(), "'sequences' must be an array of token arrays");
    for (const auto& s : *seqs) c.sequences.push_back(f.tokens(s, "sequences"));
  }
  c.traces = parse_traces(f, false);
  if (const json* g = f.find("generation")) {
    Fields gf(*g, "config.generation");
    SingleModelGeneration gen;
    gen.model = parse_provider(gf.require("model"));
    gen.prompts = parse_prompts(gf.require("prompts"), "config.generation.prompts");
    gen.steps = parse_steps(gf);
    gf.finish();
    c.generation = std::move(gen);
  }
  if (c.sequences.empty() && c.traces.empty() && !c.generation) {
    bad(f.where(), "give 'sequences', 'traces' or 'generation'");
  }
  return c;
}

GeometryConfig parse_geometry(Fields& f) {
  GeometryConfig c;
  c.trace = f.string("trace");
  require_file(c.trace, f.where());
  if (const json* s = f.find("sampling")) {
    Fields sf(*s, "config.sampling");
    const std::string kind = sf.string("kind", "all");
    if (kind == "all") {
      c.sampling.kind = PositionSampling::Kind::all;
    } else if (kind == "uniform") {
      c.sampling.kind = PositionSampling::Kind::uniform;
      c.sampling.count = sf.u64("count");
      if (c.sampling.count < 2) bad(sf.where(), "'count' must be at least 2");
    } else {
      bad(sf.where(), "'kind' must be all or uniform");
    }
    c.sampling.seed = sf.u64("seed", 0);
    if (c.sampling.kind == PositionSampling::Kind::all) sf.find("count");
    sf.finish();
  }
  return c;
}

AblationConfig parse_ablation(Fields& f) {
  AblationConfig c;
  c.trace = f.string("trace");
  require_file(c.trace, f.where());
  c.k = f.u32("k", 20);
  if (c.k == 0) bad(f.where(), "'k' must be positive");
  c.excluded = f.token_list("excluded");
  std::sort(c.excluded.begin(), c.excluded.end());
  c.excluded.erase(std::unique(c.excluded.begin(), c.excluded.end()), c.excluded.end());
  c.alphas = f.numbers("alphas");
  if (c.alphas.empty()) bad(f.where(), "'alphas' must list at least one value");
  for (double a : c.alphas) {
    if (a < 0.0) bad(f.where(), "'alphas' must be non-negative");
  }
  c.provider = parse_provider(f.require("provider"));
  c.prompts = parse_prompts(f.require("prompts"), "config.prompts");
  c.steps = parse_steps(f);
  return c;
}

GenSynthConfig parse_gen_synth(Fields& f) {
  GenSynthConfig c;
  c.vocab_size = f.u32("vocab_size");
  if (c.vocab_size < 2) bad(f.where(), "'vocab_size' must be at least 2");
  c.model_a = parse_params(f.require("model_a"), "config.model_a");
  c.model_b = parse_params(f.require("model_b"), "config.model_b");
  c.tokens = f.token_list("tokens");
  c.length = f.u64("length", 0);
  c.token_seed = f.u64("token_seed", 0);
  c.hidden = parse_hidden(f);
  check_spectra(c.model_a, c.hidden, "config.model_a");
  check_spectra(c.model_b, c.hidden, "config.model_b");
  if (c.tokens.empty() && c.length == 0) bad(f.where(), "give 'tokens' or a positive 'length'");
  if (!c.tokens.empty() && c.length != 0 && c.length != c.tokens.size()) {
    bad(f.where(), "'length' disagrees with the explicit token list");
  }
  for (TokenId t : c.tokens) {
    if (t >= c.vocab_size) bad(f.where(), "token id " + std::to_string(t) + " >= vocab_size");
  }
  if (!c.tokens.empty()) c.length = c.tokens.size();
  return c;
}

}  // namespace

std::vector<std::vector<TokenId>> PromptConfig::materialize() const {
  if (!explicit_prompts.empty()) return explicit_prompts;
  std::vector<std::vector<TokenId>> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].resize(length);
    for (std::size_t j = 0; j < length; ++j) {
      out[i][j] = static_cast<TokenId>(mix64(mix64(seed, i), j) % vocab_size);
    }
  }
  return out;
}

std::vector<TokenId> GenSynthConfig::materialize_tokens() const {
  if (!tokens.empty()) return tokens;
  std::vector<TokenId> out(length);
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = static_cast<TokenId>(mix64(token_seed, i) % vocab_size);
  }
  return out;
}

ProviderConfig parse_provider(const json& doc) {
  Fields f(doc, "provider");
  const std::string kind = f.string("kind");
  ProviderConfig out;
  if (kind == "synthetic") {
    SyntheticProviderConfig c;
    c.vocab_size = f.u32("vocab_size");
    if (c.vocab_size < 2) bad(f.where(), "'vocab_size' must be at least 2");
    c.params = parse_params(f.require("params"), "provider.params");
    c.hidden = parse_hidden(f);
    check_spectra(c.params, c.hidden, "provider.params");
    out = c;
  } else if (kind == "remote") {
    RemoteProviderConfig c;
    c.host = f.string("host", "127.0.0.1");
    const std::uint32_t port = f.u32("port");
    if (port == 0 || port > 65535) bad(f.where(), "'port' must be in [1, 65535]");
    c.port = static_cast<std::uint16_t>(port);
    out = c;
  } else if (kind == "command") {
    CommandProviderConfig c;
    c.argv = f.strings("argv");
    if (c.argv.empty()) bad(f.where(), "'argv' must not be empty");
    out = c;
  } else if (kind == "trace") {
    TraceProviderConfig c;
    c.path = f.string("path");
    require_file(c.path, f.where());
    c.model = parse_model(f.string("model", "a"), f.where());
    out = c;
  } else {
    bad(f.where(), "unknown provider kind '" + kind + "'");
  }
  f.finish();
  return out;
}

json echo_provider(const ProviderConfig& config) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SyntheticProviderConfig>) {
          return {{"kind", "synthetic"},
                  {"vocab_size", c.vocab_size},
                  {"params", echo_params(c.params)},
                  {"hidden", echo_hidden(c.hidden)}};
        } else if constexpr (std::is_same_v<T, RemoteProviderConfig>) {
          return {{"kind", "remote"}, {"host", c.host}, {"port", c.port}};
        } else if constexpr (std::is_same_v<T, CommandProviderConfig>) {
          return {{"kind", "command"}, {"argv", c.argv}};
        } else {
          return {{"kind", "trace"}, {"path", c.path}, {"model", model_name(c.model)}};
        }
      },
      config);
}

namespace {

// Owns the trace a replay provider reads from.
class OwnedTraceProvider final : public LogitProvider {
 public:
  OwnedTraceProvider(TeacherForcedTrace trace, Model model)
      : trace_(std::move(trace)), inner_(trace_, model) {}

  std::uint32_t vocab_size() const override { return inner_.vocab_size(); }
  bool supports_hidden() const override { return inner_.supports_hidden(); }
  ProviderOutput query(std::span<const TokenId> context, bool want_hidden) override {
    return inner_.query(context, want_hidden);
  }

 private:
  TeacherForcedTrace trace_;
  TraceReplayProvider inner_;
};

}  // namespace

std::unique_ptr<LogitProvider> make_provider(const ProviderConfig& config) {
  return std::visit(
      [](const auto& c) -> std::unique_ptr<LogitProvider> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SyntheticProviderConfig>) {
          return std::make_unique<SyntheticModel>(c.params, c.vocab_size, c.hidden);
        } else if constexpr (std::is_same_v<T, RemoteProviderConfig>) {
          return std::make_unique<RemoteModel>(hflp::connect_tcp(c.host, c.port));
        } else if constexpr (std::is_same_v<T, CommandProviderConfig>) {
          return std::make_unique<RemoteModel>(std::make_unique<hflp::ChildProcessStream>(c.argv));
        } else {
          return std::make_unique<OwnedTraceProvider>(load_trace(c.path), c.model);
        }
      },
      config);
}

ExperimentConfig parse(const json& doc) {
  Fields f(doc, "config");
  const std::string kind = f.string("experiment");
  ExperimentConfig out;
  if (kind == "entropy-match") {
    out = parse_entropy_match(f);
  } else if (kind == "rank") {
    out = parse_rank(f);
  } else if (kind == "diversity") {
    out = parse_diversity(f);
  } else if (kind == "geometry") {
    out = parse_geometry(f);
  } else if (kind == "ablation") {
    out = parse_ablation(f);
  } else if (kind == "gen-synth") {
    out = parse_gen_synth(f);
  } else if (kind == "validate") {
    out = ValidateConfig{parse_traces(f, true)};
  } else {
    bad("config", "unknown experiment '" + kind + "'");
  }
  f.finish();
  return out;
}

std::string experiment_name(const ExperimentConfig& config) {
  static constexpr const char* kNames[] = {"entropy-match", "rank",      "diversity", "geometry",
                                           "ablation",      "gen-synth", "validate"};
  return kNames[config.index()];
}

json echo(const ExperimentConfig& config) {
  json out = std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, EntropyMatchConfig>) {
          return {{"traces", c.traces},
                  {"solver",
                   {{"tolerance", c.solver.tolerance},
                    {"max_iterations", c.solver.max_iterations},
                    {"lower", c.solver.lower},
                    {"upper", c.solver.upper}}},
                  {"sample_unit", unit_name(c.sample_unit)},
                  {"generation", echo_generation(c.generation)}};
        } else if constexpr (std::is_same_v<T, RankConfig>) {
          return {{"traces", c.traces},
                  {"include_series", c.include_series},
                  {"free_running", echo_generation(c.free_running)}};
        } else if constexpr (std::is_same_v<T, DiversityConfig>) {
          json seqs = json::array();
          for (const auto& s : c.sequences) seqs.push_back(s);
          json gen = nullptr;
          if (c.generation) {
            gen = {{"model", echo_provider(c.generation->model)},
                   {"prompts", echo_prompts(c.generation->prompts)},
                   {"steps", c.generation->steps}};
          }
          return {{"sequences", seqs}, {"traces", c.traces}, {"generation", gen}};
        } else if constexpr (std::is_same_v<T, GeometryConfig>) {
          json sampling = {{"kind", c.sampling.kind == PositionSampling::Kind::all ? "all" : "uniform"},
                           {"seed", c.sampling.seed}};
          if (c.sampling.kind == PositionSampling::Kind::uniform) sampling["count"] = c.sampling.count;
          return {{"trace", c.trace}, {"sampling", sampling}};
        } else if constexpr (std::is_same_v<T, AblationConfig>) {
          return {{"trace", c.trace},         {"k", c.k},
                  {"excluded", c.excluded},   {"alphas", c.alphas},
                  {"provider", echo_provider(c.provider)},
                  {"prompts", echo_prompts(c.prompts)},
                  {"steps", c.steps}};
        } else if constexpr (std::is_same_v<T, GenSynthConfig>) {
          return {{"vocab_size", c.vocab_size},
                  {"model_a", echo_params(c.model_a)},
                  {"model_b", echo_params(c.model_b)},
                  {"tokens", c.tokens},
                  {"length", c.length},
                  {"token_seed", c.token_seed},
                  {"hidden", echo_hidden(c.hidden)}};
        } else {
          return {{"traces", c.traces}};
        }
      },
      config);
  out["experiment"] = experiment_name(config);
  return out;
}

}  // namespace hyperscope::config
