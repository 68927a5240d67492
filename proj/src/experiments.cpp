// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperscope/distribution.hpp"
#include "hyperscope/error.hpp"
#include "hyperscope/geometry.hpp"
#include "hyperscope/injection.hpp"
#include "hyperscope/metrics.hpp"
#include "hyperscope/stats.hpp"

namespace hyperscope {

using nlohmann::json;

json to_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"standard_error", s.standard_error}, {"n", s.n}};
}

json to_json(const TestResult& t) {
  return {{"statistic", t.statistic},
          {"p_value", t.p_value},
          {"dof", t.dof},
          {"two_sided", t.two_sided},
          {"degenerate", t.degenerate}};
}

json to_json(const ProvenanceHistogram& h) {
  const auto f = h.fractions();
  const auto c = h.coarse_fractions();
  return {{"counts",
           {{"rank1", h.rank1},
            {"rank2_10", h.rank2_10},
            {"rank11_199", h.rank11_199},
            {"rank200_plus", h.rank200_plus}}},
          {"fractions",
           {{"rank1", f[0]}, {"rank2_10", f[1]}, {"rank11_199", f[2]}, {"rank200_plus", f[3]}}},
          {"coarse_fractions", {{"rank1", c[0]}, {"rank2_10", c[1]}, {"rank_gt10", c[2]}}},
          {"total", h.total()}};
}

namespace {

constexpr const char* kColumns[] = {"a_t1", "a_tstar", "b"};
constexpr const char* kMetrics[] = {"entropy", "top1_agreement_with_b", "spearman_with_b",
                                    "top1_error"};

json summary_or_null(std::span<const double> values) {
  if (values.empty()) return nullptr;
  return to_json(mean_se(values));
}

json welch_or_null(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return nullptr;
  return to_json(welch_t_test(a, b));
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<TeacherForcedTrace> load_all(const std::vector<std::string>& paths) {
  std::vector<TeacherForcedTrace> traces;
  traces.reserve(paths.size());
  for (const auto& p : paths) traces.push_back(load_trace(p));
  for (const auto& t : traces) {
    if (t.vocab() != traces.front().vocab()) {
      throw Error(Errc::vocab_mismatch, "traces disagree on vocabulary size");
    }
  }
  return traces;
}

json describe_trace(const std::string& path, const TeacherForcedTrace& t) {
  return {{"path", path},
          {"checksum_fnv1a64", file_checksum(path)},
          {"vocab_size", t.header.vocab_size},
          {"layer_count", t.header.layer_count},
          {"hidden_dim", t.header.hidden_dim},
          {"positions", t.header.position_count},
          {"flags", t.header.flags}};
}

json describe_traces(const std::vector<std::string>& paths,
                     const std::vector<TeacherForcedTrace>& traces) {
  json out = json::array();
  for (std::size_t i = 0; i < paths.size(); ++i) out.push_back(describe_trace(paths[i], traces[i]));
  return out;
}

json describe_provider(const config::ProviderConfig& p) {
  json d = config::echo_provider(p);
  if (const auto* t = std::get_if<config::TraceProviderConfig>(&p)) {
    d["checksum_fnv1a64"] = file_checksum(t->path);
  }
  return d;
}

Report start(const config::ExperimentConfig& cfg) {
  Report r;
  r.experiment = config::experiment_name(cfg);
  r.config = config::echo(cfg);
  r.inputs = json::object();
  r.results = json::object();
  r.conventions = {{"entropy_unit", "nats"},
                   {"rank_convention", "1 = highest logit; ties broken by ascending token id"},
                   {"standard_error", "sample standard deviation (n-1) / sqrt(n); 0 when n = 1"}};
  return r;
}

void add_summary_row(Table& t, const std::string& column, const std::string& metric,
                     std::span<const double> values) {
  if (values.empty()) {
    t.rows.push_back({column, metric, nullptr, nullptr, 0});
    return;
  }
  const auto s = mean_se(values);
  t.rows.push_back({column, metric, s.mean, s.standard_error, s.n});
}

void add_test_row(Table& t, const std::string& comparison, const std::string& metric,
                  std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    t.rows.push_back({comparison, metric, nullptr, nullptr, nullptr, nullptr});
    return;
  }
  const auto r = welch_t_test(a, b);
  t.rows.push_back({comparison, metric, r.statistic, r.dof, r.p_value, r.degenerate});
}

// Per-sample values for one column of the three-way comparison. Each metric
// holds one value per sample unit.
struct ColumnSamples {
  std::vector<double> metric[4];
};

struct Generated {
  std::vector<double> ttr, bigram, trigram, entropy;
  std::vector<std::vector<TokenId>> tokens;
  ProvenanceHistogram provenance;
};

Generated generate(LogitProvider& provider, std::span<const std::vector<TokenId>> prompts,
                   std::size_t steps, LogitProvider* reference) {
  Generated g;
  for (const auto& prompt : prompts) {
    const auto d = greedy_decode(provider, prompt, {steps, std::nullopt}, nullptr, reference);
    g.ttr.push_back(ttr(d.tokens));
    g.bigram.push_back(ngram_repetition(d.tokens, 2));
    g.trigram.push_back(ngram_repetition(d.tokens, 3));
    g.entropy.push_back(mean_of(d.entropies));
    for (auto r : d.reference_ranks) g.provenance.add(r);
    g.tokens.push_back(d.tokens);
  }
  return g;
}

}  // namespace

Report run_entropy_match(const config::EntropyMatchConfig& cfg) {
  Report report = start(cfg);
  const auto traces = load_all(cfg.traces);
  report.inputs["traces"] = describe_traces(cfg.traces, traces);

  std::vector<std::span<const float>> rows_a;
  double sum_a = 0.0;
  double sum_b = 0.0;
  std::size_t count = 0;
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < tr.positions(); ++t) {
      rows_a.push_back(tr.logits(Model::a, t));
      sum_a += entropy_at_temperature(tr.logits(Model::a, t), 1.0);
      sum_b += entropy_at_temperature(tr.logits(Model::b, t), 1.0);
      ++count;
    }
  }
  const double mean_a = sum_a / static_cast<double>(count);
  const double target = sum_b / static_cast<double>(count);
  const auto global = solve_global_temperature(rows_a, target, cfg.solver);
  const double t_star = global.t_star;

  Table per_context{"per_context_temperature",
                    {"trace", "position", "t_star", "achieved_entropy", "clamped"},
                    {}};
  std::vector<double> context_t;
  std::uint64_t clamped = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (std::size_t t = 0; t < traces[i].positions(); ++t) {
      const auto r = solve_temperature_for_entropy(traces[i].logits(Model::a, t), target, cfg.solver);
      context_t.push_back(r.t_star);
      clamped += r.clamped ? 1 : 0;
      per_context.rows.push_back({i, t, r.t_star, r.achieved_entropy, r.clamped});
    }
  }
  std::vector<double> sorted_t = context_t;
  std::sort(sorted_t.begin(), sorted_t.end());
  const std::size_t m = sorted_t.size();
  const double median =
      m % 2 == 1 ? sorted_t[m / 2] : 0.5 * (sorted_t[m / 2 - 1] + sorted_t[m / 2]);

  const bool by_sequence = cfg.sample_unit == config::SampleUnit::sequences ||
                           (cfg.sample_unit == config::SampleUnit::automatic && traces.size() >= 2);

  ColumnSamples cols[3];
  const double temps[3] = {1.0, t_star, 1.0};
  for (const auto& tr : traces) {
    ColumnSamples per_pos[3];
    for (std::size_t t = 0; t < tr.positions(); ++t) {
      const auto zb = tr.logits(Model::b, t);
      const auto ranks_b = ranks_of(zb);
      const TokenId top_b = argmax_token(zb);
      for (int c = 0; c < 3; ++c) {
        const auto raw = tr.logits(c == 2 ? Model::b : Model::a, t);
        std::vector<double> z(raw.begin(), raw.end());
        for (auto& v : z) v /= temps[c];
        const TokenId top = argmax_token(z);
        per_pos[c].metric[0].push_back(entropy_at_temperature(std::span<const double>(z), 1.0));
        per_pos[c].metric[1].push_back(top == top_b ? 1.0 : 0.0);
        per_pos[c].metric[2].push_back(spearman_rho_of_ranks(ranks_of(z), ranks_b));
        if (t + 1 < tr.positions()) {
          per_pos[c].metric[3].push_back(top != tr.tokens[t + 1] ? 1.0 : 0.0);
        }
      }
    }
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 4; ++k) {
        auto& src = per_pos[c].metric[k];
        auto& dst = cols[c].metric[k];
        if (by_sequence) {
          if (!src.empty()) dst.push_back(mean_of(src));
        } else {
          dst.insert(dst.end(), src.begin(), src.end());
        }
      }
    }
  }

  Table table1{"table1", {"column", "metric", "mean", "standard_error", "n"}, {}};
  Table tests{"welch", {"comparison", "metric", "statistic", "dof", "p_value", "degenerate"}, {}};
  json columns = json::object();
  json welch = {{"a_t1", json::object()}, {"b", json::object()}};
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 4; ++k) {
      columns[kColumns[c]][kMetrics[k]] = summary_or_null(cols[c].metric[k]);
      add_summary_row(table1, kColumns[c], kMetrics[k], cols[c].metric[k]);
    }
  }
  for (int c : {0, 2}) {
    for (int k = 0; k < 4; ++k) {
      welch[kColumns[c]][kMetrics[k]] = welch_or_null(cols[c].metric[k], cols[1].metric[k]);
      add_test_row(tests, std::string(kColumns[c]) + "_vs_a_tstar", kMetrics[k], cols[c].metric[k],
                   cols[1].metric[k]);
    }
  }

  report.results = {
      {"mean_entropy_a", mean_a},
      {"mean_entropy_b", target},
      {"global_temperature",
       {{"t_star", t_star},
        {"achieved_entropy", global.achieved_entropy},
        {"iterations", global.iterations},
        {"clamped", global.clamped}}},
      {"per_context_temperature",
       {{"summary", to_json(mean_se(context_t))},
        {"min", sorted_t.front()},
        {"median", median},
        {"max", sorted_t.back()},
        {"clamped", clamped}}},
      {"sample_unit", by_sequence ? "sequences" : "positions"},
      {"columns", columns},
      {"welch_vs_a_tstar", welch},
      {"generation", nullptr}};
  report.conventions["columns"] = {
      {"a_t1", "model A at temperature 1"},
      {"a_tstar", "model A at the global entropy-matched temperature"},
      {"b", "model B at temperature 1"}};
  report.conventions["entropy_target"] = "mean per-position entropy of model B over all traces";
  report.conventions["welch"] = "two-sided Welch t-test of each column against a_tstar";

  if (cfg.generation) {
    const auto& g = *cfg.generation;
    report.inputs["model_a"] = describe_provider(g.model_a);
    report.inputs["model_b"] = describe_provider(g.model_b);
    auto model_a = config::make_provider(g.model_a);
    auto model_b = config::make_provider(g.model_b);
    TemperatureScaledProvider scaled(*model_a, t_star);
    const auto prompts = g.prompts.materialize();
    Generated gen[3] = {generate(*model_a, prompts, g.steps, nullptr),
                        generate(scaled, prompts, g.steps, nullptr),
                        generate(*model_b, prompts, g.steps, model_a.get())};
    Table gen_table{"generation", {"column", "metric", "mean", "standard_error", "n"}, {}};
    Table gen_tests{"generation_welch",
                    {"comparison", "metric", "statistic", "dof", "p_value", "degenerate"},
                    {}};
    json gcols = json::object();
    json gwelch = {{"a_t1", json::object()}, {"b", json::object()}};
    const char* names[] = {"ttr", "bigram_repetition", "trigram_repetition", "entropy"};
    auto field = [](Generated& x, int k) -> std::vector<double>& {
      return k == 0 ? x.ttr : k == 1 ? x.bigram : k == 2 ? x.trigram : x.entropy;
    };
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 4; ++k) {
        gcols[kColumns[c]][names[k]] = summary_or_null(field(gen[c], k));
        add_summary_row(gen_table, kColumns[c], names[k], field(gen[c], k));
      }
    }
    for (int c : {0, 2}) {
      for (int k = 0; k < 4; ++k) {
        gwelch[kColumns[c]][names[k]] = welch_or_null(field(gen[c], k), field(gen[1], k));
        add_test_row(gen_tests, std::string(kColumns[c]) + "_vs_a_tstar", names[k],
                     field(gen[c], k), field(gen[1], k));
      }
    }
    report.results["generation"] = {{"prompts", prompts.size()},
                                    {"steps", g.steps},
                                    {"columns", gcols},
                                    {"welch_vs_a_tstar", gwelch},
                                    {"provenance_b_under_a", to_json(gen[2].provenance)}};
    report.conventions["generation"] =
        "greedy decoding; one sample per prompt; repetition metrics over generated tokens only";
    report.tables.push_back(std::move(gen_table));
    report.tables.push_back(std::move(gen_tests));
  }

  report.tables.insert(report.tables.begin(), {std::move(table1), std::move(tests), std::move(per_context)});
  return report;
}

Report run_rank(const config::RankConfig& cfg) {
  Report report = start(cfg);
  const auto traces = load_all(cfg.traces);
  report.inputs["traces"] = describe_traces(cfg.traces, traces);
  const bool single = traces.size() == 1;

  Table summary{"summary", {"metric", "mean", "standard_error", "n"}, {}};
  json metrics = json::object();
  auto add = [&](const std::string& name, const MetricSummary& s) {
    metrics[name] = to_json(s);
    summary.rows.push_back({name, s.mean, s.standard_error, s.n});
  };
  add("top1_agreement", single ? top1_agreement(traces[0]) : top1_agreement(traces));
  add("spearman_rho", single ? spearman_rho_per_step(traces[0]) : spearman_rho_per_step(traces));
  const bool errors_defined =
      std::all_of(traces.begin(), traces.end(), [](const auto& t) { return t.positions() >= 2; });
  if (errors_defined) {
    add("top1_error_a", single ? top1_error_rate(traces[0], Model::a) : top1_error_rate(traces, Model::a));
    add("top1_error_b", single ? top1_error_rate(traces[0], Model::b) : top1_error_rate(traces, Model::b));
  }

  ProvenanceHistogram provenance;
  for (const auto& tr : traces) {
    const auto h = provenance_histogram(tr);
    provenance.rank1 += h.rank1;
    provenance.rank2_10 += h.rank2_10;
    provenance.rank11_199 += h.rank11_199;
    provenance.rank200_plus += h.rank200_plus;
  }
  Table prov_table{"provenance", {"source", "bin", "count", "fraction"}, {}};
  auto add_prov = [&](const std::string& source, const ProvenanceHistogram& h) {
    const auto f = h.fractions();
    const std::uint64_t counts[] = {h.rank1, h.rank2_10, h.rank11_199, h.rank200_plus};
    const char* bins[] = {"rank1", "rank2_10", "rank11_199", "rank200_plus"};
    for (int i = 0; i < 4; ++i) prov_table.rows.push_back({source, bins[i], counts[i], f[i]});
  };
  auto promotion = [](const ProvenanceHistogram& h) -> json {
    if (h.total() == 0) return nullptr;
    const std::uint64_t promoted = h.total() - h.rank1;
    const auto ci = wilson_interval(promoted, h.total());
    return {{"promoted", promoted},
            {"total", h.total()},
            {"rate", static_cast<double>(promoted) / static_cast<double>(h.total())},
            {"wilson_95", {ci.lower, ci.upper}}};
  };
  add_prov("teacher_forced", provenance);

  const auto shift = rank_shift_series(traces);
  Table shift_table{"rank_shift",
                    {"snapshot", "rank1", "rank2_10", "rank11_199", "rank200_plus"},
                    {}};
  json shift_json = json::array();
  for (std::size_t i = 0; i < shift.snapshots.size(); ++i) {
    const auto f = shift.snapshots[i].fractions();
    shift_table.rows.push_back({i, f[0], f[1], f[2], f[3]});
    shift_json.push_back(to_json(shift.snapshots[i]));
  }

  report.results = {{"metrics", metrics},
                    {"provenance", to_json(provenance)},
                    {"promotion", promotion(provenance)},
                    {"rank_shift", shift_json},
                    {"free_running", nullptr}};
  report.conventions["aggregation"] =
      single ? "one trace: mean and standard error over positions"
             : "several traces: per-sequence means, then mean and standard error across sequences";
  report.conventions["provenance"] =
      "rank under model A of the token model B ranks first; bins 1, 2-10, 11-199, >=200";
  report.conventions["rank_shift"] = "one snapshot per input trace, in config order";
  report.conventions["promotion"] = "share of B's top-1 tokens not ranked first by A; Wilson 95% interval";

  report.tables.push_back(std::move(summary));

  if (cfg.include_series) {
    Table series{"series",
                 {"trace", "position", "top1_agreement", "spearman_rho", "top1_error_a", "top1_error_b"},
                 {}};
    json series_json = json::array();
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto agree = top1_agreement_series(traces[i]);
      const auto rho = spearman_rho_series(traces[i]);
      std::vector<double> err_a, err_b;
      if (traces[i].positions() >= 2) {
        err_a = top1_error_series(traces[i], Model::a);
        err_b = top1_error_series(traces[i], Model::b);
      }
      for (std::size_t t = 0; t < agree.size(); ++t) {
        series.rows.push_back({i, t, agree[t], rho[t], t < err_a.size() ? json(err_a[t]) : json(nullptr),
                               t < err_b.size() ? json(err_b[t]) : json(nullptr)});
      }
      series_json.push_back({{"top1_agreement", agree},
                             {"spearman_rho", rho},
                             {"top1_error_a", err_a},
                             {"top1_error_b", err_b}});
    }
    report.results["series"] = series_json;
    report.tables.push_back(std::move(series));
  }

  if (cfg.free_running) {
    const auto& g = *cfg.free_running;
    report.inputs["model_a"] = describe_provider(g.model_a);
    report.inputs["model_b"] = describe_provider(g.model_b);
    auto model_a = config::make_provider(g.model_a);
    auto model_b = config::make_provider(g.model_b);
    const auto prompts = g.prompts.materialize();
    const auto gen = generate(*model_b, prompts, g.steps, model_a.get());
    add_prov("free_running", gen.provenance);
    report.results["free_running"] = {{"prompts", prompts.size()},
                                      {"steps", g.steps},
                                      {"provenance", to_json(gen.provenance)},
                                      {"promotion", promotion(gen.provenance)}};
  }
  report.tables.push_back(std::move(prov_table));
  report.tables.push_back(std::move(shift_table));
  return report;
}

Report run_diversity(const config::DiversityConfig& cfg) {
  Report report = start(cfg);
  std::vector<std::vector<TokenId>> sequences = cfg.sequences;
  std::vector<std::string> sources(sequences.size(), "inline");
  if (!cfg.traces.empty()) {
    const auto traces = load_all(cfg.traces);
    report.inputs["traces"] = describe_traces(cfg.traces, traces);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      sequences.push_back(traces[i].tokens);
      sources.push_back("trace:" + std::to_string(i));
    }
  }
  if (cfg.generation) {
    report.inputs["model"] = describe_provider(cfg.generation->model);
    auto model = config::make_provider(cfg.generation->model);
    const auto prompts = cfg.generation->prompts.materialize();
    auto gen = generate(*model, prompts, cfg.generation->steps, nullptr);
    for (auto& s : gen.tokens) {
      sequences.push_back(std::move(s));
      sources.push_back("generated");
    }
  }
  const auto d = diversity_report(sequences);
  Table per_seq{"sequences", {"index", "source", "length", "ttr", "bigram_repetition", "trigram_repetition"}, {}};
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    per_seq.rows.push_back({i, sources[i], sequences[i].size(), ttr(sequences[i]),
                            ngram_repetition(sequences[i], 2), ngram_repetition(sequences[i], 3)});
  }
  Table summary{"summary", {"metric", "mean", "standard_error", "n"}, {}};
  summary.rows.push_back({"ttr", d.ttr.mean, d.ttr.standard_error, d.ttr.n});
  summary.rows.push_back({"bigram_repetition", d.bigram_rep.mean, d.bigram_rep.standard_error, d.bigram_rep.n});
  summary.rows.push_back({"trigram_repetition", d.trigram_rep.mean, d.trigram_rep.standard_error, d.trigram_rep.n});
  report.results = {{"ttr", to_json(d.ttr)},
                    {"bigram_repetition", to_json(d.bigram_rep)},
                    {"trigram_repetition", to_json(d.trigram_rep)}};
  report.conventions["repetition"] = "1 - unique n-grams / total n-grams, per sequence";
  report.conventions["order"] = "inline sequences, then traces, then generations";
  report.tables.push_back(std::move(summary));
  report.tables.push_back(std::move(per_seq));
  return report;
}

Report run_geometry(const config::GeometryConfig& cfg) {
  Report report = start(cfg);
  const auto trace = load_trace(cfg.trace);
  report.inputs["trace"] = describe_trace(cfg.trace, trace);
  const auto g = delta_dim_profile(trace, cfg.sampling);

  Table layers{"layers",
               {"level", "cosine_mean", "cosine_se", "l2_mean", "l2_se", "pr_a", "pr_b", "delta_dim",
                "cumulative_delta_dim"},
               {}};
  json layer_json = json::array();
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& l = g.layers[i];
    layers.rows.push_back({l.level, l.cosine.mean, l.cosine.standard_error, l.l2.mean,
                           l.l2.standard_error, l.pr_a, l.pr_b, l.delta_dim,
                           g.cumulative_delta_dim[i]});
    layer_json.push_back({{"level", l.level},
                          {"cosine", to_json(l.cosine)},
                          {"l2", to_json(l.l2)},
                          {"pr_a", l.pr_a},
                          {"pr_b", l.pr_b},
                          {"delta_dim", l.delta_dim}});
  }
  const double terminal = g.layers.back().delta_dim;
  json mid_median = nullptr;
  if (g.layers.size() >= 3) {
    std::vector<double> mid;
    for (std::size_t i = 1; i + 1 < g.layers.size(); ++i) mid.push_back(std::abs(g.layers[i].delta_dim));
    std::sort(mid.begin(), mid.end());
    const std::size_t m = mid.size();
    mid_median = m % 2 == 1 ? mid[m / 2] : 0.5 * (mid[m / 2 - 1] + mid[m / 2]);
  }
  report.results = {{"layers", layer_json},
                    {"cumulative_delta_dim", g.cumulative_delta_dim},
                    {"terminal_delta_dim", terminal},
                    {"median_abs_mid_delta_dim", mid_median},
                    {"positions_used", g.positions.size()},
                    {"positions", g.positions}};
  report.conventions["levels"] = "0 is the embedding output, the last level is the final block";
  report.conventions["delta_dim"] = "participation ratio of B minus participation ratio of A";
  report.conventions["covariance"] =
      "mean-centered, divided by N-1; eigenvalues below 1e-10 of the largest are zeroed";
  report.tables.push_back(std::move(layers));
  return report;
}

Report run_ablation(const config::AblationConfig& cfg) {
  Report report = start(cfg);
  const auto trace = load_trace(cfg.trace);
  report.inputs["trace"] = describe_trace(cfg.trace, trace);
  report.inputs["provider"] = describe_provider(cfg.provider);

  const auto improvement = mean_rank_improvement(trace);
  const auto selected = extract_rank_improved_tokens(trace, cfg.k, cfg.excluded);
  const InjectionSpec base = build_injection_spec(trace, cfg.k, cfg.excluded, 0.0);
  auto provider = config::make_provider(cfg.provider);
  if (provider->vocab_size() != 0 && provider->vocab_size() != trace.vocab()) {
    throw Error(Errc::vocab_mismatch, "provider and trace disagree on vocabulary size");
  }
  const auto prompts = cfg.prompts.materialize();
  const auto rows = alpha_sweep(*provider, prompts, base, cfg.alphas, cfg.steps);

  Table tokens{"selected_tokens", {"token", "delta", "mean_rank_improvement"}, {}};
  json token_json = json::array();
  for (TokenId t : selected) {
    tokens.rows.push_back({t, base.delta[t], improvement[t]});
    token_json.push_back({{"token", t}, {"delta", base.delta[t]}, {"mean_rank_improvement", improvement[t]}});
  }
  Table sweep{"alpha_sweep",
              {"alpha", "ttr_mean", "ttr_se", "bigram_mean", "bigram_se", "trigram_mean", "trigram_se",
               "prov_rank1", "prov_rank2_10", "prov_rank11_199", "prov_rank200_plus", "n"},
              {}};
  json sweep_json = json::array();
  std::vector<double> alphas, ttrs;
  for (const auto& r : rows) {
    const auto f = r.provenance.fractions();
    sweep.rows.push_back({r.alpha, r.diversity.ttr.mean, r.diversity.ttr.standard_error,
                          r.diversity.bigram_rep.mean, r.diversity.bigram_rep.standard_error,
                          r.diversity.trigram_rep.mean, r.diversity.trigram_rep.standard_error, f[0],
                          f[1], f[2], f[3], r.diversity.ttr.n});
    sweep_json.push_back({{"alpha", r.alpha},
                          {"ttr", to_json(r.diversity.ttr)},
                          {"bigram_repetition", to_json(r.diversity.bigram_rep)},
                          {"trigram_repetition", to_json(r.diversity.trigram_rep)},
                          {"provenance", to_json(r.provenance)}});
    alphas.push_back(r.alpha);
    ttrs.push_back(r.diversity.ttr.mean);
  }
  report.results = {{"selected_tokens", token_json},
                    {"alpha_sweep", sweep_json},
                    {"spearman_ttr_vs_alpha", alphas.size() >= 3 ? to_json(spearman_test(alphas, ttrs))
                                                                 : json(nullptr)}};
  report.conventions["injection"] = "z + alpha * delta; delta is non-zero only on the selected tokens";
  report.conventions["delta"] = "mean over positions of logit_B - logit_A for each selected token";
  report.conventions["selection"] =
      "top-K by mean rank improvement (rank_A - rank_B), ties by ascending id, excluded ids skipped";
  report.conventions["spearman_ttr_vs_alpha"] = "rank correlation of per-alpha mean TTR with alpha";
  report.tables.push_back(std::move(sweep));
  report.tables.push_back(std::move(tokens));
  return report;
}

Report run_validate(const config::ValidateConfig& cfg) {
  Report report = start(cfg);
  json traces = json::array();
  for (const auto& p : cfg.traces) traces.push_back(describe_trace(p, load_trace(p)));
  report.inputs["traces"] = traces;
  report.results = {{"valid", true}, {"count", cfg.traces.size()}};
  return report;
}

Report run_gen_synth(const config::GenSynthConfig& cfg, const std::string& out_path) {
  Report report = start(cfg);
  SyntheticTraceOptions options;
  options.vocab_size = cfg.vocab_size;
  options.with_hidden = cfg.hidden.has_value();
  if (cfg.hidden) options.hidden = *cfg.hidden;
  const auto tokens = cfg.materialize_tokens();
  const auto trace = gen_synthetic_trace(cfg.model_a, cfg.model_b, tokens, options);
  save_trace(trace, out_path);
  report.results = {{"trace", describe_trace(out_path, trace)}};
  return report;
}

Report run_experiment(const config::ExperimentConfig& cfg) {
  return std::visit(
      [](const auto& c) -> Report {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, config::EntropyMatchConfig>) {
          return run_entropy_match(c);
        } else if constexpr (std::is_same_v<T, config::RankConfig>) {
          return run_rank(c);
        } else if constexpr (std::is_same_v<T, config::DiversityConfig>) {
          return run_diversity(c);
        } else if constexpr (std::is_same_v<T, config::GeometryConfig>) {
          return run_geometry(c);
        } else if constexpr (std::is_same_v<T, config::AblationConfig>) {
          return run_ablation(c);
        } else if constexpr (std::is_same_v<T, config::ValidateConfig>) {
          return run_validate(c);
        } else {
          throw Error(Errc::invalid_argument, "gen-synth needs an output path");
        }
      },
      cfg);
}

}  // namespace hyperscope
