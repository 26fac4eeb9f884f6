#include "divsel/harness.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include "divsel/error.h"
#include "divsel/metrics.h"
#include "divsel/rng.h"
#include "divsel/text.h"
#include "json.hpp"

namespace divsel {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key \"" + it.key() + "\"");
  }
}

template <class T>
void get_opt(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for \"") + key + "\"");
  }
}

const json& object_at(const json& j, const char* key) {
  if (!j.at(key).is_object()) throw ConfigError(std::string("config: \"") + key + "\" must be an object");
  return j.at(key);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string compression_name(CompressionPolicy p) {
  return p == CompressionPolicy::kNone ? "none" : "summary_then_exemplars";
}

json pipeline_json(const PipelineConfig& p) {
  return {{"method", to_string(p.method)},
          {"selection",
           {{"alpha", p.selection.alpha},
            {"k", p.selection.k},
            {"tau", p.selection.tau},
            {"label_cap", p.selection.label_cap},
            {"mu", p.selection.mu}}},
          {"retrieval", {{"lambda_vec", p.retrieval.lambda_vec}, {"pool_size", p.retrieval.pool_size}}},
          {"budget",
           {{"max_prompt_tokens", p.budget.max_prompt_tokens},
            {"summary_token_cap", p.budget.summary_token_cap},
            {"compression", compression_name(p.budget.compression)},
            {"fill_summary", p.budget.fill_summary}}},
          {"mmr_lambda", p.mmr_lambda},
          {"shortlist", p.shortlist},
          {"tau_c", p.tau_c}};
}

json latency_json(const LatencyReport& l) {
  return {{"t_ann", l.t_ann}, {"t_div", l.t_div}, {"t_prompt", l.t_prompt}, {"t_llm", l.t_llm},
          {"t_total", l.total()}};
}

double modeled_total(const CostConstants& costs, const PipelineResult& r, const PipelineConfig& cfg) {
  ModelInputs in;
  in.memory_size = r.latency.counters.memory_size;
  in.query_terms = r.latency.counters.query_terms;
  in.pool_size = r.pool.size();
  in.k = cfg.selection.k;
  in.turns = r.latency.counters.turns;
  in.prompt_tokens = r.prompt.token_count;
  in.generated_tokens = r.latency.counters.generated_tokens;
  return model_latency(costs, in).total();
}

InstanceRow make_row(const EvalInstance& inst, const PipelineResult& r, bool audit_bridge) {
  InstanceRow row;
  row.id = inst.id;
  row.gold = inst.gold;
  row.prediction = r.prediction;
  row.correct = normalize_label(r.prediction) == normalize_label(inst.gold);
  row.covered = r.gold_covered;
  row.prompt_tokens = r.prompt.token_count;
  row.exemplars = r.prompt.exemplars.size();
  row.candidates = r.verdict.candidate_set.size();
  row.g = r.selection.g();
  row.dtext = r.selection.dtext();
  row.r = r.selection.r();
  row.stop = to_string(r.selection.stop);
  row.violations = r.violations;
  if (audit_bridge && row.correct != row.covered) row.violations.push_back("coverage bridge broken");
  row.latency = r.latency;
  return row;
}

void finish_summary(RunSummary& s) {
  std::vector<std::string> preds, golds;
  double covered = 0.0, rsum = 0.0;
  bool states = !s.rows.empty();
  for (const auto& row : s.rows) {
    preds.push_back(row.prediction);
    golds.push_back(row.gold);
    covered += row.covered;
    rsum += row.r;
    s.violations += row.violations.size();
    states = states && row.gold.find('=') != std::string::npos;
  }
  if (s.rows.empty()) return;
  const double n = static_cast<double>(s.rows.size());
  s.accuracy = jga(preds, golds);
  s.coverage = covered / n;
  s.mean_r = rsum / n;
  if (states) {
    std::vector<SlotMap> p, g;
    for (const auto& row : s.rows) {
      g.push_back(parse_state(row.gold));
      try {
        p.push_back(parse_state(row.prediction));
      } catch (const ConfigError&) {
        p.emplace_back();
      }
    }
    try {
      s.aga = aga(p, g);
    } catch (const ConfigError&) {
      s.aga.reset();
    }
  }
}

std::size_t max_pool_size(const std::vector<std::size_t>& sizes) {
  return *std::max_element(sizes.begin(), sizes.end());
}

}  // namespace

void ExperimentConfig::validate() const {
  pipeline.validate();
  if (seeds.empty()) throw ConfigError("config: runs need at least one seed");
  if (fairness.token_targets.empty()) throw ConfigError("config: token_targets is empty");
  for (std::size_t i = 0; i < fairness.token_targets.size(); ++i) {
    if (fairness.token_targets[i] == 0) throw ConfigError("config: token targets must be positive");
    if (i && fairness.token_targets[i] <= fairness.token_targets[i - 1])
      throw ConfigError("config: token targets must be strictly increasing");
  }
  if (verifier.kind == "mock") {
    if (!(verifier.margin > 0.0)) throw ConfigError("config: mock verifier margin must be > 0");
  } else if (verifier.kind == "endpoint") {
    if (verifier.url.empty()) throw ConfigError("config: endpoint verifier needs a url");
    if (verifier.timeout_ms <= 0) throw ConfigError("config: verifier timeout must be positive");
  } else {
    throw ConfigError("config: verifier kind must be mock or endpoint");
  }
}

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");
  reject_unknown(j,
                 {"method", "selection", "retrieval", "budget", "mmr_lambda", "shortlist", "tau_c",
                  "fairness", "seeds", "verifier"},
                 "config");
  ExperimentConfig c;
  PipelineConfig& p = c.pipeline;
  if (j.contains("method")) {
    std::string m;
    get_opt(j, "method", m);
    p.method = parse_method(m);
  }
  if (j.contains("selection")) {
    const json& s = object_at(j, "selection");
    reject_unknown(s, {"alpha", "k", "tau", "label_cap", "mu"}, "selection");
    get_opt(s, "alpha", p.selection.alpha);
    get_opt(s, "k", p.selection.k);
    get_opt(s, "tau", p.selection.tau);
    get_opt(s, "label_cap", p.selection.label_cap);
    get_opt(s, "mu", p.selection.mu);
  }
  if (j.contains("retrieval")) {
    const json& r = object_at(j, "retrieval");
    reject_unknown(r, {"lambda_vec", "pool_size"}, "retrieval");
    get_opt(r, "lambda_vec", p.retrieval.lambda_vec);
    get_opt(r, "pool_size", p.retrieval.pool_size);
  }
  if (j.contains("budget")) {
    const json& b = object_at(j, "budget");
    reject_unknown(b, {"max_prompt_tokens", "summary_token_cap", "compression", "fill_summary"},
                   "budget");
    get_opt(b, "max_prompt_tokens", p.budget.max_prompt_tokens);
    get_opt(b, "summary_token_cap", p.budget.summary_token_cap);
    get_opt(b, "fill_summary", p.budget.fill_summary);
    if (b.contains("compression")) {
      std::string name;
      get_opt(b, "compression", name);
      if (name == "none")
        p.budget.compression = CompressionPolicy::kNone;
      else if (name == "summary_then_exemplars")
        p.budget.compression = CompressionPolicy::kSummaryThenExemplars;
      else
        throw ConfigError("budget: unknown compression policy \"" + name + "\"");
    }
  }
  get_opt(j, "mmr_lambda", p.mmr_lambda);
  get_opt(j, "shortlist", p.shortlist);
  get_opt(j, "tau_c", p.tau_c);
  if (j.contains("fairness")) {
    const json& f = object_at(j, "fairness");
    reject_unknown(f, {"shuffle_seed", "prefix_replace", "token_targets"}, "fairness");
    if (f.contains("shuffle_seed") && !f["shuffle_seed"].is_null()) {
      std::uint64_t s = 0;
      get_opt(f, "shuffle_seed", s);
      c.fairness.shuffle_seed = s;
    }
    get_opt(f, "prefix_replace", c.fairness.prefix_replace);
    get_opt(f, "token_targets", c.fairness.token_targets);
  }
  get_opt(j, "seeds", c.seeds);
  if (j.contains("verifier")) {
    const json& v = object_at(j, "verifier");
    reject_unknown(v, {"kind", "margin", "url", "token_env", "timeout_ms"}, "verifier");
    get_opt(v, "kind", c.verifier.kind);
    get_opt(v, "margin", c.verifier.margin);
    get_opt(v, "url", c.verifier.url);
    get_opt(v, "token_env", c.verifier.token_env);
    get_opt(v, "timeout_ms", c.verifier.timeout_ms);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::string ExperimentConfig::to_json() const {
  json j = pipeline_json(pipeline);
  j["fairness"] = {{"shuffle_seed", fairness.shuffle_seed ? json(*fairness.shuffle_seed) : json()},
                   {"prefix_replace", fairness.prefix_replace},
                   {"token_targets", fairness.token_targets}};
  j["seeds"] = seeds;
  j["verifier"] = {{"kind", verifier.kind},
                   {"margin", verifier.margin},
                   {"url", verifier.url},
                   {"token_env", verifier.token_env},
                   {"timeout_ms", verifier.timeout_ms}};
  return j.dump();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(to_json()); }

VerifierFactory make_verifier_factory(const VerifierSpec& spec) {
  if (spec.kind == "mock") {
    const double margin = spec.margin;
    return [margin](const EvalInstance& inst, std::uint64_t seed) -> std::unique_ptr<Verifier> {
      return std::make_unique<MockVerifier>(inst.gold, derive_seed(seed, fnv1a64(inst.id)), margin);
    };
  }
  if (spec.kind == "endpoint") {
    return [spec](const EvalInstance&, std::uint64_t) -> std::unique_ptr<Verifier> {
      return std::make_unique<HttpVerifier>(spec.url, spec.token_env,
                                            std::chrono::milliseconds(spec.timeout_ms));
    };
  }
  throw ConfigError("unknown verifier kind \"" + spec.kind + "\"");
}

PoolCache build_pool_cache(std::span<const EvalInstance> instances, const RetrievalConfig& cfg,
                           const Memory& memory, const EncoderWeights& weights) {
  PoolCache cache;
  cache.entries.reserve(instances.size());
  for (const auto& inst : instances) cache.entries.push_back(retrieve_for(inst, cfg, memory, weights));
  return cache;
}

RunSummary evaluate(std::span<const EvalInstance> instances, const Memory& memory,
                    const PipelineConfig& cfg, const VerifierFactory& verifiers,
                    const EncoderWeights& weights, bool audit_bridge, const PoolCache* cache) {
  if (instances.empty()) throw ConfigError("evaluation corpus is empty");
  if (cache && cache->entries.size() != instances.size())
    throw ConfigError("pool cache does not match the corpus");
  RunSummary s;
  s.name = to_string(cfg.method);
  s.seed = cfg.seed;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const EvalInstance& inst = instances[i];
    auto verifier = verifiers(inst, cfg.seed);
    PipelineResult r = cache ? run_from_pool(inst, cfg, memory, *verifier, cache->entries[i].query,
                                             cache->entries[i].pool)
                             : run_pipeline(inst, cfg, memory, *verifier, weights);
    s.rows.push_back(make_row(inst, r, audit_bridge));
  }
  finish_summary(s);
  return s;
}

bool FairnessReport::ok() const {
  return std::all_of(targets.begin(), targets.end(),
                     [](const FairnessTarget& t) { return t.within_tolerance(); });
}

FairnessReport fairness_suite(std::span<const EvalInstance> instances, const Memory& memory,
                              const ExperimentConfig& cfg, const VerifierFactory& verifiers,
                              const EncoderWeights& weights) {
  if (instances.empty()) throw ConfigError("fairness suite needs a non-empty corpus");
  cfg.validate();
  const bool mock = cfg.verifier.kind == "mock";
  const std::uint64_t seed = cfg.seeds.front();
  const PoolCache cache = build_pool_cache(instances, cfg.pipeline.retrieval, memory, weights);

  struct ArmSpec {
    const char* name;
    Method method;
    bool shuffle;
    bool prefix;
  };
  const ArmSpec arms[] = {{"ldra", Method::kLdra, false, false},
                          {"topk", Method::kTopk, false, false},
                          {"topk_rand_add", Method::kTopkRandAdd, false, false},
                          {"ldra+shuffle", Method::kLdra, true, false},
                          {"ldra+prefix_replace", Method::kLdra, false, true}};

  FairnessReport report;
  for (std::size_t target : cfg.fairness.token_targets) {
    FairnessTarget ft;
    ft.target = target;
    std::vector<std::vector<std::size_t>> tokens;
    try {
      for (const auto& arm : arms) {
        PipelineConfig p = cfg.pipeline;
        p.method = arm.method;
        p.seed = seed;
        p.shuffle_seed.reset();
        if (arm.shuffle) p.shuffle_seed = cfg.fairness.shuffle_seed.value_or(seed);
        p.prefix_replace = arm.prefix;
        p.budget.max_prompt_tokens = target;
        p.budget.summary_token_cap = std::min(p.budget.summary_token_cap, target);
        p.budget.fill_summary = true;
        const RunSummary run = evaluate(instances, memory, p, verifiers, weights, mock, &cache);
        FairnessArm a;
        a.name = arm.name;
        a.accuracy = run.accuracy;
        a.coverage = run.coverage;
        a.violations = run.violations;
        std::vector<std::size_t> t;
        double sum = 0.0;
        for (const auto& row : run.rows) {
          t.push_back(row.prompt_tokens);
          sum += static_cast<double>(row.prompt_tokens);
        }
        a.mean_tokens = sum / static_cast<double>(t.size());
        a.min_tokens = *std::min_element(t.begin(), t.end());
        a.max_tokens = *std::max_element(t.begin(), t.end());
        tokens.push_back(std::move(t));
        ft.arms.push_back(std::move(a));
      }
    } catch (const StageError& e) {
      if (e.stage() != "compose") throw;
      ft.skipped = true;
      ft.reason = e.what();
      ft.arms.clear();
      report.targets.push_back(std::move(ft));
      continue;
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
      std::size_t lo = tokens[0][i], hi = tokens[0][i];
      for (const auto& t : tokens) {
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
      }
      if (hi > 0)
        ft.max_deviation = std::max(ft.max_deviation, static_cast<double>(hi - lo) / static_cast<double>(hi));
    }
    report.targets.push_back(std::move(ft));
  }
  return report;
}

std::vector<SweepRow> sweep(std::span<const EvalInstance> instances, const Memory& memory,
                            const ExperimentConfig& cfg, const SweepGrid& grid,
                            const VerifierFactory& verifiers, const EncoderWeights& weights) {
  if (grid.ks.empty() || grid.alphas.empty() || grid.methods.empty())
    throw ConfigError("sweep grid must be non-empty in every dimension");
  cfg.validate();
  const bool mock = cfg.verifier.kind == "mock";
  const PoolCache cache = build_pool_cache(instances, cfg.pipeline.retrieval, memory, weights);
  std::vector<SweepRow> rows;
  for (Method m : grid.methods)
    for (std::size_t k : grid.ks)
      for (double alpha : grid.alphas) {
        SweepRow row;
        row.method = m;
        row.k = k;
        row.alpha = alpha;
        for (std::uint64_t seed : cfg.seeds) {
          PipelineConfig p = cfg.pipeline;
          p.method = m;
          p.selection.k = k;
          p.selection.alpha = alpha;
          p.seed = seed;
          const RunSummary run = evaluate(instances, memory, p, verifiers, weights, mock, &cache);
          row.seeds.push_back(seed);
          row.accuracies.push_back(run.accuracy);
          row.mean_rs.push_back(run.mean_r);
          row.violations += run.violations;
        }
        row.mean_accuracy = mean(row.accuracies);
        row.std_accuracy = sample_std(row.accuracies);
        row.mean_r = mean(row.mean_rs);
        rows.push_back(std::move(row));
      }
  return rows;
}

std::size_t GridSpec::size() const {
  return alphas.size() * taus.size() * caps.size() * pool_sizes.size() * ks.size() *
         lambda_vecs.size() * mus.size();
}

void GridSpec::validate() const {
  if (size() == 0) throw ConfigError("grid search: every grid dimension must be non-empty");
}

GridResult grid_search(std::span<const EvalInstance> instances, const Memory& memory,
                       const ExperimentConfig& cfg, const GridSpec& grid,
                       const CostConstants& costs, double budget, double lambda_penalty,
                       const VerifierFactory& verifiers, const EncoderWeights& weights) {
  grid.validate();
  cfg.validate();
  costs.validate();
  if (instances.empty()) throw ConfigError("grid search needs a non-empty dev set");
  if (!(budget > 0.0)) throw ConfigError("budget B must be > 0");
  if (!(lambda_penalty > 0.0)) throw ConfigError("penalty weight must be > 0");
  const std::uint64_t seed = cfg.seeds.front();
  const std::size_t l_max = max_pool_size(grid.pool_sizes);

  GridResult out;
  for (double lv : grid.lambda_vecs) {
    RetrievalConfig rc = cfg.pipeline.retrieval;
    rc.lambda_vec = lv;
    rc.pool_size = l_max;
    const PoolCache cache = build_pool_cache(instances, rc, memory, weights);
    for (std::size_t L : grid.pool_sizes)
      for (std::size_t k : grid.ks)
        for (double alpha : grid.alphas)
          for (double tau : grid.taus)
            for (std::size_t cap : grid.caps)
              for (double mu : grid.mus) {
                PipelineConfig p = cfg.pipeline;
                p.retrieval.lambda_vec = lv;
                p.retrieval.pool_size = L;
                p.selection.k = k;
                p.selection.alpha = alpha;
                p.selection.tau = tau;
                p.selection.label_cap = cap;
                p.selection.mu = mu;
                p.seed = seed;
                GridPoint pt;
                pt.config = p;
                std::size_t hits = 0;
                double t_sum = 0.0;
                for (std::size_t i = 0; i < instances.size(); ++i) {
                  auto verifier = verifiers(instances[i], seed);
                  const PipelineResult r = run_from_pool(instances[i], p, memory, *verifier,
                                                         cache.entries[i].query, cache.entries[i].pool);
                  hits += normalize_label(r.prediction) == normalize_label(instances[i].gold);
                  pt.violations += r.violations.size();
                  t_sum += modeled_total(costs, r, p);
                }
                const double n = static_cast<double>(instances.size());
                pt.accuracy = static_cast<double>(hits) / n;
                pt.mean_latency = t_sum / n;
                pt.objective = scalarized_objective(pt.accuracy, pt.mean_latency, budget, lambda_penalty);
                out.evaluated.push_back(std::move(pt));
              }
  }
  for (std::size_t i = 1; i < out.evaluated.size(); ++i)
    if (out.evaluated[i].objective > out.evaluated[out.best].objective) out.best = i;
  return out;
}

std::string header_line(const ExperimentConfig& cfg, std::string_view command) {
  json j = {{"type", "header"},
            {"command", command},
            {"config_hash", hex64(cfg.hash())},
            {"aga_convention", kAgaConvention},
            {"config", json::parse(cfg.to_json())}};
  return j.dump();
}

std::vector<std::string> run_report(std::span<const RunSummary> runs, bool timings) {
  std::vector<std::string> lines;
  std::vector<double> accs, covs;
  for (const auto& run : runs) {
    std::vector<double> tokens, sims, totals;
    for (const auto& row : run.rows) {
      json j = {{"type", "instance"},   {"run", run.name},
                {"seed", run.seed},     {"id", row.id},
                {"gold", row.gold},     {"prediction", row.prediction},
                {"correct", row.correct}, {"covered", row.covered},
                {"prompt_tokens", row.prompt_tokens}, {"exemplars", row.exemplars},
                {"candidates", row.candidates}, {"g", row.g},
                {"d", row.dtext},       {"r", row.r},
                {"stop", row.stop},     {"similarity_ops", row.latency.counters.similarity_ops},
                {"verifier_calls", row.latency.counters.verifier_calls},
                {"violations", row.violations}};
      if (timings) {
        const auto& c = row.latency.counters;
        j["latency"] = latency_json(row.latency);
        j["counters"] = {{"memory_size", c.memory_size},     {"query_terms", c.query_terms},
                         {"pool_size", c.pool_size},         {"selected", c.selected},
                         {"turns", c.turns},                 {"prompt_tokens", c.prompt_tokens},
                         {"generated_tokens", c.generated_tokens}};
      }
      lines.push_back(j.dump());
      tokens.push_back(static_cast<double>(row.prompt_tokens));
      sims.push_back(static_cast<double>(row.latency.counters.similarity_ops));
      totals.push_back(row.latency.total());
    }
    json s = {{"type", "run"},
              {"run", run.name},
              {"seed", run.seed},
              {"instances", run.rows.size()},
              {"accuracy", run.accuracy},
              {"jga", run.accuracy},
              {"coverage", run.coverage},
              {"aga", run.aga ? json(*run.aga) : json()},
              {"mean_r", run.mean_r},
              {"violations", run.violations},
              {"prompt_tokens_p50", percentile(tokens, 50)},
              {"prompt_tokens_p90", percentile(tokens, 90)},
              {"similarity_ops_p50", percentile(sims, 50)},
              {"similarity_ops_p90", percentile(sims, 90)}};
    if (timings) {
      s["t_total_p50"] = percentile(totals, 50);
      s["t_total_p90"] = percentile(totals, 90);
    }
    lines.push_back(s.dump());
    accs.push_back(run.accuracy);
    covs.push_back(run.coverage);
  }
  if (!runs.empty()) {
    json agg = {{"type", "aggregate"},
                {"runs", runs.size()},
                {"accuracy_mean", mean(accs)},
                {"accuracy_std", sample_std(accs)},
                {"coverage_mean", mean(covs)},
                {"coverage_std", sample_std(covs)}};
    lines.push_back(agg.dump());
  }
  return lines;
}

std::vector<std::string> fairness_report(const FairnessReport& report) {
  std::vector<std::string> lines;
  for (const auto& t : report.targets) {
    for (const auto& a : t.arms)
      lines.push_back(json{{"type", "fairness_arm"},
                           {"target", t.target},
                           {"arm", a.name},
                           {"accuracy", a.accuracy},
                           {"coverage", a.coverage},
                           {"mean_tokens", a.mean_tokens},
                           {"min_tokens", a.min_tokens},
                           {"max_tokens", a.max_tokens},
                           {"violations", a.violations}}
                          .dump());
    lines.push_back(json{{"type", "fairness_target"},
                         {"target", t.target},
                         {"skipped", t.skipped},
                         {"reason", t.reason},
                         {"max_deviation", t.max_deviation},
                         {"tolerance", kFairnessTolerance},
                         {"within_tolerance", t.within_tolerance()}}
                        .dump());
  }
  return lines;
}

std::vector<std::string> sweep_report(std::span<const SweepRow> rows) {
  std::vector<std::string> lines;
  for (const auto& r : rows) {
    json pairs = json::array();
    for (std::size_t i = 0; i < r.seeds.size(); ++i)
      pairs.push_back({{"seed", r.seeds[i]}, {"r", r.mean_rs[i]}, {"accuracy", r.accuracies[i]}});
    lines.push_back(json{{"type", "sweep"},
                         {"method", to_string(r.method)},
                         {"k", r.k},
                         {"alpha", r.alpha},
                         {"accuracy_mean", r.mean_accuracy},
                         {"accuracy_std", r.std_accuracy},
                         {"r_mean", r.mean_r},
                         {"r_vs_accuracy", pairs},
                         {"violations", r.violations}}
                        .dump());
  }
  return lines;
}

std::vector<std::string> grid_report(const GridResult& result) {
  std::vector<std::string> lines;
  auto point = [](const GridPoint& p, const char* type) {
    json j = pipeline_json(p.config);
    j["type"] = type;
    j["accuracy"] = p.accuracy;
    j["mean_latency_modeled"] = p.mean_latency;
    j["objective"] = p.objective;
    j["violations"] = p.violations;
    return j.dump();
  };
  for (const auto& p : result.evaluated) lines.push_back(point(p, "grid_point"));
  if (!result.evaluated.empty()) lines.push_back(point(result.evaluated[result.best], "grid_best"));
  return lines;
}

}  // namespace divsel
