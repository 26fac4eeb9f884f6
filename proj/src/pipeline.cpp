#include "divsel/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "divsel/error.h"
#include "divsel/rng.h"
#include "divsel/text.h"

namespace divsel {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

std::uint64_t instance_stream(std::uint64_t seed, const std::string& id, std::string_view purpose) {
  return derive_seed(derive_seed(seed, fnv1a64(id)), fnv1a64(purpose));
}

PromptExemplar to_prompt(const Candidate& c) { return {c.id, c.text, c.label}; }
PromptExemplar to_prompt(const Exemplar& e) { return {e.id, e.text, e.label}; }

SelectedSet run_selection(const Pool& pool, const PipelineConfig& cfg, const std::string& id) {
  const double alpha = cfg.selection.alpha;
  const std::size_t k = cfg.selection.k;
  switch (cfg.method) {
    case Method::kLdra: return greedy_select(pool, cfg.selection);
    case Method::kTopk:
    case Method::kTopkRandAdd: return topk_select(pool, k, alpha);
    case Method::kMmr: return mmr_select(pool, k, cfg.mmr_lambda, alpha);
    case Method::kFps: return fps_select(pool, k, alpha);
    case Method::kRandom: return random_select(pool, k, instance_stream(cfg.seed, id, "random"), alpha);
  }
  throw ConfigError("unknown selection method");
}

// Appends random memory exemplars while the prompt without its summary stays
// within `limit` tokens.
void random_add(std::vector<PromptExemplar>& exemplars, const EvalInstance& inst,
                const PipelineConfig& cfg, const Memory& memory, std::size_t limit) {
  std::set<std::string> used;
  for (const auto& e : exemplars) used.insert(e.id);
  const PromptTemplate tmpl = PromptTemplate::standard();
  std::vector<std::string> lines;
  for (const auto& e : exemplars) lines.push_back(render_exemplar(e));
  std::string block;
  for (std::size_t i = 0; i < lines.size(); ++i) block += (i ? "\n" : "") + lines[i];
  std::size_t tokens = count_tokens(
      tmpl.render(cfg.instruction, "", inst.dialogue.current, block, kDefaultAnswerFormat));

  std::vector<std::size_t> order(memory.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(instance_stream(cfg.seed, inst.id, "rand_add"));
  rng.shuffle(order);
  for (std::size_t idx : order) {
    const Exemplar& e = memory.at(idx);
    if (used.count(e.id)) continue;
    const std::size_t cost = count_tokens(render_exemplar(to_prompt(e)));
    if (tokens + cost > limit) break;
    tokens += cost;
    exemplars.push_back(to_prompt(e));
    used.insert(e.id);
  }
}

void replace_prefix(std::vector<PromptExemplar>& exemplars, const EvalInstance& inst,
                    const PipelineConfig& cfg, const Memory& memory) {
  std::set<std::string> used;
  for (const auto& e : exemplars) used.insert(e.id);
  Rng rng(instance_stream(cfg.seed, inst.id, "prefix_replace"));
  const std::size_t half = (exemplars.size() + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    std::vector<std::string> options;
    auto it = memory.label_index().find(exemplars[i].label);
    if (it != memory.label_index().end())
      for (const auto& id : it->second)
        if (!used.count(id)) options.push_back(id);
    if (options.empty())
      for (const auto& e : memory.exemplars())
        if (!used.count(e.id)) options.push_back(e.id);
    if (options.empty()) break;
    const std::string& pick = options[rng.below(options.size())];
    used.insert(pick);
    exemplars[i] = to_prompt(memory.find(pick));
  }
}

std::vector<std::string> audit(const PipelineResult& r, const PipelineConfig& cfg) {
  std::vector<std::string> v;
  const std::size_t bound = r.pool.size() * cfg.selection.k;
  if (r.selection.similarity_ops > bound)
    v.push_back("similarity_ops " + std::to_string(r.selection.similarity_ops) + " > L*K " +
                std::to_string(bound));
  if (cfg.method == Method::kLdra) {
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> labels;
    std::vector<Vec> embs;
    for (auto i : r.selection.members) {
      const Candidate& c = r.pool[i];
      if (c.vec_score < cfg.selection.tau) v.push_back("selected " + c.id + " below tau");
      if (++counts[c.label] > cfg.selection.label_cap) v.push_back("label cap exceeded by " + c.id);
      labels.push_back(c.label);
      embs.push_back(c.embedding);
    }
    if (!labels.empty()) {
      const double g = label_diversity(labels);
      const double d = text_diversity(embs);
      if (std::abs(g - r.selection.g()) > 1e-9 || std::abs(d - r.selection.dtext()) > 1e-9)
        v.push_back("incremental G/D disagree with recomputation");
    }
  }
  if (r.prompt.token_count > cfg.budget.max_prompt_tokens) v.push_back("prompt over token budget");
  if (r.prompt.token_count != count_tokens(r.prompt.text)) v.push_back("prompt token count stale");
  if (std::find(r.verdict.candidate_set.begin(), r.verdict.candidate_set.end(), r.prediction) ==
      r.verdict.candidate_set.end())
    v.push_back("decision outside candidate set");
  if (r.verdict.calls != r.verdict.candidate_set.size()) v.push_back("verifier call count mismatch");
  return v;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kLdra: return "ldra";
    case Method::kTopk: return "topk";
    case Method::kMmr: return "mmr";
    case Method::kFps: return "fps";
    case Method::kRandom: return "random";
    case Method::kTopkRandAdd: return "topk_rand_add";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kLdra, Method::kTopk, Method::kMmr, Method::kFps, Method::kRandom,
                   Method::kTopkRandAdd})
    if (name == to_string(m)) return m;
  throw ConfigError("unknown method \"" + std::string(name) + "\"");
}

void PipelineConfig::validate() const {
  selection.validate();
  retrieval.validate();
  budget.validate();
  if (!(mmr_lambda >= 0.0 && mmr_lambda <= 1.0)) throw ConfigError("mmr lambda must lie in [0, 1]");
  if (!(tau_c > 0.0)) throw ConfigError("tau_c must be > 0");
}

Retrieved retrieve_for(const EvalInstance& instance, const RetrievalConfig& cfg,
                       const Memory& memory, const EncoderWeights& weights) {
  Retrieved out;
  out.query = stage("encode", [&] { return encode_context(instance.dialogue, weights); });
  out.pool = stage("retrieve",
                   [&] { return retrieve_pool(memory, out.query.z, instance.dialogue.current, cfg); });
  return out;
}

PipelineResult run_pipeline(const EvalInstance& instance, const PipelineConfig& cfg,
                            const Memory& memory, Verifier& verifier,
                            const EncoderWeights& weights) {
  const auto t0 = Clock::now();
  Retrieved got = retrieve_for(instance, cfg.retrieval, memory, weights);
  const double t_ann = seconds_since(t0);
  PipelineResult r =
      run_from_pool(instance, cfg, memory, verifier, std::move(got.query), std::move(got.pool));
  r.latency.t_ann = t_ann;
  return r;
}

PipelineResult run_from_pool(const EvalInstance& instance, const PipelineConfig& cfg,
                             const Memory& memory, Verifier& verifier, EncodedQuery query,
                             Pool pool) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  PipelineResult r;
  r.query = std::move(query);
  if (pool.size() > cfg.retrieval.pool_size) pool.resize(cfg.retrieval.pool_size);
  r.pool = std::move(pool);

  auto t = Clock::now();
  r.selection = stage("select", [&] {
    if (r.pool.empty()) return SelectedSet{};
    return run_selection(r.pool, cfg, instance.id);
  });
  r.latency.t_div = seconds_since(t);

  t = Clock::now();
  for (auto i : r.selection.members) r.exemplars.push_back(to_prompt(r.pool[i]));
  r.prompt = stage("compose", [&] {
    if (cfg.method == Method::kTopkRandAdd) {
      const std::size_t limit = cfg.budget.fill_summary
                                    ? cfg.budget.max_prompt_tokens
                                    : cfg.budget.max_prompt_tokens - cfg.budget.summary_token_cap;
      random_add(r.exemplars, instance, cfg, memory, limit);
    }
    if (cfg.prefix_replace) replace_prefix(r.exemplars, instance, cfg, memory);
    std::optional<std::vector<std::size_t>> perm;
    if (cfg.shuffle_seed)
      perm = make_permutation(r.exemplars.size(), PermutationMode::kSeeded,
                              instance_stream(*cfg.shuffle_seed, instance.id, "shuffle"));
    return compose(cfg.instruction, instance.dialogue, r.exemplars, cfg.budget, perm);
  });
  r.latency.t_prompt = seconds_since(t);

  t = Clock::now();
  r.verdict = stage("verify", [&] {
    std::vector<std::string> labels;
    for (const auto& e : r.prompt.exemplars) labels.push_back(e.label);
    const auto candidates = candidate_labels(labels, r.pool, cfg.shortlist);
    return score_labels(r.prompt, candidates, verifier, cfg.tau_c);
  });
  r.latency.t_llm = seconds_since(t);
  r.prediction = r.verdict.decision;
  const std::string gold = normalize_label(instance.gold);
  for (const auto& l : r.verdict.candidate_set) r.gold_covered = r.gold_covered || normalize_label(l) == gold;

  r.latency.kind = ReportKind::kMeasured;
  r.latency.budget = 0.0;
  auto& c = r.latency.counters;
  c.similarity_ops = r.selection.similarity_ops;
  c.verifier_calls = r.verdict.calls;
  c.prompt_tokens = r.prompt.token_count;
  c.generated_tokens = r.verdict.calls;
  c.turns = instance.dialogue.turns.size();
  c.query_terms = tokenize_terms(instance.dialogue.current).size();
  c.pool_size = r.pool.size();
  c.selected = r.selection.size();
  c.memory_size = memory.size();

  r.violations = audit(r, cfg);
  return r;
}

}  // namespace divsel
