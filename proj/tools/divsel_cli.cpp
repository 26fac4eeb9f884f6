#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "divsel/budget.h"
#include "divsel/corpus.h"
#include "divsel/error.h"
#include "divsel/harness.h"
#include "divsel/memory.h"
#include "divsel/pipeline.h"
#include "divsel/prompt.h"
#include "divsel/retrieval.h"
#include "divsel/selection.h"
#include "divsel/synth.h"
#include "divsel/text.h"
#include "divsel/verifier.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace divsel;

namespace {

constexpr int kExitViolation = 3;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw FormatError(p.string() + ": line " + std::to_string(n) + " is not JSON");
    out.push_back(std::move(j));
  }
  return out;
}

// Writes lines to `out` (or stdout when empty).
void emit(const std::vector<std::string>& lines, const std::string& out) {
  if (out.empty()) {
    for (const auto& l : lines) std::cout << l << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw FormatError("cannot open " + out + " for writing");
  for (const auto& l : lines) f << l << '\n';
}

Memory open_memory(const fs::path& p) {
  if (p.extension() == ".jsonl") return Memory::build(read_records(p));
  return Memory::load(p);
}

EncoderWeights open_weights(const std::string& path, std::size_t dim) {
  if (path.empty()) return EncoderWeights::defaults(dim);
  EncoderWeights w = EncoderWeights::load(path);
  if (w.dim() != dim) throw DimensionError("encoder weights dimension differs from memory");
  return w;
}

EvalInstance pick_instance(const fs::path& p, std::size_t index) {
  auto all = read_corpus(p);
  if (index >= all.size()) throw LookupError("dialogue index " + std::to_string(index) + " out of range");
  return all[index];
}

json candidate_json(const Candidate& c) {
  return {{"id", c.id},     {"text", c.text},           {"label", c.label},
          {"embedding", c.embedding}, {"vec_score", c.vec_score}, {"bm25", c.bm25},
          {"lex_score", c.lex_score}, {"relevance", c.relevance}};
}

Pool read_pool(const fs::path& p) {
  Pool pool;
  for (const auto& j : read_jsonl(p)) {
    Candidate c;
    try {
      c.id = j.at("id").get<std::string>();
      c.text = j.value("text", "");
      c.label = j.at("label").get<std::string>();
      c.embedding = j.at("embedding").get<Vec>();
      c.vec_score = j.at("vec_score").get<double>();
      c.bm25 = j.value("bm25", 0.0);
      c.lex_score = j.value("lex_score", 0.0);
      c.relevance = j.at("relevance").get<double>();
    } catch (const json::exception& e) {
      throw FormatError(p.string() + ": " + e.what());
    }
    pool.push_back(std::move(c));
  }
  return pool;
}

std::vector<PromptExemplar> read_selection(const fs::path& p) {
  std::vector<PromptExemplar> out;
  for (const auto& j : read_jsonl(p)) {
    if (j.value("type", "") == "selection") continue;
    try {
      out.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                     j.at("label").get<std::string>()});
    } catch (const json::exception& e) {
      throw FormatError(p.string() + ": " + e.what());
    }
  }
  return out;
}

ExperimentConfig open_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : ExperimentConfig::load(path);
}

struct EvalInputs {
  std::string memory, corpus, config, out, weights;
  std::optional<std::uint64_t> seed;
  bool timings = false;
};

void add_eval_inputs(CLI::App* cmd, EvalInputs& in) {
  cmd->add_option("--memory", in.memory, "Memory file (.jsonl records or persisted binary)")->required();
  cmd->add_option("--corpus", in.corpus, "Evaluation corpus (.jsonl)")->required();
  cmd->add_option("--config", in.config, "Experiment config (JSON)");
  cmd->add_option("--out", in.out, "Report file (default stdout)");
  cmd->add_option("--weights", in.weights, "Encoder weights file");
  cmd->add_option("--seed", in.seed, "Run with this single seed");
}

struct Loaded {
  Memory memory;
  std::vector<EvalInstance> instances;
  ExperimentConfig cfg;
  EncoderWeights weights;
};

Loaded load_eval(const EvalInputs& in) {
  Memory memory = open_memory(in.memory);
  auto instances = read_corpus(in.corpus);
  ExperimentConfig cfg = open_config(in.config);
  if (in.seed) cfg.seeds = {*in.seed};
  EncoderWeights w = open_weights(in.weights, memory.dim());
  return {std::move(memory), std::move(instances), std::move(cfg), std::move(w)};
}

LatencyReport measured_from_json(const json& j) {
  LatencyReport r;
  r.kind = ReportKind::kMeasured;
  const json& l = j.at("latency");
  r.t_ann = l.at("t_ann").get<double>();
  r.t_div = l.at("t_div").get<double>();
  r.t_prompt = l.at("t_prompt").get<double>();
  r.t_llm = l.at("t_llm").get<double>();
  const json& c = j.at("counters");
  auto& k = r.counters;
  k.memory_size = c.at("memory_size").get<std::size_t>();
  k.query_terms = c.at("query_terms").get<std::size_t>();
  k.pool_size = c.at("pool_size").get<std::size_t>();
  k.selected = c.at("selected").get<std::size_t>();
  k.turns = c.at("turns").get<std::size_t>();
  k.prompt_tokens = c.at("prompt_tokens").get<std::size_t>();
  k.generated_tokens = c.at("generated_tokens").get<std::size_t>();
  return r;
}

json report_json(const LatencyReport& r) {
  return {{"type", r.kind == ReportKind::kModeled ? "modeled" : "measured"},
          {"t_ann", r.t_ann},
          {"t_div", r.t_div},
          {"t_prompt", r.t_prompt},
          {"t_llm", r.t_llm},
          {"t_total", r.total()},
          {"budget", r.budget},
          {"within_budget", r.within_budget()}};
}

template <class T>
std::vector<T> parse_list(const std::string& csv, T (*conv)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(conv(trim(item)));
  return out;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); }
double to_double(const std::string& s) { return std::stod(s); }
Method to_method(const std::string& s) { return parse_method(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diversity-aware exemplar retrieval and prompting toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  // memory build
  auto* mem = app.add_subcommand("memory", "Exemplar memory");
  mem->require_subcommand(1);
  auto* mem_build = mem->add_subcommand("build", "Build and persist a memory from JSONL records");
  std::string mb_in, mb_out;
  Bm25Params bm25;
  mem_build->add_option("--input", mb_in, "Records (.jsonl)")->required();
  mem_build->add_option("--out", mb_out, "Output memory file")->required();
  mem_build->add_option("--k1", bm25.k1, "BM25 k1");
  mem_build->add_option("--b", bm25.b, "BM25 b");
  mem_build->callback([&] {
    Memory m = Memory::build(read_records(mb_in), bm25);
    m.persist(mb_out);
    std::cout << json{{"type", "memory"}, {"size", m.size()}, {"dim", m.dim()}, {"out", mb_out}}.dump()
              << '\n';
  });

  // retrieve
  auto* ret = app.add_subcommand("retrieve", "Retrieve the hybrid candidate pool for a dialogue");
  std::string r_mem, r_dlg, r_out, r_weights;
  std::size_t r_index = 0;
  RetrievalConfig r_cfg;
  ret->add_option("--memory", r_mem, "Memory file")->required();
  ret->add_option("--dialogue", r_dlg, "Dialogue corpus (.jsonl)")->required();
  ret->add_option("--index", r_index, "Record index in the dialogue file");
  ret->add_option("--L", r_cfg.pool_size, "Pool size");
  ret->add_option("--lambda-vec", r_cfg.lambda_vec, "Vector weight in the hybrid relevance");
  ret->add_option("--weights", r_weights, "Encoder weights file");
  ret->add_option("--out", r_out, "Pool file (default stdout)");
  ret->callback([&] {
    Memory m = open_memory(r_mem);
    const EvalInstance inst = pick_instance(r_dlg, r_index);
    const Retrieved got = retrieve_for(inst, r_cfg, m, open_weights(r_weights, m.dim()));
    std::vector<std::string> lines;
    for (const auto& c : got.pool) lines.push_back(candidate_json(c).dump());
    emit(lines, r_out);
  });

  // select
  auto* sel = app.add_subcommand("select", "Select exemplars from a pool");
  std::string s_pool, s_method = "ldra", s_out;
  SelectionConfig s_cfg;
  std::uint64_t s_seed = 1;
  double s_mmr = 0.5;
  sel->add_option("--pool", s_pool, "Pool file from retrieve")->required();
  sel->add_option("--method", s_method, "ldra|topk|mmr|fps|random|oracle");
  sel->add_option("--K", s_cfg.k, "Exemplars to select");
  sel->add_option("--alpha", s_cfg.alpha, "Label-diversity weight");
  sel->add_option("--tau", s_cfg.tau, "Relevance threshold");
  sel->add_option("--cap", s_cfg.label_cap, "Per-label cap U");
  sel->add_option("--mu", s_cfg.mu, "Relevance prior");
  sel->add_option("--mmr-lambda", s_mmr, "MMR trade-off");
  sel->add_option("--seed", s_seed, "Seed for random selection");
  sel->add_option("--out", s_out, "Selection file (default stdout)");
  sel->callback([&] {
    const Pool pool = read_pool(s_pool);
    if (pool.empty()) throw ConfigError("pool file is empty");
    SelectedSet set;
    if (s_method == "ldra") set = greedy_select(pool, s_cfg);
    else if (s_method == "oracle") set = brute_force_select(pool, s_cfg);
    else if (s_method == "topk") set = topk_select(pool, s_cfg.k, s_cfg.alpha);
    else if (s_method == "mmr") set = mmr_select(pool, s_cfg.k, s_mmr, s_cfg.alpha);
    else if (s_method == "fps") set = fps_select(pool, s_cfg.k, s_cfg.alpha);
    else if (s_method == "random") set = random_select(pool, s_cfg.k, s_seed, s_cfg.alpha);
    else throw ConfigError("unknown method \"" + s_method + "\"");
    json steps = json::array();
    for (const auto& st : set.steps)
      steps.push_back({{"id", st.id}, {"delta_g", st.delta_g}, {"delta_d", st.delta_d},
                       {"delta_r", st.delta_r}, {"gain", st.adjusted_gain}, {"g", st.g},
                       {"d", st.dtext}, {"r", st.r}});
    std::vector<std::string> lines;
    lines.push_back(json{{"type", "selection"},
                         {"method", s_method},
                         {"ids", set.ids(pool)},
                         {"steps", steps},
                         {"g", set.g()},
                         {"d", set.dtext()},
                         {"r", set.r()},
                         {"stop", to_string(set.stop)},
                         {"binding_constraint", set.binding_constraint()},
                         {"similarity_ops", set.similarity_ops}}
                        .dump());
    for (auto i : set.members)
      lines.push_back(json{{"id", pool[i].id}, {"text", pool[i].text}, {"label", pool[i].label}}.dump());
    emit(lines, s_out);
  });

  // compose
  auto* cmp = app.add_subcommand("compose", "Compose a budgeted prompt");
  std::string c_dlg, c_sel, c_permute = "identity", c_template, c_out;
  std::size_t c_index = 0;
  BudgetConfig c_budget;
  cmp->add_option("--dialogue", c_dlg, "Dialogue corpus (.jsonl)")->required();
  cmp->add_option("--index", c_index, "Record index in the dialogue file");
  cmp->add_option("--selection", c_sel, "Selection file from select")->required();
  cmp->add_option("--budget", c_budget.max_prompt_tokens, "Maximum prompt tokens");
  cmp->add_option("--summary-cap", c_budget.summary_token_cap, "Summary token cap");
  cmp->add_option("--permute", c_permute, "identity|reverse|<seed>");
  cmp->add_option("--template", c_template, "Prompt template file");
  cmp->add_option("--out", c_out, "Write the rendered prompt here");
  cmp->callback([&] {
    const EvalInstance inst = pick_instance(c_dlg, c_index);
    const auto exemplars = read_selection(c_sel);
    std::vector<std::size_t> perm;
    if (c_permute == "identity") perm = make_permutation(exemplars.size(), PermutationMode::kIdentity);
    else if (c_permute == "reverse") perm = make_permutation(exemplars.size(), PermutationMode::kReverse);
    else perm = make_permutation(exemplars.size(), PermutationMode::kSeeded, std::stoull(c_permute));
    const PromptTemplate tmpl = c_template.empty() ? PromptTemplate::standard() : PromptTemplate::load(c_template);
    const Prompt p = compose(kDefaultInstruction, inst.dialogue, exemplars, c_budget, perm, tmpl);
    if (!c_out.empty()) emit({p.text}, c_out);
    json dropped = json::array();
    for (const auto& e : p.dropped_exemplars) dropped.push_back(e.id);
    std::cout << json{{"type", "prompt"},
                      {"token_count", p.token_count},
                      {"summary_turns", p.summary_turns},
                      {"summary_turns_dropped", p.summary_turns_dropped},
                      {"dropped_exemplars", dropped},
                      {"text", c_out.empty() ? json(p.text) : json()}}
                     .dump()
              << '\n';
  });

  // decide
  auto* dec = app.add_subcommand("decide", "Score candidate labels with a verifier");
  std::string d_prompt, d_labels, d_verifier = "mock", d_gold, d_url, d_token_env = "DIVSEL_VERIFIER_TOKEN";
  double d_tau_c = 1.0, d_margin = 4.0;
  std::uint64_t d_seed = 1;
  int d_timeout = 30000;
  dec->add_option("--prompt", d_prompt, "Rendered prompt file")->required();
  dec->add_option("--labels", d_labels, "Candidate labels, one per line")->required();
  dec->add_option("--verifier", d_verifier, "mock|endpoint");
  dec->add_option("--tau-c", d_tau_c, "Calibration temperature");
  dec->add_option("--gold", d_gold, "Gold label for the mock verifier");
  dec->add_option("--margin", d_margin, "Mock verifier margin");
  dec->add_option("--seed", d_seed, "Mock verifier noise seed");
  dec->add_option("--url", d_url, "Verifier endpoint URL");
  dec->add_option("--token-env", d_token_env, "Environment variable holding the bearer token");
  dec->add_option("--timeout-ms", d_timeout, "Endpoint timeout");
  dec->callback([&] {
    Prompt p;
    p.text = slurp(d_prompt);
    std::vector<std::string> labels;
    std::istringstream in(slurp(d_labels));
    for (std::string line; std::getline(in, line);)
      if (!trim(line).empty()) labels.push_back(trim(line));
    std::unique_ptr<Verifier> v;
    if (d_verifier == "mock") {
      if (d_gold.empty()) throw ConfigError("the mock verifier needs --gold");
      v = std::make_unique<MockVerifier>(d_gold, d_seed, d_margin);
    } else if (d_verifier == "endpoint") {
      v = std::make_unique<HttpVerifier>(d_url, d_token_env, std::chrono::milliseconds(d_timeout));
    } else {
      throw ConfigError("unknown verifier \"" + d_verifier + "\"");
    }
    const VerifierOutput out = score_labels(p, labels, *v, d_tau_c);
    std::cout << json{{"type", "decision"},
                      {"decision", out.decision},
                      {"candidates", out.candidate_set},
                      {"scores", out.scores},
                      {"calibrated", out.calibrated},
                      {"calls", out.calls}}
                     .dump()
              << '\n';
  });

  // budget
  auto* bud = app.add_subcommand("budget", "Latency cost model and budget controller");
  bud->require_subcommand(1);
  std::string b_constants;
  ModelInputs b_in;
  double b_budget = 0.0;
  auto add_model_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--constants", b_constants, "Cost constants (JSON)")->required();
    cmd->add_option("--N", b_in.memory_size, "Memory size");
    cmd->add_option("--terms", b_in.query_terms, "Query terms");
    cmd->add_option("--L", b_in.pool_size, "Pool size");
    cmd->add_option("--K", b_in.k, "Exemplars");
    cmd->add_option("--turns", b_in.turns, "History turns");
    cmd->add_option("--prompt-tokens", b_in.prompt_tokens, "Prompt tokens");
    cmd->add_option("--gen-tokens", b_in.generated_tokens, "Generated tokens");
    cmd->add_option("--budget", b_budget, "Latency budget B in seconds");
  };
  auto* b_model = bud->add_subcommand("model", "Evaluate the modeled latency");
  add_model_inputs(b_model);
  b_model->callback([&] {
    const LatencyReport r = model_latency(CostConstants::load(b_constants), b_in, b_budget);
    std::cout << report_json(r).dump() << '\n';
  });
  auto* b_ctl = bud->add_subcommand("control", "Shrink (L, K) until the modeled latency fits B");
  add_model_inputs(b_ctl);
  std::size_t b_cap = 1, b_base = 0, b_per = 0;
  b_ctl->add_option("--U", b_cap, "Per-label cap (passed through)");
  auto* base_opt = b_ctl->add_option("--base-tokens", b_base, "Prompt tokens without exemplars");
  auto* per_opt = b_ctl->add_option("--tokens-per-exemplar", b_per, "Prompt tokens per exemplar");
  b_ctl->callback([&] {
    // Without a prompt model, --prompt-tokens is held fixed.
    if (base_opt->count() == 0 && per_opt->count() == 0) b_base = b_in.prompt_tokens;
    const BudgetDecision d = budget_control(CostConstants::load(b_constants), b_in, b_cap, b_budget, b_base, b_per);
    std::cout << json{{"type", "budget_control"},
                      {"L", d.pool_size},
                      {"K", d.k},
                      {"U", d.label_cap},
                      {"over_budget", d.over_budget},
                      {"iterations", d.iterations},
                      {"modeled", report_json(d.modeled)}}
                     .dump()
              << '\n';
  });
  auto* b_cal = bud->add_subcommand("calibrate", "Fit cost constants to measured reports");
  std::string b_reports, b_out;
  b_cal->add_option("--reports", b_reports, "Report from eval run --timings")->required();
  b_cal->add_option("--out", b_out, "Constants file (default stdout)");
  b_cal->callback([&] {
    std::vector<LatencyReport> measured;
    for (const auto& j : read_jsonl(b_reports))
      if (j.value("type", "") == "instance" && j.contains("latency")) measured.push_back(measured_from_json(j));
    emit({calibrate(measured).to_json()}, b_out);
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Experiment harness");
  ev->require_subcommand(1);

  EvalInputs run_in;
  auto* e_run = ev->add_subcommand("run", "Run the pipeline over a corpus, one run per seed");
  add_eval_inputs(e_run, run_in);
  e_run->add_flag("--timings", run_in.timings, "Include measured stage timings");
  e_run->callback([&] {
    Loaded L = load_eval(run_in);
    const auto factory = make_verifier_factory(L.cfg.verifier);
    std::vector<RunSummary> runs;
    for (auto seed : L.cfg.seeds) {
      PipelineConfig p = L.cfg.pipeline;
      p.seed = seed;
      if (L.cfg.fairness.shuffle_seed) p.shuffle_seed = L.cfg.fairness.shuffle_seed;
      p.prefix_replace = L.cfg.fairness.prefix_replace;
      runs.push_back(evaluate(L.instances, L.memory, p, factory, L.weights, L.cfg.verifier.kind == "mock"));
    }
    std::vector<std::string> lines{header_line(L.cfg, "eval run")};
    for (auto& l : run_report(runs, run_in.timings)) lines.push_back(std::move(l));
    emit(lines, run_in.out);
    for (const auto& r : runs)
      if (r.violations) exit_code = kExitViolation;
  });

  EvalInputs fair_in;
  auto* e_fair = ev->add_subcommand("fairness", "Equal-token fairness suite");
  add_eval_inputs(e_fair, fair_in);
  e_fair->callback([&] {
    Loaded L = load_eval(fair_in);
    const FairnessReport rep = fairness_suite(L.instances, L.memory, L.cfg, make_verifier_factory(L.cfg.verifier), L.weights);
    std::vector<std::string> lines{header_line(L.cfg, "eval fairness")};
    for (auto& l : fairness_report(rep)) lines.push_back(std::move(l));
    emit(lines, fair_in.out);
    bool bad = !rep.ok();
    for (const auto& t : rep.targets)
      for (const auto& a : t.arms) bad = bad || a.violations;
    if (bad) exit_code = kExitViolation;
  });

  EvalInputs sweep_in;
  std::string sw_ks = "1,3,5,7,10", sw_alphas = "0,0.25,0.5,0.75,1", sw_methods = "ldra,topk";
  auto* e_sweep = ev->add_subcommand("sweep", "Factorial sweep over K, alpha and method");
  add_eval_inputs(e_sweep, sweep_in);
  e_sweep->add_option("--ks", sw_ks, "Comma-separated K values");
  e_sweep->add_option("--alphas", sw_alphas, "Comma-separated alpha values");
  e_sweep->add_option("--methods", sw_methods, "Comma-separated methods");
  e_sweep->callback([&] {
    Loaded L = load_eval(sweep_in);
    SweepGrid grid;
    grid.ks = parse_list<std::size_t>(sw_ks, to_size);
    grid.alphas = parse_list<double>(sw_alphas, to_double);
    grid.methods = parse_list<Method>(sw_methods, to_method);
    const auto rows = sweep(L.instances, L.memory, L.cfg, grid, make_verifier_factory(L.cfg.verifier), L.weights);
    std::vector<std::string> lines{header_line(L.cfg, "eval sweep")};
    for (auto& l : sweep_report(rows)) lines.push_back(std::move(l));
    emit(lines, sweep_in.out);
    for (const auto& r : rows)
      if (r.violations) exit_code = kExitViolation;
  });

  EvalInputs grid_in;
  std::string g_constants;
  double g_budget = 1.0, g_penalty = 1.0;
  GridSpec gspec;
  std::string g_alphas, g_taus, g_caps, g_pools, g_ks, g_lvs, g_mus;
  auto* e_grid = ev->add_subcommand("grid", "Budget-constrained grid search");
  add_eval_inputs(e_grid, grid_in);
  e_grid->add_option("--constants", g_constants, "Cost constants (JSON)")->required();
  e_grid->add_option("--budget", g_budget, "Latency budget B in seconds");
  e_grid->add_option("--lambda-penalty", g_penalty, "Budget penalty weight");
  e_grid->add_option("--alphas", g_alphas, "Comma-separated alpha grid");
  e_grid->add_option("--taus", g_taus, "Comma-separated tau grid");
  e_grid->add_option("--caps", g_caps, "Comma-separated U grid");
  e_grid->add_option("--pools", g_pools, "Comma-separated L grid");
  e_grid->add_option("--ks", g_ks, "Comma-separated K grid");
  e_grid->add_option("--lambda-vecs", g_lvs, "Comma-separated lambda_vec grid");
  e_grid->add_option("--mus", g_mus, "Comma-separated mu grid");
  e_grid->callback([&] {
    Loaded L = load_eval(grid_in);
    if (!g_alphas.empty()) gspec.alphas = parse_list<double>(g_alphas, to_double);
    if (!g_taus.empty()) gspec.taus = parse_list<double>(g_taus, to_double);
    if (!g_caps.empty()) gspec.caps = parse_list<std::size_t>(g_caps, to_size);
    if (!g_pools.empty()) gspec.pool_sizes = parse_list<std::size_t>(g_pools, to_size);
    if (!g_ks.empty()) gspec.ks = parse_list<std::size_t>(g_ks, to_size);
    if (!g_lvs.empty()) gspec.lambda_vecs = parse_list<double>(g_lvs, to_double);
    if (!g_mus.empty()) gspec.mus = parse_list<double>(g_mus, to_double);
    const GridResult res = grid_search(L.instances, L.memory, L.cfg, gspec, CostConstants::load(g_constants),
                                       g_budget, g_penalty, make_verifier_factory(L.cfg.verifier), L.weights);
    std::vector<std::string> lines{header_line(L.cfg, "eval grid")};
    for (auto& l : grid_report(res)) lines.push_back(std::move(l));
    emit(lines, grid_in.out);
    for (const auto& p : res.evaluated)
      if (p.violations) exit_code = kExitViolation;
  });

  SynthSpec spec;
  std::string sy_out;
  auto* e_synth = ev->add_subcommand("synth", "Generate a synthetic memory and evaluation corpus");
  e_synth->add_option("--labels", spec.labels, "Number of labels");
  e_synth->add_option("--per-label", spec.per_label, "Exemplars per label");
  e_synth->add_option("--instances", spec.instances, "Evaluation instances");
  e_synth->add_option("--dim", spec.dim, "Embedding dimension");
  e_synth->add_option("--turns", spec.history_turns, "History turns per instance");
  e_synth->add_option("--ambiguity", spec.ambiguity, "Fraction of ambiguous queries");
  e_synth->add_option("--seed", spec.seed, "Generator seed");
  e_synth->add_option("--out", sy_out, "Output directory")->required();
  e_synth->callback([&] {
    const SynthCorpus c = synth_corpus(spec);
    fs::create_directories(sy_out);
    {
      std::ofstream m(fs::path(sy_out) / "memory.jsonl", std::ios::binary);
      write_records(m, c.memory);
    }
    write_corpus(fs::path(sy_out) / "eval.jsonl", c.instances);
    std::cout << json{{"type", "synth"},
                      {"memory", (fs::path(sy_out) / "memory.jsonl").string()},
                      {"corpus", (fs::path(sy_out) / "eval.jsonl").string()},
                      {"exemplars", c.memory.size()},
                      {"instances", c.instances.size()}}
                     .dump()
              << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const divsel::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
