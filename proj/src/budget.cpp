#include "divsel/budget.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "divsel/error.h"
#include "json.hpp"

namespace divsel {
namespace {

using nlohmann::json;

struct Fit2 {
  double a = 0.0;
  double b = 0.0;
};

// Least squares t ~ a x1 + b x2 without intercept.
Fit2 fit_two(const std::vector<double>& x1, const std::vector<double>& x2,
             const std::vector<double>& t) {
  double s11 = 0, s12 = 0, s22 = 0, s1t = 0, s2t = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    s11 += x1[i] * x1[i];
    s12 += x1[i] * x2[i];
    s22 += x2[i] * x2[i];
    s1t += x1[i] * t[i];
    s2t += x2[i] * t[i];
  }
  Fit2 f;
  const double det = s11 * s22 - s12 * s12;
  if (std::abs(det) > 1e-12 * std::max(1.0, s11 * s22)) {
    f.a = (s1t * s22 - s2t * s12) / det;
    f.b = (s2t * s11 - s1t * s12) / det;
  } else if (s11 > 0.0) {
    f.a = s1t / s11;  // collinear regressors: attribute everything to x1
  } else if (s22 > 0.0) {
    f.b = s2t / s22;
  }
  f.a = std::max(0.0, f.a);
  f.b = std::max(0.0, f.b);
  return f;
}

}  // namespace

void CostConstants::validate() const {
  for (double c : {c_ann, c_bm25, c_sim, c_delta, c_sum, c_fmt})
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("cost constants must be finite and >= 0");
  if (!(r_tok > 0.0) || !std::isfinite(r_tok)) throw ConfigError("r_tok must be finite and > 0");
}

CostConstants CostConstants::parse(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("cost constants must be a JSON object");
  CostConstants c;
  auto read = [&](const char* key, double& dst) {
    if (!j.contains(key)) throw ConfigError(std::string("cost constants: missing ") + key);
    if (!j[key].is_number()) throw ConfigError(std::string("cost constants: ") + key + " must be a number");
    dst = j[key].get<double>();
  };
  read("c_ann", c.c_ann);
  read("c_bm25", c.c_bm25);
  read("c_sim", c.c_sim);
  read("c_delta", c.c_delta);
  read("c_sum", c.c_sum);
  read("c_fmt", c.c_fmt);
  read("r_tok", c.r_tok);
  c.validate();
  return c;
}

CostConstants CostConstants::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open constants file " + path.string());
  return parse(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::string CostConstants::to_json() const {
  json j = {{"c_ann", c_ann}, {"c_bm25", c_bm25}, {"c_sim", c_sim}, {"c_delta", c_delta},
            {"c_sum", c_sum}, {"c_fmt", c_fmt},   {"r_tok", r_tok}};
  return j.dump();
}

LatencyReport model_latency(const CostConstants& c, const ModelInputs& in, double budget) {
  c.validate();
  if (in.memory_size < 1) throw ConfigError("memory size N must be >= 1");
  const double L = static_cast<double>(in.pool_size);
  const double K = static_cast<double>(in.k);
  LatencyReport r;
  r.kind = ReportKind::kModeled;
  r.budget = budget;
  r.t_ann = c.c_ann * std::log(static_cast<double>(in.memory_size)) +
            c.c_bm25 * static_cast<double>(in.query_terms);
  r.t_div = c.c_sim * (L * K) + c.c_delta * K;
  r.t_prompt = c.c_sum * static_cast<double>(in.turns) + c.c_fmt * K;
  r.t_llm = static_cast<double>(in.prompt_tokens + in.generated_tokens) / c.r_tok;
  r.counters.query_terms = in.query_terms;
  r.counters.pool_size = in.pool_size;
  r.counters.selected = in.k;
  r.counters.turns = in.turns;
  r.counters.prompt_tokens = in.prompt_tokens;
  r.counters.generated_tokens = in.generated_tokens;
  r.counters.memory_size = in.memory_size;
  return r;
}

BudgetDecision budget_control(const CostConstants& c, ModelInputs in, std::size_t label_cap,
                              double budget, std::size_t base_prompt_tokens,
                              std::size_t tokens_per_exemplar) {
  if (!(budget > 0.0)) throw ConfigError("budget B must be > 0");
  if (in.k < 1) throw ConfigError("K must be >= 1");
  in.pool_size = std::max(in.pool_size, in.k);
  auto evaluate = [&] {
    in.prompt_tokens = base_prompt_tokens + tokens_per_exemplar * in.k;
    return model_latency(c, in, budget);
  };
  BudgetDecision d;
  d.label_cap = label_cap;
  d.modeled = evaluate();
  while (d.modeled.total() > budget) {
    if (in.pool_size > in.k) {
      in.pool_size = std::max(in.k, in.pool_size / 2);
    } else if (in.k > 1) {
      --in.k;
      in.pool_size = in.k;
    } else {
      d.over_budget = true;
      break;
    }
    ++d.iterations;
    d.modeled = evaluate();
  }
  d.pool_size = in.pool_size;
  d.k = in.k;
  return d;
}

double scalarized_objective(double accuracy, double t_total, double budget, double lambda_penalty) {
  if (!(budget > 0.0)) throw ConfigError("budget B must be > 0");
  if (!(lambda_penalty > 0.0)) throw ConfigError("penalty weight must be > 0");
  return accuracy - lambda_penalty * std::max(0.0, t_total / budget - 1.0);
}

CostConstants calibrate(std::span<const LatencyReport> measured) {
  if (measured.empty()) throw ConfigError("calibration needs at least one measured report");
  std::vector<double> log_n, terms, lk, k, turns, tokens, t_ann, t_div, t_prompt, t_llm;
  for (const auto& r : measured) {
    if (r.kind != ReportKind::kMeasured) throw ConfigError("calibration accepts measured reports only");
    const auto& c = r.counters;
    log_n.push_back(std::log(static_cast<double>(std::max<std::size_t>(1, c.memory_size))));
    terms.push_back(static_cast<double>(c.query_terms));
    lk.push_back(static_cast<double>(c.pool_size) * static_cast<double>(c.selected));
    k.push_back(static_cast<double>(c.selected));
    turns.push_back(static_cast<double>(c.turns));
    tokens.push_back(static_cast<double>(c.prompt_tokens + c.generated_tokens));
    t_ann.push_back(r.t_ann);
    t_div.push_back(r.t_div);
    t_prompt.push_back(r.t_prompt);
    t_llm.push_back(r.t_llm);
  }
  CostConstants out;
  const Fit2 ann = fit_two(log_n, terms, t_ann);
  const Fit2 div = fit_two(lk, k, t_div);
  const Fit2 prm = fit_two(turns, k, t_prompt);
  out.c_ann = ann.a;
  out.c_bm25 = ann.b;
  out.c_sim = div.a;
  out.c_delta = div.b;
  out.c_sum = prm.a;
  out.c_fmt = prm.b;
  const std::vector<double> zeros(tokens.size(), 0.0);
  const double per_token = fit_two(tokens, zeros, t_llm).a;
  out.r_tok = per_token > 1.0 / kUnmeasuredThroughput ? 1.0 / per_token : kUnmeasuredThroughput;
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw ConfigError("percentile q must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace divsel
