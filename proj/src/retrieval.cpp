#include "divsel/retrieval.h"

#include <algorithm>
#include <numeric>

#include "divsel/error.h"

namespace divsel {

void RetrievalConfig::validate() const {
  if (!(lambda_vec >= 0.0 && lambda_vec <= 1.0)) throw ConfigError("lambda_vec must lie in [0, 1]");
  if (pool_size < 1) throw ConfigError("pool size L must be >= 1");
}

double hybrid_relevance(double vec_score, double lex_score, double lambda_vec) {
  return lambda_vec * ((vec_score + 1.0) / 2.0) + (1.0 - lambda_vec) * lex_score;
}

std::vector<std::size_t> ExactScan::scan(const Memory& memory, std::span<const double>) const {
  std::vector<std::size_t> rows(memory.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

const SearchBackend& exact_scan() {
  static const ExactScan backend;
  return backend;
}

Pool retrieve_pool(const Memory& memory, std::span<const double> query_vec,
                   std::string_view query_text, const RetrievalConfig& cfg,
                   const SearchBackend& backend) {
  cfg.validate();
  if (memory.size() == 0) throw Error("retrieval over an empty memory");
  if (query_vec.size() != memory.dim())
    throw DimensionError("query dimension " + std::to_string(query_vec.size()) +
                         " != memory dimension " + std::to_string(memory.dim()));
  const Vec q = normalized(query_vec);

  std::vector<std::size_t> rows = backend.scan(memory, q);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (rows.empty()) throw Error("search backend returned no rows");

  const std::vector<double> bm25 = memory.bm25_scores(query_text);
  double lo = bm25[rows.front()], hi = lo;
  for (std::size_t r : rows) {
    lo = std::min(lo, bm25[r]);
    hi = std::max(hi, bm25[r]);
  }

  Pool scored;
  scored.reserve(rows.size());
  for (std::size_t r : rows) {
    const Exemplar& e = memory.at(r);
    Candidate c;
    c.vec_score = std::clamp(unit_cosine(q, e.embedding), -1.0, 1.0);
    c.bm25 = bm25[r];
    // All-equal lexical scores carry no ranking signal; park them mid-scale.
    c.lex_score = hi > lo ? (bm25[r] - lo) / (hi - lo) : 0.5;
    c.relevance = hybrid_relevance(c.vec_score, c.lex_score, cfg.lambda_vec);
    c.id = e.id;
    scored.push_back(std::move(c));
  }

  const std::size_t keep = std::min(cfg.pool_size, scored.size());
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.id < b.id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), better);
  scored.resize(keep);
  for (auto& c : scored) {
    const Exemplar& e = memory.find(c.id);
    c.text = e.text;
    c.label = e.label;
    c.embedding = e.embedding;
  }
  return scored;
}

}  // namespace divsel
