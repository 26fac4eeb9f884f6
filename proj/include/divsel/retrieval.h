#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsel/memory.h"
#include "divsel/vec.h"

namespace divsel {

struct RetrievalConfig {
  double lambda_vec = 0.6;
  std::size_t pool_size = 128;  // L

  void validate() const;
};

// One pool entry. Carries its exemplar payload so selection and prompt
// composition work on a pool read back from disk without the memory.
struct Candidate {
  std::string id;
  std::string text;
  std::string label;
  Vec embedding;
  double vec_score = 0.0;  // cosine s(z_n, e_i)
  double bm25 = 0.0;       // raw Okapi score
  double lex_score = 0.0;  // BM25 min-max normalized over the scanned set
  double relevance = 0.0;
};

using Pool = std::vector<Candidate>;

// Rel = lambda_vec * (s + 1) / 2 + (1 - lambda_vec) * lex_score.
double hybrid_relevance(double vec_score, double lex_score, double lambda_vec);

// Chooses which memory rows a query scans. The exact backend scans all rows;
// an approximate backend may return a subset.
class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  virtual std::vector<std::size_t> scan(const Memory& memory, std::span<const double> query) const = 0;
};

class ExactScan final : public SearchBackend {
 public:
  std::vector<std::size_t> scan(const Memory& memory, std::span<const double> query) const override;
};

const SearchBackend& exact_scan();

// Top-min(L, scanned) candidates by hybrid relevance, descending; ties by id.
// Throws DimensionError if query_vec does not match the memory dimension.
Pool retrieve_pool(const Memory& memory, std::span<const double> query_vec,
                   std::string_view query_text, const RetrievalConfig& cfg,
                   const SearchBackend& backend = exact_scan());

}  // namespace divsel
