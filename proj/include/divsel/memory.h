#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "divsel/vec.h"

namespace divsel {

// One labeled memory item: utterance, intent label, unit embedding.
struct Exemplar {
  std::string id;
  std::string text;
  std::string label;
  Vec embedding;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Raw ingestion record, one per line of the JSONL input.
struct ExemplarRecord {
  std::string id;
  std::string text;
  std::string label;
  Vec embedding;
};

// Parses line-delimited {"id","text","label","embedding"} records.
// Blank lines are skipped; malformed lines throw IngestError with the line
// number.
std::vector<ExemplarRecord> read_records(std::istream& in);
std::vector<ExemplarRecord> read_records(const std::filesystem::path& path);
void write_records(std::ostream& out, const std::vector<ExemplarRecord>& records);

// Per-term document frequency, per-exemplar term counts and lengths.
struct LexicalStats {
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };
  std::unordered_map<std::string, std::vector<Posting>> postings;
  std::vector<std::unordered_map<std::string, std::uint32_t>> term_counts;
  std::vector<std::uint32_t> doc_length;
  double avg_doc_length = 0.0;

  std::size_t document_frequency(const std::string& term) const;
};

// Immutable retrieval memory with BM25 statistics.
class Memory {
 public:
  // Validates and builds. Embeddings are re-normalized to unit length.
  // Throws IngestError on an empty stream, a duplicate id, an empty label or
  // a dimension mismatch (the message names the offending id).
  static Memory build(std::vector<ExemplarRecord> records, Bm25Params params = {});

  std::size_t size() const { return exemplars_.size(); }
  std::size_t dim() const { return dim_; }
  const Bm25Params& bm25_params() const { return params_; }
  const std::vector<Exemplar>& exemplars() const { return exemplars_; }
  const Exemplar& at(std::size_t index) const { return exemplars_.at(index); }
  const LexicalStats& lexical_stats() const { return stats_; }
  const std::map<std::string, std::vector<std::string>>& label_index() const { return label_index_; }

  // Throws LookupError for unknown ids.
  std::size_t index_of(std::string_view id) const;
  const Exemplar& find(std::string_view id) const { return exemplars_[index_of(id)]; }
  bool contains(std::string_view id) const;

  // Okapi BM25 of query_text against one exemplar.
  double bm25_score(std::string_view query_text, std::string_view exemplar_id) const;
  // BM25 of query_text against every exemplar, indexed like exemplars().
  // Bit-identical to calling bm25_score for each exemplar.
  std::vector<double> bm25_scores(std::string_view query_text) const;

  // Binary format: "DIVSEL-MEM" magic, u32 version, BM25 params, dim, records,
  // trailing FNV-1a checksum. Lexical stats are rebuilt on load.
  void persist(const std::filesystem::path& path) const;
  static Memory load(const std::filesystem::path& path);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  Memory() = default;
  static Memory from_records(std::vector<ExemplarRecord> records, Bm25Params params,
                             bool normalize);
  double idf(std::size_t df) const;

  std::vector<Exemplar> exemplars_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::string>> label_index_;
  LexicalStats stats_;
  Bm25Params params_;
  std::size_t dim_ = 0;
};

// Per-term BM25 contribution; shared by the single and bulk scorers so both
// produce bit-identical sums.
double bm25_term_weight(double idf, double tf, double doc_len, double avg_doc_len,
                        const Bm25Params& p);

}  // namespace divsel
