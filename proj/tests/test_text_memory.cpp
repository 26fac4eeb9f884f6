#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "divsel/error.h"
#include "divsel/memory.h"
#include "divsel/retrieval.h"
#include "divsel/text.h"
#include "gen.h"

using namespace divsel;
namespace fs = std::filesystem;

namespace {

ExemplarRecord rec(std::string id, std::string text, std::string label, Vec e) {
  return {std::move(id), std::move(text), std::move(label), std::move(e)};
}

std::vector<ExemplarRecord> small_records() {
  return {rec("a", "book a taxi to the station", "book_taxi", {1, 0, 0}),
          rec("b", "taxi please", "book_taxi", {0.9, 0.1, 0}),
          rec("c", "find a cheap hotel", "find_hotel", {0, 1, 0}),
          rec("d", "hotel in the north with parking", "find_hotel", {0, 0.8, 0.6}),
          rec("e", "what time does the train leave", "find_train", {0, 0, 1})};
}

// Independent Okapi BM25 over whitespace/punctuation terms.
double bm25_oracle(const std::vector<ExemplarRecord>& docs, const std::string& query, std::size_t doc,
                   double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> terms;
  double total = 0;
  for (const auto& d : docs) {
    terms.push_back(tokenize_terms(d.text));
    total += static_cast<double>(terms.back().size());
  }
  const double n = static_cast<double>(docs.size());
  const double avg = total / n;
  double score = 0;
  for (const auto& q : tokenize_terms(query)) {
    double df = 0;
    for (const auto& t : terms) df += std::count(t.begin(), t.end(), q) > 0;
    const double tf = static_cast<double>(std::count(terms[doc].begin(), terms[doc].end(), q));
    if (tf == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double dl = static_cast<double>(terms[doc].size());
    score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avg));
  }
  return score;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("divsel_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Text, TokenCounts) {
  EXPECT_EQ(count_tokens(""), 0u);
  EXPECT_EQ(count_tokens("book a taxi"), 3u);
  EXPECT_EQ(count_tokens("taxi, now!"), 4u);
  EXPECT_EQ(tokenize("Taxi, NOW!"), (std::vector<std::string>{"taxi", ",", "now", "!"}));
  EXPECT_EQ(tokenize_terms("Taxi, NOW!"), (std::vector<std::string>{"taxi", "now"}));
}

TEST(Text, Utf8StaysWhole) {
  EXPECT_EQ(tokenize_terms("caf\xc3\xa9 ok"), (std::vector<std::string>{"caf\xc3\xa9", "ok"}));
}

TEST(Text, NormalizeLabel) {
  EXPECT_EQ(normalize_label("  Book_Taxi \n"), "book_taxi");
  EXPECT_EQ(trim("\t x y  "), "x y");
}

TEST(Memory, BuildNormalizesAndIndexes) {
  auto recs = small_records();
  recs[0].embedding = {3, 0, 0};
  const Memory m = Memory::build(recs);
  EXPECT_EQ(m.size(), 5u);
  EXPECT_EQ(m.dim(), 3u);
  EXPECT_NEAR(l2_norm(m.find("a").embedding), 1.0, 1e-15);
  EXPECT_EQ(m.label_index().at("find_hotel"), (std::vector<std::string>{"c", "d"}));
  EXPECT_TRUE(m.contains("e"));
  EXPECT_THROW(m.index_of("zzz"), LookupError);
}

TEST(Memory, IngestErrorsNameTheRecord) {
  EXPECT_THROW(Memory::build({}), IngestError);
  auto dup = small_records();
  dup[1].id = "a";
  try {
    Memory::build(dup);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
  }
  auto dim = small_records();
  dim[2].embedding = {1, 0};
  try {
    Memory::build(dim);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("c"), std::string::npos);
  }
  auto nolabel = small_records();
  nolabel[3].label = "";
  EXPECT_THROW(Memory::build(nolabel), IngestError);
}

TEST(Memory, ReadRecordsReportsLine) {
  std::istringstream in(
      "{\"id\":\"a\",\"text\":\"x\",\"label\":\"l\",\"embedding\":[1,0]}\n\nnot json\n");
  try {
    read_records(in);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Memory, Bm25MatchesOracle) {
  const auto recs = small_records();
  const Memory m = Memory::build(recs);
  for (const std::string q : {"taxi", "cheap hotel", "the train the", "taxi taxi station", "nothing"}) {
    const auto all = m.bm25_scores(q);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      EXPECT_NEAR(m.bm25_score(q, recs[i].id), bm25_oracle(recs, q, i), 1e-12) << q << " " << i;
      EXPECT_EQ(all[i], m.bm25_score(q, recs[i].id));
    }
  }
}

TEST(Memory, Bm25RareTermOutscoresCommon) {
  const Memory m = Memory::build(small_records());
  EXPECT_GT(m.bm25_score("parking", "d"), m.bm25_score("the", "d"));
  EXPECT_EQ(m.bm25_score("zebra", "a"), 0.0);
}

TEST(Memory, PersistLoadRoundTripIsBitExact) {
  Rng rng(11);
  std::vector<ExemplarRecord> recs;
  for (std::size_t i = 0; i < 60; ++i)
    recs.push_back(rec(gen::pad_id("x", i), "w" + std::to_string(i % 7) + " common words here",
                       "l" + std::to_string(i % 5), gen::random_unit(rng, 16)));
  const Memory m = Memory::build(recs);
  const auto path = temp_file("mem.bin");
  m.persist(path);
  const Memory back = Memory::load(path);
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(back.at(i).id, m.at(i).id);
    EXPECT_EQ(back.at(i).embedding, m.at(i).embedding);
  }
  const Vec q = gen::random_unit(rng, 16);
  const Pool p1 = retrieve_pool(m, q, "w3 common", {});
  const Pool p2 = retrieve_pool(back, q, "w3 common", {});
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(p1[i].id, p2[i].id);
    EXPECT_EQ(p1[i].relevance, p2[i].relevance);
    EXPECT_EQ(p1[i].bm25, p2[i].bm25);
    EXPECT_EQ(p1[i].vec_score, p2[i].vec_score);
  }
  fs::remove(path);
}

TEST(Memory, LoadRejectsCorruptionAndVersion) {
  const Memory m = Memory::build(small_records());
  const auto path = temp_file("corrupt.bin");
  m.persist(path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << b;
  };
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  write(flipped);
  EXPECT_THROW(Memory::load(path), FormatError);

  write(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(Memory::load(path), FormatError);

  std::string versioned = bytes;
  versioned[10] = 9;  // first byte of the u32 version after the 10-byte magic
  write(versioned);
  EXPECT_THROW(Memory::load(path), VersionError);

  write("garbage");
  EXPECT_THROW(Memory::load(path), FormatError);
  fs::remove(path);
}

TEST(Retrieval, HybridRelevanceExamples) {
  EXPECT_DOUBLE_EQ(hybrid_relevance(1.0, 1.0, 0.6), 1.0);
  EXPECT_DOUBLE_EQ(hybrid_relevance(-1.0, 0.0, 0.6), 0.0);
  EXPECT_DOUBLE_EQ(hybrid_relevance(0.0, 0.5, 0.6), 0.5);
  EXPECT_DOUBLE_EQ(hybrid_relevance(0.5, 0.0, 1.0), 0.75);
}

TEST(Retrieval, PoolIsSortedAndNormalized) {
  const Memory m = Memory::build(small_records());
  RetrievalConfig cfg;
  cfg.pool_size = 3;
  const Pool p = retrieve_pool(m, Vec{1, 0.05, 0}, "taxi please", cfg);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].id, "b");
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_GE(p[i - 1].relevance, p[i].relevance);
  for (const auto& c : p) {
    EXPECT_GE(c.lex_score, 0.0);
    EXPECT_LE(c.lex_score, 1.0);
    EXPECT_NEAR(c.relevance, hybrid_relevance(c.vec_score, c.lex_score, 0.6), 1e-15);
  }
  EXPECT_THROW(retrieve_pool(m, Vec{1, 0}, "x", cfg), DimensionError);
}

TEST(Retrieval, AllEqualLexicalScoresParkMidScale) {
  const Memory m = Memory::build(small_records());
  const Pool p = retrieve_pool(m, Vec{0, 0, 1}, "zebra", {});
  for (const auto& c : p) EXPECT_EQ(c.lex_score, 0.5);
  EXPECT_EQ(p[0].id, "e");
}

TEST(Retrieval, SmallerPoolIsPrefixOfLarger) {
  Rng rng(5);
  std::vector<ExemplarRecord> recs;
  for (std::size_t i = 0; i < 200; ++i)
    recs.push_back(rec(gen::pad_id("x", i), "t" + std::to_string(i % 13), "l", gen::random_unit(rng, 8)));
  const Memory m = Memory::build(recs);
  const Vec q = gen::random_unit(rng, 8);
  RetrievalConfig big, small;
  big.pool_size = 128;
  small.pool_size = 32;
  const Pool pb = retrieve_pool(m, q, "t3 t4", big), ps = retrieve_pool(m, q, "t3 t4", small);
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps[i].id, pb[i].id);
}
