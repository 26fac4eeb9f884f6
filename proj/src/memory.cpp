#include "divsel/memory.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "divsel/error.h"
#include "divsel/text.h"
#include "json.hpp"

namespace divsel {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "DIVSEL-MEM";

static_assert(std::endian::native == std::endian::little,
              "persisted memory format assumes a little-endian host");

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    auto n = pod<std::uint64_t>();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw FormatError("memory file truncated at byte " + std::to_string(pos_));
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

ExemplarRecord parse_record(const json& j) {
  ExemplarRecord r;
  auto get_str = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string())
      throw IngestError(std::string("record missing string field \"") + key + "\"");
    return j[key].get<std::string>();
  };
  r.id = get_str("id");
  r.text = get_str("text");
  r.label = get_str("label");
  if (!j.contains("embedding") || !j["embedding"].is_array())
    throw IngestError("record " + r.id + " missing numeric array \"embedding\"");
  for (const auto& x : j["embedding"]) {
    if (!x.is_number()) throw IngestError("record " + r.id + " has a non-numeric embedding entry");
    r.embedding.push_back(x.get<double>());
  }
  return r;
}

}  // namespace

std::vector<ExemplarRecord> read_records(std::istream& in) {
  std::vector<ExemplarRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestError("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      out.push_back(parse_record(j));
    } catch (const IngestError& e) {
      throw IngestError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ExemplarRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return read_records(in);
}

void write_records(std::ostream& out, const std::vector<ExemplarRecord>& records) {
  for (const auto& r : records) {
    json j = {{"id", r.id}, {"text", r.text}, {"label", r.label}, {"embedding", r.embedding}};
    out << j.dump() << '\n';
  }
}

std::size_t LexicalStats::document_frequency(const std::string& term) const {
  auto it = postings.find(term);
  return it == postings.end() ? 0 : it->second.size();
}

double bm25_term_weight(double idf, double tf, double doc_len, double avg_doc_len,
                        const Bm25Params& p) {
  const double norm = avg_doc_len > 0.0 ? doc_len / avg_doc_len : 0.0;
  return idf * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

Memory Memory::build(std::vector<ExemplarRecord> records, Bm25Params params) {
  return from_records(std::move(records), params, true);
}

Memory Memory::from_records(std::vector<ExemplarRecord> records, Bm25Params params,
                            bool normalize) {
  if (records.empty()) throw IngestError("empty exemplar stream");
  if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0))
    throw ConfigError("BM25 parameters out of range (k1 >= 0, 0 <= b <= 1)");

  Memory m;
  m.params_ = params;
  m.dim_ = records.front().embedding.size();
  if (m.dim_ == 0) throw IngestError("record " + records.front().id + " has an empty embedding");
  m.exemplars_.reserve(records.size());

  for (auto& r : records) {
    if (r.id.empty()) throw IngestError("record with empty id");
    if (r.embedding.size() != m.dim_)
      throw IngestError("record " + r.id + ": embedding dimension " +
                        std::to_string(r.embedding.size()) + " != " + std::to_string(m.dim_));
    if (trim(r.label).empty()) throw IngestError("record " + r.id + ": empty label");
    if (m.by_id_.count(r.id)) throw IngestError("duplicate exemplar id " + r.id);
    Vec e;
    try {
      e = normalize ? normalized(r.embedding) : std::move(r.embedding);
    } catch (const DimensionError& err) {
      throw IngestError("record " + r.id + ": " + err.what());
    }
    if (std::abs(l2_norm(e) - 1.0) > 1e-6) throw IngestError("record " + r.id + ": embedding is not unit length");
    m.by_id_.emplace(r.id, m.exemplars_.size());
    m.label_index_[r.label].push_back(r.id);
    m.exemplars_.push_back({std::move(r.id), std::move(r.text), std::move(r.label), std::move(e)});
  }

  auto& st = m.stats_;
  st.term_counts.resize(m.exemplars_.size());
  st.doc_length.resize(m.exemplars_.size());
  double total_len = 0.0;
  for (std::size_t i = 0; i < m.exemplars_.size(); ++i) {
    auto terms = tokenize_terms(m.exemplars_[i].text);
    st.doc_length[i] = static_cast<std::uint32_t>(terms.size());
    total_len += static_cast<double>(terms.size());
    for (auto& t : terms) ++st.term_counts[i][t];
    // Postings are appended in document order so bulk scoring visits docs
    // deterministically.
    for (const auto& [term, tf] : st.term_counts[i])
      st.postings[term].push_back({static_cast<std::uint32_t>(i), tf});
  }
  st.avg_doc_length = total_len / static_cast<double>(m.exemplars_.size());
  return m;
}

std::size_t Memory::index_of(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw LookupError("unknown exemplar id " + std::string(id));
  return it->second;
}

bool Memory::contains(std::string_view id) const { return by_id_.count(std::string(id)) > 0; }

double Memory::idf(std::size_t df) const {
  const double n = static_cast<double>(exemplars_.size());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Memory::bm25_score(std::string_view query_text, std::string_view exemplar_id) const {
  const std::size_t doc = index_of(exemplar_id);
  const auto& counts = stats_.term_counts[doc];
  double score = 0.0;
  for (const auto& term : tokenize_terms(query_text)) {
    auto it = counts.find(term);
    if (it == counts.end()) continue;
    score += bm25_term_weight(idf(stats_.document_frequency(term)), it->second,
                              stats_.doc_length[doc], stats_.avg_doc_length, params_);
  }
  return score;
}

std::vector<double> Memory::bm25_scores(std::string_view query_text) const {
  std::vector<double> scores(exemplars_.size(), 0.0);
  for (const auto& term : tokenize_terms(query_text)) {
    auto it = stats_.postings.find(term);
    if (it == stats_.postings.end()) continue;
    const double w_idf = idf(it->second.size());
    for (const auto& p : it->second)
      scores[p.doc] += bm25_term_weight(w_idf, p.tf, stats_.doc_length[p.doc],
                                        stats_.avg_doc_length, params_);
  }
  return scores;
}

void Memory::persist(const std::filesystem::path& path) const {
  Writer w;
  w.raw(kMagic);
  w.pod(kFormatVersion);
  w.pod(params_.k1);
  w.pod(params_.b);
  w.pod(static_cast<std::uint32_t>(dim_));
  w.pod(static_cast<std::uint64_t>(exemplars_.size()));
  for (const auto& e : exemplars_) {
    w.str(e.id);
    w.str(e.text);
    w.str(e.label);
    for (double x : e.embedding) w.pod(x);
  }
  const std::uint64_t checksum = fnv1a64(w.buffer());
  w.pod(checksum);

  // Write to a sibling temp file and rename so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Memory Memory::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open memory file " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < kMagic.size() || std::string_view(data).substr(0, kMagic.size()) != kMagic)
    throw FormatError(path.string() + ": missing DIVSEL-MEM header");
  Reader r(std::string_view(data).substr(kMagic.size()));
  const auto version = r.pod<std::uint32_t>();
  if (version != kFormatVersion)
    throw VersionError(path.string() + ": format version " + std::to_string(version) +
                       ", reader expects " + std::to_string(kFormatVersion));
  if (data.size() < kMagic.size() + sizeof(std::uint64_t))
    throw FormatError(path.string() + ": truncated");
  const std::size_t body = data.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + body, sizeof(stored));
  if (fnv1a64(std::string_view(data).substr(0, body)) != stored)
    throw FormatError(path.string() + ": checksum mismatch (truncated or corrupt file)");

  Reader rb(std::string_view(data).substr(kMagic.size(), body - kMagic.size()));
  rb.pod<std::uint32_t>();
  Bm25Params params;
  params.k1 = rb.pod<double>();
  params.b = rb.pod<double>();
  const auto dim = rb.pod<std::uint32_t>();
  const auto n = rb.pod<std::uint64_t>();
  if (n == 0 || n > rb.remaining()) throw FormatError(path.string() + ": bad record count");
  std::vector<ExemplarRecord> records;
  records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ExemplarRecord rec;
    rec.id = rb.str();
    rec.text = rb.str();
    rec.label = rb.str();
    rec.embedding.resize(dim);
    for (auto& x : rec.embedding) x = rb.pod<double>();
    records.push_back(std::move(rec));
  }
  if (rb.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after records");
  try {
    return from_records(std::move(records), params, false);
  } catch (const IngestError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace divsel
