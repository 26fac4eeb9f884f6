#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsel/prompt.h"
#include "divsel/retrieval.h"

namespace divsel {

// Wire payloads of the verifier boundary.
struct VerifierRequest {
  std::string prompt_text;
  std::string question_text;
  std::string label;
};

struct VerifierReply {
  double logp_yes = 0.0;
  double logp_no = 0.0;
};

inline constexpr int kVerifierProtocolVersion = 1;

std::string encode_request(const VerifierRequest& req);
VerifierRequest decode_request(std::string_view body);
std::string encode_reply(const VerifierReply& reply);
// Throws ProtocolError on malformed JSON, missing fields or non-finite values.
VerifierReply decode_reply(std::string_view body);

// Answers "Is intent = y?" with yes/no log-probabilities.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual VerifierReply query(const VerifierRequest& req) = 0;
};

// In-process stand-in: log-odds +margin for the gold label, and
// -margin plus seeded noise in [-margin/10, margin/10] for every other label.
// Noise is keyed on (seed, label), so replies do not depend on call order.
class MockVerifier final : public Verifier {
 public:
  MockVerifier(std::string gold_label, std::uint64_t noise_seed, double margin);
  VerifierReply query(const VerifierRequest& req) override;

 private:
  std::string gold_;
  std::uint64_t seed_;
  double margin_;
};

// POSTs encode_request() JSON to an HTTP endpoint. The bearer token is read
// from the named environment variable if it is set.
class HttpVerifier final : public Verifier {
 public:
  HttpVerifier(std::string url, std::string token_env = "DIVSEL_VERIFIER_TOKEN",
               std::chrono::milliseconds timeout = std::chrono::seconds(30));
  VerifierReply query(const VerifierRequest& req) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string token_;
  std::chrono::milliseconds timeout_;
};

struct VerifierOutput {
  std::vector<std::string> candidate_set;
  std::map<std::string, double> scores;      // log-odds S(y | prompt)
  std::map<std::string, double> calibrated;  // logistic(S / tau_c)
  std::string decision;
  std::size_t calls = 0;
};

std::string verifier_question(std::string_view label);
double logistic(double x);

// Labels of the selected exemplars (first-seen order), then labels of the
// top `shortlist` pool candidates not already present. Throws ConfigError if
// the result is empty.
std::vector<std::string> candidate_labels(std::span<const std::string> selected_labels,
                                          const Pool& pool, std::size_t shortlist);

// Arg max of scores; ties go to the lexicographically smallest label.
std::string decide(const std::map<std::string, double>& scores);

// One verifier call per label. Transport errors propagate and no partial
// output is returned.
VerifierOutput score_labels(const Prompt& prompt, std::span<const std::string> labels,
                            Verifier& verifier, double tau_c = 1.0);

}  // namespace divsel
