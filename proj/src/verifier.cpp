#include "divsel/verifier.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "divsel/error.h"
#include "divsel/rng.h"
#include "divsel/text.h"
#include "httplib.h"
#include "json.hpp"

namespace divsel {

using nlohmann::json;

std::string encode_request(const VerifierRequest& req) {
  json j = {{"version", kVerifierProtocolVersion},
            {"prompt_text", req.prompt_text},
            {"question_text", req.question_text},
            {"label", req.label}};
  return j.dump();
}

VerifierRequest decode_request(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("verifier request is not a JSON object");
  VerifierRequest r;
  try {
    r.prompt_text = j.at("prompt_text").get<std::string>();
    r.question_text = j.at("question_text").get<std::string>();
    r.label = j.at("label").get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("verifier request: ") + e.what());
  }
  return r;
}

std::string encode_reply(const VerifierReply& reply) {
  return json{{"logp_yes", reply.logp_yes}, {"logp_no", reply.logp_no}}.dump();
}

VerifierReply decode_reply(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("verifier reply is not a JSON object");
  VerifierReply r;
  try {
    if (!j.at("logp_yes").is_number() || !j.at("logp_no").is_number())
      throw ProtocolError("verifier reply fields must be numbers");
    r.logp_yes = j.at("logp_yes").get<double>();
    r.logp_no = j.at("logp_no").get<double>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("verifier reply: ") + e.what());
  }
  if (!std::isfinite(r.logp_yes) || !std::isfinite(r.logp_no) || r.logp_yes > 0.0 || r.logp_no > 0.0)
    throw ProtocolError("verifier reply log-probabilities must be finite and <= 0");
  return r;
}

MockVerifier::MockVerifier(std::string gold_label, std::uint64_t noise_seed, double margin)
    : gold_(std::move(gold_label)), seed_(noise_seed), margin_(margin) {
  if (!(margin > 0.0)) throw ConfigError("mock verifier margin must be > 0");
}

VerifierReply MockVerifier::query(const VerifierRequest& req) {
  double log_odds = margin_;
  if (normalize_label(req.label) != normalize_label(gold_)) {
    Rng rng(derive_seed(seed_, fnv1a64(req.label)));
    log_odds = -margin_ + rng.uniform(-0.1, 0.1) * margin_;
  }
  // log p(yes) - log p(no) == log_odds for p(yes) = logistic(log_odds).
  return {-std::log1p(std::exp(-log_odds)), -std::log1p(std::exp(log_odds))};
}

HttpVerifier::HttpVerifier(std::string url, std::string token_env, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("verifier endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (!token_env.empty())
    if (const char* tok = std::getenv(token_env.c_str())) token_ = tok;
}

VerifierReply HttpVerifier::query(const VerifierRequest& req) {
  httplib::Client cli(origin_);
  if (!cli.is_valid()) throw ConfigError("unsupported verifier endpoint " + origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = cli.Post(path_, headers, encode_request(req), "application/json");
  if (!res) throw TransportError("verifier transport failure: " + httplib::to_string(res.error()));
  if (res->status >= 500)
    throw TransportError("verifier endpoint returned HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw ProtocolError("verifier endpoint returned HTTP " + std::to_string(res->status));
  return decode_reply(res->body);
}

std::string verifier_question(std::string_view label) {
  return "Is intent = " + std::string(label) + "?";
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::string> candidate_labels(std::span<const std::string> selected_labels,
                                          const Pool& pool, std::size_t shortlist) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  auto push = [&](const std::string& l) {
    if (seen.insert(l).second) out.push_back(l);
  };
  for (const auto& l : selected_labels) push(l);
  for (std::size_t i = 0; i < std::min(shortlist, pool.size()); ++i) push(pool[i].label);
  if (out.empty()) throw ConfigError("no candidate labels: empty selection and zero shortlist");
  return out;
}

std::string decide(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw ConfigError("cannot decide over an empty score map");
  // std::map iterates labels in lexicographic order, so strict > keeps the
  // smallest label among ties.
  auto best = scores.begin();
  for (auto it = scores.begin(); it != scores.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

VerifierOutput score_labels(const Prompt& prompt, std::span<const std::string> labels,
                            Verifier& verifier, double tau_c) {
  if (!(tau_c > 0.0)) throw ConfigError("calibration temperature must be > 0");
  if (labels.empty()) throw ConfigError("score_labels: empty label set");
  VerifierOutput out;
  out.candidate_set.assign(labels.begin(), labels.end());
  for (const auto& label : labels) {
    const VerifierReply reply = verifier.query({prompt.text, verifier_question(label), label});
    ++out.calls;
    const double s = reply.logp_yes - reply.logp_no;
    if (!std::isfinite(s)) throw ProtocolError("verifier returned non-finite log-odds for " + label);
    out.scores[label] = s;
    out.calibrated[label] = logistic(s / tau_c);
  }
  out.decision = decide(out.scores);
  return out;
}

}  // namespace divsel
