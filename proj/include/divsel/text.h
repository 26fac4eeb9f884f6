#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace divsel {

// Tokenization shared by BM25 and prompt accounting.
//
// Text is lowercased (ASCII only) and split on whitespace and ASCII
// punctuation. Bytes >= 0x80 are treated as word characters, so UTF-8 input
// never splits inside a code point.

// Word tokens only; punctuation acts as a separator. Used for BM25 terms.
std::vector<std::string> tokenize_terms(std::string_view text);

// Word tokens plus every punctuation character as its own token.
// "taxi, now!" -> {"taxi", ",", "now", "!"}
std::vector<std::string> tokenize(std::string_view text);

// Pluggable token counter. The default counts tokenize(text).size().
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

class RuleTokenCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
};

std::size_t count_tokens(std::string_view text);

const TokenCounter& default_token_counter();

// Lowercase + trim surrounding whitespace.
std::string normalize_label(std::string_view s);

std::string trim(std::string_view s);

// 64-bit FNV-1a; stable across platforms, used for seeds and config hashes.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace divsel
