#include "divsel/text.h"

#include <cctype>

namespace divsel {
namespace {

enum class CharClass { kSpace, kPunct, kWord };

CharClass classify(unsigned char c) {
  if (c >= 0x80) return CharClass::kWord;
  if (std::isspace(c)) return CharClass::kSpace;
  if (std::ispunct(c)) return CharClass::kPunct;
  return CharClass::kWord;
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

template <class Emit>
void scan(std::string_view text, bool keep_punct, Emit&& emit) {
  std::string word;
  for (unsigned char c : text) {
    switch (classify(c)) {
      case CharClass::kWord:
        word.push_back(lower(c));
        break;
      case CharClass::kSpace:
      case CharClass::kPunct:
        if (!word.empty()) {
          emit(std::move(word));
          word.clear();
        }
        if (keep_punct && classify(c) == CharClass::kPunct) emit(std::string(1, static_cast<char>(c)));
        break;
    }
  }
  if (!word.empty()) emit(std::move(word));
}

}  // namespace

std::vector<std::string> tokenize_terms(std::string_view text) {
  std::vector<std::string> out;
  scan(text, false, [&](std::string t) { out.push_back(std::move(t)); });
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  scan(text, true, [&](std::string t) { out.push_back(std::move(t)); });
  return out;
}

std::size_t RuleTokenCounter::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    switch (classify(c)) {
      case CharClass::kWord:
        if (!in_word) ++n;
        in_word = true;
        break;
      case CharClass::kPunct:
        ++n;
        in_word = false;
        break;
      case CharClass::kSpace:
        in_word = false;
        break;
    }
  }
  return n;
}

std::size_t count_tokens(std::string_view text) { return default_token_counter().count(text); }

const TokenCounter& default_token_counter() {
  static const RuleTokenCounter counter;
  return counter;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_label(std::string_view s) {
  std::string out = trim(s);
  for (char& c : out) c = lower(static_cast<unsigned char>(c));
  return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace divsel
