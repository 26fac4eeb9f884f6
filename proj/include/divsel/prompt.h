#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsel/encoder.h"
#include "divsel/text.h"

namespace divsel {

struct PromptExemplar {
  std::string id;
  std::string text;
  std::string label;
};

enum class CompressionPolicy {
  kSummaryThenExemplars,  // drop oldest summary turns, then trailing exemplars
  kNone,                  // fail if over budget
};

struct BudgetConfig {
  std::size_t max_prompt_tokens = 1024;
  std::size_t summary_token_cap = 128;
  CompressionPolicy compression = CompressionPolicy::kSummaryThenExemplars;
  // Grow the summary to use every token left under max_prompt_tokens; the
  // oldest admitted turn may be cut to its trailing tokens. Used to hold
  // prompts at an exact token target.
  bool fill_summary = false;

  void validate() const;
};

// Sectioned template with {INSTRUCTION} {SUMMARY} {CURRENT} {EXEMPLARS}
// {ANSWER_FORMAT}, each exactly once and in that order.
class PromptTemplate {
 public:
  static PromptTemplate standard();
  static PromptTemplate parse(std::string text);
  static PromptTemplate load(const std::filesystem::path& path);

  std::string render(std::string_view instruction, std::string_view summary,
                     std::string_view current, std::string_view exemplars,
                     std::string_view answer_format) const;
  const std::string& text() const { return text_; }

 private:
  explicit PromptTemplate(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

extern const char* const kDefaultInstruction;
extern const char* const kDefaultAnswerFormat;

struct Prompt {
  std::string instruction;
  std::string summary;
  std::string current;
  std::vector<PromptExemplar> exemplars;  // in rendered order
  std::string answer_format;
  std::string text;  // fully rendered
  std::size_t token_count = 0;

  std::size_t summary_turns = 0;          // turns present in the summary
  bool summary_partial = false;           // oldest turn cut to its tail
  std::size_t summary_turns_dropped = 0;  // by compression
  std::vector<PromptExemplar> dropped_exemplars;
  std::vector<std::size_t> compression_trace;  // token_count after each step
};

struct HistorySummary {
  std::vector<std::string> turns;  // rendered, chronological
  bool partial = false;            // turns.front() is a cut tail
  std::string text() const;
};

// "User: <q>\nAgent: <r>"
std::string render_turn(const Turn& turn);
// "User: <text> => Intent: <label>"
std::string render_exemplar(const PromptExemplar& e);

// Extractive, recency-first: whole turns from the most recent backward while
// they fit under `cap` tokens, rendered in chronological order. With
// allow_partial the first turn that does not fit contributes its trailing
// tokens, so the summary uses exactly min(cap, history tokens).
HistorySummary summarize_history_turns(const DialogueContext& ctx, std::size_t cap,
                                       bool allow_partial = false,
                                       const TokenCounter& counter = default_token_counter());
std::string summarize_history(const DialogueContext& ctx, std::size_t cap,
                              const TokenCounter& counter = default_token_counter());

// Suffix of `text` holding its last n tokens, original spelling preserved.
std::string tail_tokens(std::string_view text, std::size_t n);

// Assembles the prompt and enforces the budget. `permutation`, when given,
// reorders the exemplars (it must be a permutation of 0..n-1). Throws
// CompositionError if even the sections without summary or exemplars exceed
// the budget, or if the policy is kNone and the prompt is over budget.
Prompt compose(std::string_view instruction, const DialogueContext& ctx,
               std::span<const PromptExemplar> exemplars, const BudgetConfig& budget,
               const std::optional<std::vector<std::size_t>>& permutation = std::nullopt,
               const PromptTemplate& tmpl = PromptTemplate::standard(),
               const TokenCounter& counter = default_token_counter(),
               std::string_view answer_format = kDefaultAnswerFormat);

enum class PermutationMode { kIdentity, kReverse, kSeeded };
std::vector<std::size_t> make_permutation(std::size_t n, PermutationMode mode, std::uint64_t seed = 0);

}  // namespace divsel
