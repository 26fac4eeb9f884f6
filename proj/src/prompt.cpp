#include "divsel/prompt.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <numeric>

#include "divsel/error.h"
#include "divsel/rng.h"

namespace divsel {

const char* const kDefaultInstruction =
    "You are a customer-service agent. Given the dialogue history and the current user "
    "utterance, predict the intent of the current utterance. Answer with exactly one intent "
    "label.";

const char* const kDefaultAnswerFormat = "Intent: <label>";

namespace {

constexpr const char* kStandardTemplate =
    "{INSTRUCTION}\n"
    "Context Summary:\n"
    "{SUMMARY}\n"
    "Current Utterance: {CURRENT}\n"
    "Exemplars:\n"
    "{EXEMPLARS}\n"
    "Answer format: {ANSWER_FORMAT}\n";

constexpr std::string_view kSlots[] = {"{INSTRUCTION}", "{SUMMARY}", "{CURRENT}", "{EXEMPLARS}",
                                       "{ANSWER_FORMAT}"};

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace

void BudgetConfig::validate() const {
  if (max_prompt_tokens == 0) throw ConfigError("max_prompt_tokens must be positive");
  if (summary_token_cap == 0 && !fill_summary)
    throw ConfigError("summary_token_cap must be positive");
  if (summary_token_cap > max_prompt_tokens)
    throw ConfigError("summary_token_cap must not exceed max_prompt_tokens");
}

PromptTemplate PromptTemplate::standard() { return PromptTemplate(kStandardTemplate); }

PromptTemplate PromptTemplate::parse(std::string text) {
  std::size_t from = 0;
  for (auto slot : kSlots) {
    const auto at = text.find(slot, from);
    if (at == std::string::npos)
      throw ConfigError("prompt template: missing or out-of-order placeholder " + std::string(slot));
    if (text.find(slot, at + slot.size()) != std::string::npos)
      throw ConfigError("prompt template: placeholder repeated " + std::string(slot));
    from = at + slot.size();
  }
  return PromptTemplate(std::move(text));
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prompt template " + path.string());
  return parse(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::string PromptTemplate::render(std::string_view instruction, std::string_view summary,
                                   std::string_view current, std::string_view exemplars,
                                   std::string_view answer_format) const {
  const std::string_view values[] = {instruction, summary, current, exemplars, answer_format};
  std::string out;
  out.reserve(text_.size() + instruction.size() + summary.size() + exemplars.size() + 64);
  std::size_t from = 0;
  for (std::size_t i = 0; i < std::size(kSlots); ++i) {
    const auto at = text_.find(kSlots[i], from);
    out.append(text_, from, at - from);
    out.append(values[i]);
    from = at + kSlots[i].size();
  }
  out.append(text_, from, std::string::npos);
  return out;
}

std::string HistorySummary::text() const { return join_lines(turns); }

std::string render_turn(const Turn& turn) { return "User: " + turn.user + "\nAgent: " + turn.agent; }

std::string render_exemplar(const PromptExemplar& e) {
  return "User: " + e.text + " => Intent: " + e.label;
}

std::string tail_tokens(std::string_view text, std::size_t n) {
  if (n == 0) return {};
  // Token start offsets, matching RuleTokenCounter's boundaries.
  std::vector<std::size_t> starts;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80 && std::isspace(c)) {
      in_word = false;
    } else if (c < 0x80 && std::ispunct(c)) {
      starts.push_back(i);
      in_word = false;
    } else {
      if (!in_word) starts.push_back(i);
      in_word = true;
    }
  }
  if (n >= starts.size()) return std::string(text);
  return std::string(text.substr(starts[starts.size() - n]));
}

HistorySummary summarize_history_turns(const DialogueContext& ctx, std::size_t cap,
                                       bool allow_partial, const TokenCounter& counter) {
  HistorySummary out;
  std::size_t used = 0;
  for (std::size_t i = ctx.turns.size(); i-- > 0;) {
    const std::string rendered = render_turn(ctx.turns[i]);
    const std::size_t cost = counter.count(rendered);
    if (used + cost <= cap) {
      out.turns.push_back(rendered);
      used += cost;
      continue;
    }
    if (allow_partial && used < cap) {
      out.turns.push_back(tail_tokens(rendered, cap - used));
      out.partial = true;
    }
    break;
  }
  std::reverse(out.turns.begin(), out.turns.end());
  return out;
}

std::string summarize_history(const DialogueContext& ctx, std::size_t cap,
                              const TokenCounter& counter) {
  return summarize_history_turns(ctx, cap, false, counter).text();
}

Prompt compose(std::string_view instruction, const DialogueContext& ctx,
               std::span<const PromptExemplar> exemplars, const BudgetConfig& budget,
               const std::optional<std::vector<std::size_t>>& permutation,
               const PromptTemplate& tmpl, const TokenCounter& counter,
               std::string_view answer_format) {
  budget.validate();
  Prompt p;
  p.instruction = instruction;
  p.current = ctx.current;
  p.answer_format = answer_format;

  if (permutation) {
    std::vector<std::size_t> check = *permutation;
    std::sort(check.begin(), check.end());
    for (std::size_t i = 0; i < check.size(); ++i)
      if (check[i] != i || check.size() != exemplars.size())
        throw ConfigError("exemplar permutation is not a permutation of 0.." +
                          std::to_string(exemplars.size()));
    for (auto i : *permutation) p.exemplars.push_back(exemplars[i]);
  } else {
    p.exemplars.assign(exemplars.begin(), exemplars.end());
  }

  auto exemplar_block = [&] {
    std::vector<std::string> lines;
    for (const auto& e : p.exemplars) lines.push_back(render_exemplar(e));
    return join_lines(lines);
  };
  auto render = [&](const std::string& summary) {
    return tmpl.render(p.instruction, summary, p.current, exemplar_block(), p.answer_format);
  };

  const std::size_t floor_tokens =
      counter.count(tmpl.render(p.instruction, "", p.current, "", p.answer_format));
  if (floor_tokens > budget.max_prompt_tokens)
    throw CompositionError("instruction, current utterance and answer format alone need " +
                           std::to_string(floor_tokens) + " tokens, budget is " +
                           std::to_string(budget.max_prompt_tokens));

  HistorySummary summary;
  if (budget.fill_summary) {
    const std::size_t rest = counter.count(render(""));
    const std::size_t room = rest < budget.max_prompt_tokens ? budget.max_prompt_tokens - rest : 0;
    summary = summarize_history_turns(ctx, room, true, counter);
  } else {
    summary = summarize_history_turns(ctx, budget.summary_token_cap, false, counter);
  }

  p.text = render(summary.text());
  p.token_count = counter.count(p.text);
  while (p.token_count > budget.max_prompt_tokens) {
    if (budget.compression == CompressionPolicy::kNone)
      throw CompositionError("prompt needs " + std::to_string(p.token_count) +
                             " tokens, budget is " + std::to_string(budget.max_prompt_tokens));
    if (!summary.turns.empty()) {
      summary.turns.erase(summary.turns.begin());
      summary.partial = false;
      ++p.summary_turns_dropped;
    } else if (!p.exemplars.empty()) {
      p.dropped_exemplars.insert(p.dropped_exemplars.begin(), p.exemplars.back());
      p.exemplars.pop_back();
    } else {
      throw CompositionError("prompt cannot be compressed under the budget");
    }
    p.text = render(summary.text());
    p.token_count = counter.count(p.text);
    p.compression_trace.push_back(p.token_count);
  }
  p.summary = summary.text();
  p.summary_turns = summary.turns.size();
  p.summary_partial = summary.partial;
  return p;
}

std::vector<std::size_t> make_permutation(std::size_t n, PermutationMode mode, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  switch (mode) {
    case PermutationMode::kIdentity: break;
    case PermutationMode::kReverse: std::reverse(perm.begin(), perm.end()); break;
    case PermutationMode::kSeeded: {
      Rng rng(seed);
      rng.shuffle(perm);
      break;
    }
  }
  return perm;
}

}  // namespace divsel
