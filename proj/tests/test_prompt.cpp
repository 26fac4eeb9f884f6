#include <gtest/gtest.h>

#include "divsel/error.h"
#include "divsel/prompt.h"

using namespace divsel;

namespace {

DialogueContext history(std::size_t turns) {
  DialogueContext ctx;
  ctx.current = "book a taxi to the airport";
  for (std::size_t t = 0; t < turns; ++t)
    ctx.turns.push_back({"question number " + std::to_string(t), "answer " + std::to_string(t), {}, {}});
  return ctx;
}

std::vector<PromptExemplar> exemplars(std::size_t n) {
  std::vector<PromptExemplar> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"e" + std::to_string(i), "example utterance " + std::to_string(i), "label_" + std::to_string(i)});
  return out;
}

}  // namespace

TEST(Summary, Examples) {
  EXPECT_EQ(summarize_history(history(0), 100), "");
  const auto ctx = history(3);
  EXPECT_EQ(summarize_history(ctx, 1000),
            "User: question number 0\nAgent: answer 0\nUser: question number 1\nAgent: answer 1\n"
            "User: question number 2\nAgent: answer 2");
  EXPECT_EQ(summarize_history(ctx, 0), "");
}

TEST(Summary, CapAdmitsLastTurnsInOrder) {
  const auto ctx = history(10);
  // Token-count oracle: each rendered turn costs the same here.
  const std::size_t per_turn = count_tokens(render_turn(ctx.turns[0]));
  const std::string s = summarize_history(ctx, 3 * per_turn + per_turn / 2);
  EXPECT_EQ(s, render_turn(ctx.turns[7]) + "\n" + render_turn(ctx.turns[8]) + "\n" + render_turn(ctx.turns[9]));
}

TEST(Summary, PartialFillUsesExactCap) {
  const auto ctx = history(10);
  for (std::size_t cap : {1u, 7u, 20u, 33u}) {
    const HistorySummary h = summarize_history_turns(ctx, cap, true);
    EXPECT_EQ(count_tokens(h.text()), cap);
  }
  EXPECT_EQ(tail_tokens("User: hi, there", 1), "there");
  EXPECT_EQ(tail_tokens("User: hi, there", 2), ", there");
  EXPECT_EQ(tail_tokens("User: hi, there", 3), "hi, there");
  EXPECT_EQ(count_tokens(tail_tokens("User: hi, there", 3)), 3u);
}

TEST(Compose, AmpleBudget) {
  const auto ex = exemplars(2);
  BudgetConfig b;
  const Prompt p = compose(kDefaultInstruction, history(2), ex, b);
  EXPECT_NE(p.text.find("User: example utterance 0 => Intent: label_0"), std::string::npos);
  EXPECT_NE(p.text.find("User: example utterance 1 => Intent: label_1"), std::string::npos);
  EXPECT_EQ(p.token_count, count_tokens(p.text));
  EXPECT_TRUE(p.dropped_exemplars.empty());
  const auto at = [&](const char* s) { return p.text.find(s); };
  EXPECT_LT(at("Context Summary:"), at("Current Utterance:"));
  EXPECT_LT(at("Current Utterance:"), at("Exemplars:"));
  EXPECT_LT(at("Exemplars:"), at("Answer format:"));
}

TEST(Compose, CompressionShrinksSummaryThenExemplars) {
  const auto ex = exemplars(3);
  BudgetConfig b;
  b.max_prompt_tokens = 10000;
  const Prompt full = compose(kDefaultInstruction, history(0), ex, b);
  b.max_prompt_tokens = full.token_count - 1;
  b.summary_token_cap = b.max_prompt_tokens / 2;
  const Prompt p = compose(kDefaultInstruction, history(4), ex, b);
  EXPECT_EQ(p.summary_turns, 0u);
  EXPECT_EQ(p.summary_turns_dropped, 4u);
  ASSERT_EQ(p.dropped_exemplars.size(), 1u);
  EXPECT_EQ(p.dropped_exemplars[0].id, "e2");
  EXPECT_LE(p.token_count, b.max_prompt_tokens);
  for (std::size_t i = 1; i < p.compression_trace.size(); ++i)
    EXPECT_LT(p.compression_trace[i], p.compression_trace[i - 1]);

  b.compression = CompressionPolicy::kNone;
  EXPECT_THROW(compose(kDefaultInstruction, history(4), ex, b), CompositionError);
}

TEST(Compose, InstructionAloneOverBudget) {
  BudgetConfig b;
  b.max_prompt_tokens = 10;
  b.summary_token_cap = 5;
  EXPECT_THROW(compose(kDefaultInstruction, history(1), exemplars(1), b), CompositionError);
}

TEST(Compose, PermutationKeepsTokenCount) {
  const auto ex = exemplars(5);
  BudgetConfig b;
  const Prompt base = compose(kDefaultInstruction, history(3), ex, b);
  for (auto mode : {PermutationMode::kReverse, PermutationMode::kSeeded}) {
    const Prompt p = compose(kDefaultInstruction, history(3), ex, b, make_permutation(5, mode, 17));
    EXPECT_EQ(p.token_count, base.token_count);
  }
  const Prompt rev = compose(kDefaultInstruction, history(3), ex, b, make_permutation(5, PermutationMode::kReverse));
  EXPECT_EQ(rev.exemplars.front().id, "e4");
  EXPECT_THROW(compose(kDefaultInstruction, history(3), ex, b, std::vector<std::size_t>{0, 0, 1, 2, 3}),
               ConfigError);
}

TEST(Compose, FillSummaryHitsTargetExactly) {
  BudgetConfig b;
  b.fill_summary = true;
  for (std::size_t target : {260u, 285u, 310u, 330u, 360u}) {
    b.max_prompt_tokens = target;
    b.summary_token_cap = 128;
    for (std::size_t k : {0u, 2u, 7u}) {
      const Prompt p = compose(kDefaultInstruction, history(40), exemplars(k), b);
      EXPECT_EQ(p.token_count, target);
    }
  }
}

TEST(Compose, DeterministicAndZeroShot) {
  BudgetConfig b;
  const Prompt a = compose(kDefaultInstruction, history(3), exemplars(3), b);
  const Prompt c = compose(kDefaultInstruction, history(3), exemplars(3), b);
  EXPECT_EQ(a.text, c.text);
  const Prompt z = compose(kDefaultInstruction, history(0), {}, b);
  EXPECT_TRUE(z.exemplars.empty());
}

TEST(Template, ParseValidatesPlaceholders) {
  EXPECT_NO_THROW(PromptTemplate::parse("{INSTRUCTION}{SUMMARY}{CURRENT}{EXEMPLARS}{ANSWER_FORMAT}"));
  EXPECT_THROW(PromptTemplate::parse("{SUMMARY}{INSTRUCTION}{CURRENT}{EXEMPLARS}{ANSWER_FORMAT}"), ConfigError);
  EXPECT_THROW(PromptTemplate::parse("{INSTRUCTION}{SUMMARY}{CURRENT}{EXEMPLARS}"), ConfigError);
  const auto t = PromptTemplate::parse("[{INSTRUCTION}|{SUMMARY}|{CURRENT}|{EXEMPLARS}|{ANSWER_FORMAT}]");
  EXPECT_EQ(t.render("i", "s", "c", "e", "a"), "[i|s|c|e|a]");
}

TEST(Budget, ConfigValidation) {
  BudgetConfig b;
  b.summary_token_cap = 2000;
  EXPECT_THROW(b.validate(), ConfigError);
  b.max_prompt_tokens = 0;
  EXPECT_THROW(b.validate(), ConfigError);
}
