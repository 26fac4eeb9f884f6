#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "divsel/encoder.h"

namespace divsel {

using SlotMap = std::map<std::string, std::string>;

// One evaluation turn: the dialogue so far, the gold label, and optionally the
// gold slot state after each past turn.
struct EvalInstance {
  std::string id;
  DialogueContext dialogue;
  std::string gold;
  std::vector<SlotMap> turn_slots;  // empty, or one map per turn

  void validate() const;
};

// Line-delimited records:
//   {"id", "turns": [{"user", "agent", "user_embedding", "agent_embedding",
//   "slots"?}...], "current", "current_embedding", "gold"}
// "gold" is a label string or a slot object; objects are rendered to the
// canonical state string at ingestion. Throws IngestError with the line number.
std::vector<EvalInstance> read_corpus(std::istream& in);
std::vector<EvalInstance> read_corpus(const std::filesystem::path& path);

void write_corpus(std::ostream& out, const std::vector<EvalInstance>& instances);
void write_corpus(const std::filesystem::path& path, const std::vector<EvalInstance>& instances);

}  // namespace divsel
