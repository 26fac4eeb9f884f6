#include "divsel/corpus.h"

#include <fstream>

#include "divsel/error.h"
#include "divsel/metrics.h"
#include "divsel/text.h"
#include "json.hpp"

namespace divsel {
namespace {

using nlohmann::json;

Vec read_vec(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw IngestError(std::string("missing array \"") + key + "\"");
  Vec v;
  v.reserve(j[key].size());
  for (const auto& x : j[key]) {
    if (!x.is_number()) throw IngestError(std::string("non-numeric entry in \"") + key + "\"");
    v.push_back(x.get<double>());
  }
  return v;
}

std::string read_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw IngestError(std::string("missing string \"") + key + "\"");
  return j[key].get<std::string>();
}

SlotMap read_slots(const json& j) {
  if (!j.is_object()) throw IngestError("slot state must be an object");
  SlotMap out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) throw IngestError("slot value for " + it.key() + " must be a string");
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

EvalInstance parse_instance(const json& j) {
  if (!j.is_object()) throw IngestError("record is not an object");
  EvalInstance inst;
  inst.id = read_string(j, "id");
  inst.dialogue.current = read_string(j, "current");
  inst.dialogue.current_embedding = read_vec(j, "current_embedding");
  if (!j.contains("gold")) throw IngestError("missing \"gold\"");
  if (j["gold"].is_string())
    inst.gold = j["gold"].get<std::string>();
  else
    inst.gold = canonical_state(read_slots(j["gold"]));
  if (j.contains("turns")) {
    if (!j["turns"].is_array()) throw IngestError("\"turns\" must be an array");
    bool any_slots = false;
    for (const auto& t : j["turns"]) {
      Turn turn;
      turn.user = read_string(t, "user");
      turn.agent = read_string(t, "agent");
      turn.user_embedding = read_vec(t, "user_embedding");
      turn.agent_embedding = read_vec(t, "agent_embedding");
      inst.dialogue.turns.push_back(std::move(turn));
      if (t.contains("slots")) {
        any_slots = true;
        inst.turn_slots.resize(inst.dialogue.turns.size());
        inst.turn_slots.back() = read_slots(t["slots"]);
      }
    }
    if (any_slots) inst.turn_slots.resize(inst.dialogue.turns.size());
  }
  inst.validate();
  return inst;
}

json to_json(const EvalInstance& inst) {
  json turns = json::array();
  for (std::size_t i = 0; i < inst.dialogue.turns.size(); ++i) {
    const Turn& t = inst.dialogue.turns[i];
    json jt = {{"user", t.user},
               {"agent", t.agent},
               {"user_embedding", t.user_embedding},
               {"agent_embedding", t.agent_embedding}};
    if (!inst.turn_slots.empty()) jt["slots"] = inst.turn_slots[i];
    turns.push_back(std::move(jt));
  }
  return {{"id", inst.id},
          {"turns", std::move(turns)},
          {"current", inst.dialogue.current},
          {"current_embedding", inst.dialogue.current_embedding},
          {"gold", inst.gold}};
}

}  // namespace

void EvalInstance::validate() const {
  if (id.empty()) throw IngestError("instance without id");
  if (trim(gold).empty()) throw IngestError("instance " + id + ": empty gold");
  const std::size_t d = dialogue.current_embedding.size();
  if (d == 0) throw IngestError("instance " + id + ": empty current_embedding");
  for (const auto& t : dialogue.turns)
    if (t.user_embedding.size() != d || t.agent_embedding.size() != d)
      throw IngestError("instance " + id + ": turn embedding dimension differs from " +
                        std::to_string(d));
  if (!turn_slots.empty() && turn_slots.size() != dialogue.turns.size())
    throw IngestError("instance " + id + ": slot states do not align with turns");
}

std::vector<EvalInstance> read_corpus(std::istream& in) {
  std::vector<EvalInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_instance(json::parse(line)));
    } catch (const json::exception& e) {
      throw IngestError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const IngestError& e) {
      throw IngestError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalInstance> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<EvalInstance>& instances) {
  for (const auto& inst : instances) out << to_json(inst).dump() << '\n';
}

void write_corpus(const std::filesystem::path& path, const std::vector<EvalInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_corpus(out, instances);
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace divsel
