#include "rcgen/instance.hpp"

#include <fstream>
#include <stdexcept>

namespace rcgen {

std::string origin_name(Origin o) {
  return o == Origin::SilverSeed ? "silver-seed" : "sampled";
}

Origin origin_from_name(const std::string& name) {
  if (name == "silver-seed") return Origin::SilverSeed;
  if (name == "sampled") return Origin::Sampled;
  throw std::runtime_error("unknown origin '" + name + "'");
}

json Instance::to_json() const {
  json j;
  j["id"] = id;
  j["question"] = question;
  j["choices"] = choices;
  j["gold"] = gold;
  j["generation"] = generation ? json(*generation) : json(nullptr);
  j["predicted"] = predicted ? json(*predicted) : json(nullptr);
  j["scores"] = scores ? json(*scores) : json(nullptr);
  j["bins"] = bins ? json(*bins) : json(nullptr);
  j["origin"] = origin_name(origin);
  j["step"] = step ? json(*step) : json(nullptr);
  return j;
}

Instance Instance::from_json(const json& j) {
  Instance ins;
  ins.id = j.at("id").get<std::int64_t>();
  ins.question = j.at("question").get<std::vector<TokenId>>();
  ins.choices = j.at("choices").get<std::vector<std::string>>();
  ins.gold = j.at("gold").get<std::string>();
  if (!j.at("generation").is_null()) {
    ins.generation = j.at("generation").get<std::vector<TokenId>>();
  }
  if (!j.at("predicted").is_null()) {
    ins.predicted = j.at("predicted").get<std::string>();
  }
  if (!j.at("scores").is_null()) {
    ins.scores = j.at("scores").get<RewardVector>();
  }
  if (!j.at("bins").is_null()) {
    ins.bins = j.at("bins").get<std::map<std::string, int>>();
  }
  ins.origin = origin_from_name(j.at("origin").get<std::string>());
  if (!j.at("step").is_null()) {
    ins.step = j.at("step").get<std::int64_t>();
  }
  return ins;
}

std::vector<Instance> load_instances_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Instance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(Instance::from_json(json::parse(line)));
  }
  return out;
}

void save_instances_jsonl(const std::string& path, const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& ins : instances) {
    out << ins.to_json().dump() << "\n";
  }
}

}  // namespace rcgen
