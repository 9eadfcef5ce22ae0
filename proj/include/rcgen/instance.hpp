#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcgen/json_io.hpp"
#include "rcgen/vocab.hpp"

namespace rcgen {

// Per-instance reward scores, keyed by reward name.
using RewardVector = std::map<std::string, double>;

enum class Origin { SilverSeed, Sampled };

std::string origin_name(Origin o);
Origin origin_from_name(const std::string& name);

// One training/eval example: question, choices, gold answer, and (once
// generated) the model output with its scores and bin assignments.
struct Instance {
  std::int64_t id = 0;
  std::vector<TokenId> question;
  std::vector<std::string> choices;
  std::string gold;
  std::optional<std::vector<TokenId>> generation;
  std::optional<std::string> predicted;
  std::optional<RewardVector> scores;
  std::optional<std::map<std::string, int>> bins;
  Origin origin = Origin::SilverSeed;
  std::optional<std::int64_t> step;

  json to_json() const;
  static Instance from_json(const json& j);
};

std::vector<Instance> load_instances_jsonl(const std::string& path);
void save_instances_jsonl(const std::string& path, const std::vector<Instance>& instances);

}  // namespace rcgen
