#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rcgen {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void save_json_file(const std::string& path, const json& j, int indent = 2) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(indent) << "\n";
}

inline void require_version(const json& j, int expected, const std::string& what) {
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != expected) {
    throw std::runtime_error(what + ": expected version " + std::to_string(expected));
  }
}

// Fail-fast key validation: every key in j must be listed in allowed.
inline void require_known_keys(const json& j, const std::vector<std::string>& allowed,
                               const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const auto& k : allowed) {
      if (it.key() == k) { known = true; break; }
    }
    if (!known) throw std::runtime_error(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace rcgen
