#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rcgen/json_io.hpp"

namespace rcgen {

using TokenId = int;

// (reward name, bin count) pair used when reserving control tokens.
struct ControlGroup {
  std::string reward;
  int bins = 0;
};

// Maps (reward name, bin index 1..K) to a reserved token id. Bin 1 is
// always the highest-reward bin.
class ControlTokenTable {
 public:
  TokenId token(const std::string& reward, int bin) const;
  bool has_reward(const std::string& reward) const;
  int bins(const std::string& reward) const;
  const std::vector<std::string>& reward_order() const { return reward_order_; }
  std::size_t size() const { return entries_.size(); }

 private:
  friend class Vocabulary;
  std::map<std::pair<std::string, int>, TokenId> entries_;
  std::map<std::string, int> bins_;
  std::vector<std::string> reward_order_;
};

// Token alphabet: content tokens first, then the four special tokens,
// then any reserved control tokens. Ids are stable across save/load.
// Immutable once setup (build + control registration) is done.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus);

  // Reserves one token per (reward, bin). Token strings are "<R=name:bin>".
  ControlTokenTable register_control_tokens(const std::vector<ControlGroup>& groups);

  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;
  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const;
  bool contains(const std::string& token) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  int content_count() const { return content_count_; }
  int control_start() const { return control_start_; }
  bool is_content(TokenId id) const { return id >= 0 && id < content_count_; }
  bool is_control(TokenId id) const { return id >= control_start_ && id < size(); }

  TokenId pad() const { return pad_; }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenId answer_delim() const { return answer_; }

  const ControlTokenTable& control_table() const { return table_; }

  json to_json() const;
  static Vocabulary from_json(const json& j);

  static const char* kPad;
  static const char* kBos;
  static const char* kEos;
  static const char* kAnswer;

 private:
  Vocabulary() = default;
  TokenId append_token(const std::string& token);

  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> index_;
  int content_count_ = 0;
  int control_start_ = 0;
  TokenId pad_ = -1, bos_ = -1, eos_ = -1, answer_ = -1;
  ControlTokenTable table_;
};

}  // namespace rcgen
