#include "rcgen/vocab.hpp"

#include <stdexcept>

namespace rcgen {

const char* Vocabulary::kPad = "<pad>";
const char* Vocabulary::kBos = "<bos>";
const char* Vocabulary::kEos = "<eos>";
const char* Vocabulary::kAnswer = "<answer>";

TokenId ControlTokenTable::token(const std::string& reward, int bin) const {
  auto it = entries_.find({reward, bin});
  if (it == entries_.end()) {
    throw std::runtime_error("no control token for reward '" + reward + "' bin " +
                             std::to_string(bin));
  }
  return it->second;
}

bool ControlTokenTable::has_reward(const std::string& reward) const {
  return bins_.count(reward) > 0;
}

int ControlTokenTable::bins(const std::string& reward) const {
  auto it = bins_.find(reward);
  if (it == bins_.end()) throw std::runtime_error("unknown reward '" + reward + "'");
  return it->second;
}

TokenId Vocabulary::append_token(const std::string& token) {
  if (index_.count(token)) throw std::runtime_error("duplicate token '" + token + "'");
  const TokenId id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus) {
  if (corpus.empty()) throw std::runtime_error("build_vocab: empty corpus");
  Vocabulary v;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) {
      if (tok == kPad || tok == kBos || tok == kEos || tok == kAnswer) {
        throw std::runtime_error("build_vocab: special token '" + tok +
                                 "' appeared as content");
      }
      if (!v.index_.count(tok)) v.append_token(tok);
    }
  }
  if (v.tokens_.empty()) throw std::runtime_error("build_vocab: no content tokens");
  v.content_count_ = static_cast<int>(v.tokens_.size());
  v.pad_ = v.append_token(kPad);
  v.bos_ = v.append_token(kBos);
  v.eos_ = v.append_token(kEos);
  v.answer_ = v.append_token(kAnswer);
  v.control_start_ = static_cast<int>(v.tokens_.size());
  return v;
}

ControlTokenTable Vocabulary::register_control_tokens(
    const std::vector<ControlGroup>& groups) {
  if (!table_.entries_.empty()) {
    throw std::runtime_error("control tokens already registered");
  }
  for (const auto& g : groups) {
    if (g.bins < 2) {
      throw std::runtime_error("reward '" + g.reward + "' needs at least 2 bins");
    }
    if (table_.bins_.count(g.reward)) {
      throw std::runtime_error("duplicate reward name '" + g.reward + "'");
    }
    table_.bins_.emplace(g.reward, g.bins);
    table_.reward_order_.push_back(g.reward);
    for (int bin = 1; bin <= g.bins; ++bin) {
      const std::string tok = "<R=" + g.reward + ":" + std::to_string(bin) + ">";
      table_.entries_.emplace(std::make_pair(g.reward, bin), append_token(tok));
    }
  }
  return table_;
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token_of(id));
  return out;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw std::runtime_error("unknown token '" + token + "'");
  return it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw std::runtime_error("invalid token id " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

json Vocabulary::to_json() const {
  json content = json::array();
  for (int i = 0; i < content_count_; ++i) content.push_back(tokens_[i]);
  json control = json::array();
  for (const auto& reward : table_.reward_order_) {
    const int k = table_.bins_.at(reward);
    for (int bin = 1; bin <= k; ++bin) {
      control.push_back({{"reward", reward},
                         {"bin", bin},
                         {"token", tokens_[table_.entries_.at({reward, bin})]}});
    }
  }
  return json{{"version", 1},
              {"content", content},
              {"special",
               {{"pad", kPad}, {"bos", kBos}, {"eos", kEos}, {"answer", kAnswer}}},
              {"control", control}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  require_version(j, 1, "vocabulary");
  std::vector<std::vector<std::string>> corpus(1);
  for (const auto& t : j.at("content")) corpus[0].push_back(t.get<std::string>());
  Vocabulary v = build(corpus);
  std::vector<ControlGroup> groups;
  for (const auto& entry : j.at("control")) {
    const std::string reward = entry.at("reward").get<std::string>();
    const int bin = entry.at("bin").get<int>();
    if (groups.empty() || groups.back().reward != reward) {
      groups.push_back({reward, 0});
    }
    if (bin != groups.back().bins + 1) {
      throw std::runtime_error("vocabulary: control bins out of order for " + reward);
    }
    groups.back().bins = bin;
  }
  if (!groups.empty()) v.register_control_tokens(groups);
  return v;
}

}  // namespace rcgen
