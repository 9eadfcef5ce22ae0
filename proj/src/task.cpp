#include "rcgen/task.hpp"

#include <set>
#include <stdexcept>

namespace rcgen {

namespace {

const std::vector<std::string>& template_words() {
  static const std::vector<std::string> words = {"glyph", "leads", "the",
                                                 "row",   "starts", "with"};
  return words;
}

constexpr int kTemplateCount = 2;

}  // namespace

void TaskParams::validate() const {
  if (choices < 2) throw std::runtime_error("task: need at least 2 choices");
  if (choices > 26) throw std::runtime_error("task: at most 26 choices");
  if (symbols < choices) throw std::runtime_error("task: symbols < choices");
  if (symbols > 26) throw std::runtime_error("task: at most 26 symbols");
  if (candidate_copies < 1) throw std::runtime_error("task: candidate_copies < 1");
  if (filler < 0) throw std::runtime_error("task: negative filler");
  if (filler > 0 && symbols == choices) {
    throw std::runtime_error("task: filler requires non-candidate symbols");
  }
}

SyntheticTask::SyntheticTask(TaskParams params) : params_(params) {
  params_.validate();
  for (int i = 0; i < params_.symbols; ++i) {
    symbols_.push_back(std::string(1, static_cast<char>('A' + i)));
  }
  for (int i = 0; i < params_.choices; ++i) {
    labels_.push_back(std::string("(") + static_cast<char>('a' + i) + ")");
  }
}

std::vector<std::string> SyntheticTask::gold_rationale(int candidate_index,
                                                       int variant) const {
  const std::string& m = symbols_.at(static_cast<std::size_t>(candidate_index));
  if (variant % kTemplateCount == 0) {
    return {"glyph", m, "leads", "the", "row"};
  }
  return {"the", "row", "starts", "with", "glyph", m};
}

std::vector<std::pair<std::string, std::string>> SyntheticTask::fact_bigrams() const {
  std::vector<std::pair<std::string, std::string>> facts;
  for (int i = 0; i < params_.choices; ++i) {
    facts.emplace_back("glyph", symbols_[i]);
    facts.emplace_back(symbols_[i], "leads");
  }
  facts.emplace_back("leads", "the");
  facts.emplace_back("the", "row");
  facts.emplace_back("row", "starts");
  facts.emplace_back("starts", "with");
  facts.emplace_back("with", "glyph");
  return facts;
}

int SyntheticTask::question_length() const {
  return params_.choices * params_.candidate_copies + params_.filler;
}

Vocabulary SyntheticTask::make_vocabulary() const {
  std::vector<std::vector<std::string>> corpus;
  corpus.push_back(symbols_);
  corpus.push_back(labels_);
  corpus.push_back(template_words());
  return Vocabulary::build(corpus);
}

SyntheticTask::Splits SyntheticTask::generate(const Vocabulary& vocab, int n_train,
                                              int n_val, int n_test,
                                              std::uint64_t seed) const {
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw std::runtime_error("task: split sizes must be >= 1");
  }
  Rng rng(seed);
  std::set<std::vector<std::string>> seen;
  std::int64_t next_id = 0;

  auto make_instance = [&]() {
    const int first = static_cast<int>(rng.uniform_int(
        static_cast<std::uint64_t>(params_.choices)));
    std::vector<std::string> question;
    int attempts = 0;
    for (;;) {
      std::vector<std::string> rest;
      for (int c = 0; c < params_.choices; ++c) {
        const int copies = params_.candidate_copies - (c == first ? 1 : 0);
        for (int k = 0; k < copies; ++k) rest.push_back(symbols_[c]);
      }
      for (int k = 0; k < params_.filler; ++k) {
        const int fi = params_.choices + static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(params_.symbols - params_.choices)));
        rest.push_back(symbols_[fi]);
      }
      rng.shuffle(rest);
      question.assign(1, symbols_[first]);
      question.insert(question.end(), rest.begin(), rest.end());
      if (seen.insert(question).second) break;
      if (++attempts > 100000) {
        throw std::runtime_error("task: cannot generate enough distinct questions");
      }
    }
    const int variant = static_cast<int>(rng.uniform_int(kTemplateCount));
    std::vector<TokenId> generation = vocab.encode(gold_rationale(first, variant));
    generation.push_back(vocab.answer_delim());
    generation.push_back(vocab.id_of(labels_[first]));

    Instance ins;
    ins.id = next_id++;
    ins.question = vocab.encode(question);
    ins.choices = labels_;
    ins.gold = labels_[first];
    ins.generation = generation;
    ins.predicted = labels_[first];
    ins.origin = Origin::SilverSeed;
    return ins;
  };

  Splits splits;
  for (int i = 0; i < n_train; ++i) splits.train.push_back(make_instance());
  for (int i = 0; i < n_val; ++i) splits.val.push_back(make_instance());
  for (int i = 0; i < n_test; ++i) splits.test.push_back(make_instance());
  return splits;
}

json SyntheticTask::to_json() const {
  return json{{"version", 1},
              {"symbols", params_.symbols},
              {"choices", params_.choices},
              {"candidate_copies", params_.candidate_copies},
              {"filler", params_.filler}};
}

SyntheticTask SyntheticTask::from_json(const json& j) {
  require_version(j, 1, "task");
  TaskParams p;
  p.symbols = j.at("symbols").get<int>();
  p.choices = j.at("choices").get<int>();
  p.candidate_copies = j.at("candidate_copies").get<int>();
  p.filler = j.at("filler").get<int>();
  return SyntheticTask(p);
}

}  // namespace rcgen
