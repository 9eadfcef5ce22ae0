#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rcgen/instance.hpp"
#include "rcgen/json_io.hpp"
#include "rcgen/rng.hpp"
#include "rcgen/vocab.hpp"

namespace rcgen {

struct TaskParams {
  int symbols = 6;           // alphabet size; first `choices` symbols are candidates
  int choices = 4;           // answer candidates, labelled "(a)", "(b)", ...
  int candidate_copies = 2;  // occurrences of every candidate per question
  int filler = 3;            // extra non-candidate symbols per question

  void validate() const;
};

// Multiple-choice questions over symbol sequences. The first symbol of a
// question decides the answer; candidate counts are balanced so the answer
// is deducible only from token order. Gold rationales name the leading
// symbol using sentences whose bigrams all come from the task's fact set,
// which makes every reward exactly computable.
class SyntheticTask {
 public:
  explicit SyntheticTask(TaskParams params);

  const TaskParams& params() const { return params_; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Every bigram a gold rationale can contain.
  std::vector<std::pair<std::string, std::string>> fact_bigrams() const;

  // Content + special tokens; control tokens are registered by the caller.
  Vocabulary make_vocabulary() const;

  struct Splits {
    std::vector<Instance> train, val, test;
  };
  // Disjoint splits, reproducible from the seed. Instance ids are assigned
  // 0..n-1 in train, val, test order.
  Splits generate(const Vocabulary& vocab, int n_train, int n_val, int n_test,
                  std::uint64_t seed) const;

  std::vector<std::string> gold_rationale(int candidate_index, int variant) const;
  int question_length() const;

  json to_json() const;
  static SyntheticTask from_json(const json& j);

 private:
  TaskParams params_;
  std::vector<std::string> symbols_;
  std::vector<std::string> labels_;
};

}  // namespace rcgen
