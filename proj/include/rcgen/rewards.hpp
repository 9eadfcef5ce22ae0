#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcgen/instance.hpp"
#include "rcgen/json_io.hpp"
#include "rcgen/vocab.hpp"

namespace rcgen {

// Splits a generation on the LAST answer delimiter. `answer` is empty when
// the delimiter is absent or nothing follows it; the rationale is whatever
// precedes the delimiter (the whole generation when there is none).
struct ParsedGeneration {
  std::vector<TokenId> rationale;
  std::optional<std::string> answer;
};
ParsedGeneration parse_answer(const std::vector<TokenId>& generation,
                              const Vocabulary& vocab);

// Product over n in {2,3,4} of unique/total n-gram fractions. An n with no
// n-grams contributes a neutral factor of 1.
double diversity(const std::vector<TokenId>& rationale);

// 1 iff the predicted label equals gold exactly; unparseable counts as wrong.
double task_correctness(const std::optional<std::string>& predicted,
                        const std::string& gold);

// Deterministic stand-in for a plausibility model: fraction of the
// rationale's n-grams found in a fixed fact set.
class PlausibilityOracle {
 public:
  PlausibilityOracle(std::set<std::vector<std::string>> facts, int n = 2);
  double score(const std::vector<std::string>& rationale) const;
  int ngram_order() const { return n_; }

  json to_json() const;
  static PlausibilityOracle from_json(const json& j);

 private:
  std::set<std::vector<std::string>> facts_;
  int n_;
};

struct PredictorConfig {
  int embed_dim = 16;
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

class ConsistencyPredictors;
ConsistencyPredictors train_consistency_predictors(const std::vector<Instance>& data,
                                                   const Vocabulary& vocab,
                                                   const PredictorConfig& cfg);

// Mean-pooled bag-of-embeddings classifier over a fixed choice set.
class MeanPoolClassifier {
 public:
  MeanPoolClassifier() = default;
  MeanPoolClassifier(int vocab_size, int embed_dim, int n_choices, std::uint64_t seed);

  // Distribution over choices; sums to 1 within 1e-9.
  std::vector<double> predict(const std::vector<TokenId>& input) const;
  int n_choices() const { return n_choices_; }

  json to_json() const;
  static MeanPoolClassifier from_json(const json& j);

 private:
  friend class ConsistencyPredictors;
  friend ConsistencyPredictors train_consistency_predictors(
      const std::vector<Instance>& data, const Vocabulary& vocab,
      const PredictorConfig& cfg);
  int vocab_size_ = 0, embed_dim_ = 0, n_choices_ = 0;
  std::vector<double> embed_, weight_, bias_;
};

// The two answer predictors behind the consistency reward: one sees the
// question and rationale, the other the question alone. Trained once on
// seed gold data, then frozen.
class ConsistencyPredictors {
 public:
  bool trained() const { return trained_; }
  const std::vector<std::string>& choices() const { return choices_; }

  std::vector<double> with_rationale(const std::vector<TokenId>& question,
                                     const std::vector<TokenId>& rationale) const;
  std::vector<double> without_rationale(const std::vector<TokenId>& question) const;

  json to_json() const;
  static ConsistencyPredictors from_json(const json& j);

  friend ConsistencyPredictors train_consistency_predictors(
      const std::vector<Instance>& data, const Vocabulary& vocab,
      const PredictorConfig& cfg);

 private:
  bool trained_ = false;
  std::vector<std::string> choices_;
  MeanPoolClassifier m_qr_, m_q_;
};

// Gold-label probability gain from showing the rationale; in [-1, 1].
double consistency(const ConsistencyPredictors& predictors,
                   const std::vector<TokenId>& question,
                   const std::vector<TokenId>& rationale,
                   const std::vector<std::string>& choices, const std::string& gold);

double plausibility(const PlausibilityOracle& oracle, const Vocabulary& vocab,
                    const std::vector<TokenId>& rationale);

struct ScoreContext {
  const Vocabulary* vocab = nullptr;
  const PlausibilityOracle* oracle = nullptr;
  const ConsistencyPredictors* predictors = nullptr;
};

// A named reward: value range, bin count, and the scoring function.
struct RewardSpec {
  std::string name;
  double range_min = 0.0;
  double range_max = 1.0;
  int bins = 5;
  // Value-binned rewards (task correctness) put score==max in bin 1 and
  // everything else in bin 2 instead of quantile splitting.
  bool value_binned = false;
  std::function<double(const ScoreContext&, const Instance&)> scorer;
};

RewardVector score_instance(const Instance& instance,
                            const std::vector<RewardSpec>& rewards,
                            const ScoreContext& ctx);

// The four standard rewards in registration order: plausibility,
// consistency, diversity, correctness.
std::vector<RewardSpec> standard_rewards(int rationale_bins = 5, int correctness_bins = 2);

// Single consolidated reward for the product baseline: the product of all
// component scores after mapping each to [0, 1].
RewardSpec product_reward(const std::vector<RewardSpec>& components, int bins = 5);

std::vector<ControlGroup> control_groups(const std::vector<RewardSpec>& rewards);

const RewardSpec& find_reward(const std::vector<RewardSpec>& rewards,
                              const std::string& name);

}  // namespace rcgen
