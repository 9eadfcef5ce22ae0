#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcgen/json_io.hpp"
#include "rcgen/optim.hpp"
#include "rcgen/rng.hpp"
#include "rcgen/vocab.hpp"

namespace rcgen {

// Recurrent next-token model. The state update carries no bias term, so a
// prefix of zero-embedding tokens leaves the state at zero: freshly
// reserved control tokens are exact no-ops until training moves their
// embeddings.
//
// Layout of the flat parameter vector:
//   embed  [V*H]   token embeddings, row-major
//   w_in   [H*H]   input-to-hidden
//   w_rec  [H*H]   hidden-to-hidden
//   w_out  [V*H]   hidden-to-logits, row-major
//   b_out  [V]     logit bias
class PolicyModel {
 public:
  // Rows of the embedding with id >= zero_embed_from start at exactly zero
  // (pass the first control-token id); -1 disables.
  PolicyModel(int vocab_size, int hidden, std::uint64_t seed, int zero_embed_from = -1);

  int vocab_size() const { return vocab_size_; }
  int hidden() const { return hidden_; }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  struct State {
    std::vector<double> h;
  };
  State initial_state() const { return State{std::vector<double>(hidden_, 0.0)}; }
  void advance(State& state, TokenId token) const;
  std::vector<double> next_logits(const State& state) const;
  // Softmax of next_logits; sums to 1 within 1e-9.
  std::vector<double> next_distribution(const State& state, double temperature = 1.0) const;

  json to_json() const;
  static PolicyModel from_json(const json& j);

 private:
  int vocab_size_ = 0;
  int hidden_ = 0;
  std::vector<double> params_;

  friend struct ParamView;
};

// Frozen snapshot used for the KL penalty. Never mutated after capture.
class ReferenceModel {
 public:
  explicit ReferenceModel(PolicyModel model) : model_(std::move(model)) {}
  const PolicyModel& model() const { return model_; }

 private:
  const PolicyModel model_;
};

ReferenceModel snapshot_reference(const PolicyModel& model);

struct SamplingConfig {
  enum class Strategy { Greedy, TopP };
  Strategy strategy = Strategy::TopP;
  double p = 0.7;
  double temperature = 1.0;
  int max_length = 16;
};

struct LossBreakdown {
  double cross_entropy = 0.0;
  double kl_penalty = 0.0;
  double entropy_bonus = 0.0;
  double total = 0.0;
};

struct BatchItem {
  std::vector<TokenId> control;
  std::vector<TokenId> input;
  std::vector<TokenId> target;  // includes trailing eos
};

// Per-token log-probabilities of `target` under the conditioning prefix
// [control] ++ [bos] ++ [input].
std::vector<double> log_prob(const PolicyModel& model, const std::vector<TokenId>& input,
                             const std::vector<TokenId>& control,
                             const std::vector<TokenId>& target, TokenId bos);

// Generates until eos (excluded from the result) or max_length tokens.
std::vector<TokenId> sample(const PolicyModel& model, const std::vector<TokenId>& input,
                            const std::vector<TokenId>& control, const SamplingConfig& cfg,
                            TokenId bos, TokenId eos, Rng& rng);

double kl_per_token(const std::vector<double>& ref_dist,
                    const std::vector<double>& policy_dist);
double entropy(const std::vector<double>& dist);

// One optimizer step on mean-per-token CE + beta*KL - alpha*entropy. The
// reference is evaluated without control tokens. Returns pre-step losses.
LossBreakdown train_step(PolicyModel& model, const ReferenceModel& reference,
                         const std::vector<BatchItem>& batch, double beta, double alpha,
                         AdamOptimizer& opt, TokenId bos);

// Loss and analytic gradient without applying an update (shared by
// train_step and the finite-difference checks).
LossBreakdown loss_and_gradient(const PolicyModel& model, const ReferenceModel& reference,
                                const std::vector<BatchItem>& batch, double beta,
                                double alpha, TokenId bos, std::vector<double>* grads);

}  // namespace rcgen
