#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rcgen/eval.hpp"
#include "rcgen/instance.hpp"
#include "rcgen/policy.hpp"
#include "rcgen/pool.hpp"
#include "rcgen/rewards.hpp"

namespace rcgen {

enum class Algorithm { Sft, Quark, Classic, Additive, Product, FiltAcc, FiltAll };
Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm a);

enum class OrderMode { WeakFirst, StrongFirst, Explicit };
OrderMode order_mode_from_name(const std::string& name);
std::string order_mode_name(OrderMode m);

struct TrainConfig {
  Algorithm algorithm = Algorithm::Sft;
  std::vector<std::string> rewards;  // conditioning order (after any heuristic)
  int hidden = 32;                   // model width, used when training from scratch
  double beta = 0.05;
  double alpha = 0.05;
  double learning_rate = 3e-3;
  int batch_size = 8;
  int grad_accum = 2;  // folded into the per-step batch
  int total_steps = 2000;
  int exploration_every = 200;   // F: steps between exploration rounds
  int samples_per_instance = 2;  // s: generations per train question per round
  int additive_interval = 200;   // t: steps between reward activations
  OrderMode order_mode = OrderMode::Explicit;
  ScheduleState::Direction direction = ScheduleState::Direction::Right;
  std::map<std::string, double> filt_thresholds;
  int max_gen_len = 16;
  double top_p = 0.7;
  double temperature = 1.0;
  int warmup_steps = 100;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RoundRecord {
  std::int64_t step = 0;
  std::size_t pool_size = 0;
  LossBreakdown loss;  // mean over steps since the previous record
  MetricsReport val;

  json to_json() const;  // summary only, no per-instance payload
  static RoundRecord from_json(const json& j);
};

struct RunLog {
  std::vector<RoundRecord> rounds;

  void save_jsonl(const std::string& path) const;
  static RunLog load_jsonl(const std::string& path);
};

// Shared immutable surroundings of a training run.
struct TrainContext {
  const Vocabulary* vocab = nullptr;
  const ControlTokenTable* table = nullptr;
  const std::vector<RewardSpec>* specs = nullptr;  // rewards scored and binned
  const ScoreContext* score_ctx = nullptr;
  const std::vector<Instance>* val_split = nullptr;
  // Test hook: observes the instances drawn for each training batch.
  std::function<void(std::int64_t, const std::vector<const Instance*>&)> batch_observer;
};

struct RunResult {
  PolicyModel model;
  RunLog log;
};

// Headroom of the SFT model on a reward: (max - value) / (max - min).
double reward_strength(double sft_value, double range_min, double range_max);

// weak-first: descending strength (most headroom first); strong-first is
// the exact reverse; ties broken lexicographically; explicit passes the
// given order through.
std::vector<std::string> determine_order(const std::map<std::string, double>& strengths,
                                         OrderMode mode,
                                         const std::vector<std::string>& explicit_order = {});

// Active set after `step` steps: the first ceil((step+1)/interval) rewards
// of the activation order, conditioning order per the insertion direction.
ScheduleState additive_schedule_at(const std::vector<std::string>& activation_order,
                                   ScheduleState::Direction direction, std::int64_t step,
                                   int interval);

RunResult train_sft(const std::vector<Instance>& seeds, const TrainConfig& cfg,
                    const TrainContext& ctx);

RunResult run_quark(const PolicyModel& sft, const std::string& reward,
                    const std::vector<Instance>& seeds, const TrainConfig& cfg,
                    const TrainContext& ctx);

RunResult run_mario_classic(const PolicyModel& sft, const std::vector<std::string>& rewards,
                            const std::vector<Instance>& seeds, const TrainConfig& cfg,
                            const TrainContext& ctx);

RunResult run_mario_additive(const PolicyModel& sft,
                             const std::vector<std::string>& rewards,
                             const std::vector<Instance>& seeds, const TrainConfig& cfg,
                             const TrainContext& ctx);

// Single-reward run over the consolidated "product" reward (which must be
// present in ctx.specs).
RunResult run_product_baseline(const PolicyModel& sft, const std::vector<Instance>& seeds,
                               const TrainConfig& cfg, const TrainContext& ctx);

RunResult run_filt_acc(const PolicyModel& sft, const std::vector<Instance>& seeds,
                       const TrainConfig& cfg, const TrainContext& ctx);

RunResult run_filt_all(const PolicyModel& sft, const std::vector<Instance>& seeds,
                       const TrainConfig& cfg, const TrainContext& ctx);

// Retention predicates used by the filtering baselines.
bool filt_acc_keep(const Instance& instance);
bool filt_all_keep(const Instance& instance, const std::map<std::string, double>& thresholds);

}  // namespace rcgen
