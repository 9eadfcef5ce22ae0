#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rcgen/instance.hpp"
#include "rcgen/policy.hpp"
#include "rcgen/rewards.hpp"
#include "rcgen/rng.hpp"
#include "rcgen/vocab.hpp"

namespace rcgen {

// Which rewards' control tokens are active and in what conditioning order.
struct ScheduleState {
  enum class Direction { Left, Right };
  std::vector<std::string> active;  // conditioning prefix order
  Direction direction = Direction::Right;
};

ScheduleState::Direction direction_from_name(const std::string& name);
std::string direction_name(ScheduleState::Direction d);

// Control token ids for an instance's bins, one per active reward.
std::vector<TokenId> control_prefix(const Instance& instance,
                                    const ScheduleState& schedule,
                                    const ControlTokenTable& table);

// The growing training pool: silver-seed instances plus everything sampled
// during exploration. Append-only; single writer.
class DataPool {
 public:
  static DataPool init(std::vector<Instance> seeds);

  const std::vector<Instance>& instances() const { return instances_; }
  std::vector<Instance>& instances() { return instances_; }
  std::size_t size() const { return instances_.size(); }

  // Seed instance ids in insertion order (the train questions).
  const std::vector<std::int64_t>& seed_ids() const { return seed_ids_; }
  const Instance& by_id(std::int64_t id) const;

  // Appends sampled generations; the question/choices/gold are copied from
  // the referenced instance and the predicted answer is parsed out.
  std::int64_t add_generations(
      const std::vector<std::pair<std::int64_t, std::vector<TokenId>>>& sampled,
      std::int64_t step, const Vocabulary& vocab);

  // Assigns a bin for `reward` to every instance. Quantile rewards get an
  // equal-mass split of the descending score order (ties by id); value-binned
  // rewards map score==max to bin 1 and everything else to bin 2.
  void bin_by_reward(const RewardSpec& reward);

  // Uniform draws from the instances binned under the schedule; without
  // replacement when the batch fits, with replacement otherwise.
  std::vector<BatchItem> sample_batch(const ScheduleState& schedule,
                                      const ControlTokenTable& table, TokenId eos,
                                      std::size_t batch_size, Rng& rng) const;

  void dump_jsonl(const std::string& path) const;

 private:
  std::vector<Instance> instances_;
  std::vector<std::int64_t> seed_ids_;
  std::int64_t next_id_ = 0;
};

}  // namespace rcgen
