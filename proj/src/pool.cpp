#include "rcgen/pool.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rcgen {

ScheduleState::Direction direction_from_name(const std::string& name) {
  if (name == "left") return ScheduleState::Direction::Left;
  if (name == "right") return ScheduleState::Direction::Right;
  throw std::runtime_error("unknown direction '" + name + "'");
}

std::string direction_name(ScheduleState::Direction d) {
  return d == ScheduleState::Direction::Left ? "left" : "right";
}

std::vector<TokenId> control_prefix(const Instance& instance,
                                    const ScheduleState& schedule,
                                    const ControlTokenTable& table) {
  std::vector<TokenId> prefix;
  prefix.reserve(schedule.active.size());
  for (const auto& reward : schedule.active) {
    if (!instance.bins || !instance.bins->count(reward)) {
      throw std::runtime_error("control_prefix: instance " +
                               std::to_string(instance.id) + " not binned for '" +
                               reward + "'");
    }
    prefix.push_back(table.token(reward, instance.bins->at(reward)));
  }
  return prefix;
}

DataPool DataPool::init(std::vector<Instance> seeds) {
  if (seeds.empty()) throw std::runtime_error("init_pool: empty seed set");
  DataPool pool;
  std::set<std::int64_t> ids;
  for (auto& ins : seeds) {
    if (!ins.generation) {
      throw std::runtime_error("init_pool: seed " + std::to_string(ins.id) +
                               " lacks a gold generation");
    }
    if (!ids.insert(ins.id).second) {
      throw std::runtime_error("init_pool: duplicate id " + std::to_string(ins.id));
    }
    ins.origin = Origin::SilverSeed;
    pool.next_id_ = std::max(pool.next_id_, ins.id + 1);
    pool.seed_ids_.push_back(ins.id);
    pool.instances_.push_back(std::move(ins));
  }
  return pool;
}

const Instance& DataPool::by_id(std::int64_t id) const {
  for (const auto& ins : instances_) {
    if (ins.id == id) return ins;
  }
  throw std::runtime_error("pool: unknown instance id " + std::to_string(id));
}

std::int64_t DataPool::add_generations(
    const std::vector<std::pair<std::int64_t, std::vector<TokenId>>>& sampled,
    std::int64_t step, const Vocabulary& vocab) {
  // Resolve question ids against seed instances first; all-or-nothing.
  std::vector<const Instance*> sources;
  sources.reserve(sampled.size());
  for (const auto& [qid, gen] : sampled) {
    (void)gen;
    sources.push_back(&by_id(qid));
  }
  std::int64_t added = 0;
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    const Instance& src = *sources[i];
    Instance ins;
    ins.id = next_id_++;
    ins.question = src.question;
    ins.choices = src.choices;
    ins.gold = src.gold;
    ins.generation = sampled[i].second;
    const ParsedGeneration parsed = parse_answer(*ins.generation, vocab);
    ins.predicted = parsed.answer;
    ins.origin = Origin::Sampled;
    ins.step = step;
    instances_.push_back(std::move(ins));
    ++added;
  }
  return added;
}

void DataPool::bin_by_reward(const RewardSpec& reward) {
  for (const auto& ins : instances_) {
    if (!ins.scores || !ins.scores->count(reward.name)) {
      throw std::runtime_error("bin_by_reward: instance " + std::to_string(ins.id) +
                               " unscored for '" + reward.name + "'");
    }
  }
  auto set_bin = [&](Instance& ins, int bin) {
    if (!ins.bins) ins.bins = std::map<std::string, int>{};
    (*ins.bins)[reward.name] = bin;
  };

  if (reward.value_binned) {
    for (auto& ins : instances_) {
      set_bin(ins, ins.scores->at(reward.name) == reward.range_max ? 1 : 2);
    }
    return;
  }

  std::vector<std::size_t> order(instances_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = instances_[a].scores->at(reward.name);
    const double sb = instances_[b].scores->at(reward.name);
    if (sa != sb) return sa > sb;
    return instances_[a].id < instances_[b].id;
  });

  // Equal-mass split: the first (n % k) bins take one extra instance.
  const std::size_t n = order.size();
  const std::size_t k = static_cast<std::size_t>(reward.bins);
  std::size_t pos = 0;
  for (std::size_t bin = 1; bin <= k; ++bin) {
    std::size_t size = n / k + (bin <= n % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i, ++pos) {
      set_bin(instances_[order[pos]], static_cast<int>(bin));
    }
  }
}

std::vector<BatchItem> DataPool::sample_batch(const ScheduleState& schedule,
                                              const ControlTokenTable& table,
                                              TokenId eos, std::size_t batch_size,
                                              Rng& rng) const {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const Instance& ins = instances_[i];
    if (!ins.generation) continue;
    bool binned = true;
    for (const auto& reward : schedule.active) {
      if (!ins.bins || !ins.bins->count(reward)) {
        binned = false;
        break;
      }
    }
    if (binned) eligible.push_back(i);
  }
  if (eligible.empty()) throw std::runtime_error("sample_batch: no binned instances");

  std::vector<std::size_t> chosen;
  chosen.reserve(batch_size);
  if (batch_size <= eligible.size()) {
    // Partial Fisher-Yates: first batch_size entries are a uniform draw
    // without replacement.
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.uniform_int(eligible.size() - i));
      std::swap(eligible[i], eligible[j]);
      chosen.push_back(eligible[i]);
    }
  } else {
    for (std::size_t i = 0; i < batch_size; ++i) {
      chosen.push_back(eligible[static_cast<std::size_t>(rng.uniform_int(eligible.size()))]);
    }
  }

  std::vector<BatchItem> batch;
  batch.reserve(chosen.size());
  for (std::size_t idx : chosen) {
    const Instance& ins = instances_[idx];
    BatchItem item;
    item.control = control_prefix(ins, schedule, table);
    item.input = ins.question;
    item.target = *ins.generation;
    item.target.push_back(eos);
    batch.push_back(std::move(item));
  }
  return batch;
}

void DataPool::dump_jsonl(const std::string& path) const {
  save_instances_jsonl(path, instances_);
}

}  // namespace rcgen
