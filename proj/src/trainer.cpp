#include "rcgen/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace rcgen {

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "sft") return Algorithm::Sft;
  if (name == "quark") return Algorithm::Quark;
  if (name == "classic") return Algorithm::Classic;
  if (name == "additive") return Algorithm::Additive;
  if (name == "product") return Algorithm::Product;
  if (name == "filt-acc") return Algorithm::FiltAcc;
  if (name == "filt-all") return Algorithm::FiltAll;
  throw std::runtime_error("unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Sft: return "sft";
    case Algorithm::Quark: return "quark";
    case Algorithm::Classic: return "classic";
    case Algorithm::Additive: return "additive";
    case Algorithm::Product: return "product";
    case Algorithm::FiltAcc: return "filt-acc";
    case Algorithm::FiltAll: return "filt-all";
  }
  throw std::runtime_error("bad algorithm enum");
}

OrderMode order_mode_from_name(const std::string& name) {
  if (name == "weak-first") return OrderMode::WeakFirst;
  if (name == "strong-first") return OrderMode::StrongFirst;
  if (name == "explicit") return OrderMode::Explicit;
  throw std::runtime_error("unknown order mode '" + name + "'");
}

std::string order_mode_name(OrderMode m) {
  switch (m) {
    case OrderMode::WeakFirst: return "weak-first";
    case OrderMode::StrongFirst: return "strong-first";
    case OrderMode::Explicit: return "explicit";
  }
  throw std::runtime_error("bad order mode enum");
}

void TrainConfig::validate() const {
  if (total_steps < 1) throw std::runtime_error("config: total_steps must be >= 1");
  if (exploration_every < 1) throw std::runtime_error("config: exploration_every must be >= 1");
  if (additive_interval < 1) throw std::runtime_error("config: additive_interval must be >= 1");
  if (samples_per_instance < 1) throw std::runtime_error("config: samples_per_instance must be >= 1");
  if (batch_size < 1 || grad_accum < 1) throw std::runtime_error("config: bad batch size");
  if (beta < 0.0 || alpha < 0.0) throw std::runtime_error("config: beta/alpha must be >= 0");
  if (top_p <= 0.0 || top_p > 1.0) throw std::runtime_error("config: top_p must be in (0,1]");
  if (max_gen_len < 1) throw std::runtime_error("config: max_gen_len must be >= 1");
}

json RoundRecord::to_json() const {
  return json{{"step", step},
              {"pool_size", pool_size},
              {"loss",
               {{"ce", loss.cross_entropy},
                {"kl", loss.kl_penalty},
                {"entropy", loss.entropy_bonus},
                {"total", loss.total}}},
              {"val",
               {{"n", val.n},
                {"accuracy", val.accuracy},
                {"rewards", val.reward_means},
                {"avg_nrg", val.avg_nrg_pct},
                {"parse_failures", val.parse_failures}}}};
}

RoundRecord RoundRecord::from_json(const json& j) {
  RoundRecord r;
  r.step = j.at("step").get<std::int64_t>();
  r.pool_size = j.at("pool_size").get<std::size_t>();
  r.loss.cross_entropy = j.at("loss").at("ce").get<double>();
  r.loss.kl_penalty = j.at("loss").at("kl").get<double>();
  r.loss.entropy_bonus = j.at("loss").at("entropy").get<double>();
  r.loss.total = j.at("loss").at("total").get<double>();
  r.val.n = j.at("val").at("n").get<int>();
  r.val.accuracy = j.at("val").at("accuracy").get<double>();
  r.val.reward_means = j.at("val").at("rewards").get<std::map<std::string, double>>();
  r.val.avg_nrg_pct = j.at("val").at("avg_nrg").get<double>();
  r.val.parse_failures = j.at("val").at("parse_failures").get<int>();
  return r;
}

void RunLog::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : rounds) out << r.to_json().dump() << "\n";
}

RunLog RunLog::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  RunLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    log.rounds.push_back(RoundRecord::from_json(json::parse(line)));
  }
  return log;
}

double reward_strength(double sft_value, double range_min, double range_max) {
  if (!(range_min < range_max)) throw std::runtime_error("reward_strength: min >= max");
  if (sft_value < range_min || sft_value > range_max) {
    throw std::runtime_error("reward_strength: value outside range");
  }
  return (range_max - sft_value) / (range_max - range_min);
}

std::vector<std::string> determine_order(const std::map<std::string, double>& strengths,
                                         OrderMode mode,
                                         const std::vector<std::string>& explicit_order) {
  if (mode == OrderMode::Explicit) {
    if (explicit_order.empty()) {
      throw std::runtime_error("determine_order: explicit mode needs an order");
    }
    return explicit_order;
  }
  if (strengths.empty()) throw std::runtime_error("determine_order: empty strengths");
  std::vector<std::pair<std::string, double>> items(strengths.begin(), strengths.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;  // weakest (most headroom) first
    return a.first < b.first;
  });
  std::vector<std::string> order;
  order.reserve(items.size());
  for (const auto& [name, s] : items) order.push_back(name);
  if (mode == OrderMode::StrongFirst) std::reverse(order.begin(), order.end());
  return order;
}

ScheduleState additive_schedule_at(const std::vector<std::string>& activation_order,
                                   ScheduleState::Direction direction, std::int64_t step,
                                   int interval) {
  const std::size_t active_count =
      std::min(activation_order.size(),
               static_cast<std::size_t>(step / interval + 1));
  ScheduleState schedule;
  schedule.direction = direction;
  schedule.active.assign(activation_order.begin(),
                         activation_order.begin() + static_cast<std::ptrdiff_t>(active_count));
  if (direction == ScheduleState::Direction::Left) {
    std::reverse(schedule.active.begin(), schedule.active.end());
  }
  return schedule;
}

namespace {

// Fills in any missing reward scores; cached scores are never recomputed.
void score_pool(DataPool& pool, const std::vector<RewardSpec>& specs,
                const ScoreContext& ctx) {
  for (auto& ins : pool.instances()) {
    bool missing = !ins.scores;
    if (ins.scores) {
      for (const auto& spec : specs) {
        if (!ins.scores->count(spec.name)) missing = true;
      }
    }
    if (!missing) continue;
    RewardVector fresh = score_instance(ins, specs, ctx);
    if (!ins.scores) ins.scores = RewardVector{};
    for (auto& [name, value] : fresh) (*ins.scores)[name] = value;
  }
}

void bin_pool(DataPool& pool, const std::vector<RewardSpec>& specs) {
  for (const auto& spec : specs) pool.bin_by_reward(spec);
}

struct LoopOptions {
  bool use_control = true;
  bool explore = true;
  std::function<ScheduleState(std::int64_t)> schedule_at;
  std::function<bool(const Instance&)> keep;  // batch filter; null keeps all
  double beta = 0.0;
  double alpha = 0.0;
};

std::vector<std::size_t> eligible_indices(const DataPool& pool,
                                          const std::function<bool(const Instance&)>& keep) {
  std::vector<std::size_t> out;
  const auto& instances = pool.instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!instances[i].generation) continue;
    if (keep && !keep(instances[i])) continue;
    out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> draw(const std::vector<std::size_t>& eligible, std::size_t n,
                              Rng& rng) {
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  if (n <= eligible.size()) {
    std::vector<std::size_t> scratch = eligible;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(scratch.size() - i));
      std::swap(scratch[i], scratch[j]);
      chosen.push_back(scratch[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      chosen.push_back(eligible[static_cast<std::size_t>(rng.uniform_int(eligible.size()))]);
    }
  }
  return chosen;
}

RunResult run_loop(PolicyModel model, const std::vector<Instance>& seeds,
                   const TrainConfig& cfg, const TrainContext& ctx,
                   const LoopOptions& opt) {
  cfg.validate();
  const Vocabulary& vocab = *ctx.vocab;
  const ControlTokenTable& table = *ctx.table;
  const std::vector<RewardSpec>& specs = *ctx.specs;

  DataPool pool = DataPool::init(seeds);
  score_pool(pool, specs, *ctx.score_ctx);
  bin_pool(pool, specs);

  const ReferenceModel reference = snapshot_reference(model);
  Rng rng(cfg.seed);
  AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  acfg.grad_clip = cfg.grad_clip;
  acfg.warmup_steps = cfg.warmup_steps;
  acfg.total_steps = cfg.total_steps;
  AdamOptimizer optimizer(model.param_count(), acfg);

  SamplingConfig explore_cfg;
  explore_cfg.strategy = SamplingConfig::Strategy::TopP;
  explore_cfg.p = cfg.top_p;
  explore_cfg.temperature = cfg.temperature;
  explore_cfg.max_length = cfg.max_gen_len;

  RunLog log;
  auto eval_at = [&](std::int64_t step) {
    return evaluate(model, *ctx.val_split, specs, *ctx.score_ctx, table,
                    opt.schedule_at(step), cfg.max_gen_len);
  };
  auto push_record = [&](std::int64_t step, const LossBreakdown& mean_loss) {
    RoundRecord rec;
    rec.step = step;
    rec.pool_size = pool.size();
    rec.loss = mean_loss;
    rec.val = eval_at(step);
    log.rounds.push_back(std::move(rec));
  };

  push_record(0, LossBreakdown{});

  LossBreakdown accum;
  int accum_count = 0;
  auto mean_accum = [&]() {
    LossBreakdown m = accum;
    if (accum_count > 0) {
      m.cross_entropy /= accum_count;
      m.kl_penalty /= accum_count;
      m.entropy_bonus /= accum_count;
      m.total /= accum_count;
    }
    return m;
  };

  const std::size_t per_step = static_cast<std::size_t>(cfg.batch_size) *
                               static_cast<std::size_t>(cfg.grad_accum);

  for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
    if (step > 0 && step % cfg.exploration_every == 0) {
      if (opt.explore) {
        const ScheduleState schedule = opt.schedule_at(step);
        std::vector<TokenId> prefix;
        if (opt.use_control) {
          for (const auto& reward : schedule.active) {
            prefix.push_back(table.token(reward, 1));
          }
        }
        std::vector<std::pair<std::int64_t, std::vector<TokenId>>> sampled;
        sampled.reserve(pool.seed_ids().size() *
                        static_cast<std::size_t>(cfg.samples_per_instance));
        for (std::int64_t qid : pool.seed_ids()) {
          const Instance& src = pool.by_id(qid);
          for (int rep = 0; rep < cfg.samples_per_instance; ++rep) {
            sampled.emplace_back(qid, sample(model, src.question, prefix, explore_cfg,
                                             vocab.bos(), vocab.eos(), rng));
          }
        }
        pool.add_generations(sampled, step, vocab);
        score_pool(pool, specs, *ctx.score_ctx);
        bin_pool(pool, specs);
      }
      push_record(step, mean_accum());
      accum = LossBreakdown{};
      accum_count = 0;
    }

    const ScheduleState schedule = opt.schedule_at(step);
    std::vector<BatchItem> batch;
    if (opt.use_control) {
      batch = pool.sample_batch(schedule, table, vocab.eos(), per_step, rng);
    } else {
      std::vector<std::size_t> eligible = eligible_indices(pool, opt.keep);
      if (eligible.empty()) {
        std::cerr << "warning: filtered pool empty at step " << step
                  << "; falling back to seed data\n";
        eligible = eligible_indices(pool, [](const Instance& ins) {
          return ins.origin == Origin::SilverSeed;
        });
      }
      const std::vector<std::size_t> chosen = draw(eligible, per_step, rng);
      if (ctx.batch_observer) {
        std::vector<const Instance*> picked;
        picked.reserve(chosen.size());
        for (std::size_t idx : chosen) picked.push_back(&pool.instances()[idx]);
        ctx.batch_observer(step, picked);
      }
      for (std::size_t idx : chosen) {
        const Instance& ins = pool.instances()[idx];
        BatchItem item;
        item.input = ins.question;
        item.target = *ins.generation;
        item.target.push_back(vocab.eos());
        batch.push_back(std::move(item));
      }
    }

    const LossBreakdown loss =
        train_step(model, reference, batch, opt.beta, opt.alpha, optimizer, vocab.bos());
    accum.cross_entropy += loss.cross_entropy;
    accum.kl_penalty += loss.kl_penalty;
    accum.entropy_bonus += loss.entropy_bonus;
    accum.total += loss.total;
    ++accum_count;
  }

  push_record(cfg.total_steps, mean_accum());
  return RunResult{std::move(model), std::move(log)};
}

void require_rewards_known(const std::vector<std::string>& rewards,
                           const TrainContext& ctx) {
  if (rewards.empty()) throw std::runtime_error("run: no rewards given");
  for (const auto& name : rewards) {
    find_reward(*ctx.specs, name);
    if (!ctx.table->has_reward(name)) {
      throw std::runtime_error("run: reward '" + name + "' has no control tokens");
    }
  }
}

}  // namespace

RunResult train_sft(const std::vector<Instance>& seeds, const TrainConfig& cfg,
                    const TrainContext& ctx) {
  LoopOptions opt;
  opt.use_control = false;
  opt.explore = false;
  opt.schedule_at = [](std::int64_t) { return ScheduleState{}; };
  opt.beta = 0.0;
  opt.alpha = 0.0;
  // Control-token embedding rows start at zero so that, when a conditioned
  // run later snapshots this model as its reference, conditioning is a
  // no-op at step 0.
  PolicyModel model(ctx.vocab->size(), cfg.hidden, derive_seed(cfg.seed, 1),
                    ctx.vocab->control_start());
  return run_loop(std::move(model), seeds, cfg, ctx, opt);
}

RunResult run_quark(const PolicyModel& sft, const std::string& reward,
                    const std::vector<Instance>& seeds, const TrainConfig& cfg,
                    const TrainContext& ctx) {
  require_rewards_known({reward}, ctx);
  LoopOptions opt;
  opt.use_control = true;
  opt.explore = true;
  ScheduleState schedule;
  schedule.active = {reward};
  schedule.direction = cfg.direction;
  opt.schedule_at = [schedule](std::int64_t) { return schedule; };
  opt.beta = cfg.beta;
  opt.alpha = cfg.alpha;
  return run_loop(sft, seeds, cfg, ctx, opt);
}

RunResult run_mario_classic(const PolicyModel& sft, const std::vector<std::string>& rewards,
                            const std::vector<Instance>& seeds, const TrainConfig& cfg,
                            const TrainContext& ctx) {
  if (rewards.size() < 2) throw std::runtime_error("classic: need at least 2 rewards");
  require_rewards_known(rewards, ctx);
  LoopOptions opt;
  opt.use_control = true;
  opt.explore = true;
  ScheduleState schedule;
  schedule.active = rewards;
  schedule.direction = cfg.direction;
  opt.schedule_at = [schedule](std::int64_t) { return schedule; };
  opt.beta = cfg.beta;
  opt.alpha = cfg.alpha;
  return run_loop(sft, seeds, cfg, ctx, opt);
}

RunResult run_mario_additive(const PolicyModel& sft,
                             const std::vector<std::string>& rewards,
                             const std::vector<Instance>& seeds, const TrainConfig& cfg,
                             const TrainContext& ctx) {
  if (rewards.size() < 2) throw std::runtime_error("additive: need at least 2 rewards");
  require_rewards_known(rewards, ctx);
  LoopOptions opt;
  opt.use_control = true;
  opt.explore = true;
  const auto order = rewards;
  const auto direction = cfg.direction;
  const int interval = cfg.additive_interval;
  opt.schedule_at = [order, direction, interval](std::int64_t step) {
    return additive_schedule_at(order, direction, step, interval);
  };
  opt.beta = cfg.beta;
  opt.alpha = cfg.alpha;
  return run_loop(sft, seeds, cfg, ctx, opt);
}

RunResult run_product_baseline(const PolicyModel& sft, const std::vector<Instance>& seeds,
                               const TrainConfig& cfg, const TrainContext& ctx) {
  return run_quark(sft, "product", seeds, cfg, ctx);
}

bool filt_acc_keep(const Instance& instance) {
  return instance.scores && instance.scores->count("correctness") &&
         instance.scores->at("correctness") == 1.0;
}

bool filt_all_keep(const Instance& instance,
                   const std::map<std::string, double>& thresholds) {
  if (!filt_acc_keep(instance)) return false;
  for (const auto& [name, tau] : thresholds) {
    if (!instance.scores->count(name) || instance.scores->at(name) < tau) return false;
  }
  return true;
}

RunResult run_filt_acc(const PolicyModel& sft, const std::vector<Instance>& seeds,
                       const TrainConfig& cfg, const TrainContext& ctx) {
  LoopOptions opt;
  opt.use_control = false;
  opt.explore = true;
  opt.schedule_at = [](std::int64_t) { return ScheduleState{}; };
  opt.keep = filt_acc_keep;
  opt.beta = 0.0;
  opt.alpha = 0.0;
  return run_loop(sft, seeds, cfg, ctx, opt);
}

RunResult run_filt_all(const PolicyModel& sft, const std::vector<Instance>& seeds,
                       const TrainConfig& cfg, const TrainContext& ctx) {
  for (const auto& [name, tau] : cfg.filt_thresholds) {
    const RewardSpec& spec = find_reward(*ctx.specs, name);
    if (tau < spec.range_min || tau > spec.range_max) {
      throw std::runtime_error("filt-all: threshold for '" + name + "' outside range");
    }
  }
  LoopOptions opt;
  opt.use_control = false;
  opt.explore = true;
  opt.schedule_at = [](std::int64_t) { return ScheduleState{}; };
  const auto thresholds = cfg.filt_thresholds;
  opt.keep = [thresholds](const Instance& ins) { return filt_all_keep(ins, thresholds); };
  opt.beta = 0.0;
  opt.alpha = 0.0;
  return run_loop(sft, seeds, cfg, ctx, opt);
}

}  // namespace rcgen
