#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "rcgen/rewards.hpp"
#include "rcgen/task.hpp"
#include "rcgen/trainer.hpp"

using namespace rcgen;

namespace {

// Small end-to-end fixture around the synthetic task.
struct Fixture {
  SyntheticTask task;
  Vocabulary vocab;
  ControlTokenTable table;
  std::vector<RewardSpec> specs;
  PlausibilityOracle oracle;
  ConsistencyPredictors predictors;
  ScoreContext sctx;
  SyntheticTask::Splits splits;
  TrainContext ctx;

  explicit Fixture(int n_train = 40, int n_val = 12, bool with_product = false)
      : task(TaskParams{}),
        vocab(task.make_vocabulary()),
        specs(standard_rewards()),
        oracle(
            [&] {
              std::set<std::vector<std::string>> facts;
              for (const auto& [a, b] : task.fact_bigrams()) facts.insert({a, b});
              return facts;
            }(),
            2) {
    if (with_product) specs.push_back(product_reward(specs));
    table = vocab.register_control_tokens(control_groups(specs));
    splits = task.generate(vocab, n_train, n_val, 8, 321);
    PredictorConfig pcfg;
    pcfg.epochs = 8;
    predictors = train_consistency_predictors(splits.train, vocab, pcfg);
    sctx.vocab = &vocab;
    sctx.oracle = &oracle;
    sctx.predictors = &predictors;
    ctx.vocab = &vocab;
    ctx.table = &vocab.control_table();
    ctx.specs = &specs;
    ctx.score_ctx = &sctx;
    ctx.val_split = &splits.val;
  }

  TrainConfig small_config(int steps = 60) const {
    TrainConfig cfg;
    cfg.hidden = 12;
    cfg.total_steps = steps;
    cfg.exploration_every = 20;
    cfg.samples_per_instance = 1;
    cfg.batch_size = 4;
    cfg.grad_accum = 1;
    cfg.learning_rate = 5e-3;
    cfg.warmup_steps = 10;
    cfg.max_gen_len = 12;
    cfg.seed = 11;
    return cfg;
  }
};

}  // namespace

TEST_CASE("reward_strength is the normalized headroom") {
  CHECK(reward_strength(1.0, 0.0, 1.0) == doctest::Approx(0.0));
  CHECK(reward_strength(0.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(reward_strength(0.18, -1.0, 1.0) == doctest::Approx(0.41));
  CHECK_THROWS(reward_strength(1.5, 0.0, 1.0));
  CHECK_THROWS(reward_strength(0.5, 1.0, 0.0));
}

TEST_CASE("reward_strength is invariant under common affine rescaling") {
  const double base = reward_strength(0.3, 0.0, 1.0);
  for (double scale : {2.0, 10.0, 0.5}) {
    for (double shift : {-3.0, 0.0, 7.0}) {
      CHECK(reward_strength(0.3 * scale + shift, shift, scale + shift) ==
            doctest::Approx(base));
    }
  }
}

TEST_CASE("determine_order") {
  const std::map<std::string, double> strengths = {{"A", 0.2}, {"B", 0.7}, {"C", 0.5}};
  CHECK(determine_order(strengths, OrderMode::WeakFirst) ==
        std::vector<std::string>{"B", "C", "A"});
  CHECK(determine_order(strengths, OrderMode::StrongFirst) ==
        std::vector<std::string>{"A", "C", "B"});
  const std::map<std::string, double> tied = {{"b", 0.5}, {"a", 0.5}, {"c", 0.9}};
  CHECK(determine_order(tied, OrderMode::WeakFirst) ==
        std::vector<std::string>{"c", "a", "b"});
  CHECK(determine_order({}, OrderMode::Explicit, {"x", "y"}) ==
        std::vector<std::string>{"x", "y"});
  CHECK_THROWS(determine_order({}, OrderMode::WeakFirst));
}

TEST_CASE("additive schedule activates rewards at multiples of t") {
  const std::vector<std::string> order = {"A", "B", "C"};
  const int t = 300;
  SUBCASE("insertion to the right keeps activation order") {
    const auto dir = ScheduleState::Direction::Right;
    CHECK(additive_schedule_at(order, dir, 0, t).active == std::vector<std::string>{"A"});
    CHECK(additive_schedule_at(order, dir, 299, t).active ==
          std::vector<std::string>{"A"});
    CHECK(additive_schedule_at(order, dir, 300, t).active ==
          std::vector<std::string>{"A", "B"});
    CHECK(additive_schedule_at(order, dir, 599, t).active ==
          std::vector<std::string>{"A", "B"});
    CHECK(additive_schedule_at(order, dir, 600, t).active ==
          std::vector<std::string>{"A", "B", "C"});
    CHECK(additive_schedule_at(order, dir, 10000, t).active ==
          std::vector<std::string>{"A", "B", "C"});
  }
  SUBCASE("insertion to the left prepends the newest reward") {
    const auto dir = ScheduleState::Direction::Left;
    CHECK(additive_schedule_at(order, dir, 0, t).active == std::vector<std::string>{"A"});
    CHECK(additive_schedule_at(order, dir, 300, t).active ==
          std::vector<std::string>{"B", "A"});
    CHECK(additive_schedule_at(order, dir, 600, t).active ==
          std::vector<std::string>{"C", "B", "A"});
  }
  SUBCASE("active-set size is nondecreasing and changes only at multiples of t") {
    std::size_t prev = 1;
    for (int step = 0; step < 1200; ++step) {
      const auto s = additive_schedule_at(order, ScheduleState::Direction::Right, step, t);
      CHECK(s.active.size() >= prev);
      if (step % t != 0) CHECK(s.active.size() == prev);
      prev = s.active.size();
    }
  }
}

TEST_CASE("filtering predicates") {
  Instance ins;
  ins.scores = RewardVector{{"correctness", 1.0}, {"plausibility", 0.6}};
  CHECK(filt_acc_keep(ins));
  (*ins.scores)["correctness"] = 0.0;
  CHECK_FALSE(filt_acc_keep(ins));

  (*ins.scores)["correctness"] = 1.0;
  CHECK(filt_all_keep(ins, {}));
  CHECK(filt_all_keep(ins, {{"plausibility", 0.5}}));
  CHECK_FALSE(filt_all_keep(ins, {{"plausibility", 0.7}}));

  Instance unscored;
  CHECK_FALSE(filt_acc_keep(unscored));
}

TEST_CASE("sft memorizes a tiny dataset") {
  Fixture f(5, 5);
  TrainConfig cfg = f.small_config(10000);
  cfg.hidden = 16;
  cfg.exploration_every = 5000;
  cfg.batch_size = 5;
  cfg.learning_rate = 1e-2;
  cfg.warmup_steps = 100;
  std::vector<Instance> five(f.splits.train.begin(), f.splits.train.begin() + 5);
  const RunResult result = train_sft(five, cfg, f.ctx);
  CHECK(result.log.rounds.back().loss.cross_entropy < 0.05);
  // Pure cross-entropy: total equals CE and the KL term is absent.
  CHECK(result.log.rounds.back().loss.total ==
        result.log.rounds.back().loss.cross_entropy);
  CHECK(result.log.rounds.back().loss.kl_penalty == 0.0);
}

TEST_CASE("sft is deterministic for a fixed seed") {
  Fixture f;
  const TrainConfig cfg = f.small_config(40);
  const RunResult a = train_sft(f.splits.train, cfg, f.ctx);
  const RunResult b = train_sft(f.splits.train, cfg, f.ctx);
  CHECK(a.model.parameters() == b.model.parameters());
  REQUIRE(a.log.rounds.size() == b.log.rounds.size());
  for (std::size_t i = 0; i < a.log.rounds.size(); ++i) {
    CHECK(a.log.rounds[i].to_json() == b.log.rounds[i].to_json());
  }
}

TEST_CASE("quark explores on schedule and grows the pool") {
  Fixture f;
  TrainConfig cfg = f.small_config(60);  // exploration at steps 20 and 40
  const RunResult sft = train_sft(f.splits.train, f.small_config(30), f.ctx);

  const RunResult result = run_quark(sft.model, "diversity", f.splits.train, cfg, f.ctx);
  // Pool growth: 40 seeds + 2 rounds * 1 sample * 40 questions.
  CHECK(result.log.rounds.back().pool_size == 40 + 2 * 40);
  // Records at steps 0, 20, 40 and the final step.
  REQUIRE(result.log.rounds.size() == 4);
  CHECK(result.log.rounds[0].step == 0);
  CHECK(result.log.rounds[1].step == 20);
  CHECK(result.log.rounds[2].step == 40);
  CHECK(result.log.rounds[3].step == 60);
  CHECK(result.log.rounds[0].pool_size == 40);
  CHECK(result.log.rounds[1].pool_size == 80);
}

TEST_CASE("exploration frequency larger than total steps means no exploration") {
  Fixture f;
  TrainConfig cfg = f.small_config(30);
  cfg.exploration_every = 100;
  const RunResult sft = train_sft(f.splits.train, f.small_config(20), f.ctx);
  const RunResult result = run_quark(sft.model, "diversity", f.splits.train, cfg, f.ctx);
  CHECK(result.log.rounds.back().pool_size == 40);  // seeds only
}

TEST_CASE("conditioned runs are deterministic for a fixed seed") {
  Fixture f;
  const RunResult sft = train_sft(f.splits.train, f.small_config(30), f.ctx);
  const TrainConfig cfg = f.small_config(44);
  const RunResult a = run_mario_classic(
      sft.model, {"plausibility", "consistency", "diversity", "correctness"},
      f.splits.train, cfg, f.ctx);
  const RunResult b = run_mario_classic(
      sft.model, {"plausibility", "consistency", "diversity", "correctness"},
      f.splits.train, cfg, f.ctx);
  CHECK(a.model.parameters() == b.model.parameters());
  CHECK(a.log.rounds.back().to_json() == b.log.rounds.back().to_json());
}

TEST_CASE("classic requires at least two rewards and known names") {
  Fixture f;
  const RunResult sft = train_sft(f.splits.train, f.small_config(10), f.ctx);
  const TrainConfig cfg = f.small_config(10);
  CHECK_THROWS(run_mario_classic(sft.model, {"diversity"}, f.splits.train, cfg, f.ctx));
  CHECK_THROWS(run_mario_classic(sft.model, {"diversity", "nope"}, f.splits.train, cfg,
                                 f.ctx));
  CHECK_THROWS(run_quark(sft.model, "nope", f.splits.train, cfg, f.ctx));
}

TEST_CASE("additive degenerates to single-reward conditioning when t >= total steps") {
  Fixture f;
  const RunResult sft = train_sft(f.splits.train, f.small_config(20), f.ctx);
  TrainConfig cfg = f.small_config(30);
  cfg.additive_interval = 50;
  cfg.seed = 5;
  const RunResult additive = run_mario_additive(
      sft.model, {"diversity", "plausibility"}, f.splits.train, cfg, f.ctx);
  TrainConfig qcfg = cfg;
  const RunResult quark = run_quark(sft.model, "diversity", f.splits.train, qcfg, f.ctx);
  CHECK(additive.model.parameters() == quark.model.parameters());
}

TEST_CASE("filt-acc batches contain only correct-prediction instances") {
  Fixture f;
  const RunResult sft = train_sft(f.splits.train, f.small_config(30), f.ctx);
  TrainConfig cfg = f.small_config(100);  // exploration rounds at 20,40,60,80
  TrainContext ctx = f.ctx;
  int batches_seen = 0;
  ctx.batch_observer = [&](std::int64_t, const std::vector<const Instance*>& picked) {
    ++batches_seen;
    for (const Instance* ins : picked) {
      REQUIRE(ins->scores.has_value());
      CHECK(ins->scores->at("correctness") == 1.0);
    }
  };
  run_filt_acc(sft.model, f.splits.train, cfg, ctx);
  CHECK(batches_seen == 100);
}

TEST_CASE("filt-all with minimal thresholds matches filt-acc's retained set") {
  Fixture f;
  const RunResult sft = train_sft(f.splits.train, f.small_config(30), f.ctx);
  TrainConfig cfg = f.small_config(50);
  cfg.filt_thresholds = {{"plausibility", 0.0}, {"diversity", 0.0},
                         {"consistency", -1.0}};
  const RunResult a = run_filt_acc(sft.model, f.splits.train, cfg, f.ctx);
  const RunResult b = run_filt_all(sft.model, f.splits.train, cfg, f.ctx);
  CHECK(a.model.parameters() == b.model.parameters());
}

TEST_CASE("filt-all thresholds filter the retained set exactly") {
  Fixture f;
  // Synthesize a scored pool and compare predicate output to a brute-force
  // set intersection.
  std::vector<Instance> pool = f.splits.train;
  Rng rng(8);
  const std::map<std::string, double> thresholds = {{"plausibility", 0.5},
                                                    {"diversity", 0.7}};
  std::set<std::int64_t> expected;
  for (auto& ins : pool) {
    RewardVector scores;
    scores["correctness"] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    scores["plausibility"] = rng.uniform();
    scores["diversity"] = rng.uniform();
    scores["consistency"] = 2.0 * rng.uniform() - 1.0;
    ins.scores = scores;
    if (scores["correctness"] == 1.0 && scores["plausibility"] >= 0.5 &&
        scores["diversity"] >= 0.7) {
      expected.insert(ins.id);
    }
  }
  std::set<std::int64_t> got;
  for (const auto& ins : pool) {
    if (filt_all_keep(ins, thresholds)) got.insert(ins.id);
  }
  CHECK(got == expected);
}

TEST_CASE("filt-all falls back to seeds when the filter empties the pool") {
  Fixture f;
  const RunResult sft = train_sft(f.splits.train, f.small_config(10), f.ctx);
  TrainConfig cfg = f.small_config(8);
  // Gold rationales score consistency well below 1.0, so this threshold
  // rejects every instance including the seeds.
  cfg.filt_thresholds = {{"consistency", 1.0}};
  const RunResult result = run_filt_all(sft.model, f.splits.train, cfg, f.ctx);
  CHECK(result.log.rounds.back().pool_size >= 40);
}

TEST_CASE("product baseline runs over the consolidated reward") {
  Fixture f(20, 8, /*with_product=*/true);
  const RunResult sft = train_sft(f.splits.train, f.small_config(20), f.ctx);
  TrainConfig cfg = f.small_config(25);
  const RunResult result = run_product_baseline(sft.model, f.splits.train, cfg, f.ctx);
  CHECK(result.log.rounds.back().pool_size == 20 + 20);
  // Instances carry product scores inside [0,1].
  CHECK(result.log.rounds.size() >= 2);
}
