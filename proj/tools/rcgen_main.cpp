// Command-line front end: synthetic data preparation, predictor and policy
// training, evaluation, run comparison, and plot-data export.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcgen/eval.hpp"
#include "rcgen/instance.hpp"
#include "rcgen/json_io.hpp"
#include "rcgen/policy.hpp"
#include "rcgen/pool.hpp"
#include "rcgen/rewards.hpp"
#include "rcgen/task.hpp"
#include "rcgen/trainer.hpp"
#include "rcgen/vocab.hpp"

namespace fs = std::filesystem;
using namespace rcgen;

namespace {

struct DataConfig {
  std::string dir = "data";
  int train = 500;
  int val = 100;
  int test = 100;
};

struct RewardBinsConfig {
  int rationale_bins = 5;
  int correctness_bins = 2;
  int product_bins = 5;
};

struct FullConfig {
  std::uint64_t seed = 7;
  TaskParams task;
  DataConfig data;
  int hidden = 32;
  RewardBinsConfig bins;
  std::string predictors_path = "data/predictors.json";
  PredictorConfig predictors;
  TrainConfig sft;
  TrainConfig train;
  json raw;  // parsed document, re-emitted into run directories
};

void parse_train_section(const json& j, const std::string& where, TrainConfig& cfg) {
  require_known_keys(
      j,
      {"rewards", "beta", "alpha", "learning_rate", "batch_size", "grad_accum",
       "total_steps", "exploration_every", "samples_per_instance", "additive_interval",
       "order", "direction", "thresholds", "max_gen_len", "top_p", "temperature",
       "warmup_steps", "grad_clip"},
      where);
  if (j.contains("rewards")) cfg.rewards = j["rewards"].get<std::vector<std::string>>();
  if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("grad_accum")) cfg.grad_accum = j["grad_accum"].get<int>();
  if (j.contains("total_steps")) cfg.total_steps = j["total_steps"].get<int>();
  if (j.contains("exploration_every")) {
    cfg.exploration_every = j["exploration_every"].get<int>();
  }
  if (j.contains("samples_per_instance")) {
    cfg.samples_per_instance = j["samples_per_instance"].get<int>();
  }
  if (j.contains("additive_interval")) {
    cfg.additive_interval = j["additive_interval"].get<int>();
  }
  if (j.contains("order")) cfg.order_mode = order_mode_from_name(j["order"].get<std::string>());
  if (j.contains("direction")) {
    cfg.direction = direction_from_name(j["direction"].get<std::string>());
  }
  if (j.contains("thresholds")) {
    cfg.filt_thresholds = j["thresholds"].get<std::map<std::string, double>>();
  }
  if (j.contains("max_gen_len")) cfg.max_gen_len = j["max_gen_len"].get<int>();
  if (j.contains("top_p")) cfg.top_p = j["top_p"].get<double>();
  if (j.contains("temperature")) cfg.temperature = j["temperature"].get<double>();
  if (j.contains("warmup_steps")) cfg.warmup_steps = j["warmup_steps"].get<int>();
  if (j.contains("grad_clip")) cfg.grad_clip = j["grad_clip"].get<double>();
}

FullConfig load_config(const std::string& path) {
  const json j = load_json_file(path);
  require_version(j, 1, "config");
  require_known_keys(j,
                     {"version", "seed", "task", "data", "model", "rewards",
                      "predictors", "sft", "train", "run"},
                     "config");
  FullConfig cfg;
  cfg.raw = j;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("task")) {
    const json& t = j["task"];
    require_known_keys(t, {"symbols", "choices", "candidate_copies", "filler"},
                       "config.task");
    if (t.contains("symbols")) cfg.task.symbols = t["symbols"].get<int>();
    if (t.contains("choices")) cfg.task.choices = t["choices"].get<int>();
    if (t.contains("candidate_copies")) {
      cfg.task.candidate_copies = t["candidate_copies"].get<int>();
    }
    if (t.contains("filler")) cfg.task.filler = t["filler"].get<int>();
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    require_known_keys(d, {"dir", "train", "val", "test"}, "config.data");
    if (d.contains("dir")) cfg.data.dir = d["dir"].get<std::string>();
    if (d.contains("train")) cfg.data.train = d["train"].get<int>();
    if (d.contains("val")) cfg.data.val = d["val"].get<int>();
    if (d.contains("test")) cfg.data.test = d["test"].get<int>();
  }
  if (j.contains("model")) {
    require_known_keys(j["model"], {"hidden"}, "config.model");
    if (j["model"].contains("hidden")) cfg.hidden = j["model"]["hidden"].get<int>();
  }
  if (j.contains("rewards")) {
    const json& r = j["rewards"];
    require_known_keys(r, {"rationale_bins", "correctness_bins", "product_bins"},
                       "config.rewards");
    if (r.contains("rationale_bins")) cfg.bins.rationale_bins = r["rationale_bins"].get<int>();
    if (r.contains("correctness_bins")) {
      cfg.bins.correctness_bins = r["correctness_bins"].get<int>();
    }
    if (r.contains("product_bins")) cfg.bins.product_bins = r["product_bins"].get<int>();
  }
  if (j.contains("predictors")) {
    const json& p = j["predictors"];
    require_known_keys(p, {"path", "embed_dim", "epochs", "learning_rate", "batch_size"},
                       "config.predictors");
    if (p.contains("path")) cfg.predictors_path = p["path"].get<std::string>();
    if (p.contains("embed_dim")) cfg.predictors.embed_dim = p["embed_dim"].get<int>();
    if (p.contains("epochs")) cfg.predictors.epochs = p["epochs"].get<int>();
    if (p.contains("learning_rate")) {
      cfg.predictors.learning_rate = p["learning_rate"].get<double>();
    }
    if (p.contains("batch_size")) cfg.predictors.batch_size = p["batch_size"].get<int>();
  }
  cfg.sft.total_steps = 3000;
  cfg.sft.learning_rate = 5e-3;
  if (j.contains("sft")) {
    parse_train_section(j["sft"], "config.sft", cfg.sft);
  }
  cfg.train.rewards = {"plausibility", "consistency", "diversity", "correctness"};
  if (j.contains("train")) {
    parse_train_section(j["train"], "config.train", cfg.train);
  }
  cfg.sft.hidden = cfg.hidden;
  cfg.train.hidden = cfg.hidden;
  cfg.sft.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.predictors.seed = cfg.seed;
  return cfg;
}

std::vector<RewardSpec> build_specs(const FullConfig& cfg, bool with_product) {
  std::vector<RewardSpec> specs =
      standard_rewards(cfg.bins.rationale_bins, cfg.bins.correctness_bins);
  if (with_product) {
    specs.push_back(product_reward(specs, cfg.bins.product_bins));
  }
  return specs;
}

std::string data_file(const FullConfig& cfg, const std::string& split) {
  return (fs::path(cfg.data.dir) / (split + ".jsonl")).string();
}

// Everything a run or evaluation needs, loaded from the data directory.
struct Environment {
  SyntheticTask task;
  Vocabulary vocab;
  PlausibilityOracle oracle;
  ConsistencyPredictors predictors;
  std::vector<RewardSpec> specs;
  ScoreContext ctx;

  Environment(const FullConfig& cfg, bool with_product, bool need_predictors)
      : task(SyntheticTask::from_json(
            load_json_file((fs::path(cfg.data.dir) / "task.json").string()))),
        vocab(Vocabulary::from_json(
            load_json_file((fs::path(cfg.data.dir) / "vocab.json").string()))),
        oracle(
            [&] {
              std::set<std::vector<std::string>> facts;
              for (const auto& [a, b] : task.fact_bigrams()) {
                facts.insert({a, b});
              }
              return facts;
            }(),
            2),
        specs(build_specs(cfg, with_product)) {
    if (need_predictors) {
      predictors = ConsistencyPredictors::from_json(load_json_file(cfg.predictors_path));
    }
    ctx.vocab = &vocab;
    ctx.oracle = &oracle;
    ctx.predictors = &predictors;
  }
};

void require_empty_or_force(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw std::runtime_error(dir.string() +
                             " is not empty; pass --force to overwrite");
  }
  fs::create_directories(dir);
}

int cmd_prepare_data(const std::string& config_path, bool force) {
  const FullConfig cfg = load_config(config_path);
  const fs::path dir(cfg.data.dir);
  require_empty_or_force(dir, force);

  const SyntheticTask task(cfg.task);
  Vocabulary vocab = task.make_vocabulary();
  vocab.register_control_tokens(control_groups(build_specs(cfg, true)));

  const SyntheticTask::Splits splits =
      task.generate(vocab, cfg.data.train, cfg.data.val, cfg.data.test, cfg.seed);

  save_json_file((dir / "task.json").string(), task.to_json());
  save_json_file((dir / "vocab.json").string(), vocab.to_json());
  save_instances_jsonl((dir / "train.jsonl").string(), splits.train);
  save_instances_jsonl((dir / "val.jsonl").string(), splits.val);
  save_instances_jsonl((dir / "test.jsonl").string(), splits.test);
  std::cout << "wrote " << splits.train.size() << "/" << splits.val.size() << "/"
            << splits.test.size() << " instances to " << dir.string() << "\n";
  return 0;
}

int cmd_train_predictors(const std::string& config_path, const std::string& out_override) {
  const FullConfig cfg = load_config(config_path);
  const Environment env(cfg, false, false);
  const auto train = load_instances_jsonl(data_file(cfg, "train"));
  const auto val = load_instances_jsonl(data_file(cfg, "val"));

  const ConsistencyPredictors predictors =
      train_consistency_predictors(train, env.vocab, cfg.predictors);

  // Report validation accuracy of both predictors.
  int qr_hits = 0, q_hits = 0;
  for (const auto& ins : val) {
    const ParsedGeneration parsed = parse_answer(*ins.generation, env.vocab);
    const auto with = predictors.with_rationale(ins.question, parsed.rationale);
    const auto without = predictors.without_rationale(ins.question);
    const auto argmax = [](const std::vector<double>& p) {
      return static_cast<std::size_t>(
          std::max_element(p.begin(), p.end()) - p.begin());
    };
    std::size_t gold = 0;
    for (std::size_t i = 0; i < ins.choices.size(); ++i) {
      if (ins.choices[i] == ins.gold) gold = i;
    }
    if (argmax(with) == gold) ++qr_hits;
    if (argmax(without) == gold) ++q_hits;
  }
  const std::string out = out_override.empty() ? cfg.predictors_path : out_override;
  fs::create_directories(fs::path(out).parent_path());
  save_json_file(out, predictors.to_json());
  std::cout << "predictors saved to " << out << "\n"
            << "val accuracy with rationale:    " << 100.0 * qr_hits / val.size() << "%\n"
            << "val accuracy without rationale: " << 100.0 * q_hits / val.size() << "%\n";
  return 0;
}

ScheduleState final_schedule(Algorithm algo, const std::vector<std::string>& rewards,
                             ScheduleState::Direction direction) {
  switch (algo) {
    case Algorithm::Sft:
    case Algorithm::FiltAcc:
    case Algorithm::FiltAll:
      return ScheduleState{};
    case Algorithm::Quark: {
      ScheduleState s;
      s.active = rewards;
      s.direction = direction;
      return s;
    }
    case Algorithm::Product: {
      ScheduleState s;
      s.active = {"product"};
      s.direction = direction;
      return s;
    }
    case Algorithm::Classic: {
      ScheduleState s;
      s.active = rewards;
      s.direction = direction;
      return s;
    }
    case Algorithm::Additive:
      // End state: all rewards active, ordered per the insertion direction.
      return additive_schedule_at(rewards, direction,
                                  std::numeric_limits<std::int64_t>::max() / 2, 1);
  }
  throw std::runtime_error("bad algorithm");
}

int cmd_run(const std::string& algo_name, const std::string& config_path,
            const std::string& out_dir, const std::string& ref_dir,
            const std::string& order_override, const std::string& direction_override,
            std::int64_t seed_override, bool force) {
  FullConfig cfg = load_config(config_path);
  const Algorithm algo = algorithm_from_name(algo_name);
  if (seed_override >= 0) {
    cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg.sft.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
  }
  TrainConfig tcfg = (algo == Algorithm::Sft) ? cfg.sft : cfg.train;
  tcfg.algorithm = algo;
  if (!order_override.empty()) tcfg.order_mode = order_mode_from_name(order_override);
  if (!direction_override.empty()) {
    tcfg.direction = direction_from_name(direction_override);
  }
  tcfg.validate();

  const bool needs_ref = algo != Algorithm::Sft;
  if (needs_ref && ref_dir.empty()) {
    throw std::runtime_error("--ref <sft run dir> is required for --algo " + algo_name);
  }

  const Environment env(cfg, algo == Algorithm::Product, true);
  const auto train = load_instances_jsonl(data_file(cfg, "train"));
  const auto val = load_instances_jsonl(data_file(cfg, "val"));

  TrainContext ctx;
  ctx.vocab = &env.vocab;
  ctx.table = &env.vocab.control_table();
  ctx.specs = &env.specs;
  ctx.score_ctx = &env.ctx;
  ctx.val_split = &val;

  // Resolve the reward order.
  std::vector<std::string> rewards = tcfg.rewards;
  if (needs_ref && algo != Algorithm::FiltAcc && algo != Algorithm::FiltAll &&
      tcfg.order_mode != OrderMode::Explicit) {
    const json ref_report = load_json_file((fs::path(ref_dir) / "report.json").string());
    const MetricsReport report = MetricsReport::from_json(ref_report);
    std::map<std::string, double> strengths;
    for (const auto& name : rewards) {
      const RewardSpec& spec = find_reward(env.specs, name);
      strengths[name] = reward_strength(report.reward_means.at(name), spec.range_min,
                                        spec.range_max);
    }
    rewards = determine_order(strengths, tcfg.order_mode);
  }
  tcfg.rewards = rewards;

  const fs::path out(out_dir);
  require_empty_or_force(out, force);
  fs::create_directories(out / "checkpoints");

  // Snapshot the effective configuration before any training.
  json snapshot = cfg.raw;
  snapshot["run"] = {{"algorithm", algo_name},
                     {"rewards", rewards},
                     {"order", order_mode_name(tcfg.order_mode)},
                     {"direction", direction_name(tcfg.direction)},
                     {"seed", cfg.seed},
                     {"ref", ref_dir}};
  save_json_file((out / "config.json").string(), snapshot);

  RunResult result = [&] {
    if (algo == Algorithm::Sft) {
      return train_sft(train, tcfg, ctx);
    }
    const PolicyModel sft = PolicyModel::from_json(
        load_json_file((fs::path(ref_dir) / "checkpoints" / "final.json").string()));
    switch (algo) {
      case Algorithm::Quark:
        if (rewards.size() != 1) {
          throw std::runtime_error("quark takes exactly one reward");
        }
        return run_quark(sft, rewards[0], train, tcfg, ctx);
      case Algorithm::Classic:
        return run_mario_classic(sft, rewards, train, tcfg, ctx);
      case Algorithm::Additive:
        return run_mario_additive(sft, rewards, train, tcfg, ctx);
      case Algorithm::Product:
        return run_product_baseline(sft, train, tcfg, ctx);
      case Algorithm::FiltAcc:
        return run_filt_acc(sft, train, tcfg, ctx);
      case Algorithm::FiltAll:
        return run_filt_all(sft, train, tcfg, ctx);
      default:
        throw std::runtime_error("unhandled algorithm");
    }
  }();

  save_json_file((out / "checkpoints" / "final.json").string(), result.model.to_json());
  result.log.save_jsonl((out / "runlog.jsonl").string());
  save_json_file((out / "report.json").string(), result.log.rounds.back().val.to_json());
  std::cout << "run " << algo_name << " finished: " << out.string() << "\n"
            << "final val accuracy " << result.log.rounds.back().val.accuracy
            << ", avg NRG " << result.log.rounds.back().val.avg_nrg_pct << "\n";
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& split,
             const std::string& config_path, const std::string& out_path) {
  const FullConfig cfg = load_config(config_path);
  const json run_cfg = load_json_file((fs::path(run_dir) / "config.json").string());
  if (!run_cfg.contains("run")) {
    throw std::runtime_error(run_dir + "/config.json has no run block");
  }
  const Algorithm algo = algorithm_from_name(run_cfg["run"]["algorithm"].get<std::string>());
  const auto rewards = run_cfg["run"]["rewards"].get<std::vector<std::string>>();
  const auto direction = direction_from_name(run_cfg["run"]["direction"].get<std::string>());

  const Environment env(cfg, algo == Algorithm::Product, true);
  const PolicyModel model = PolicyModel::from_json(
      load_json_file((fs::path(run_dir) / "checkpoints" / "final.json").string()));

  const std::string split_path =
      fs::exists(split) ? split : data_file(cfg, split);
  const auto instances = load_instances_jsonl(split_path);

  const ScheduleState schedule = final_schedule(algo, rewards, direction);
  const int max_len =
      (algo == Algorithm::Sft) ? cfg.sft.max_gen_len : cfg.train.max_gen_len;
  const MetricsReport report = evaluate(model, instances, env.specs, env.ctx,
                                        env.vocab.control_table(), schedule, max_len);
  save_json_file(out_path, report.to_json());
  std::cout << "eval " << split << ": n=" << report.n << " accuracy=" << report.accuracy
            << " avg_nrg=" << report.avg_nrg_pct
            << " parse_failures=" << report.parse_failures << "\n";
  return 0;
}

std::vector<double> metric_series(const MetricsReport& report, const std::string& metric) {
  std::vector<double> out;
  for (const auto& pe : report.per_instance) {
    if (metric == "accuracy") {
      out.push_back(100.0 * pe.scores.at("correctness"));
    } else if (metric == "avg_nrg") {
      out.push_back(avg_nrg(100.0 * pe.scores.at("correctness"),
                            pe.scores.at("plausibility"), pe.scores.at("diversity"),
                            pe.scores.at("consistency")));
    } else {
      if (!pe.scores.count(metric)) {
        throw std::runtime_error("report has no metric '" + metric + "'");
      }
      if (metric != "correctness" && !pe.rationale_scored) continue;
      out.push_back(pe.scores.at(metric));
    }
  }
  return out;
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& metric, const std::string& out_path) {
  const MetricsReport a = MetricsReport::from_json(load_json_file(a_path));
  const MetricsReport b = MetricsReport::from_json(load_json_file(b_path));
  const std::vector<double> sa = metric_series(a, metric);
  const std::vector<double> sb = metric_series(b, metric);
  const double p = t_test_one_tailed(sa, sb);
  auto mean = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / v.size();
  };
  const bool significant = p < 0.05;
  const json out{{"metric", metric},
                 {"p_value", p},
                 {"significant", significant},
                 {"verdict", significant ? "significant" : "not-significant"},
                 {"mean_a", mean(sa)},
                 {"mean_b", mean(sb)},
                 {"n_a", sa.size()},
                 {"n_b", sb.size()}};
  if (!out_path.empty()) save_json_file(out_path, out);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_emit_plot_data(const std::vector<std::string>& run_dirs,
                       const std::string& out_path) {
  if (run_dirs.empty()) throw std::runtime_error("emit-plot-data: no runs given");
  std::vector<std::pair<std::string, RunLog>> logs;
  std::set<std::string> reward_names;
  for (const auto& dir : run_dirs) {
    RunLog log = RunLog::load_jsonl((fs::path(dir) / "runlog.jsonl").string());
    for (const auto& r : log.rounds) {
      for (const auto& [name, v] : r.val.reward_means) reward_names.insert(name);
    }
    logs.emplace_back(fs::path(dir).filename().string(), std::move(log));
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  auto num = [](double v) { return json(v).dump(); };
  out << "run,step,pool_size,loss_ce,loss_kl,loss_entropy,loss_total,accuracy,avg_nrg,"
         "parse_failures";
  for (const auto& name : reward_names) out << "," << name;
  out << "\n";
  for (const auto& [run_id, log] : logs) {
    for (const auto& r : log.rounds) {
      out << run_id << "," << r.step << "," << r.pool_size << ","
          << num(r.loss.cross_entropy) << "," << num(r.loss.kl_penalty) << ","
          << num(r.loss.entropy_bonus) << "," << num(r.loss.total) << ","
          << num(r.val.accuracy) << "," << num(r.val.avg_nrg_pct) << ","
          << r.val.parse_failures;
      for (const auto& name : reward_names) {
        auto it = r.val.reward_means.find(name);
        out << ",";
        if (it != r.val.reward_means.end()) out << num(it->second);
      }
      out << "\n";
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reward-conditioned sequence-generation trainer"};
  app.require_subcommand(1);

  std::string config_path = "config.json";
  bool force = false;

  auto* prep = app.add_subcommand("prepare-data", "generate synthetic task splits");
  prep->add_option("--config", config_path, "config file")->required();
  prep->add_flag("--force", force, "overwrite existing output");

  auto* trainp = app.add_subcommand("train-predictors", "train the consistency predictors");
  std::string pred_out;
  trainp->add_option("--config", config_path, "config file")->required();
  trainp->add_option("--out", pred_out, "output path override");

  auto* runc = app.add_subcommand("run", "train a policy with the chosen algorithm");
  std::string algo, out_dir, ref_dir, order_override, direction_override;
  std::int64_t seed_override = -1;
  runc->add_option("--algo", algo, "sft|quark|classic|additive|product|filt-acc|filt-all")
      ->required();
  runc->add_option("--config", config_path, "config file")->required();
  runc->add_option("--out", out_dir, "run directory")->required();
  runc->add_option("--ref", ref_dir, "reference SFT run directory");
  runc->add_option("--order", order_override, "weak-first|strong-first|explicit");
  runc->add_option("--direction", direction_override, "left|right");
  runc->add_option("--seed", seed_override, "seed override");
  runc->add_flag("--force", force, "overwrite existing output");

  auto* evalc = app.add_subcommand("eval", "evaluate a run checkpoint on a split");
  std::string run_dir, split = "test", eval_out;
  evalc->add_option("--run", run_dir, "run directory")->required();
  evalc->add_option("--split", split, "train|val|test or a jsonl path");
  evalc->add_option("--config", config_path, "config file")->required();
  evalc->add_option("--out", eval_out, "report output path")->required();

  auto* cmp = app.add_subcommand("compare", "one-tailed t-test between two reports");
  std::string a_path, b_path, metric = "avg_nrg", cmp_out;
  cmp->add_option("--a", a_path, "report A (tested as greater)")->required();
  cmp->add_option("--b", b_path, "report B")->required();
  cmp->add_option("--metric", metric, "accuracy|avg_nrg|<reward name>");
  cmp->add_option("--out", cmp_out, "verdict output path");

  auto* plot = app.add_subcommand("emit-plot-data", "flatten run logs into a CSV");
  std::vector<std::string> run_dirs;
  std::string plot_out;
  plot->add_option("--run", run_dirs, "run directory (repeatable)")->required();
  plot->add_option("--out", plot_out, "CSV output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed()) return cmd_prepare_data(config_path, force);
    if (trainp->parsed()) return cmd_train_predictors(config_path, pred_out);
    if (runc->parsed()) {
      return cmd_run(algo, config_path, out_dir, ref_dir, order_override,
                     direction_override, seed_override, force);
    }
    if (evalc->parsed()) return cmd_eval(run_dir, split, config_path, eval_out);
    if (cmp->parsed()) return cmd_compare(a_path, b_path, metric, cmp_out);
    if (plot->parsed()) return cmd_emit_plot_data(run_dirs, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
