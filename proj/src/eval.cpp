#include "rcgen/eval.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace rcgen {

double nrg(double value, double min, double max) {
  if (!(min < max)) throw std::runtime_error("nrg: min must be < max");
  if (value < min || value > max) {
    throw std::runtime_error("nrg: value " + std::to_string(value) + " outside [" +
                             std::to_string(min) + ", " + std::to_string(max) + "]");
  }
  return (value - min) / (max - min);
}

double avg_nrg(double accuracy, double plausibility, double diversity,
               double consistency) {
  const double sum = nrg(accuracy, 0.0, 100.0) + nrg(plausibility, 0.0, 1.0) +
                     nrg(diversity, 0.0, 1.0) + nrg(consistency, -1.0, 1.0);
  return 100.0 * sum / 4.0;
}

json MetricsReport::to_json() const {
  json per = json::array();
  for (const auto& pe : per_instance) {
    per.push_back({{"id", pe.id},
                   {"parse_failure", pe.parse_failure},
                   {"rationale_scored", pe.rationale_scored},
                   {"scores", pe.scores}});
  }
  return json{{"version", 1},
              {"n", n},
              {"accuracy", accuracy},
              {"rewards", reward_means},
              {"avg_nrg", avg_nrg_pct},
              {"parse_failures", parse_failures},
              {"instances", per}};
}

MetricsReport MetricsReport::from_json(const json& j) {
  require_version(j, 1, "report");
  MetricsReport r;
  r.n = j.at("n").get<int>();
  r.accuracy = j.at("accuracy").get<double>();
  r.reward_means = j.at("rewards").get<std::map<std::string, double>>();
  r.avg_nrg_pct = j.at("avg_nrg").get<double>();
  r.parse_failures = j.at("parse_failures").get<int>();
  for (const auto& pe : j.at("instances")) {
    PerInstanceEval e;
    e.id = pe.at("id").get<std::int64_t>();
    e.parse_failure = pe.at("parse_failure").get<bool>();
    e.rationale_scored = pe.at("rationale_scored").get<bool>();
    e.scores = pe.at("scores").get<RewardVector>();
    r.per_instance.push_back(std::move(e));
  }
  return r;
}

MetricsReport evaluate(const PolicyModel& model, const std::vector<Instance>& split,
                       const std::vector<RewardSpec>& rewards, const ScoreContext& ctx,
                       const ControlTokenTable& table, const ScheduleState& schedule,
                       int max_gen_len) {
  // Best-quality conditioning: the bin-1 token of every active reward.
  std::vector<TokenId> best_prefix;
  for (const auto& reward : schedule.active) {
    best_prefix.push_back(table.token(reward, 1));
  }

  SamplingConfig greedy;
  greedy.strategy = SamplingConfig::Strategy::Greedy;
  greedy.max_length = max_gen_len;
  Rng rng(0);  // unused by greedy decoding

  const Vocabulary& vocab = *ctx.vocab;
  MetricsReport report;
  report.n = static_cast<int>(split.size());

  double correct_sum = 0.0;
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;

  for (const auto& src : split) {
    Instance ins = src;
    ins.generation =
        sample(model, ins.question, best_prefix, greedy, vocab.bos(), vocab.eos(), rng);
    const ParsedGeneration parsed = parse_answer(*ins.generation, vocab);
    ins.predicted = parsed.answer;

    PerInstanceEval pe;
    pe.id = ins.id;
    pe.parse_failure = !parsed.answer.has_value();
    pe.rationale_scored = !(pe.parse_failure && parsed.rationale.empty());
    pe.scores = score_instance(ins, rewards, ctx);

    const double correct = task_correctness(parsed.answer, ins.gold);
    correct_sum += correct;
    if (pe.parse_failure) ++report.parse_failures;
    for (const auto& spec : rewards) {
      const bool rationale_metric = !spec.value_binned;
      if (rationale_metric && !pe.rationale_scored) continue;
      sums[spec.name] += pe.scores.at(spec.name);
      counts[spec.name] += 1;
    }
    report.per_instance.push_back(std::move(pe));
  }

  report.accuracy = split.empty() ? 0.0 : 100.0 * correct_sum / split.size();
  for (const auto& [name, sum] : sums) {
    report.reward_means[name] = counts[name] > 0 ? sum / counts[name] : 0.0;
  }

  // The four-metric aggregate; falls back over missing rewards by treating
  // only the registered ones (the standard registry always has all four).
  auto mean_of = [&](const std::string& name, double fallback) {
    auto it = report.reward_means.find(name);
    return it == report.reward_means.end() ? fallback : it->second;
  };
  report.avg_nrg_pct =
      avg_nrg(report.accuracy, mean_of("plausibility", 0.0), mean_of("diversity", 0.0),
              mean_of("consistency", 0.0));
  return report;
}

double t_test_one_tailed(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::runtime_error("t-test: each sample needs at least 2 values");
  }
  auto mean_var = [](const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    return std::pair<double, double>(mean, var);
  };
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  if (sa + sb <= 0.0) throw std::runtime_error("t-test: degenerate variance");

  const double t = (ma - mb) / std::sqrt(sa + sb);
  // Welch-Satterthwaite degrees of freedom.
  const double df = (sa + sb) * (sa + sb) /
                    (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace rcgen
