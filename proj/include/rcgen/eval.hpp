#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rcgen/instance.hpp"
#include "rcgen/json_io.hpp"
#include "rcgen/policy.hpp"
#include "rcgen/pool.hpp"
#include "rcgen/rewards.hpp"

namespace rcgen {

// Normalized relative gain: (value - min) / (max - min). Errors when the
// value falls outside [min, max].
double nrg(double value, double min, double max);

// Percent average of the four fixed-range metric NRGs: accuracy [0,100],
// plausibility [0,1], diversity [0,1], consistency [-1,1].
double avg_nrg(double accuracy, double plausibility, double diversity,
               double consistency);

struct PerInstanceEval {
  std::int64_t id = 0;
  bool parse_failure = false;
  bool rationale_scored = true;
  RewardVector scores;
};

struct MetricsReport {
  int n = 0;
  double accuracy = 0.0;  // percent
  std::map<std::string, double> reward_means;
  double avg_nrg_pct = 0.0;
  int parse_failures = 0;
  std::vector<PerInstanceEval> per_instance;

  json to_json() const;
  static MetricsReport from_json(const json& j);
};

// Greedy decoding with bin-1 conditioning for every active reward, then
// one scoring pass per instance. Parse failures score 0 on correctness; a
// parse failure with an empty rationale is excluded from rationale means.
MetricsReport evaluate(const PolicyModel& model, const std::vector<Instance>& split,
                       const std::vector<RewardSpec>& rewards, const ScoreContext& ctx,
                       const ControlTokenTable& table, const ScheduleState& schedule,
                       int max_gen_len);

// Welch's one-tailed independent t-test for mean(a) > mean(b).
double t_test_one_tailed(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rcgen
