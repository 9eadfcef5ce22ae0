#include "rcgen/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rcgen/optim.hpp"
#include "rcgen/rng.hpp"

namespace rcgen {

ParsedGeneration parse_answer(const std::vector<TokenId>& generation,
                              const Vocabulary& vocab) {
  const TokenId delim = vocab.answer_delim();
  std::ptrdiff_t last = -1;
  for (std::size_t i = 0; i < generation.size(); ++i) {
    if (generation[i] == delim) last = static_cast<std::ptrdiff_t>(i);
  }
  ParsedGeneration out;
  if (last < 0) {
    out.rationale = generation;
    return out;
  }
  out.rationale.assign(generation.begin(), generation.begin() + last);
  const std::size_t after = static_cast<std::size_t>(last) + 1;
  if (after < generation.size()) {
    out.answer = vocab.token_of(generation[after]);
  }
  return out;
}

double diversity(const std::vector<TokenId>& rationale) {
  const std::size_t len = rationale.size();
  double product = 1.0;
  for (std::size_t n = 2; n <= 4; ++n) {
    if (len < n) continue;  // no n-grams: neutral factor
    const std::size_t total = len - n + 1;
    std::size_t unique = 0;
    for (std::size_t i = 0; i < total; ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < i && !seen; ++j) {
        seen = std::equal(rationale.begin() + i, rationale.begin() + i + n,
                          rationale.begin() + j);
      }
      if (!seen) ++unique;
    }
    product *= static_cast<double>(unique) / static_cast<double>(total);
  }
  return product;
}

double task_correctness(const std::optional<std::string>& predicted,
                        const std::string& gold) {
  return (predicted && *predicted == gold) ? 1.0 : 0.0;
}

PlausibilityOracle::PlausibilityOracle(std::set<std::vector<std::string>> facts, int n)
    : facts_(std::move(facts)), n_(n) {
  if (facts_.empty()) throw std::runtime_error("plausibility: empty fact set");
  if (n_ < 1) throw std::runtime_error("plausibility: n-gram order must be >= 1");
  for (const auto& f : facts_) {
    if (static_cast<int>(f.size()) != n_) {
      throw std::runtime_error("plausibility: fact arity mismatch");
    }
  }
}

double PlausibilityOracle::score(const std::vector<std::string>& rationale) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  if (rationale.size() < n) return 0.0;
  const std::size_t total = rationale.size() - n + 1;
  std::size_t hits = 0;
  std::vector<std::string> gram(n);
  for (std::size_t i = 0; i < total; ++i) {
    gram.assign(rationale.begin() + i, rationale.begin() + i + n);
    if (facts_.count(gram)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

json PlausibilityOracle::to_json() const {
  json facts = json::array();
  for (const auto& f : facts_) facts.push_back(f);
  return json{{"version", 1}, {"n", n_}, {"facts", facts}};
}

PlausibilityOracle PlausibilityOracle::from_json(const json& j) {
  require_version(j, 1, "plausibility oracle");
  std::set<std::vector<std::string>> facts;
  for (const auto& f : j.at("facts")) {
    facts.insert(f.get<std::vector<std::string>>());
  }
  return PlausibilityOracle(std::move(facts), j.at("n").get<int>());
}

MeanPoolClassifier::MeanPoolClassifier(int vocab_size, int embed_dim, int n_choices,
                                       std::uint64_t seed)
    : vocab_size_(vocab_size), embed_dim_(embed_dim), n_choices_(n_choices) {
  Rng rng(seed);
  embed_.resize(static_cast<std::size_t>(vocab_size) * embed_dim);
  weight_.resize(static_cast<std::size_t>(n_choices) * embed_dim);
  bias_.assign(static_cast<std::size_t>(n_choices), 0.0);
  for (double& x : embed_) x = 0.1 * rng.normal();
  for (double& x : weight_) x = 0.1 * rng.normal();
}

std::vector<double> MeanPoolClassifier::predict(const std::vector<TokenId>& input) const {
  std::vector<double> pooled(embed_dim_, 0.0);
  if (!input.empty()) {
    for (TokenId t : input) {
      if (t < 0 || t >= vocab_size_) {
        throw std::runtime_error("classifier: invalid token id");
      }
      const double* e = &embed_[static_cast<std::size_t>(t) * embed_dim_];
      for (int j = 0; j < embed_dim_; ++j) pooled[j] += e[j];
    }
    for (double& x : pooled) x /= static_cast<double>(input.size());
  }
  std::vector<double> logits(n_choices_);
  for (int c = 0; c < n_choices_; ++c) {
    const double* w = &weight_[static_cast<std::size_t>(c) * embed_dim_];
    double z = bias_[c];
    for (int j = 0; j < embed_dim_; ++j) z += w[j] * pooled[j];
    logits[c] = z;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  std::vector<double> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

json MeanPoolClassifier::to_json() const {
  return json{{"vocab_size", vocab_size_}, {"embed_dim", embed_dim_},
              {"choices", n_choices_},     {"embed", embed_},
              {"weight", weight_},         {"bias", bias_}};
}

MeanPoolClassifier MeanPoolClassifier::from_json(const json& j) {
  MeanPoolClassifier m;
  m.vocab_size_ = j.at("vocab_size").get<int>();
  m.embed_dim_ = j.at("embed_dim").get<int>();
  m.n_choices_ = j.at("choices").get<int>();
  m.embed_ = j.at("embed").get<std::vector<double>>();
  m.weight_ = j.at("weight").get<std::vector<double>>();
  m.bias_ = j.at("bias").get<std::vector<double>>();
  return m;
}

ConsistencyPredictors train_consistency_predictors(const std::vector<Instance>& data,
                                                   const Vocabulary& vocab,
                                                   const PredictorConfig& cfg) {
  if (data.empty()) throw std::runtime_error("predictors: empty training data");
  const std::vector<std::string>& choices = data.front().choices;
  if (choices.size() < 2) {
    throw std::runtime_error("predictors: need at least 2 distinct answer labels");
  }
  auto label_index = [&](const Instance& ins) {
    for (std::size_t i = 0; i < ins.choices.size(); ++i) {
      if (ins.choices[i] == ins.gold) return static_cast<int>(i);
    }
    throw std::runtime_error("predictors: gold label not among choices");
  };

  ConsistencyPredictors out;
  out.choices_ = choices;
  out.m_qr_ = MeanPoolClassifier(vocab.size(), cfg.embed_dim,
                                 static_cast<int>(choices.size()), cfg.seed);
  out.m_q_ = MeanPoolClassifier(vocab.size(), cfg.embed_dim,
                                static_cast<int>(choices.size()), cfg.seed + 1);

  // Build (input, label) pairs for both predictors.
  std::vector<std::pair<std::vector<TokenId>, int>> qr_data, q_data;
  for (const auto& ins : data) {
    if (ins.choices != choices) {
      throw std::runtime_error("predictors: instances disagree on the choice set");
    }
    if (!ins.generation) {
      throw std::runtime_error("predictors: instance without gold generation");
    }
    const ParsedGeneration parsed = parse_answer(*ins.generation, vocab);
    const int label = label_index(ins);
    std::vector<TokenId> qr = ins.question;
    qr.insert(qr.end(), parsed.rationale.begin(), parsed.rationale.end());
    qr_data.emplace_back(std::move(qr), label);
    q_data.emplace_back(ins.question, label);
  }

  Rng rng(cfg.seed);
  auto train_one = [&](MeanPoolClassifier& clf,
                       std::vector<std::pair<std::vector<TokenId>, int>>& pairs) {
    const int K = clf.n_choices_;
    const int D = clf.embed_dim_;
    const std::size_t n_params = clf.embed_.size() + clf.weight_.size() + clf.bias_.size();
    AdamConfig acfg;
    acfg.learning_rate = cfg.learning_rate;
    AdamOptimizer opt(n_params, acfg);
    std::vector<double> params(n_params), grads(n_params);
    auto pack = [&]() {
      std::copy(clf.embed_.begin(), clf.embed_.end(), params.begin());
      std::copy(clf.weight_.begin(), clf.weight_.end(),
                params.begin() + static_cast<std::ptrdiff_t>(clf.embed_.size()));
      std::copy(clf.bias_.begin(), clf.bias_.end(),
                params.begin() + static_cast<std::ptrdiff_t>(clf.embed_.size() +
                                                             clf.weight_.size()));
    };
    auto unpack = [&]() {
      std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(clf.embed_.size()),
                clf.embed_.begin());
      std::copy(params.begin() + static_cast<std::ptrdiff_t>(clf.embed_.size()),
                params.begin() + static_cast<std::ptrdiff_t>(clf.embed_.size() +
                                                             clf.weight_.size()),
                clf.weight_.begin());
      std::copy(params.begin() + static_cast<std::ptrdiff_t>(clf.embed_.size() +
                                                             clf.weight_.size()),
                params.end(), clf.bias_.begin());
    };
    pack();
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        std::fill(grads.begin(), grads.end(), 0.0);
        unpack();
        const double inv = 1.0 / static_cast<double>(stop - start);
        for (std::size_t bi = start; bi < stop; ++bi) {
          const auto& [input, label] = pairs[order[bi]];
          const std::vector<double> probs = clf.predict(input);
          std::vector<double> pooled(D, 0.0);
          if (!input.empty()) {
            for (TokenId t : input) {
              const double* e = &clf.embed_[static_cast<std::size_t>(t) * D];
              for (int j = 0; j < D; ++j) pooled[j] += e[j];
            }
            for (double& x : pooled) x /= static_cast<double>(input.size());
          }
          // dlogits = probs - onehot(label)
          std::vector<double> dpooled(D, 0.0);
          for (int c = 0; c < K; ++c) {
            const double g = (probs[c] - (c == label ? 1.0 : 0.0)) * inv;
            double* gw = &grads[clf.embed_.size() + static_cast<std::size_t>(c) * D];
            const double* w = &clf.weight_[static_cast<std::size_t>(c) * D];
            for (int j = 0; j < D; ++j) {
              gw[j] += g * pooled[j];
              dpooled[j] += g * w[j];
            }
            grads[clf.embed_.size() + clf.weight_.size() + static_cast<std::size_t>(c)] += g;
          }
          if (!input.empty()) {
            const double scale = 1.0 / static_cast<double>(input.size());
            for (TokenId t : input) {
              double* ge = &grads[static_cast<std::size_t>(t) * D];
              for (int j = 0; j < D; ++j) ge[j] += dpooled[j] * scale;
            }
          }
        }
        opt.step(params, grads);
      }
    }
    unpack();
  };

  train_one(out.m_qr_, qr_data);
  train_one(out.m_q_, q_data);
  out.trained_ = true;
  return out;
}

std::vector<double> ConsistencyPredictors::with_rationale(
    const std::vector<TokenId>& question, const std::vector<TokenId>& rationale) const {
  if (!trained_) throw std::runtime_error("consistency: predictors not trained");
  std::vector<TokenId> input = question;
  input.insert(input.end(), rationale.begin(), rationale.end());
  return m_qr_.predict(input);
}

std::vector<double> ConsistencyPredictors::without_rationale(
    const std::vector<TokenId>& question) const {
  if (!trained_) throw std::runtime_error("consistency: predictors not trained");
  return m_q_.predict(question);
}

json ConsistencyPredictors::to_json() const {
  if (!trained_) throw std::runtime_error("consistency: cannot save untrained predictors");
  return json{{"version", 1},
              {"choices", choices_},
              {"m_qr", m_qr_.to_json()},
              {"m_q", m_q_.to_json()}};
}

ConsistencyPredictors ConsistencyPredictors::from_json(const json& j) {
  require_version(j, 1, "predictors");
  ConsistencyPredictors out;
  out.choices_ = j.at("choices").get<std::vector<std::string>>();
  out.m_qr_ = MeanPoolClassifier::from_json(j.at("m_qr"));
  out.m_q_ = MeanPoolClassifier::from_json(j.at("m_q"));
  out.trained_ = true;
  return out;
}

double consistency(const ConsistencyPredictors& predictors,
                   const std::vector<TokenId>& question,
                   const std::vector<TokenId>& rationale,
                   const std::vector<std::string>& choices, const std::string& gold) {
  int gold_idx = -1;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (choices[i] == gold) gold_idx = static_cast<int>(i);
  }
  if (gold_idx < 0) throw std::runtime_error("consistency: gold not among choices");
  const std::vector<double> with = predictors.with_rationale(question, rationale);
  const std::vector<double> without = predictors.without_rationale(question);
  return with[static_cast<std::size_t>(gold_idx)] -
         without[static_cast<std::size_t>(gold_idx)];
}

double plausibility(const PlausibilityOracle& oracle, const Vocabulary& vocab,
                    const std::vector<TokenId>& rationale) {
  return oracle.score(vocab.decode(rationale));
}

RewardVector score_instance(const Instance& instance,
                            const std::vector<RewardSpec>& rewards,
                            const ScoreContext& ctx) {
  if (!instance.generation) {
    throw std::runtime_error("score_instance: instance has no generation");
  }
  RewardVector scores;
  for (const auto& spec : rewards) {
    const double value = spec.scorer(ctx, instance);
    if (value < spec.range_min - 1e-12 || value > spec.range_max + 1e-12) {
      throw std::runtime_error("score_instance: '" + spec.name + "' out of range");
    }
    scores[spec.name] = value;
  }
  return scores;
}

std::vector<RewardSpec> standard_rewards(int rationale_bins, int correctness_bins) {
  std::vector<RewardSpec> specs;

  RewardSpec plau;
  plau.name = "plausibility";
  plau.range_min = 0.0;
  plau.range_max = 1.0;
  plau.bins = rationale_bins;
  plau.scorer = [](const ScoreContext& ctx, const Instance& ins) {
    const ParsedGeneration parsed = parse_answer(*ins.generation, *ctx.vocab);
    return plausibility(*ctx.oracle, *ctx.vocab, parsed.rationale);
  };
  specs.push_back(std::move(plau));

  RewardSpec cons;
  cons.name = "consistency";
  cons.range_min = -1.0;
  cons.range_max = 1.0;
  cons.bins = rationale_bins;
  cons.scorer = [](const ScoreContext& ctx, const Instance& ins) {
    const ParsedGeneration parsed = parse_answer(*ins.generation, *ctx.vocab);
    return consistency(*ctx.predictors, ins.question, parsed.rationale, ins.choices,
                       ins.gold);
  };
  specs.push_back(std::move(cons));

  RewardSpec div;
  div.name = "diversity";
  div.range_min = 0.0;
  div.range_max = 1.0;
  div.bins = rationale_bins;
  div.scorer = [](const ScoreContext& ctx, const Instance& ins) {
    const ParsedGeneration parsed = parse_answer(*ins.generation, *ctx.vocab);
    return diversity(parsed.rationale);
  };
  specs.push_back(std::move(div));

  RewardSpec corr;
  corr.name = "correctness";
  corr.range_min = 0.0;
  corr.range_max = 1.0;
  corr.bins = correctness_bins;
  corr.value_binned = true;
  corr.scorer = [](const ScoreContext& ctx, const Instance& ins) {
    const ParsedGeneration parsed = parse_answer(*ins.generation, *ctx.vocab);
    return task_correctness(parsed.answer, ins.gold);
  };
  specs.push_back(std::move(corr));

  return specs;
}

RewardSpec product_reward(const std::vector<RewardSpec>& components, int bins) {
  RewardSpec prod;
  prod.name = "product";
  prod.range_min = 0.0;
  prod.range_max = 1.0;
  prod.bins = bins;
  // Copy the component list: each score is mapped to [0,1] before
  // multiplying so negative-range rewards cannot flip the sign.
  prod.scorer = [components](const ScoreContext& ctx, const Instance& ins) {
    double value = 1.0;
    for (const auto& c : components) {
      const double raw = c.scorer(ctx, ins);
      value *= (raw - c.range_min) / (c.range_max - c.range_min);
    }
    return value;
  };
  return prod;
}

std::vector<ControlGroup> control_groups(const std::vector<RewardSpec>& rewards) {
  std::vector<ControlGroup> groups;
  groups.reserve(rewards.size());
  for (const auto& r : rewards) groups.push_back({r.name, r.bins});
  return groups;
}

const RewardSpec& find_reward(const std::vector<RewardSpec>& rewards,
                              const std::string& name) {
  for (const auto& r : rewards) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("unknown reward '" + name + "'");
}

}  // namespace rcgen
