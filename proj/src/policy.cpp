#include "rcgen/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rcgen {

namespace {

constexpr double kProbFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

// Offsets into the flat parameter vector.
struct Layout {
  int v, h;
  std::size_t embed, w_in, w_rec, w_out, b_out, total;
  explicit Layout(int vocab, int hidden) : v(vocab), h(hidden) {
    const std::size_t vh = static_cast<std::size_t>(v) * h;
    const std::size_t hh = static_cast<std::size_t>(h) * h;
    embed = 0;
    w_in = embed + vh;
    w_rec = w_in + hh;
    w_out = w_rec + hh;
    b_out = w_out + vh;
    total = b_out + static_cast<std::size_t>(v);
  }
};

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace

PolicyModel::PolicyModel(int vocab_size, int hidden, std::uint64_t seed,
                         int zero_embed_from)
    : vocab_size_(vocab_size), hidden_(hidden) {
  if (vocab_size < 1 || hidden < 1) throw std::runtime_error("policy: bad dimensions");
  const Layout L(vocab_size, hidden);
  params_.assign(L.total, 0.0);
  Rng rng(seed);
  const double scale = 0.1;
  for (std::size_t i = L.embed; i < L.b_out; ++i) params_[i] = scale * rng.normal();
  // b_out stays zero.
  if (zero_embed_from >= 0) {
    for (int v = zero_embed_from; v < vocab_size; ++v) {
      for (int j = 0; j < hidden; ++j) {
        params_[L.embed + static_cast<std::size_t>(v) * hidden + j] = 0.0;
      }
    }
  }
}

void PolicyModel::advance(State& state, TokenId token) const {
  if (token < 0 || token >= vocab_size_) {
    throw std::runtime_error("policy: invalid token id " + std::to_string(token));
  }
  const Layout L(vocab_size_, hidden_);
  const double* e = &params_[L.embed + static_cast<std::size_t>(token) * hidden_];
  std::vector<double> next(hidden_);
  for (int i = 0; i < hidden_; ++i) {
    const double* wi = &params_[L.w_in + static_cast<std::size_t>(i) * hidden_];
    const double* wr = &params_[L.w_rec + static_cast<std::size_t>(i) * hidden_];
    double a = 0.0;
    for (int j = 0; j < hidden_; ++j) a += wi[j] * e[j] + wr[j] * state.h[j];
    next[i] = std::tanh(a);
  }
  state.h = std::move(next);
}

std::vector<double> PolicyModel::next_logits(const State& state) const {
  const Layout L(vocab_size_, hidden_);
  std::vector<double> logits(vocab_size_);
  for (int v = 0; v < vocab_size_; ++v) {
    const double* w = &params_[L.w_out + static_cast<std::size_t>(v) * hidden_];
    double z = params_[L.b_out + v];
    for (int j = 0; j < hidden_; ++j) z += w[j] * state.h[j];
    logits[v] = z;
  }
  return logits;
}

std::vector<double> PolicyModel::next_distribution(const State& state,
                                                   double temperature) const {
  std::vector<double> logits = next_logits(state);
  if (temperature != 1.0) {
    if (temperature <= 0.0) throw std::runtime_error("policy: temperature must be > 0");
    for (double& z : logits) z /= temperature;
  }
  return softmax(logits);
}

json PolicyModel::to_json() const {
  return json{{"version", 1},
              {"vocab_size", vocab_size_},
              {"hidden", hidden_},
              {"params", params_}};
}

PolicyModel PolicyModel::from_json(const json& j) {
  require_version(j, 1, "checkpoint");
  const int v = j.at("vocab_size").get<int>();
  const int h = j.at("hidden").get<int>();
  PolicyModel m(v, h, 0);
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != m.params_.size()) {
    throw std::runtime_error("checkpoint: parameter count mismatch");
  }
  m.params_ = std::move(params);
  return m;
}

ReferenceModel snapshot_reference(const PolicyModel& model) {
  return ReferenceModel(model);
}

std::vector<double> log_prob(const PolicyModel& model, const std::vector<TokenId>& input,
                             const std::vector<TokenId>& control,
                             const std::vector<TokenId>& target, TokenId bos) {
  if (target.empty()) throw std::runtime_error("log_prob: empty target");
  PolicyModel::State state = model.initial_state();
  for (TokenId t : control) model.advance(state, t);
  model.advance(state, bos);
  for (TokenId t : input) model.advance(state, t);
  std::vector<double> out;
  out.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const TokenId y = target[i];
    if (y < 0 || y >= model.vocab_size()) {
      throw std::runtime_error("log_prob: invalid target id");
    }
    const std::vector<double> dist = model.next_distribution(state);
    out.push_back(safe_log(dist[static_cast<std::size_t>(y)]));
    if (i + 1 < target.size()) model.advance(state, y);
  }
  return out;
}

std::vector<TokenId> sample(const PolicyModel& model, const std::vector<TokenId>& input,
                            const std::vector<TokenId>& control, const SamplingConfig& cfg,
                            TokenId bos, TokenId eos, Rng& rng) {
  if (cfg.max_length < 1) throw std::runtime_error("sample: max_length must be >= 1");
  PolicyModel::State state = model.initial_state();
  for (TokenId t : control) model.advance(state, t);
  model.advance(state, bos);
  for (TokenId t : input) model.advance(state, t);

  std::vector<TokenId> out;
  for (int step = 0; step < cfg.max_length; ++step) {
    TokenId next = 0;
    if (cfg.strategy == SamplingConfig::Strategy::Greedy) {
      const std::vector<double> logits = model.next_logits(state);
      next = static_cast<TokenId>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
    } else {
      const std::vector<double> dist = model.next_distribution(state, cfg.temperature);
      std::vector<int> order(dist.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
      });
      // Smallest prefix with cumulative mass >= p, renormalized.
      double cum = 0.0;
      std::size_t nucleus = 0;
      while (nucleus < order.size()) {
        cum += dist[static_cast<std::size_t>(order[nucleus])];
        ++nucleus;
        if (cum >= cfg.p) break;
      }
      const double u = rng.uniform() * cum;
      double acc = 0.0;
      next = order[nucleus - 1];
      for (std::size_t i = 0; i < nucleus; ++i) {
        acc += dist[static_cast<std::size_t>(order[i])];
        if (u < acc) {
          next = order[i];
          break;
        }
      }
    }
    if (next == eos) break;
    out.push_back(next);
    model.advance(state, next);
  }
  return out;
}

double kl_per_token(const std::vector<double>& ref_dist,
                    const std::vector<double>& policy_dist) {
  if (ref_dist.size() != policy_dist.size()) {
    throw std::runtime_error("kl: distribution size mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < ref_dist.size(); ++i) {
    if (ref_dist[i] > 0.0) {
      kl += ref_dist[i] * (std::log(ref_dist[i]) - safe_log(policy_dist[i]));
    }
  }
  return std::max(kl, 0.0);
}

double entropy(const std::vector<double>& dist) {
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

LossBreakdown loss_and_gradient(const PolicyModel& model, const ReferenceModel& reference,
                                const std::vector<BatchItem>& batch, double beta,
                                double alpha, TokenId bos, std::vector<double>* grads) {
  if (batch.empty()) throw std::runtime_error("train_step: empty batch");
  const int V = model.vocab_size();
  const int H = model.hidden();
  const Layout L(V, H);
  const std::vector<double>& P = model.parameters();
  if (grads) grads->assign(L.total, 0.0);

  std::size_t total_tokens = 0;
  for (const auto& item : batch) {
    if (item.target.empty()) throw std::runtime_error("train_step: empty target");
    total_tokens += item.target.size();
  }
  const double inv_n = 1.0 / static_cast<double>(total_tokens);

  LossBreakdown loss;
  for (const auto& item : batch) {
    // Consumed token stream: control, bos, input, all targets but the last.
    std::vector<TokenId> toks;
    toks.reserve(item.control.size() + 1 + item.input.size() + item.target.size());
    toks.insert(toks.end(), item.control.begin(), item.control.end());
    toks.push_back(bos);
    toks.insert(toks.end(), item.input.begin(), item.input.end());
    const std::size_t prefix_len = toks.size();
    const std::size_t T = item.target.size();
    for (std::size_t t = 0; t + 1 < T; ++t) toks.push_back(item.target[t]);

    // Forward, keeping every state for backprop.
    std::vector<PolicyModel::State> states;
    states.reserve(toks.size() + 1);
    states.push_back(model.initial_state());
    for (TokenId tok : toks) {
      PolicyModel::State s = states.back();
      model.advance(s, tok);
      states.push_back(std::move(s));
    }

    // Reference distributions (no control tokens) for the KL term.
    std::vector<std::vector<double>> ref_dists;
    if (beta != 0.0) {
      const PolicyModel& ref = reference.model();
      PolicyModel::State rs = ref.initial_state();
      ref.advance(rs, bos);
      for (TokenId t : item.input) ref.advance(rs, t);
      ref_dists.reserve(T);
      for (std::size_t t = 0; t < T; ++t) {
        ref_dists.push_back(ref.next_distribution(rs));
        if (t + 1 < T) ref.advance(rs, item.target[t]);
      }
    }

    std::vector<std::vector<double>> dstate(states.size(),
                                            std::vector<double>(H, 0.0));
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t si = prefix_len + t;
      const std::vector<double> dist = model.next_distribution(states[si]);
      const TokenId y = item.target[t];
      if (y < 0 || y >= V) throw std::runtime_error("train_step: invalid target id");

      const double ce = -safe_log(dist[static_cast<std::size_t>(y)]);
      const double ent = entropy(dist);
      double kl = 0.0;
      if (beta != 0.0) kl = kl_per_token(ref_dists[t], dist);
      loss.cross_entropy += ce;
      loss.kl_penalty += kl;
      loss.entropy_bonus += ent;

      if (!grads) continue;
      std::vector<double> dlogits(V);
      for (int v = 0; v < V; ++v) {
        double g = dist[v] - (v == y ? 1.0 : 0.0);
        if (beta != 0.0) g += beta * (dist[v] - ref_dists[t][v]);
        if (alpha != 0.0) g += alpha * dist[v] * (safe_log(dist[v]) + ent);
        dlogits[v] = g * inv_n;
      }
      // Output projection.
      const std::vector<double>& h = states[si].h;
      std::vector<double>& G = *grads;
      for (int v = 0; v < V; ++v) {
        const double g = dlogits[v];
        if (g == 0.0) continue;
        double* gw = &G[L.w_out + static_cast<std::size_t>(v) * H];
        const double* wv = &P[L.w_out + static_cast<std::size_t>(v) * H];
        for (int j = 0; j < H; ++j) {
          gw[j] += g * h[j];
          dstate[si][j] += g * wv[j];
        }
        G[L.b_out + v] += g;
      }
    }

    if (!grads) continue;
    // Backprop through time.
    std::vector<double>& G = *grads;
    for (std::size_t k = toks.size(); k >= 1; --k) {
      const std::vector<double>& h = states[k].h;
      const std::vector<double>& hprev = states[k - 1].h;
      const TokenId tok = toks[k - 1];
      const double* e = &P[L.embed + static_cast<std::size_t>(tok) * H];
      double* ge = &G[L.embed + static_cast<std::size_t>(tok) * H];
      for (int i = 0; i < H; ++i) {
        const double da = dstate[k][i] * (1.0 - h[i] * h[i]);
        if (da == 0.0) continue;
        double* gwi = &G[L.w_in + static_cast<std::size_t>(i) * H];
        double* gwr = &G[L.w_rec + static_cast<std::size_t>(i) * H];
        const double* wi = &P[L.w_in + static_cast<std::size_t>(i) * H];
        const double* wr = &P[L.w_rec + static_cast<std::size_t>(i) * H];
        for (int j = 0; j < H; ++j) {
          gwi[j] += da * e[j];
          gwr[j] += da * hprev[j];
          ge[j] += da * wi[j];
          dstate[k - 1][j] += da * wr[j];
        }
      }
    }
  }

  loss.cross_entropy *= inv_n;
  loss.kl_penalty *= inv_n;
  loss.entropy_bonus *= inv_n;
  loss.total = loss.cross_entropy + beta * loss.kl_penalty - alpha * loss.entropy_bonus;
  if (!std::isfinite(loss.total)) throw std::runtime_error("train_step: non-finite loss");
  return loss;
}

LossBreakdown train_step(PolicyModel& model, const ReferenceModel& reference,
                         const std::vector<BatchItem>& batch, double beta, double alpha,
                         AdamOptimizer& opt, TokenId bos) {
  std::vector<double> grads;
  const LossBreakdown loss =
      loss_and_gradient(model, reference, batch, beta, alpha, bos, &grads);
  opt.step(model.parameters(), grads);
  return loss;
}

}  // namespace rcgen
