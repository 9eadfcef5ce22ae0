#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fd_oracle.hpp"
#include "rcgen/policy.hpp"
#include "rcgen/rng.hpp"

using namespace rcgen;

namespace {

constexpr TokenId kBos = 1;
constexpr TokenId kEos = 2;

PolicyModel tiny_model(int vocab = 8, int hidden = 6, std::uint64_t seed = 42) {
  return PolicyModel(vocab, hidden, seed);
}

}  // namespace

TEST_CASE("zero-parameter model is uniform") {
  PolicyModel m(4, 3, 0);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
  const auto lp = log_prob(m, {0}, {}, {0, 1, 2, 3}, kBos);
  for (double v : lp) CHECK(v == doctest::Approx(std::log(0.25)));
}

TEST_CASE("next-token distributions sum to one") {
  const PolicyModel m = tiny_model(12, 8, 9);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    PolicyModel::State s = m.initial_state();
    const int len = 1 + static_cast<int>(rng.uniform_int(10));
    for (int i = 0; i < len; ++i) {
      m.advance(s, static_cast<TokenId>(rng.uniform_int(12)));
    }
    const auto dist = m.next_distribution(s);
    const double sum = std::accumulate(dist.begin(), dist.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    for (double p : dist) CHECK(p >= 0.0);
  }
}

TEST_CASE("log_prob values are non-positive and reject bad ids") {
  const PolicyModel m = tiny_model();
  const auto lp = log_prob(m, {0, 3}, {5}, {1, 2, 4}, kBos);
  CHECK(lp.size() == 3);
  for (double v : lp) CHECK(v <= 0.0);
  CHECK_THROWS(log_prob(m, {0}, {}, {}, kBos));
  CHECK_THROWS(log_prob(m, {99}, {}, {1}, kBos));
  CHECK_THROWS(log_prob(m, {0}, {}, {99}, kBos));
}

TEST_CASE("a model forced onto one token is near-deterministic") {
  PolicyModel m(4, 3, 1);
  // Push b_out so token 3 dominates.
  const std::size_t b_out = m.param_count() - 4;
  m.parameters()[b_out + 3] = 50.0;
  PolicyModel::State s = m.initial_state();
  m.advance(s, 0);
  const auto dist = m.next_distribution(s);
  CHECK(dist[3] == doctest::Approx(1.0).epsilon(1e-9));
  const auto lp = log_prob(m, {0}, {}, {3, 3}, kBos);
  CHECK(lp[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("greedy sampling returns the argmax path deterministically") {
  const PolicyModel m = tiny_model(10, 6, 17);
  SamplingConfig cfg;
  cfg.strategy = SamplingConfig::Strategy::Greedy;
  cfg.max_length = 8;
  Rng r1(1), r2(2);
  const auto a = sample(m, {0, 4}, {}, cfg, kBos, kEos, r1);
  const auto b = sample(m, {0, 4}, {}, cfg, kBos, kEos, r2);
  CHECK(a == b);
  CHECK(a.size() <= 8);
}

TEST_CASE("top-p nucleus on a hand-built distribution") {
  // Logits chosen so the distribution is (0.6, 0.3, 0.05, 0.05).
  PolicyModel m(4, 2, 0);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
  const std::size_t b_out = m.param_count() - 4;
  m.parameters()[b_out + 0] = std::log(0.60);
  m.parameters()[b_out + 1] = std::log(0.30);
  m.parameters()[b_out + 2] = std::log(0.05);
  m.parameters()[b_out + 3] = std::log(0.05);

  PolicyModel::State s = m.initial_state();
  const auto dist = m.next_distribution(s);
  CHECK(dist[0] == doctest::Approx(0.6));
  CHECK(dist[1] == doctest::Approx(0.3));

  // p=0.7 keeps {0, 1} renormalized to (2/3, 1/3).
  SamplingConfig cfg;
  cfg.strategy = SamplingConfig::Strategy::TopP;
  cfg.p = 0.7;
  cfg.max_length = 1;
  Rng rng(12345);
  int counts[4] = {0, 0, 0, 0};
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    const auto out = sample(m, {}, {}, cfg, kBos, kEos, rng);
    REQUIRE(out.size() == 1);
    counts[out[0]]++;
  }
  CHECK(counts[2] == 0);
  CHECK(counts[3] == 0);
  CHECK(static_cast<double>(counts[0]) / draws == doctest::Approx(2.0 / 3).epsilon(0.02));
  CHECK(static_cast<double>(counts[1]) / draws == doctest::Approx(1.0 / 3).epsilon(0.04));
}

TEST_CASE("huge temperature approaches uniform sampling") {
  const PolicyModel m = tiny_model(4, 5, 23);
  SamplingConfig cfg;
  cfg.strategy = SamplingConfig::Strategy::TopP;
  cfg.p = 1.0;
  cfg.temperature = 1e9;
  cfg.max_length = 1;
  Rng rng(777);
  int counts[4] = {0, 0, 0, 0};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto out = sample(m, {0}, {}, cfg, kBos, kEos, rng);
    counts[out.empty() ? kEos : out[0]]++;  // empty output means eos was drawn
  }
  // Chi-square against uniform over the 4 ids; 3 dof, p=0.001 cut at 16.27.
  const double expected = static_cast<double>(draws) / 4.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 16.27);
}

TEST_CASE("top-p sampling is reproducible given the seed") {
  const PolicyModel m = tiny_model(10, 6, 5);
  SamplingConfig cfg;
  cfg.max_length = 12;
  Rng r1(99), r2(99);
  CHECK(sample(m, {1, 2}, {3}, cfg, kBos, kEos, r1) ==
        sample(m, {1, 2}, {3}, cfg, kBos, kEos, r2));
}

TEST_CASE("kl_per_token") {
  CHECK(kl_per_token({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0));
  CHECK(kl_per_token({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto draw = [&](int n) {
      std::vector<double> d(n);
      double sum = 0.0;
      for (double& x : d) {
        x = rng.uniform() + 1e-6;
        sum += x;
      }
      for (double& x : d) x /= sum;
      return d;
    };
    CHECK(kl_per_token(draw(6), draw(6)) >= 0.0);
  }
}

TEST_CASE("entropy") {
  CHECK(entropy({1.0, 0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(5);
    double sum = 0.0;
    for (double& x : d) {
      x = rng.uniform() + 1e-9;
      sum += x;
    }
    for (double& x : d) x /= sum;
    double manual = 0.0;
    for (double p : d) manual -= p * std::log(p);
    CHECK(entropy(d) == doctest::Approx(manual));
  }
}

TEST_CASE("losses: beta=alpha=0 total is exactly the cross-entropy") {
  const PolicyModel m = tiny_model();
  const ReferenceModel ref = snapshot_reference(m);
  std::vector<BatchItem> batch = {{{}, {0, 1}, {2, 3, kEos}}, {{}, {4}, {5, kEos}}};
  const LossBreakdown loss = loss_and_gradient(m, ref, batch, 0.0, 0.0, kBos, nullptr);
  CHECK(loss.total == loss.cross_entropy);

  // Cross-check the CE against log_prob.
  double ce = 0.0;
  std::size_t n = 0;
  for (const auto& item : batch) {
    for (double lp : log_prob(m, item.input, item.control, item.target, kBos)) {
      ce -= lp;
      ++n;
    }
  }
  CHECK(loss.cross_entropy == doctest::Approx(ce / n));
}

TEST_CASE("kl penalty is zero when the policy equals the reference") {
  // Zero control-token embeddings: ids >= 6 are control rows.
  PolicyModel m(8, 5, 3, 6);
  const ReferenceModel ref = snapshot_reference(m);
  std::vector<BatchItem> batch = {{{6, 7}, {0, 1, 2}, {3, 4, kEos}}};
  const LossBreakdown loss = loss_and_gradient(m, ref, batch, 0.05, 0.0, kBos, nullptr);
  CHECK(std::abs(loss.kl_penalty) <= 1e-9);
}

TEST_CASE("analytic gradient matches central finite differences") {
  // <= 500 parameters: V=10, H=8 gives 2*80 + 2*64 + 10 = 298.
  const int V = 10, H = 8;
  std::vector<BatchItem> batch = {
      {{8, 9}, {0, 1, 2}, {3, 4, 5, kEos}},
      {{9}, {5, 6}, {7, 1, kEos}},
      {{}, {3}, {0, kEos}},
  };
  const double beta = 0.07, alpha = 0.03;
  Rng seeder(2024);
  for (int point = 0; point < 20; ++point) {
    PolicyModel m(V, H, seeder.next_u64());
    const ReferenceModel ref = snapshot_reference(PolicyModel(V, H, seeder.next_u64()));
    std::vector<double> grads;
    loss_and_gradient(m, ref, batch, beta, alpha, kBos, &grads);
    REQUIRE(grads.size() == m.param_count());

    const auto eval = [&]() {
      return loss_and_gradient(m, ref, batch, beta, alpha, kBos, nullptr).total;
    };
    // Probe every 7th parameter to keep the runtime low while still
    // covering all parameter blocks.
    for (std::size_t i = point % 7; i < grads.size(); i += 7) {
      const double fd = rcgen_test::central_diff(eval, m.parameters()[i]);
      const double rel = std::abs(grads[i] - fd) / (std::abs(fd) + 1e-8);
      CHECK(rel <= 1e-4);
    }
  }
}

TEST_CASE("train_step applies exactly one optimizer update") {
  PolicyModel m = tiny_model();
  const ReferenceModel ref = snapshot_reference(m);
  AdamConfig acfg;
  acfg.learning_rate = 1e-2;
  AdamOptimizer opt(m.param_count(), acfg);
  const std::vector<double> before = m.parameters();
  std::vector<BatchItem> batch = {{{}, {0, 1}, {2, kEos}}};
  const LossBreakdown loss = train_step(m, ref, batch, 0.0, 0.0, opt, kBos);
  CHECK(loss.total > 0.0);
  CHECK(m.parameters() != before);
  CHECK(opt.steps_done() == 1);
  CHECK_THROWS(train_step(m, ref, {}, 0.0, 0.0, opt, kBos));
}

TEST_CASE("snapshots are immutable deep copies") {
  PolicyModel m = tiny_model();
  const ReferenceModel ref = snapshot_reference(m);
  const std::vector<double> frozen = ref.model().parameters();

  AdamConfig acfg;
  AdamOptimizer opt(m.param_count(), acfg);
  std::vector<BatchItem> batch = {{{}, {0}, {1, kEos}}};
  for (int i = 0; i < 100; ++i) train_step(m, ref, batch, 0.0, 0.0, opt, kBos);
  CHECK(ref.model().parameters() == frozen);

  const ReferenceModel again = snapshot_reference(ref.model());
  CHECK(again.model().parameters() == frozen);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const PolicyModel m = tiny_model(14, 9, 1234);
  const PolicyModel back = PolicyModel::from_json(m.to_json());
  CHECK(back.parameters() == m.parameters());

  // Through an actual serialized string, as on disk.
  const PolicyModel back2 = PolicyModel::from_json(json::parse(m.to_json().dump()));
  CHECK(back2.parameters() == m.parameters());

  const auto lp = log_prob(m, {0, 1}, {}, {2, 3}, kBos);
  const auto lp2 = log_prob(back2, {0, 1}, {}, {2, 3}, kBos);
  CHECK(lp == lp2);
}
