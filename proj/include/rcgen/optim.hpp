#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rcgen {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0.0;  // global L2 norm cap; 0 disables
  int warmup_steps = 0;    // linear warmup from 0
  int total_steps = 0;     // >0 enables linear decay to 0 after warmup
};

// Adam with linear warmup/decay and global-norm gradient clipping.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n_params, AdamConfig cfg)
      : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

  double current_lr() const {
    double lr = cfg_.learning_rate;
    const double s = static_cast<double>(t_);
    if (cfg_.warmup_steps > 0 && t_ < cfg_.warmup_steps) {
      lr *= (s + 1.0) / static_cast<double>(cfg_.warmup_steps);
    } else if (cfg_.total_steps > cfg_.warmup_steps) {
      const double span = static_cast<double>(cfg_.total_steps - cfg_.warmup_steps);
      const double left = static_cast<double>(cfg_.total_steps) - s;
      lr *= std::max(0.0, left / span);
    }
    return lr;
  }

  void step(std::vector<double>& params, std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw std::runtime_error("optimizer: size mismatch");
    }
    if (cfg_.grad_clip > 0.0) {
      double sq = 0.0;
      for (double g : grads) sq += g * g;
      const double norm = std::sqrt(sq);
      if (norm > cfg_.grad_clip) {
        const double scale = cfg_.grad_clip / norm;
        for (double& g : grads) g *= scale;
      }
    }
    const double lr = current_lr();
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }

  std::int64_t steps_done() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace rcgen
