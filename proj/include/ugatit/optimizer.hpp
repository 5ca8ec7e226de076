#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugatit/param_store.hpp"

namespace ugatit {

struct OptimizerConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // decoupled; weight-flagged parameters only
};

// Bias-corrected Adam over one ParamStore. Weight decay is decoupled
// and skips biases, rho gates and norm affine parameters; rho gates are
// clamped to [0,1] after every step.
template <typename S>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

  const OptimizerConfig& config() const { return cfg_; }

  void step(ParamStore<S>& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& name : params.names()) {
      auto& entry = params.at(name);
      Var<S>& p = entry.value;
      if (p->grad.size() != p->data.size())
        throw std::runtime_error("adam_step: missing gradient for " + name);
      auto& m = moments_m_[name];
      auto& v = moments_v_[name];
      if (m.size() != p->data.size()) m.assign(p->data.size(), 0.0);
      if (v.size() != p->data.size()) v.assign(p->data.size(), 0.0);
      const double decay = entry.weight_decay ? cfg_.weight_decay : 0.0;
      for (std::size_t i = 0; i < p->data.size(); ++i) {
        const double g = static_cast<double>(p->grad[i]);
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        double x = static_cast<double>(p->data[i]);
        x -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) + decay * x);
        p->data[i] = static_cast<S>(x);
      }
    }
    params.clip_rho_gates();
  }

  std::uint64_t step_count() const { return t_; }
  void set_step_count(std::uint64_t t) { t_ = t; }

  // Moment access for checkpointing; keyed by parameter name.
  std::map<std::string, std::vector<double>>& moments_m() { return moments_m_; }
  std::map<std::string, std::vector<double>>& moments_v() { return moments_v_; }

 private:
  OptimizerConfig cfg_;
  std::uint64_t t_ = 0;
  std::map<std::string, std::vector<double>> moments_m_;
  std::map<std::string, std::vector<double>> moments_v_;
};

// Constant base rate until decay_start, then linear to zero at total_iters.
inline double scheduled_lr(double base_lr, std::uint64_t iter,
                           std::uint64_t decay_start, std::uint64_t total_iters) {
  if (iter < decay_start || total_iters <= decay_start) return base_lr;
  const double span = static_cast<double>(total_iters - decay_start);
  const double done = static_cast<double>(iter - decay_start);
  return base_lr * std::max(0.0, 1.0 - done / span);
}

}  // namespace ugatit
