#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

#include "ugatit/augment.hpp"
#include "ugatit/losses.hpp"
#include "ugatit/networks.hpp"
#include "ugatit/optimizer.hpp"

namespace ugatit {

struct TrainSchedule {
  std::uint64_t total_iters = 2000;
  std::uint64_t decay_start = 1000;
};

// Owns both generators, all four discriminators and their optimizers;
// runs the two-phase update (discriminators first, then generators).
template <typename S>
class TrainSession {
 public:
  TrainSession(const NetConfig& cfg, LossWeights weights, OptimizerConfig opt,
               TrainSchedule schedule, std::uint64_t seed)
      : cfg_(cfg), weights_(weights), schedule_(schedule), seed_(seed),
        opt_gen_ab_(opt), opt_gen_ba_(opt), opt_d_al_(opt), opt_d_ag_(opt),
        opt_d_bl_(opt), opt_d_bg_(opt) {
    weights.validate();
    gen_ab_ = build_generator<S>(cfg, seed + 1);
    gen_ba_ = build_generator<S>(cfg, seed + 2);
    disc_a_local_ = build_discriminator<S>(cfg, DiscScale::kLocal, seed + 3);
    disc_a_global_ = build_discriminator<S>(cfg, DiscScale::kGlobal, seed + 4);
    disc_b_local_ = build_discriminator<S>(cfg, DiscScale::kLocal, seed + 5);
    disc_b_global_ = build_discriminator<S>(cfg, DiscScale::kGlobal, seed + 6);
    models_ = {gen_ab_.get(), gen_ba_.get(), disc_a_local_.get(),
               disc_a_global_.get(), disc_b_local_.get(), disc_b_global_.get()};
  }

  const NetConfig& cfg() const { return cfg_; }
  const LossWeights& weights() const { return weights_; }
  const TrainSchedule& schedule() const { return schedule_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t iteration() const { return iteration_; }
  void set_iteration(std::uint64_t it) { iteration_ = it; }

  GanModels<S>& models() { return models_; }
  GeneratorNet<S>& gen_ab() { return *gen_ab_; }
  GeneratorNet<S>& gen_ba() { return *gen_ba_; }

  // one optimizer per network: Adam moments are keyed by parameter name
  // and the six stores reuse the same names
  template <typename F>
  void for_each_optimizer(F&& f) {
    f("gen_ab", opt_gen_ab_);
    f("gen_ba", opt_gen_ba_);
    f("disc_a_local", opt_d_al_);
    f("disc_a_global", opt_d_ag_);
    f("disc_b_local", opt_d_bl_);
    f("disc_b_global", opt_d_bg_);
  }
  AdamOptimizer<S>& disc_optimizer(DiscriminatorNet<S>& d) {
    if (&d == disc_a_local_.get()) return opt_d_al_;
    if (&d == disc_a_global_.get()) return opt_d_ag_;
    if (&d == disc_b_local_.get()) return opt_d_bl_;
    return opt_d_bg_;
  }

  // Networks in a fixed order with stable name prefixes; used for
  // checkpointing and whole-model parameter sweeps.
  template <typename F>
  void for_each_store(F&& f) {
    f("gen_ab", gen_ab_->params);
    f("gen_ba", gen_ba_->params);
    f("disc_a_local", disc_a_local_->params);
    f("disc_a_global", disc_a_global_->params);
    f("disc_b_local", disc_b_local_->params);
    f("disc_b_global", disc_b_global_->params);
  }
  template <typename F>
  void for_each_spectral(F&& f) {
    auto net = [&](const std::string& prefix, DiscriminatorNet<S>& d) {
      for (std::size_t i = 0; i < d.stack.size(); ++i)
        f(prefix + ".sn" + std::to_string(i), d.stack[i].sn);
      f(prefix + ".sn_cls", d.classifier.sn);
    };
    net("disc_a_local", *disc_a_local_);
    net("disc_a_global", *disc_a_global_);
    net("disc_b_local", *disc_b_local_);
    net("disc_b_global", *disc_b_global_);
  }

  double current_lr() const {
    return scheduled_lr(opt_gen_ab_.config().lr, iteration_, schedule_.decay_start,
                        schedule_.total_iters);
  }

  // One full iteration on a single image pair. Discriminators update on
  // lambda_adv*adv_d + lambda_cam*cam_d with the generators detached;
  // generators then update on total_g with discriminator gradients
  // discarded. Throws if any loss term goes non-finite.
  LossBundle train_step(const Var<S>& real_a, const Var<S>& real_b) {
    const double lr = current_lr();
    LossBundle bundle;
    bundle.lr = lr;

    auto check = [](double v, const char* term) {
      if (!std::isfinite(v))
        throw std::runtime_error(std::string("train_step: non-finite loss term ") + term);
      return v;
    };

    // one power-iteration round per step, outside the graph
    models_.for_each_discriminator([](DiscriminatorNet<S>& d) { refresh_spectral(d); });

    {
      models_.for_each_discriminator([](DiscriminatorNet<S>& d) { d.params.zero_grad(); });
      auto terms = discriminator_objective(models_, real_a, real_b, weights_);
      bundle.adv_d = check(terms.adv->item(), "adv_d");
      bundle.cam_d = check(terms.cam->item(), "cam_d");
      check(terms.total->item(), "total_d");
      backward(terms.total);
      models_.for_each_discriminator(
          [&](DiscriminatorNet<S>& d) { disc_optimizer(d).step(d.params, lr); });
    }

    {
      gen_ab_->params.zero_grad();
      gen_ba_->params.zero_grad();
      models_.for_each_discriminator([](DiscriminatorNet<S>& d) { d.params.zero_grad(); });
      auto terms = generator_objective(models_, real_a, real_b, weights_);
      bundle.adv_g = check(terms.adv->item(), "adv_g");
      bundle.cycle = check(terms.cycle->item(), "cycle");
      bundle.identity = check(terms.identity->item(), "identity");
      bundle.cam_g = check(terms.cam->item(), "cam_g");
      check(terms.total->item(), "total_g");
      backward(terms.total);
      opt_gen_ab_.step(gen_ab_->params, lr);
      opt_gen_ba_.step(gen_ba_->params, lr);
      // discriminator gradients from the generator pass are discarded
      models_.for_each_discriminator([](DiscriminatorNet<S>& d) { d.params.zero_grad(); });
    }

    compute_totals(bundle, weights_);
    ++iteration_;
    return bundle;
  }

 private:
  NetConfig cfg_;
  LossWeights weights_;
  TrainSchedule schedule_;
  std::uint64_t seed_ = 0;
  std::uint64_t iteration_ = 0;

  std::unique_ptr<GeneratorNet<S>> gen_ab_, gen_ba_;
  std::unique_ptr<DiscriminatorNet<S>> disc_a_local_, disc_a_global_;
  std::unique_ptr<DiscriminatorNet<S>> disc_b_local_, disc_b_global_;
  GanModels<S> models_;
  AdamOptimizer<S> opt_gen_ab_, opt_gen_ba_;
  AdamOptimizer<S> opt_d_al_, opt_d_ag_, opt_d_bl_, opt_d_bg_;
};

// Per-iteration RNG stream: independent of history so a resumed run
// draws the same data/augmentation randomness as an uninterrupted one.
inline Rng iteration_rng(std::uint64_t seed, std::uint64_t iter) {
  return Rng(seed ^ (0x9E3779B97F4A7C15ULL * (iter + 1)));
}

inline const char* loss_log_header(bool cam_enabled) {
  return cam_enabled
             ? "iter\tadv_g\tadv_d\tcycle\tidentity\tcam_g\tcam_d\ttotal_g\ttotal_d\tlr"
             : "iter\tadv_g\tadv_d\tcycle\tidentity\ttotal_g\ttotal_d\tlr";
}

// Tab-separated, fixed six fractional digits; cam columns are omitted
// entirely when CAM is disabled.
inline std::string format_loss_line(std::uint64_t iter, const LossBundle& b,
                                    bool cam_enabled) {
  char buf[256];
  if (cam_enabled)
    std::snprintf(buf, sizeof(buf),
                  "%llu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f",
                  static_cast<unsigned long long>(iter), b.adv_g, b.adv_d, b.cycle,
                  b.identity, b.cam_g, b.cam_d, b.total_g, b.total_d, b.lr);
  else
    std::snprintf(buf, sizeof(buf),
                  "%llu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f",
                  static_cast<unsigned long long>(iter), b.adv_g, b.adv_d, b.cycle,
                  b.identity, b.total_g, b.total_d, b.lr);
  return buf;
}

}  // namespace ugatit
