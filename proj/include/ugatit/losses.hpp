#pragma once

#include <stdexcept>
#include <string>

#include "ugatit/cam.hpp"
#include "ugatit/networks.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

struct LossWeights {
  double lambda_adv = 1.0;
  double lambda_cycle = 10.0;
  double lambda_identity = 10.0;
  double lambda_cam = 1000.0;

  void validate() const {
    if (lambda_adv < 0 || lambda_cycle < 0 || lambda_identity < 0 || lambda_cam < 0)
      throw std::invalid_argument("loss weights must be >= 0");
  }
};

// Scalar loss parts, summed over both directions (and both scales for
// the adversarial/CAM discriminator terms).
struct LossBundle {
  double adv_g = 0, adv_d = 0;
  double cycle = 0, identity = 0;
  double cam_g = 0, cam_d = 0;
  double total_g = 0, total_d = 0;
  double lr = 0;
};

inline void compute_totals(LossBundle& b, const LossWeights& w) {
  b.total_g = w.lambda_adv * b.adv_g + w.lambda_cycle * b.cycle +
              w.lambda_identity * b.identity + w.lambda_cam * b.cam_g;
  b.total_d = w.lambda_adv * b.adv_d + w.lambda_cam * b.cam_d;
}

enum class GanSide { kGenerator, kDiscriminator };

namespace detail {

// mean((x - target)^2)
template <typename S>
Var<S> mean_sq_to(const Var<S>& x, S target) {
  return mean_all(square(add_const(x, -target)));
}

}  // namespace detail

// Least-squares GAN loss on raw score maps (targets: real 1, fake 0;
// the generator drives fake toward 1).
template <typename S>
Var<S> adversarial_loss(const Var<S>& real, const Var<S>& fake, GanSide side) {
  if (side == GanSide::kGenerator) return detail::mean_sq_to(fake, S(1));
  return add(detail::mean_sq_to(real, S(1)), detail::mean_sq_to(fake, S(0)));
}

// mean |a - b| over all elements
template <typename S>
Var<S> cycle_loss(const Var<S>& x, const Var<S>& reconstructed) {
  require_same_shape(x, reconstructed, "cycle_loss");
  return mean_all(abs_val(sub(x, reconstructed)));
}

template <typename S>
Var<S> identity_loss(const Var<S>& x, const Var<S>& identity_mapped) {
  require_same_shape(x, identity_mapped, "identity_loss");
  return mean_all(abs_val(sub(x, identity_mapped)));
}

// Binary cross-entropy on the generator's auxiliary classifier:
// sigma(logit) -> 1 for source-domain inputs, -> 0 for target-domain
// inputs, via stable log-sigmoid. Averaged over the avg/max pair.
template <typename S>
Var<S> cam_loss_generator(const CamLogits<S>& source, const CamLogits<S>& target) {
  auto src_term = scale(add(mean_all(softplus(scale(source.avg, S(-1)))),
                            mean_all(softplus(scale(source.max, S(-1))))),
                        S(0.5));
  auto tgt_term = scale(add(mean_all(softplus(target.avg)),
                            mean_all(softplus(target.max))),
                        S(0.5));
  return add(src_term, tgt_term);
}

// Least-squares form on the discriminator's auxiliary logits, averaged
// over the avg/max pair.
template <typename S>
Var<S> cam_loss_discriminator(const CamLogits<S>& real, const CamLogits<S>& fake,
                              GanSide side) {
  if (side == GanSide::kGenerator)
    return scale(add(detail::mean_sq_to(fake.avg, S(1)),
                     detail::mean_sq_to(fake.max, S(1))),
                 S(0.5));
  auto term_avg = add(detail::mean_sq_to(real.avg, S(1)),
                      detail::mean_sq_to(fake.avg, S(0)));
  auto term_max = add(detail::mean_sq_to(real.max, S(1)),
                      detail::mean_sq_to(fake.max, S(0)));
  return scale(add(term_avg, term_max), S(0.5));
}

// ---------------------------------------------------------------------------
// full objective over both directions

template <typename S>
struct GanModels {
  GeneratorNet<S>* gen_ab = nullptr;  // A -> B
  GeneratorNet<S>* gen_ba = nullptr;  // B -> A
  DiscriminatorNet<S>* disc_a_local = nullptr;
  DiscriminatorNet<S>* disc_a_global = nullptr;
  DiscriminatorNet<S>* disc_b_local = nullptr;
  DiscriminatorNet<S>* disc_b_global = nullptr;

  bool cam_enabled() const { return gen_ab->cam.enabled; }

  template <typename F>
  void for_each_discriminator(F&& f) {
    f(*disc_a_local);
    f(*disc_a_global);
    f(*disc_b_local);
    f(*disc_b_global);
  }
};

template <typename S>
struct ObjectiveTerms {
  Var<S> adv, cycle, identity, cam, total;
};

// Discriminator objective: generators run detached, so no generator
// gradients are produced.
template <typename S>
ObjectiveTerms<S> discriminator_objective(GanModels<S>& m, const Var<S>& real_a,
                                          const Var<S>& real_b,
                                          const LossWeights& w) {
  auto fake_b = detach(generator_forward(*m.gen_ab, real_a).image);
  auto fake_a = detach(generator_forward(*m.gen_ba, real_b).image);

  const bool cam_on = m.cam_enabled();
  Var<S> adv, cam;
  auto accumulate = [&](DiscriminatorNet<S>& d, const Var<S>& real,
                        const Var<S>& fake) {
    auto out_real = discriminator_forward(d, real);
    auto out_fake = discriminator_forward(d, fake);
    auto a = adversarial_loss(out_real.patch, out_fake.patch, GanSide::kDiscriminator);
    adv = adv ? add(adv, a) : a;
    if (cam_on) {
      auto c = cam_loss_discriminator(out_real.logits, out_fake.logits,
                                      GanSide::kDiscriminator);
      cam = cam ? add(cam, c) : c;
    }
  };
  accumulate(*m.disc_b_local, real_b, fake_b);
  accumulate(*m.disc_b_global, real_b, fake_b);
  accumulate(*m.disc_a_local, real_a, fake_a);
  accumulate(*m.disc_a_global, real_a, fake_a);

  ObjectiveTerms<S> t;
  t.adv = adv;
  t.cam = cam_on ? cam : make_scalar<S>(S(0));
  t.total = add(scale(t.adv, S(w.lambda_adv)), scale(t.cam, S(w.lambda_cam)));
  return t;
}

// Generator objective: discriminator parameters participate in the
// graph but their gradients are discarded by the caller.
template <typename S>
ObjectiveTerms<S> generator_objective(GanModels<S>& m, const Var<S>& real_a,
                                      const Var<S>& real_b, const LossWeights& w) {
  auto fwd_b = generator_forward(*m.gen_ab, real_a);   // A -> B
  auto fwd_a = generator_forward(*m.gen_ba, real_b);   // B -> A
  auto rec_a = generator_forward(*m.gen_ba, fwd_b.image).image;
  auto rec_b = generator_forward(*m.gen_ab, fwd_a.image).image;
  auto idt_b = generator_forward(*m.gen_ab, real_b);   // identity pass of B
  auto idt_a = generator_forward(*m.gen_ba, real_a);

  const bool cam_on = m.cam_enabled();
  Var<S> adv;
  auto accumulate_adv = [&](DiscriminatorNet<S>& d, const Var<S>& fake) {
    auto out = discriminator_forward(d, fake);
    auto a = detail::mean_sq_to(out.patch, S(1));
    if (cam_on) {
      CamLogits<S> unused;
      a = add(a, cam_loss_discriminator(unused, out.logits, GanSide::kGenerator));
    }
    adv = adv ? add(adv, a) : a;
  };
  accumulate_adv(*m.disc_b_local, fwd_b.image);
  accumulate_adv(*m.disc_b_global, fwd_b.image);
  accumulate_adv(*m.disc_a_local, fwd_a.image);
  accumulate_adv(*m.disc_a_global, fwd_a.image);

  ObjectiveTerms<S> t;
  t.adv = adv;
  t.cycle = add(cycle_loss(real_a, rec_a), cycle_loss(real_b, rec_b));
  t.identity = add(identity_loss(real_b, idt_b.image),
                   identity_loss(real_a, idt_a.image));
  // Per direction: source-domain logits come from the translation pass,
  // target-domain logits from the identity pass.
  t.cam = cam_on ? add(cam_loss_generator(fwd_b.logits, idt_b.logits),
                       cam_loss_generator(fwd_a.logits, idt_a.logits))
                 : make_scalar<S>(S(0));
  t.total = add(add(scale(t.adv, S(w.lambda_adv)), scale(t.cycle, S(w.lambda_cycle))),
                add(scale(t.identity, S(w.lambda_identity)),
                    scale(t.cam, S(w.lambda_cam))));
  return t;
}

}  // namespace ugatit
