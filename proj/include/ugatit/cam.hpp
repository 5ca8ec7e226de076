#pragma once

#include <stdexcept>
#include <string>

#include "ugatit/nn_ops.hpp"
#include "ugatit/param_store.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

// Auxiliary-classifier attention head. Two per-channel weight vectors
// (one per pooling branch) produce domain logits; the same weights
// re-scale the feature maps, the two branches are concatenated and a
// 1x1 conv fuses them back to n channels.
template <typename S>
struct CamModule {
  Var<S> w_avg;       // [1, n] pooling-classifier weights, avg branch
  Var<S> w_max;       // [1, n] max branch
  Var<S> fuse_weight; // [n, 2n, 1, 1]
  Var<S> fuse_bias;   // [n]
  Activation fuse_act = Activation::kRelu;
  bool enabled = true;  // false: identity attention, zero logits

  int channels() const { return w_avg->shape[1]; }
};

template <typename S>
CamModule<S> build_cam(ParamStore<S>& params, const std::string& prefix,
                       int channels, Activation fuse_act, Rng& rng,
                       double init_std, bool enabled = true) {
  CamModule<S> cam;
  cam.fuse_act = fuse_act;
  cam.enabled = enabled;
  cam.w_avg = params.add(prefix + ".w_avg", make_tensor<S>({1, channels}), true);
  cam.w_max = params.add(prefix + ".w_max", make_tensor<S>({1, channels}), true);
  cam.fuse_weight = params.add(prefix + ".fuse.w",
                               make_tensor<S>({channels, 2 * channels, 1, 1}), true);
  cam.fuse_bias = params.add(prefix + ".fuse.b", make_tensor<S>({channels}));
  ParamStore<S>::fill_normal(cam.w_avg, rng, 0.0, init_std);
  ParamStore<S>::fill_normal(cam.w_max, rng, 0.0, init_std);
  ParamStore<S>::fill_normal(cam.fuse_weight, rng, 0.0, init_std);
  return cam;
}

template <typename S>
struct CamLogits {
  Var<S> avg;  // [B,1] raw logits, sigma applied inside the loss
  Var<S> max;  // [B,1]
};

template <typename S>
CamLogits<S> cam_logits(const Var<S>& features, const CamModule<S>& cam) {
  if (features->shape[1] != cam.channels())
    throw std::invalid_argument("cam_logits: channel count does not match CAM weights");
  CamLogits<S> out;
  out.avg = fully_connected(global_pool(features, PoolMode::kAvg), cam.w_avg, Var<S>{});
  out.max = fully_connected(global_pool(features, PoolMode::kMax), cam.w_max, Var<S>{});
  return out;
}

template <typename S>
Var<S> cam_attend(const Var<S>& features, const CamModule<S>& cam) {
  if (!cam.enabled) return features;
  const int B = features->shape[0], H = features->shape[2], W = features->shape[3];
  const int n = cam.channels();
  auto wa = reshape(cam.w_avg, {n});
  auto wm = reshape(cam.w_max, {n});
  auto branch_avg = mul(features, expand_c(wa, B, H, W));
  auto branch_max = mul(features, expand_c(wm, B, H, W));
  auto fused = conv2d(concat_channels(branch_avg, branch_max), cam.fuse_weight,
                      cam.fuse_bias, 1, 0);
  return apply_activation(fused, cam.fuse_act);
}

// Channel sum, min-max normalized to [0,1] per image. Constant maps
// normalize to all zeros. Visualization only: detached from the graph.
template <typename S>
Var<S> cam_heatmap(const Var<S>& attended) {
  const int B = attended->shape[0], C = attended->shape[1];
  const int H = attended->shape[2], W = attended->shape[3];
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  auto out = make_tensor<S>({B, 1, H, W});
  for (int b = 0; b < B; ++b) {
    S* od = out->data.data() + b * hw;
    std::fill(od, od + hw, S(0));
    const S* id = attended->data.data() + static_cast<std::size_t>(b) * C * hw;
    for (int c = 0; c < C; ++c)
      for (std::size_t i = 0; i < hw; ++i) od[i] += id[c * hw + i];
    S lo = od[0], hi = od[0];
    for (std::size_t i = 1; i < hw; ++i) {
      lo = std::min(lo, od[i]);
      hi = std::max(hi, od[i]);
    }
    if (hi > lo) {
      const S inv = S(1) / (hi - lo);
      for (std::size_t i = 0; i < hw; ++i) od[i] = (od[i] - lo) * inv;
    } else {
      std::fill(od, od + hw, S(0));
    }
  }
  return out;
}

}  // namespace ugatit
