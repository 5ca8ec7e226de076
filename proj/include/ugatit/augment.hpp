#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ugatit/rng.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

// Plain (graph-free) image helpers on [C,H,W] float tensors.

template <typename S>
Var<S> resize_nearest(const Var<S>& img, int out_h, int out_w) {
  if (img->shape.size() != 3) throw std::invalid_argument("resize_nearest: want [C,H,W]");
  const int C = img->shape[0], H = img->shape[1], W = img->shape[2];
  auto out = make_tensor<S>({C, out_h, out_w});
  for (int c = 0; c < C; ++c) {
    const S* src = img->data.data() + static_cast<std::size_t>(c) * H * W;
    S* dst = out->data.data() + static_cast<std::size_t>(c) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const int sy = std::min(H - 1, y * H / out_h);
      for (int x = 0; x < out_w; ++x)
        dst[y * out_w + x] = src[sy * W + std::min(W - 1, x * W / out_w)];
    }
  }
  return out;
}

template <typename S>
Var<S> hflip(const Var<S>& img) {
  const int C = img->shape[0], H = img->shape[1], W = img->shape[2];
  auto out = make_tensor<S>({C, H, W});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y) {
      const S* src = img->data.data() + (static_cast<std::size_t>(c) * H + y) * W;
      S* dst = out->data.data() + (static_cast<std::size_t>(c) * H + y) * W;
      for (int x = 0; x < W; ++x) dst[x] = src[W - 1 - x];
    }
  return out;
}

template <typename S>
Var<S> crop(const Var<S>& img, int y0, int x0, int h, int w) {
  const int C = img->shape[0], H = img->shape[1], W = img->shape[2];
  if (y0 < 0 || x0 < 0 || y0 + h > H || x0 + w > W)
    throw std::invalid_argument("crop: window out of bounds");
  auto out = make_tensor<S>({C, h, w});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < h; ++y) {
      const S* src = img->data.data() +
                     (static_cast<std::size_t>(c) * H + y0 + y) * W + x0;
      std::copy_n(src, w, out->data.data() + (static_cast<std::size_t>(c) * h + y) * w);
    }
  return out;
}

// The enlarged side the random crop draws from, scaled proportionally
// from the 256 -> 286 recipe (e.g. 32 -> 36).
inline int augment_resize_target(int train_size) {
  return static_cast<int>(std::lround(train_size * 286.0 / 256.0));
}

// Horizontal flip with p = 0.5, nearest resize to the enlarged side,
// then a uniform random crop back to the training size. RNG draws are
// consumed in that fixed order so runs replay deterministically.
template <typename S>
Var<S> augment_sample(const Var<S>& img, Rng& rng) {
  if (img->shape.size() != 3) throw std::invalid_argument("augment_sample: want [C,H,W]");
  const int size = img->shape[1];
  if (img->shape[2] != size) throw std::invalid_argument("augment_sample: want square image");
  Var<S> out = img;
  if (rng.bernoulli(0.5)) out = hflip(out);
  const int big = augment_resize_target(size);
  out = resize_nearest(out, big, big);
  const int max_off = big - size;
  const int y0 = static_cast<int>(rng.uniform_int(max_off + 1));
  const int x0 = static_cast<int>(rng.uniform_int(max_off + 1));
  return crop(out, y0, x0, size, size);
}

}  // namespace ugatit
