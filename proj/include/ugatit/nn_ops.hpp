#pragma once

#include <cmath>

#include "ugatit/tensor.hpp"

namespace ugatit {

enum class Activation { kRelu, kLeakyRelu, kTanh, kSigmoid };
enum class PadMode { kZero, kReflect };
enum class PoolMode { kAvg, kMax };

// ---------------------------------------------------------------------------
// activations

template <typename S>
Var<S> relu(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      if (a->data[i] > S(0)) a->grad[i] += o.grad[i];
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] > S(0) ? a->data[i] : S(0);
  return out;
}

template <typename S>
Var<S> leaky_relu(const Var<S>& a, S slope) {
  auto out = make_node<S>(a->shape, {a, }, [a, slope](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a->grad[i] += o.grad[i] * (a->data[i] > S(0) ? S(1) : slope);
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] > S(0) ? a->data[i] : slope * a->data[i];
  return out;
}

template <typename S>
Var<S> tanh_act(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a->grad[i] += o.grad[i] * (S(1) - o.data[i] * o.data[i]);
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = std::tanh(a->data[i]);
  return out;
}

template <typename S>
Var<S> sigmoid(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a->grad[i] += o.grad[i] * o.data[i] * (S(1) - o.data[i]);
  });
  for (std::size_t i = 0; i < out->data.size(); ++i) {
    const S x = a->data[i];
    out->data[i] = x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                             : std::exp(x) / (S(1) + std::exp(x));
  }
  return out;
}

// log(1 + e^x), numerically stable in both tails; d/dx = sigmoid(x)
template <typename S>
Var<S> softplus(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const S x = a->data[i];
      const S sig = x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                              : std::exp(x) / (S(1) + std::exp(x));
      a->grad[i] += o.grad[i] * sig;
    }
  });
  for (std::size_t i = 0; i < out->data.size(); ++i) {
    const S x = a->data[i];
    out->data[i] = x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return out;
}

template <typename S>
Var<S> apply_activation(const Var<S>& a, Activation kind, S slope = S(0.2)) {
  switch (kind) {
    case Activation::kRelu: return relu(a);
    case Activation::kLeakyRelu: return leaky_relu(a, slope);
    case Activation::kTanh: return tanh_act(a);
    case Activation::kSigmoid: return sigmoid(a);
  }
  throw std::invalid_argument("unknown activation");
}

// ---------------------------------------------------------------------------
// fully connected: out[b,o] = sum_f weight[o,f] * input[b,f] + bias[o]

template <typename S>
Var<S> fully_connected(const Var<S>& input, const Var<S>& weight,
                       const Var<S>& bias) {
  if (input->shape.size() != 2 || weight->shape.size() != 2)
    throw std::invalid_argument("fully_connected: want 2-d input and weight");
  const int B = input->shape[0], F = input->shape[1];
  const int O = weight->shape[0];
  if (weight->shape[1] != F)
    throw std::invalid_argument("fully_connected: weight/input feature mismatch");
  if (bias && (bias->shape.size() != 1 || bias->shape[0] != O))
    throw std::invalid_argument("fully_connected: bad bias shape");

  std::vector<Var<S>> parents = {input, weight};
  if (bias) parents.push_back(bias);
  auto out = make_node<S>({B, O}, std::move(parents),
                          [input, weight, bias, B, F, O](Tensor<S>& o) {
    for (int b = 0; b < B; ++b)
      for (int oi = 0; oi < O; ++oi) {
        const S g = o.grad[b * O + oi];
        if (g == S(0)) continue;
        if (input->requires_grad) {
          const S* w = weight->data.data() + static_cast<std::size_t>(oi) * F;
          S* ig = input->grad.data() + static_cast<std::size_t>(b) * F;
          for (int f = 0; f < F; ++f) ig[f] += g * w[f];
        }
        if (weight->requires_grad) {
          const S* in = input->data.data() + static_cast<std::size_t>(b) * F;
          S* wg = weight->grad.data() + static_cast<std::size_t>(oi) * F;
          for (int f = 0; f < F; ++f) wg[f] += g * in[f];
        }
        if (bias && bias->requires_grad) bias->grad[oi] += g;
      }
  });
  for (int b = 0; b < B; ++b) {
    const S* in = input->data.data() + static_cast<std::size_t>(b) * F;
    for (int oi = 0; oi < O; ++oi) {
      const S* w = weight->data.data() + static_cast<std::size_t>(oi) * F;
      S acc = bias ? bias->data[oi] : S(0);
      for (int f = 0; f < F; ++f) acc += w[f] * in[f];
      out->data[b * O + oi] = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// conv2d

namespace detail {

// Reflect-maps coordinate i into [0, n) (boundary not repeated).
inline int reflect_index(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

// Copies input[b] into a zero/reflect padded buffer of [C, H+2p, W+2p].
template <typename S>
void pad_image(const S* src, int C, int H, int W, int pad, PadMode mode, S* dst) {
  const int Hp = H + 2 * pad, Wp = W + 2 * pad;
  for (int c = 0; c < C; ++c) {
    const S* sc = src + static_cast<std::size_t>(c) * H * W;
    S* dc = dst + static_cast<std::size_t>(c) * Hp * Wp;
    for (int y = 0; y < Hp; ++y) {
      const int sy = y - pad;
      for (int x = 0; x < Wp; ++x) {
        const int sx = x - pad;
        if (mode == PadMode::kZero) {
          dc[y * Wp + x] = (sy >= 0 && sy < H && sx >= 0 && sx < W)
                               ? sc[sy * W + sx] : S(0);
        } else {
          dc[y * Wp + x] = sc[reflect_index(sy, H) * W + reflect_index(sx, W)];
        }
      }
    }
  }
}

// Scatters gradient from the padded buffer back onto the original image.
template <typename S>
void unpad_grad(const S* gpad, int C, int H, int W, int pad, PadMode mode, S* gdst) {
  const int Hp = H + 2 * pad, Wp = W + 2 * pad;
  for (int c = 0; c < C; ++c) {
    const S* gc = gpad + static_cast<std::size_t>(c) * Hp * Wp;
    S* dc = gdst + static_cast<std::size_t>(c) * H * W;
    for (int y = 0; y < Hp; ++y) {
      const int sy = y - pad;
      for (int x = 0; x < Wp; ++x) {
        const int sx = x - pad;
        if (mode == PadMode::kZero) {
          if (sy >= 0 && sy < H && sx >= 0 && sx < W)
            dc[sy * W + sx] += gc[y * Wp + x];
        } else {
          dc[reflect_index(sy, H) * W + reflect_index(sx, W)] += gc[y * Wp + x];
        }
      }
    }
  }
}

}  // namespace detail

// Cross-correlation with square kernel. weight: [Cout, Cin, K, K].
template <typename S>
Var<S> conv2d(const Var<S>& input, const Var<S>& weight, const Var<S>& bias,
              int stride, int pad, PadMode pad_mode = PadMode::kZero) {
  if (input->shape.size() != 4 || weight->shape.size() != 4)
    throw std::invalid_argument("conv2d: want 4-d input and weight");
  const int B = input->shape[0], Cin = input->shape[1];
  const int H = input->shape[2], W = input->shape[3];
  const int Cout = weight->shape[0], K = weight->shape[2];
  if (weight->shape[1] != Cin)
    throw std::invalid_argument("conv2d: channel mismatch");
  if (weight->shape[3] != K) throw std::invalid_argument("conv2d: kernel not square");
  if (K < 1 || stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad hyperparameters");
  if (pad_mode == PadMode::kReflect && pad >= std::min(H, W))
    throw std::invalid_argument("conv2d: reflect pad too large for input");
  if ((H + 2 * pad - K) % stride != 0 || (W + 2 * pad - K) % stride != 0)
    throw std::invalid_argument("conv2d: non-integral output size");
  const int Ho = (H + 2 * pad - K) / stride + 1;
  const int Wo = (W + 2 * pad - K) / stride + 1;
  if (Ho < 1 || Wo < 1) throw std::invalid_argument("conv2d: input too small for kernel");
  if (bias && (bias->shape.size() != 1 || bias->shape[0] != Cout))
    throw std::invalid_argument("conv2d: bad bias shape");

  const int Hp = H + 2 * pad, Wp = W + 2 * pad;

  std::vector<Var<S>> parents = {input, weight};
  if (bias) parents.push_back(bias);
  auto out = make_node<S>(
      {B, Cout, Ho, Wo}, std::move(parents),
      [input, weight, bias, B, Cin, H, W, Cout, K, stride, pad, pad_mode, Ho,
       Wo, Hp, Wp](Tensor<S>& o) {
        std::vector<S> padded(static_cast<std::size_t>(Cin) * Hp * Wp);
        std::vector<S> gpad;
        if (input->requires_grad)
          gpad.resize(static_cast<std::size_t>(Cin) * Hp * Wp);
        for (int b = 0; b < B; ++b) {
          detail::pad_image(input->data.data() + static_cast<std::size_t>(b) * Cin * H * W,
                            Cin, H, W, pad, pad_mode, padded.data());
          if (input->requires_grad) std::fill(gpad.begin(), gpad.end(), S(0));
          for (int co = 0; co < Cout; ++co) {
            const S* og = o.grad.data() +
                          (static_cast<std::size_t>(b) * Cout + co) * Ho * Wo;
            if (bias && bias->requires_grad) {
              S acc = S(0);
              for (int i = 0; i < Ho * Wo; ++i) acc += og[i];
              bias->grad[co] += acc;
            }
            for (int ci = 0; ci < Cin; ++ci) {
              const S* pin = padded.data() + static_cast<std::size_t>(ci) * Hp * Wp;
              S* pig = input->requires_grad
                           ? gpad.data() + static_cast<std::size_t>(ci) * Hp * Wp
                           : nullptr;
              const std::size_t wbase =
                  (static_cast<std::size_t>(co) * Cin + ci) * K * K;
              for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                  const S wv = weight->data[wbase + ky * K + kx];
                  S wg = S(0);
                  for (int oy = 0; oy < Ho; ++oy) {
                    const S* in_row = pin + (oy * stride + ky) * Wp + kx;
                    S* ig_row = pig ? pig + (oy * stride + ky) * Wp + kx : nullptr;
                    const S* og_row = og + oy * Wo;
                    for (int ox = 0; ox < Wo; ++ox) {
                      const S g = og_row[ox];
                      wg += g * in_row[ox * stride];
                      if (ig_row) ig_row[ox * stride] += g * wv;
                    }
                  }
                  if (weight->requires_grad)
                    weight->grad[wbase + ky * K + kx] += wg;
                }
            }
          }
          if (input->requires_grad)
            detail::unpad_grad(gpad.data(), Cin, H, W, pad, pad_mode,
                               input->grad.data() +
                                   static_cast<std::size_t>(b) * Cin * H * W);
        }
      });

  std::vector<S> padded(static_cast<std::size_t>(Cin) * Hp * Wp);
  for (int b = 0; b < B; ++b) {
    detail::pad_image(input->data.data() + static_cast<std::size_t>(b) * Cin * H * W,
                      Cin, H, W, pad, pad_mode, padded.data());
    for (int co = 0; co < Cout; ++co) {
      S* od = out->data.data() + (static_cast<std::size_t>(b) * Cout + co) * Ho * Wo;
      const S bv = bias ? bias->data[co] : S(0);
      for (int i = 0; i < Ho * Wo; ++i) od[i] = bv;
      for (int ci = 0; ci < Cin; ++ci) {
        const S* pin = padded.data() + static_cast<std::size_t>(ci) * Hp * Wp;
        const std::size_t wbase = (static_cast<std::size_t>(co) * Cin + ci) * K * K;
        for (int ky = 0; ky < K; ++ky)
          for (int kx = 0; kx < K; ++kx) {
            const S wv = weight->data[wbase + ky * K + kx];
            if (wv == S(0)) continue;
            for (int oy = 0; oy < Ho; ++oy) {
              const S* in_row = pin + (oy * stride + ky) * Wp + kx;
              S* out_row = od + oy * Wo;
              for (int ox = 0; ox < Wo; ++ox)
                out_row[ox] += wv * in_row[ox * stride];
            }
          }
      }
    }
  }
  return out;
}

// Explicit zero padding with independent amounts per side. The halving
// downsample convs (K3, S2) pad only top/left so the output size stays
// integral under the strict conv size rule.
template <typename S>
Var<S> zero_pad2d(const Var<S>& input, int top, int left, int bottom, int right) {
  if (input->shape.size() != 4) throw std::invalid_argument("zero_pad2d: want 4-d tensor");
  if (top < 0 || left < 0 || bottom < 0 || right < 0)
    throw std::invalid_argument("zero_pad2d: negative padding");
  const int B = input->shape[0], C = input->shape[1];
  const int H = input->shape[2], W = input->shape[3];
  const int Ho = H + top + bottom, Wo = W + left + right;
  auto out = make_node<S>({B, C, Ho, Wo}, {input},
                          [input, B, C, H, W, top, left, Wo](Tensor<S>& o) {
    for (int bc = 0; bc < B * C; ++bc) {
      S* ig = input->grad.data() + static_cast<std::size_t>(bc) * H * W;
      const S* og = o.grad.data() + static_cast<std::size_t>(bc) * (o.data.size() / (B * C));
      for (int y = 0; y < H; ++y) {
        const S* row = og + (y + top) * Wo + left;
        for (int x = 0; x < W; ++x) ig[y * W + x] += row[x];
      }
    }
  });
  for (int bc = 0; bc < B * C; ++bc) {
    const S* id = input->data.data() + static_cast<std::size_t>(bc) * H * W;
    S* od = out->data.data() + static_cast<std::size_t>(bc) * Ho * Wo;
    for (int y = 0; y < H; ++y)
      std::copy_n(id + y * W, W, od + (y + top) * Wo + left);
  }
  return out;
}

// ---------------------------------------------------------------------------
// nearest-neighbor 2x upsample

template <typename S>
Var<S> upsample_nearest2x(const Var<S>& input) {
  if (input->shape.size() != 4)
    throw std::invalid_argument("upsample_nearest2x: want 4-d tensor");
  const int B = input->shape[0], C = input->shape[1];
  const int H = input->shape[2], W = input->shape[3];
  auto out = make_node<S>({B, C, 2 * H, 2 * W}, {input},
                          [input, B, C, H, W](Tensor<S>& o) {
    const int Wo = 2 * W;
    for (int bc = 0; bc < B * C; ++bc) {
      S* ig = input->grad.data() + static_cast<std::size_t>(bc) * H * W;
      const S* og = o.grad.data() + static_cast<std::size_t>(bc) * 4 * H * W;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const S* g0 = og + (2 * y) * Wo + 2 * x;
          const S* g1 = og + (2 * y + 1) * Wo + 2 * x;
          ig[y * W + x] += g0[0] + g0[1] + g1[0] + g1[1];
        }
    }
  });
  const int Wo = 2 * W;
  for (int bc = 0; bc < B * C; ++bc) {
    const S* id = input->data.data() + static_cast<std::size_t>(bc) * H * W;
    S* od = out->data.data() + static_cast<std::size_t>(bc) * 4 * H * W;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const S v = id[y * W + x];
        od[(2 * y) * Wo + 2 * x] = v;
        od[(2 * y) * Wo + 2 * x + 1] = v;
        od[(2 * y + 1) * Wo + 2 * x] = v;
        od[(2 * y + 1) * Wo + 2 * x + 1] = v;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// global pooling: [B,C,H,W] -> [B,C]
// Max backward routes the gradient to the first maximal element in
// row-major order (deterministic tie-break).

template <typename S>
Var<S> global_pool(const Var<S>& input, PoolMode mode) {
  if (input->shape.size() != 4)
    throw std::invalid_argument("global_pool: want 4-d tensor");
  const int B = input->shape[0], C = input->shape[1];
  const std::size_t hw = static_cast<std::size_t>(input->shape[2]) * input->shape[3];
  if (hw == 0) throw std::invalid_argument("global_pool: empty spatial extent");

  if (mode == PoolMode::kAvg) return mean_spatial(input);

  auto argmax = std::make_shared<std::vector<std::size_t>>(
      static_cast<std::size_t>(B) * C);
  auto out = make_node<S>({B, C}, {input}, [input, argmax, hw](Tensor<S>& o) {
    for (std::size_t bc = 0; bc < o.data.size(); ++bc)
      input->grad[bc * hw + (*argmax)[bc]] += o.grad[bc];
  });
  for (std::size_t bc = 0; bc < out->data.size(); ++bc) {
    const S* id = input->data.data() + bc * hw;
    S best = id[0];
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < hw; ++i)
      if (id[i] > best) {
        best = id[i];
        best_i = i;
      }
    out->data[bc] = best;
    (*argmax)[bc] = best_i;
  }
  return out;
}

}  // namespace ugatit
