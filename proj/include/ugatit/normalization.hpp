#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ugatit/nn_ops.hpp"
#include "ugatit/rng.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

inline constexpr double kNormEpsilon = 1e-5;

enum class NormScope { kChannel, kLayer, kGroup };

// Element-wise square root. Callers add epsilon to the variance before
// the root; the gradient at exactly zero is dropped.
template <typename S>
Var<S> sqrt_of(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const S y = o.data[i];
      if (y > S(0)) a->grad[i] += o.grad[i] * S(0.5) / y;
    }
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = std::sqrt(a->data[i]);
  return out;
}

// Per-scope mean and (biased) standard deviation, kept in the graph so
// gradients flow through the statistics.
template <typename S>
struct Moments {
  Var<S> mean;  // [B,C] (channel), [B] (layer), [B,G] (group)
  Var<S> std;   // same shape; sqrt of population variance, no epsilon
};

template <typename S>
Moments<S> moments(const Var<S>& x, NormScope scope, int groups = 1) {
  if (x->shape.size() != 4) throw std::invalid_argument("moments: want [B,C,H,W]");
  const int B = x->shape[0], C = x->shape[1], H = x->shape[2], W = x->shape[3];
  Moments<S> m;
  switch (scope) {
    case NormScope::kChannel: {
      if (H * W < 1) throw std::invalid_argument("moments: empty spatial extent");
      m.mean = mean_spatial(x);
      auto centered = sub(x, expand_bc(m.mean, H, W));
      m.std = sqrt_of(mean_spatial(square(centered)));
      break;
    }
    case NormScope::kLayer: {
      if (C * H * W < 1) throw std::invalid_argument("moments: empty layer extent");
      m.mean = mean_chw(x);
      auto centered = sub(x, expand_b(m.mean, C, H, W));
      m.std = sqrt_of(mean_chw(square(centered)));
      break;
    }
    case NormScope::kGroup: {
      if (groups < 1 || C % groups != 0)
        throw std::invalid_argument("moments: group count must divide channels");
      auto g = reshape(x, {B * groups, C / groups, H, W});
      auto mean_g = mean_chw(g);  // [B*G]
      auto centered = sub(g, expand_b(mean_g, C / groups, H, W));
      m.mean = reshape(mean_g, {B, groups});
      m.std = reshape(sqrt_of(mean_chw(square(centered))), {B, groups});
      break;
    }
  }
  return m;
}

namespace detail {

// (x - mean) * rsqrt(var + eps) over the channel scope; returns [B,C,H,W].
template <typename S>
Var<S> normalize_channel(const Var<S>& x, S eps) {
  const int H = x->shape[2], W = x->shape[3];
  auto mu = mean_spatial(x);
  auto centered = sub(x, expand_bc(mu, H, W));
  auto var = mean_spatial(square(centered));
  auto inv = rsqrt(add_const(var, eps));
  return mul(centered, expand_bc(inv, H, W));
}

// Same over the layer scope.
template <typename S>
Var<S> normalize_layer(const Var<S>& x, S eps) {
  const int C = x->shape[1], H = x->shape[2], W = x->shape[3];
  auto mu = mean_chw(x);
  auto centered = sub(x, expand_b(mu, C, H, W));
  auto var = mean_chw(square(centered));
  auto inv = rsqrt(add_const(var, eps));
  return mul(centered, expand_b(inv, C, H, W));
}

}  // namespace detail

// Instance norm with per-channel affine parameters gamma[C], beta[C].
template <typename S>
Var<S> instance_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                     S eps = S(kNormEpsilon)) {
  if (x->shape.size() != 4) throw std::invalid_argument("instance_norm: want [B,C,H,W]");
  const int B = x->shape[0], H = x->shape[2], W = x->shape[3];
  auto xhat = detail::normalize_channel(x, eps);
  return add(mul(xhat, expand_c(gamma, B, H, W)), expand_c(beta, B, H, W));
}

template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                  S eps = S(kNormEpsilon)) {
  if (x->shape.size() != 4) throw std::invalid_argument("layer_norm: want [B,C,H,W]");
  const int B = x->shape[0], H = x->shape[2], W = x->shape[3];
  auto xhat = detail::normalize_layer(x, eps);
  return add(mul(xhat, expand_c(gamma, B, H, W)), expand_c(beta, B, H, W));
}

template <typename S>
Var<S> group_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                  int groups, S eps = S(kNormEpsilon)) {
  if (x->shape.size() != 4) throw std::invalid_argument("group_norm: want [B,C,H,W]");
  const int B = x->shape[0], C = x->shape[1], H = x->shape[2], W = x->shape[3];
  if (groups < 1 || C % groups != 0)
    throw std::invalid_argument("group_norm: group count must divide channels");
  auto g = reshape(x, {B * groups, C / groups, H, W});
  auto xhat = reshape(detail::normalize_layer(g, eps), {B, C, H, W});
  return add(mul(xhat, expand_c(gamma, B, H, W)), expand_c(beta, B, H, W));
}

namespace detail {

template <typename S>
void require_rho_in_range(const Var<S>& rho) {
  for (S v : rho->data)
    if (v < S(0) || v > S(1))
      throw std::domain_error("rho gate outside [0,1]; missed clamp");
}

// rho * in_hat + (1-rho) * ln_hat with per-channel rho[C].
template <typename S>
Var<S> blend_in_ln(const Var<S>& x, const Var<S>& rho, S eps) {
  require_rho_in_range(rho);
  const int B = x->shape[0], H = x->shape[2], W = x->shape[3];
  auto in_hat = normalize_channel(x, eps);
  auto ln_hat = normalize_layer(x, eps);
  auto rho_full = expand_c(rho, B, H, W);
  auto one_minus = add_const(scale(rho, S(-1)), S(1));
  return add(mul(in_hat, rho_full), mul(ln_hat, expand_c(one_minus, B, H, W)));
}

}  // namespace detail

// AdaLIN: affine parameters arrive per batch item, [B,C], from the
// gamma/beta MLP. rho is a learned per-channel gate in [0,1].
template <typename S>
Var<S> ada_lin(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
               const Var<S>& rho, S eps = S(kNormEpsilon)) {
  if (x->shape.size() != 4) throw std::invalid_argument("ada_lin: want [B,C,H,W]");
  if (gamma->shape.size() != 2 || beta->shape.size() != 2)
    throw std::invalid_argument("ada_lin: gamma/beta must be [B,C]");
  const int H = x->shape[2], W = x->shape[3];
  auto mixed = detail::blend_in_ln(x, rho, eps);
  return add(mul(mixed, expand_bc(gamma, H, W)), expand_bc(beta, H, W));
}

// LIN: same blend with locally learned per-channel gamma[C], beta[C].
template <typename S>
Var<S> lin_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                const Var<S>& rho, S eps = S(kNormEpsilon)) {
  if (x->shape.size() != 4) throw std::invalid_argument("lin_norm: want [B,C,H,W]");
  const int B = x->shape[0], H = x->shape[2], W = x->shape[3];
  auto mixed = detail::blend_in_ln(x, rho, eps);
  return add(mul(mixed, expand_c(gamma, B, H, W)), expand_c(beta, B, H, W));
}

// Element-wise clamp to [0,1]; applied once per optimizer step per gate.
template <typename S>
void clip_rho(std::vector<S>& values) {
  for (S& v : values) v = std::min(S(1), std::max(S(0), v));
}

// ---------------------------------------------------------------------------
// spectral normalization

// Persistent power-iteration state for one weight tensor, viewed as a
// [rows, cols] matrix with rows = leading dimension.
template <typename S>
struct SpectralState {
  std::vector<S> u;  // length rows
  std::vector<S> v;  // length cols

  void init(int rows, int cols, Rng& rng) {
    u.resize(rows);
    v.assign(cols, S(0));
    double norm_sq = 0.0;
    for (auto& e : u) {
      e = static_cast<S>(rng.normal());
      norm_sq += static_cast<double>(e) * e;
    }
    const S inv = static_cast<S>(1.0 / std::sqrt(std::max(norm_sq, 1e-30)));
    for (auto& e : u) e *= inv;
  }
};

namespace detail {

template <typename S>
void l2_normalize(std::vector<S>& x) {
  double n = 0.0;
  for (S e : x) n += static_cast<double>(e) * e;
  n = std::sqrt(n);
  if (n == 0.0) throw std::domain_error("spectral_normalize: zero weight matrix");
  const S inv = static_cast<S>(1.0 / n);
  for (S& e : x) e *= inv;
}

}  // namespace detail

// One (or more) power-iteration rounds on the matrix view of `weight`,
// updating the persistent u and v in place. Not part of the graph.
template <typename S>
void spectral_power_iterate(const Var<S>& weight, SpectralState<S>& state,
                            int power_iters = 1) {
  if (power_iters < 1) throw std::invalid_argument("spectral_power_iterate: iters >= 1");
  const int rows = weight->shape[0];
  const int cols = static_cast<int>(weight->numel()) / rows;
  if (static_cast<int>(state.u.size()) != rows ||
      static_cast<int>(state.v.size()) != cols)
    throw std::invalid_argument("spectral_power_iterate: state shape mismatch");
  const S* w = weight->data.data();
  for (int it = 0; it < power_iters; ++it) {
    // v <- normalize(W^T u)
    for (int c = 0; c < cols; ++c) {
      S acc = S(0);
      for (int r = 0; r < rows; ++r) acc += w[static_cast<std::size_t>(r) * cols + c] * state.u[r];
      state.v[c] = acc;
    }
    detail::l2_normalize(state.v);
    // u <- normalize(W v)
    for (int r = 0; r < rows; ++r) {
      const S* wr = w + static_cast<std::size_t>(r) * cols;
      S acc = S(0);
      for (int c = 0; c < cols; ++c) acc += wr[c] * state.v[c];
      state.u[r] = acc;
    }
    detail::l2_normalize(state.u);
  }
}

// Returns weight / sigma_hat with sigma_hat = u^T W v. u and v are
// treated as constants; the division is differentiated through W.
template <typename S>
Var<S> spectral_normalize(const Var<S>& weight, const SpectralState<S>& state) {
  const int rows = weight->shape[0];
  const int cols = static_cast<int>(weight->numel()) / rows;
  const auto u = state.u;  // captured snapshots
  const auto v = state.v;
  auto sigma = make_node<S>({1}, {weight}, [weight, u, v, rows, cols](Tensor<S>& o) {
    const S g = o.grad[0];
    for (int r = 0; r < rows; ++r) {
      S* wg = weight->grad.data() + static_cast<std::size_t>(r) * cols;
      const S gu = g * u[r];
      for (int c = 0; c < cols; ++c) wg[c] += gu * v[c];
    }
  });
  S acc = S(0);
  for (int r = 0; r < rows; ++r) {
    const S* wr = weight->data.data() + static_cast<std::size_t>(r) * cols;
    S dot = S(0);
    for (int c = 0; c < cols; ++c) dot += wr[c] * v[c];
    acc += state.u[r] * dot;
  }
  sigma->data[0] = acc;
  if (acc == S(0)) throw std::domain_error("spectral_normalize: zero spectral estimate");
  return div_by_scalar(weight, sigma);
}

}  // namespace ugatit
