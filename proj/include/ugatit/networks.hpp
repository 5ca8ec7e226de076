#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ugatit/cam.hpp"
#include "ugatit/nn_ops.hpp"
#include "ugatit/normalization.hpp"
#include "ugatit/param_store.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

inline constexpr double kInitStd = 0.02;

struct NetConfig {
  int img_size = 32;   // full scale uses 256
  int ch = 16;         // base channel width, full scale 64
  int n_res = 4;       // residual blocks per encoder/decoder stage
  int n_downsample = 2;
  bool light_mode = false;  // gamma/beta MLP fed from pooled features
  bool use_cam = true;      // ablation switch: identity attention when off

  void validate() const {
    if (img_size < 4 || img_size % 4 != 0)
      throw std::invalid_argument("NetConfig: img_size must be a multiple of 4");
    if (ch < 4) throw std::invalid_argument("NetConfig: ch must be >= 4");
    if (n_res < 1) throw std::invalid_argument("NetConfig: n_res must be >= 1");
    if (n_downsample < 1) throw std::invalid_argument("NetConfig: n_downsample must be >= 1");
  }

  int bottleneck_channels() const { return ch << n_downsample; }
  int bottleneck_size() const { return img_size >> n_downsample; }
};

enum class DiscScale { kLocal, kGlobal };

// ---------------------------------------------------------------------------
// layer building blocks

template <typename S>
struct ConvLayer {
  Var<S> w;  // [Cout, Cin, K, K]
  Var<S> b;  // [Cout]
  int stride = 1;
  int pad = 0;
  PadMode pad_mode = PadMode::kZero;
};

template <typename S>
ConvLayer<S> build_conv(ParamStore<S>& params, const std::string& name, int cin,
                        int cout, int k, int stride, int pad, PadMode mode,
                        Rng& rng, bool use_bias = true) {
  ConvLayer<S> layer;
  layer.w = params.add(name + ".w", make_tensor<S>({cout, cin, k, k}), true);
  // instance norm cancels a per-channel shift, so convs feeding it
  // carry no bias (the gradient would be identically zero)
  if (use_bias) layer.b = params.add(name + ".b", make_tensor<S>({cout}));
  layer.stride = stride;
  layer.pad = pad;
  layer.pad_mode = mode;
  ParamStore<S>::fill_normal(layer.w, rng, 0.0, kInitStd);
  return layer;
}

template <typename S>
Var<S> apply_conv(const ConvLayer<S>& layer, const Var<S>& x) {
  return conv2d(x, layer.w, layer.b, layer.stride, layer.pad, layer.pad_mode);
}

// Per-channel affine for instance/layer norm layers; gamma starts at 1.
template <typename S>
struct NormAffine {
  Var<S> gamma;
  Var<S> beta;
};

template <typename S>
NormAffine<S> build_affine(ParamStore<S>& params, const std::string& name, int c) {
  NormAffine<S> a;
  a.gamma = params.add(name + ".gamma", make_tensor<S>({c}));
  a.beta = params.add(name + ".beta", make_tensor<S>({c}));
  std::fill(a.gamma->data.begin(), a.gamma->data.end(), S(1));
  return a;
}

// Encoder residual block: reflect-padded convs with instance norm.
template <typename S>
struct EncResBlock {
  ConvLayer<S> conv1, conv2;
  NormAffine<S> norm1, norm2;
};

// Decoder residual block: AdaLIN with MLP-supplied gamma/beta and a
// learned per-channel rho gate per norm layer (initialized to 1).
template <typename S>
struct AdaResBlock {
  ConvLayer<S> conv1, conv2;
  Var<S> rho1, rho2;  // [C]
};

// Decoder up-sampling block: nearest 2x + stride-1 conv + LIN (rho 0).
template <typename S>
struct UpBlock {
  ConvLayer<S> conv;
  NormAffine<S> affine;
  Var<S> rho;  // [C]
};

// ---------------------------------------------------------------------------
// generator

template <typename S>
struct GeneratorNet {
  NetConfig cfg;
  ParamStore<S> params;

  ConvLayer<S> stem;
  NormAffine<S> stem_norm;
  std::vector<ConvLayer<S>> down;
  std::vector<NormAffine<S>> down_norm;
  std::vector<EncResBlock<S>> enc_res;
  CamModule<S> cam;

  // gamma/beta MLP: two hidden layers then separate gamma/beta heads
  Var<S> mlp1_w, mlp1_b, mlp2_w, mlp2_b;
  Var<S> gamma_w, gamma_b, beta_w, beta_b;

  std::vector<AdaResBlock<S>> dec_res;
  std::vector<UpBlock<S>> up;
  ConvLayer<S> out_conv;
};

template <typename S>
std::unique_ptr<GeneratorNet<S>> build_generator(const NetConfig& cfg,
                                                 std::uint64_t seed) {
  cfg.validate();
  auto net = std::make_unique<GeneratorNet<S>>();
  net->cfg = cfg;
  Rng rng(seed);
  auto& p = net->params;

  net->stem = build_conv(p, "enc.stem", 3, cfg.ch, 7, 1, 3, PadMode::kReflect, rng, false);
  net->stem_norm = build_affine(p, "enc.stem.in", cfg.ch);
  int c = cfg.ch;
  for (int i = 0; i < cfg.n_downsample; ++i) {
    // top/left-only pad keeps the K3/S2 halving conv integral-sized
    net->down.push_back(build_conv(p, "enc.down" + std::to_string(i), c, 2 * c,
                                   3, 2, 0, PadMode::kZero, rng, false));
    net->down_norm.push_back(build_affine(p, "enc.down" + std::to_string(i) + ".in", 2 * c));
    c *= 2;
  }
  for (int i = 0; i < cfg.n_res; ++i) {
    const std::string base = "enc.res" + std::to_string(i);
    EncResBlock<S> blk;
    blk.conv1 = build_conv(p, base + ".conv1", c, c, 3, 1, 1, PadMode::kReflect, rng, false);
    blk.norm1 = build_affine(p, base + ".in1", c);
    blk.conv2 = build_conv(p, base + ".conv2", c, c, 3, 1, 1, PadMode::kReflect, rng, false);
    blk.norm2 = build_affine(p, base + ".in2", c);
    net->enc_res.push_back(std::move(blk));
  }

  if (cfg.use_cam)
    net->cam = build_cam(p, "cam", c, Activation::kRelu, rng, kInitStd);
  else
    net->cam.enabled = false;

  const int spatial = cfg.bottleneck_size();
  const int mlp_in = cfg.light_mode ? c : c * spatial * spatial;
  auto add_fc = [&](const std::string& name, int in, int out, Var<S>& w, Var<S>& b) {
    w = p.add(name + ".w", make_tensor<S>({out, in}), true);
    b = p.add(name + ".b", make_tensor<S>({out}));
    ParamStore<S>::fill_normal(w, rng, 0.0, kInitStd);
  };
  add_fc("mlp.fc1", mlp_in, c, net->mlp1_w, net->mlp1_b);
  add_fc("mlp.fc2", c, c, net->mlp2_w, net->mlp2_b);
  add_fc("mlp.gamma", c, c, net->gamma_w, net->gamma_b);
  add_fc("mlp.beta", c, c, net->beta_w, net->beta_b);

  for (int i = 0; i < cfg.n_res; ++i) {
    const std::string base = "dec.res" + std::to_string(i);
    AdaResBlock<S> blk;
    blk.conv1 = build_conv(p, base + ".conv1", c, c, 3, 1, 1, PadMode::kReflect, rng);
    blk.rho1 = p.add(base + ".rho1", make_tensor<S>({c}), false, true);
    blk.conv2 = build_conv(p, base + ".conv2", c, c, 3, 1, 1, PadMode::kReflect, rng);
    blk.rho2 = p.add(base + ".rho2", make_tensor<S>({c}), false, true);
    std::fill(blk.rho1->data.begin(), blk.rho1->data.end(), S(1));
    std::fill(blk.rho2->data.begin(), blk.rho2->data.end(), S(1));
    net->dec_res.push_back(std::move(blk));
  }
  for (int i = 0; i < cfg.n_downsample; ++i) {
    const std::string base = "dec.up" + std::to_string(i);
    UpBlock<S> blk;
    blk.conv = build_conv(p, base + ".conv", c, c / 2, 3, 1, 1, PadMode::kZero, rng);
    blk.affine = build_affine(p, base + ".lin", c / 2);
    blk.rho = p.add(base + ".rho", make_tensor<S>({c / 2}), false, true);
    // rho starts at 0 in up-sampling blocks (pure LN path)
    net->up.push_back(std::move(blk));
    c /= 2;
  }
  net->out_conv = build_conv(p, "dec.out", c, 3, 7, 1, 3, PadMode::kReflect, rng);
  return net;
}

template <typename S>
struct GeneratorOutput {
  Var<S> image;          // [B,3,H,W] in (-1,1)
  CamLogits<S> logits;   // raw avg/max logits, [B,1] each
  Var<S> heatmap;        // [B,1,h/4,w/4], detached, for visualization
};

template <typename S>
GeneratorOutput<S> generator_forward(GeneratorNet<S>& net, const Var<S>& x) {
  const NetConfig& cfg = net.cfg;
  if (x->shape.size() != 4 || x->shape[1] != 3 ||
      x->shape[2] != cfg.img_size || x->shape[3] != cfg.img_size)
    throw std::invalid_argument("generator_forward: wrong input resolution");
  const int B = x->shape[0];

  auto y = relu(instance_norm(apply_conv(net.stem, x), net.stem_norm.gamma,
                              net.stem_norm.beta));
  for (std::size_t i = 0; i < net.down.size(); ++i)
    y = relu(instance_norm(apply_conv(net.down[i], zero_pad2d(y, 1, 1, 0, 0)),
                           net.down_norm[i].gamma, net.down_norm[i].beta));
  for (const auto& blk : net.enc_res) {
    auto h = relu(instance_norm(apply_conv(blk.conv1, y), blk.norm1.gamma,
                                blk.norm1.beta));
    h = instance_norm(apply_conv(blk.conv2, h), blk.norm2.gamma, blk.norm2.beta);
    y = add(y, h);
  }

  GeneratorOutput<S> out;
  Var<S> att = y;
  if (net.cam.enabled) {
    out.logits = cam_logits(y, net.cam);
    att = cam_attend(y, net.cam);
  } else {
    out.logits.avg = make_tensor<S>({B, 1});
    out.logits.max = make_tensor<S>({B, 1});
  }
  out.heatmap = cam_heatmap(att);

  const int c = cfg.bottleneck_channels();
  const int spatial = cfg.bottleneck_size();
  Var<S> mlp_in = cfg.light_mode
                      ? global_pool(att, PoolMode::kAvg)
                      : reshape(att, {B, c * spatial * spatial});
  auto h1 = relu(fully_connected(mlp_in, net.mlp1_w, net.mlp1_b));
  auto h2 = relu(fully_connected(h1, net.mlp2_w, net.mlp2_b));
  auto gamma = fully_connected(h2, net.gamma_w, net.gamma_b);  // [B,c]
  auto beta = fully_connected(h2, net.beta_w, net.beta_b);

  y = att;
  for (const auto& blk : net.dec_res) {
    auto h = relu(ada_lin(apply_conv(blk.conv1, y), gamma, beta, blk.rho1));
    h = ada_lin(apply_conv(blk.conv2, h), gamma, beta, blk.rho2);
    y = add(y, h);
  }
  for (const auto& blk : net.up) {
    y = apply_conv(blk.conv, upsample_nearest2x(y));
    y = relu(lin_norm(y, blk.affine.gamma, blk.affine.beta, blk.rho));
  }
  out.image = tanh_act(apply_conv(net.out_conv, y));
  return out;
}

// ---------------------------------------------------------------------------
// discriminator

template <typename S>
struct SpectralConv {
  ConvLayer<S> conv;
  SpectralState<S> sn;
};

template <typename S>
struct DiscriminatorNet {
  NetConfig cfg;
  DiscScale scale = DiscScale::kLocal;
  ParamStore<S> params;

  std::vector<SpectralConv<S>> stack;  // stride-2 downs then one stride-1
  CamModule<S> cam;                    // fuse conv carries no SN
  SpectralConv<S> classifier;
};

// Downsample count, clamped so at least a 4x4 map reaches the stride-1
// tail (the nominal 70x70 / 286x286 stacks assume 256px inputs).
inline int disc_downsample_count(int img_size, DiscScale scale) {
  const int nominal = scale == DiscScale::kLocal ? 3 : 5;
  int d = 0, s = img_size;
  while (d < nominal && s % 2 == 0 && s / 2 >= 4) {
    s /= 2;
    ++d;
  }
  if (d == 0) throw std::invalid_argument("discriminator: input too small");
  return d;
}

template <typename S>
std::unique_ptr<DiscriminatorNet<S>> build_discriminator(const NetConfig& cfg,
                                                         DiscScale scale,
                                                         std::uint64_t seed) {
  cfg.validate();
  auto net = std::make_unique<DiscriminatorNet<S>>();
  net->cfg = cfg;
  net->scale = scale;
  Rng rng(seed);
  auto& p = net->params;

  const int n_down = disc_downsample_count(cfg.img_size, scale);
  int cin = 3, cout = cfg.ch;
  for (int i = 0; i < n_down; ++i) {
    SpectralConv<S> sc;
    sc.conv = build_conv(p, "down" + std::to_string(i), cin, cout, 4, 2, 1,
                         PadMode::kZero, rng);
    sc.sn.init(cout, cin * 16, rng);
    spectral_power_iterate(sc.conv.w, sc.sn);
    net->stack.push_back(std::move(sc));
    cin = cout;
    cout *= 2;
  }
  {
    SpectralConv<S> sc;
    sc.conv = build_conv(p, "tail", cin, cout, 4, 1, 1, PadMode::kZero, rng);
    sc.sn.init(cout, cin * 16, rng);
    spectral_power_iterate(sc.conv.w, sc.sn);
    net->stack.push_back(std::move(sc));
    cin = cout;
  }

  if (cfg.use_cam)
    net->cam = build_cam(p, "cam", cin, Activation::kLeakyRelu, rng, kInitStd);
  else
    net->cam.enabled = false;

  net->classifier.conv =
      build_conv(p, "classifier", cin, 1, 4, 1, 1, PadMode::kZero, rng);
  net->classifier.sn.init(1, cin * 16, rng);
  spectral_power_iterate(net->classifier.conv.w, net->classifier.sn);
  return net;
}

// One power-iteration round on every spectral-normalized weight; call
// once per training step from the single training thread.
template <typename S>
void refresh_spectral(DiscriminatorNet<S>& net, int power_iters = 1) {
  for (auto& sc : net.stack) spectral_power_iterate(sc.conv.w, sc.sn, power_iters);
  spectral_power_iterate(net.classifier.conv.w, net.classifier.sn, power_iters);
}

template <typename S>
struct DiscriminatorOutput {
  Var<S> patch;         // [B,1,h',w'] raw scores
  CamLogits<S> logits;  // raw avg/max logits
  Var<S> heatmap;       // detached visualization map
};

template <typename S>
DiscriminatorOutput<S> discriminator_forward(DiscriminatorNet<S>& net,
                                             const Var<S>& x) {
  if (x->shape.size() != 4 || x->shape[1] != 3 ||
      x->shape[2] != net.cfg.img_size || x->shape[3] != net.cfg.img_size)
    throw std::invalid_argument("discriminator_forward: wrong input resolution");
  const int B = x->shape[0];
  const S slope = S(0.2);

  Var<S> y = x;
  for (auto& sc : net.stack) {
    auto w = spectral_normalize(sc.conv.w, sc.sn);
    y = leaky_relu(conv2d(y, w, sc.conv.b, sc.conv.stride, sc.conv.pad), slope);
  }

  DiscriminatorOutput<S> out;
  Var<S> att = y;
  if (net.cam.enabled) {
    out.logits = cam_logits(y, net.cam);
    att = cam_attend(y, net.cam);
  } else {
    out.logits.avg = make_tensor<S>({B, 1});
    out.logits.max = make_tensor<S>({B, 1});
  }
  out.heatmap = cam_heatmap(att);

  auto wc = spectral_normalize(net.classifier.conv.w, net.classifier.sn);
  out.patch = conv2d(att, wc, net.classifier.conv.b, 1, net.classifier.conv.pad);
  return out;
}

}  // namespace ugatit
