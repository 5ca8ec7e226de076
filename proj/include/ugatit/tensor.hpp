#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace ugatit {

// Dense N-d tensor node in a dynamically recorded computation graph.
// Intermediate nodes keep shared_ptr references to their parents plus a
// backward closure; calling backward() on a scalar loss walks the graph
// in reverse topological order and accumulates gradients additively.
template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> data;
  std::vector<S> grad;  // sized lazily, same length as data
  bool requires_grad = false;

  std::vector<std::shared_ptr<Tensor<S>>> parents;
  std::function<void(Tensor<S>&)> backward_fn;  // reads this->grad

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel(), S(0));
  }

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }

  void zero_grad() { grad.assign(data.size(), S(0)); }

  bool is_scalar() const { return numel() == 1; }

  S item() const {
    if (!is_scalar()) throw std::invalid_argument("item() on non-scalar tensor");
    return data[0];
  }
};

template <typename S>
using Var = std::shared_ptr<Tensor<S>>;

template <typename S>
Var<S> make_tensor(std::vector<int> shape) {
  return std::make_shared<Tensor<S>>(std::move(shape));
}

template <typename S>
Var<S> make_tensor(std::vector<int> shape, std::vector<S> data) {
  auto t = make_tensor<S>(std::move(shape));
  if (data.size() != t->numel())
    throw std::invalid_argument("tensor data length does not match shape");
  t->data = std::move(data);
  return t;
}

template <typename S>
Var<S> make_scalar(S value) {
  return make_tensor<S>({1}, {value});
}

template <typename S>
inline bool same_shape(const Var<S>& a, const Var<S>& b) {
  return a->shape == b->shape;
}

template <typename S>
inline void require_same_shape(const Var<S>& a, const Var<S>& b,
                               const char* what) {
  if (!same_shape(a, b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

template <typename S>
bool all_finite(const Tensor<S>& t) {
  for (S v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

template <typename S>
void assert_finite(const Var<S>& t, const std::string& what) {
  if (!all_finite(*t))
    throw std::runtime_error("non-finite value in " + what);
}

// Creates an intermediate node whose requires_grad is the OR of its parents'.
template <typename S>
Var<S> make_node(std::vector<int> shape, std::vector<Var<S>> parents,
                 std::function<void(Tensor<S>&)> backward_fn) {
  auto t = make_tensor<S>(std::move(shape));
  for (const auto& p : parents) t->requires_grad |= p->requires_grad;
  if (t->requires_grad) {
    t->parents = std::move(parents);
    t->backward_fn = std::move(backward_fn);
  }
  return t;
}

// Cuts the graph: same data, no history, no gradient.
template <typename S>
Var<S> detach(const Var<S>& x) {
  auto t = make_tensor<S>(x->shape);
  t->data = x->data;
  return t;
}

// ---------------------------------------------------------------------------
// backward

template <typename S>
void backward(const Var<S>& loss) {
  if (!loss->is_scalar()) throw std::invalid_argument("backward: loss must be scalar");
  if (!loss->requires_grad) return;

  // iterative post-order DFS -> topological order
  std::vector<Tensor<S>*> topo;
  std::unordered_set<Tensor<S>*> visited;
  struct Frame {
    Tensor<S>* node;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.get(), 0});
  visited.insert(loss.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->parents.size()) {
      Tensor<S>* child = f.node->parents[f.next_child++].get();
      if (child->requires_grad && visited.insert(child).second)
        stack.push_back({child, 0});
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  for (Tensor<S>* n : topo) n->ensure_grad();
  loss->grad[0] = S(1);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Tensor<S>* n = *it;
    if (n->backward_fn) {
      for (auto& p : n->parents)
        if (p->requires_grad) p->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

// ---------------------------------------------------------------------------
// elementwise ops

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a, b, "add");
  auto out = make_node<S>(a->shape, {a, b}, [a, b](Tensor<S>& o) {
    if (a->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i) b->grad[i] += o.grad[i];
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] + b->data[i];
  return out;
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a, b, "sub");
  auto out = make_node<S>(a->shape, {a, b}, [a, b](Tensor<S>& o) {
    if (a->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i) b->grad[i] -= o.grad[i];
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] - b->data[i];
  return out;
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a, b, "mul");
  auto out = make_node<S>(a->shape, {a, b}, [a, b](Tensor<S>& o) {
    if (a->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        a->grad[i] += o.grad[i] * b->data[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        b->grad[i] += o.grad[i] * a->data[i];
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] * b->data[i];
  return out;
}

template <typename S>
Var<S> scale(const Var<S>& a, S c) {
  auto out = make_node<S>(a->shape, {a}, [a, c](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i] * c;
  });
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] * c;
  return out;
}

template <typename S>
Var<S> add_const(const Var<S>& a, S c) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i];
  });
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] + c;
  return out;
}

template <typename S>
Var<S> square(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a->grad[i] += o.grad[i] * S(2) * a->data[i];
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] * a->data[i];
  return out;
}

template <typename S>
Var<S> abs_val(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const S x = a->data[i];
      const S s = x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0));
      a->grad[i] += o.grad[i] * s;
    }
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = std::abs(a->data[i]);
  return out;
}

// 1/sqrt(x); domain x > 0
template <typename S>
Var<S> rsqrt(const Var<S>& a) {
  auto out = make_node<S>(a->shape, {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const S y = o.data[i];
      a->grad[i] += o.grad[i] * S(-0.5) * y * y * y;
    }
  });
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = S(1) / std::sqrt(a->data[i]);
  return out;
}

// ---------------------------------------------------------------------------
// reductions

// Mean over every element -> scalar [1].
template <typename S>
Var<S> mean_all(const Var<S>& a) {
  const S inv = S(1) / static_cast<S>(a->numel());
  auto out = make_node<S>({1}, {a}, [a, inv](Tensor<S>& o) {
    const S g = o.grad[0] * inv;
    for (std::size_t i = 0; i < a->data.size(); ++i) a->grad[i] += g;
  });
  S acc = S(0);
  for (S v : a->data) acc += v;
  out->data[0] = acc * inv;
  return out;
}

template <typename S>
Var<S> sum_all(const Var<S>& a) {
  auto out = make_node<S>({1}, {a}, [a](Tensor<S>& o) {
    const S g = o.grad[0];
    for (std::size_t i = 0; i < a->data.size(); ++i) a->grad[i] += g;
  });
  S acc = S(0);
  for (S v : a->data) acc += v;
  out->data[0] = acc;
  return out;
}

// [B,C,H,W] -> [B,C]: mean over the spatial dims.
template <typename S>
Var<S> mean_spatial(const Var<S>& a) {
  if (a->shape.size() != 4) throw std::invalid_argument("mean_spatial: want 4-d tensor");
  const int B = a->shape[0], C = a->shape[1];
  const std::size_t hw = static_cast<std::size_t>(a->shape[2]) * a->shape[3];
  const S inv = S(1) / static_cast<S>(hw);
  auto out = make_node<S>({B, C}, {a}, [a, hw, inv](Tensor<S>& o) {
    for (std::size_t bc = 0; bc < o.data.size(); ++bc) {
      const S g = o.grad[bc] * inv;
      S* ag = a->grad.data() + bc * hw;
      for (std::size_t i = 0; i < hw; ++i) ag[i] += g;
    }
  });
  for (std::size_t bc = 0; bc < out->data.size(); ++bc) {
    const S* ad = a->data.data() + bc * hw;
    S acc = S(0);
    for (std::size_t i = 0; i < hw; ++i) acc += ad[i];
    out->data[bc] = acc * inv;
  }
  return out;
}

// [B,C,H,W] -> [B]: mean over channels and spatial dims.
template <typename S>
Var<S> mean_chw(const Var<S>& a) {
  if (a->shape.size() != 4) throw std::invalid_argument("mean_chw: want 4-d tensor");
  const int B = a->shape[0];
  const std::size_t chw =
      static_cast<std::size_t>(a->shape[1]) * a->shape[2] * a->shape[3];
  const S inv = S(1) / static_cast<S>(chw);
  auto out = make_node<S>({B}, {a}, [a, chw, inv](Tensor<S>& o) {
    for (std::size_t b = 0; b < o.data.size(); ++b) {
      const S g = o.grad[b] * inv;
      S* ag = a->grad.data() + b * chw;
      for (std::size_t i = 0; i < chw; ++i) ag[i] += g;
    }
  });
  for (std::size_t b = 0; b < out->data.size(); ++b) {
    const S* ad = a->data.data() + b * chw;
    S acc = S(0);
    for (std::size_t i = 0; i < chw; ++i) acc += ad[i];
    out->data[b] = acc * inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// broadcast expansions (backward = sum over the broadcast dims)

// [B,C] -> [B,C,H,W]
template <typename S>
Var<S> expand_bc(const Var<S>& v, int H, int W) {
  if (v->shape.size() != 2) throw std::invalid_argument("expand_bc: want [B,C]");
  const int B = v->shape[0], C = v->shape[1];
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  auto out = make_node<S>({B, C, H, W}, {v}, [v, hw](Tensor<S>& o) {
    for (std::size_t bc = 0; bc < v->data.size(); ++bc) {
      const S* og = o.grad.data() + bc * hw;
      S acc = S(0);
      for (std::size_t i = 0; i < hw; ++i) acc += og[i];
      v->grad[bc] += acc;
    }
  });
  for (std::size_t bc = 0; bc < v->data.size(); ++bc) {
    S* od = out->data.data() + bc * hw;
    const S val = v->data[bc];
    for (std::size_t i = 0; i < hw; ++i) od[i] = val;
  }
  return out;
}

// [B] -> [B,C,H,W]
template <typename S>
Var<S> expand_b(const Var<S>& v, int C, int H, int W) {
  if (v->shape.size() != 1) throw std::invalid_argument("expand_b: want [B]");
  const int B = v->shape[0];
  const std::size_t chw = static_cast<std::size_t>(C) * H * W;
  auto out = make_node<S>({B, C, H, W}, {v, }, [v, chw](Tensor<S>& o) {
    for (std::size_t b = 0; b < v->data.size(); ++b) {
      const S* og = o.grad.data() + b * chw;
      S acc = S(0);
      for (std::size_t i = 0; i < chw; ++i) acc += og[i];
      v->grad[b] += acc;
    }
  });
  for (std::size_t b = 0; b < v->data.size(); ++b) {
    S* od = out->data.data() + b * chw;
    const S val = v->data[b];
    for (std::size_t i = 0; i < chw; ++i) od[i] = val;
  }
  return out;
}

// [C] -> [B,C,H,W]
template <typename S>
Var<S> expand_c(const Var<S>& v, int B, int H, int W) {
  if (v->shape.size() != 1) throw std::invalid_argument("expand_c: want [C]");
  const int C = v->shape[0];
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  auto out = make_node<S>({B, C, H, W}, {v}, [v, B, hw](Tensor<S>& o) {
    const int C2 = v->shape[0];
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C2; ++c) {
        const S* og = o.grad.data() + (static_cast<std::size_t>(b) * C2 + c) * hw;
        S acc = S(0);
        for (std::size_t i = 0; i < hw; ++i) acc += og[i];
        v->grad[c] += acc;
      }
  });
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      S* od = out->data.data() + (static_cast<std::size_t>(b) * C + c) * hw;
      const S val = v->data[c];
      for (std::size_t i = 0; i < hw; ++i) od[i] = val;
    }
  return out;
}

// ---------------------------------------------------------------------------
// structural ops

template <typename S>
Var<S> reshape(const Var<S>& a, std::vector<int> new_shape) {
  std::size_t n = 1;
  for (int d : new_shape) n *= static_cast<std::size_t>(d);
  if (n != a->numel()) throw std::invalid_argument("reshape: element count mismatch");
  auto out = make_node<S>(std::move(new_shape), {a}, [a](Tensor<S>& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i];
  });
  out->data = a->data;
  return out;
}

// Channel concatenation of two [B,C?,H,W] tensors.
template <typename S>
Var<S> concat_channels(const Var<S>& a, const Var<S>& b) {
  if (a->shape.size() != 4 || b->shape.size() != 4)
    throw std::invalid_argument("concat_channels: want 4-d tensors");
  if (a->shape[0] != b->shape[0] || a->shape[2] != b->shape[2] ||
      a->shape[3] != b->shape[3])
    throw std::invalid_argument("concat_channels: incompatible shapes");
  const int B = a->shape[0], Ca = a->shape[1], Cb = b->shape[1];
  const std::size_t hw = static_cast<std::size_t>(a->shape[2]) * a->shape[3];
  const std::size_t a_stride = Ca * hw, b_stride = Cb * hw;
  auto out = make_node<S>({B, Ca + Cb, a->shape[2], a->shape[3]}, {a, b},
                          [a, b, B, a_stride, b_stride](Tensor<S>& o) {
    const std::size_t o_stride = a_stride + b_stride;
    for (int bi = 0; bi < B; ++bi) {
      const S* og = o.grad.data() + bi * o_stride;
      if (a->requires_grad) {
        S* ag = a->grad.data() + bi * a_stride;
        for (std::size_t i = 0; i < a_stride; ++i) ag[i] += og[i];
      }
      if (b->requires_grad) {
        S* bg = b->grad.data() + bi * b_stride;
        for (std::size_t i = 0; i < b_stride; ++i) bg[i] += og[i + a_stride];
      }
    }
  });
  const std::size_t o_stride = a_stride + b_stride;
  for (int bi = 0; bi < B; ++bi) {
    S* od = out->data.data() + bi * o_stride;
    std::copy_n(a->data.data() + bi * a_stride, a_stride, od);
    std::copy_n(b->data.data() + bi * b_stride, b_stride, od + a_stride);
  }
  return out;
}

// out = x / s where s is a scalar graph node (used by spectral norm).
template <typename S>
Var<S> div_by_scalar(const Var<S>& x, const Var<S>& s) {
  if (!s->is_scalar()) throw std::invalid_argument("div_by_scalar: divisor must be scalar");
  const S sv = s->data[0];
  if (sv == S(0)) throw std::domain_error("div_by_scalar: zero divisor");
  auto out = make_node<S>(x->shape, {x, s}, [x, s](Tensor<S>& o) {
    const S inv = S(1) / s->data[0];
    if (x->requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        x->grad[i] += o.grad[i] * inv;
    if (s->requires_grad) {
      S acc = S(0);
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        acc += o.grad[i] * o.data[i];
      s->grad[0] -= acc * inv;
    }
  });
  const S inv = S(1) / sv;
  for (std::size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = x->data[i] * inv;
  return out;
}

}  // namespace ugatit
