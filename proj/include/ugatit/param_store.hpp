#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugatit/rng.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

// Named trainable tensors plus per-parameter policy flags. Iteration
// follows insertion order so optimizer sweeps are deterministic.
template <typename S>
class ParamStore {
 public:
  struct Entry {
    Var<S> value;
    bool weight_decay = false;  // conv/MLP weights only
    bool is_rho = false;        // clamped to [0,1] after each step
  };

  Var<S> add(const std::string& name, Var<S> value, bool weight_decay = false,
             bool is_rho = false) {
    if (entries_.count(name))
      throw std::invalid_argument("duplicate parameter name: " + name);
    value->requires_grad = true;
    order_.push_back(name);
    entries_[name] = Entry{value, weight_decay, is_rho};
    return value;
  }

  Entry& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::out_of_range("no such parameter: " + name);
    return it->second;
  }
  const Entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::out_of_range("no such parameter: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  void zero_grad() {
    for (const auto& name : order_) entries_[name].value->zero_grad();
  }

  void clip_rho_gates() {
    for (const auto& name : order_) {
      Entry& e = entries_[name];
      if (!e.is_rho) continue;
      for (S& v : e.value->data) v = std::min(S(1), std::max(S(0), v));
    }
  }

  // Fills a tensor with N(mean, std) draws from the given stream.
  static void fill_normal(const Var<S>& t, Rng& rng, double mean, double stddev) {
    for (S& v : t->data) v = static_cast<S>(rng.normal(mean, stddev));
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, Entry> entries_;
};

}  // namespace ugatit
