#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ugatit/networks.hpp"
#include "ugatit/trainer.hpp"

namespace ugatit {

// Named tensor payload: name, dims, little-endian 32-bit floats.
struct TensorRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

// "UGIT" magic, format version, NetConfig echo, iteration, records,
// trailing CRC32 over everything before it.
struct CheckpointData {
  NetConfig cfg;
  std::uint64_t iteration = 0;
  std::vector<TensorRecord> records;
};

std::vector<std::uint8_t> serialize_checkpoint(const CheckpointData& data);
CheckpointData deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// session <-> record list

template <typename S>
CheckpointData collect_checkpoint(TrainSession<S>& session) {
  CheckpointData data;
  data.cfg = session.cfg();
  data.iteration = session.iteration();

  auto tensor_record = [](const std::string& name, const std::vector<int>& shape,
                          auto begin, auto end) {
    TensorRecord r;
    r.name = name;
    for (int d : shape) r.dims.push_back(static_cast<std::uint32_t>(d));
    for (auto it = begin; it != end; ++it) r.data.push_back(static_cast<float>(*it));
    return r;
  };

  session.for_each_store([&](const std::string& prefix, ParamStore<S>& store) {
    for (const auto& name : store.names()) {
      const auto& t = store.at(name).value;
      data.records.push_back(tensor_record(prefix + "/" + name, t->shape,
                                           t->data.begin(), t->data.end()));
    }
  });
  session.for_each_spectral([&](const std::string& name, SpectralState<S>& sn) {
    data.records.push_back(tensor_record(name + "/u",
                                         {static_cast<int>(sn.u.size())},
                                         sn.u.begin(), sn.u.end()));
    data.records.push_back(tensor_record(name + "/v",
                                         {static_cast<int>(sn.v.size())},
                                         sn.v.begin(), sn.v.end()));
  });
  session.for_each_optimizer([&](const std::string& prefix, AdamOptimizer<S>& opt) {
    // moments mirror the store's parameter list; zeros before first step
    ParamStore<S>* store = nullptr;
    session.for_each_store([&](const std::string& p, ParamStore<S>& s) {
      if (p == prefix) store = &s;
    });
    for (const auto& name : store->names()) {
      const std::size_t n = store->at(name).value->data.size();
      auto& m = opt.moments_m()[name];
      auto& v = opt.moments_v()[name];
      if (m.size() != n) m.assign(n, 0.0);
      if (v.size() != n) v.assign(n, 0.0);
      data.records.push_back(tensor_record(prefix + "/adam_m/" + name,
                                           {static_cast<int>(n)}, m.begin(), m.end()));
      data.records.push_back(tensor_record(prefix + "/adam_v/" + name,
                                           {static_cast<int>(n)}, v.begin(), v.end()));
    }
    TensorRecord t;
    t.name = prefix + "/adam_t";
    t.dims = {1};
    t.data = {static_cast<float>(opt.step_count())};
    data.records.push_back(std::move(t));
  });
  return data;
}

template <typename S>
void restore_checkpoint(TrainSession<S>& session, const CheckpointData& data) {
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& r : data.records) {
    if (!by_name.emplace(r.name, &r).second)
      throw std::runtime_error("checkpoint: duplicate record " + r.name);
  }
  auto take = [&](const std::string& name, std::size_t expect) -> const TensorRecord* {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: missing record " + name);
    const TensorRecord* r = it->second;
    if (r->data.size() != expect)
      throw std::runtime_error("checkpoint: size mismatch for " + name);
    by_name.erase(it);
    return r;
  };

  session.set_iteration(data.iteration);
  session.for_each_store([&](const std::string& prefix, ParamStore<S>& store) {
    for (const auto& name : store.names()) {
      auto& t = store.at(name).value;
      const TensorRecord* r = take(prefix + "/" + name, t->data.size());
      for (std::size_t i = 0; i < t->data.size(); ++i)
        t->data[i] = static_cast<S>(r->data[i]);
    }
  });
  session.for_each_spectral([&](const std::string& name, SpectralState<S>& sn) {
    const TensorRecord* u = take(name + "/u", sn.u.size());
    const TensorRecord* v = take(name + "/v", sn.v.size());
    for (std::size_t i = 0; i < sn.u.size(); ++i) sn.u[i] = static_cast<S>(u->data[i]);
    for (std::size_t i = 0; i < sn.v.size(); ++i) sn.v[i] = static_cast<S>(v->data[i]);
  });
  session.for_each_optimizer([&](const std::string& prefix, AdamOptimizer<S>& opt) {
    ParamStore<S>* store = nullptr;
    session.for_each_store([&](const std::string& p, ParamStore<S>& s) {
      if (p == prefix) store = &s;
    });
    for (const auto& name : store->names()) {
      const std::size_t n = store->at(name).value->data.size();
      const TensorRecord* m = take(prefix + "/adam_m/" + name, n);
      const TensorRecord* v = take(prefix + "/adam_v/" + name, n);
      opt.moments_m()[name].assign(m->data.begin(), m->data.end());
      opt.moments_v()[name].assign(v->data.begin(), v->data.end());
    }
    const TensorRecord* t = take(prefix + "/adam_t", 1);
    opt.set_step_count(static_cast<std::uint64_t>(t->data[0]));
  });
  if (!by_name.empty())
    throw std::runtime_error("checkpoint: unexpected record " +
                             by_name.begin()->first);
}

}  // namespace ugatit
