#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcbdet/core/rng.hpp"
#include "pcbdet/core/tensor.hpp"

namespace pcbdet {

// Named parameter registry. Iteration is deterministic (lexicographic by
// name). Frozen parameters never receive gradients or optimizer updates.
template <class S>
class ParamStore {
public:
  struct Entry {
    TensorPtr<S> tensor;
    bool frozen = false;
  };

  TensorPtr<S> add(const std::string& name, Shape4 shape) {
    if (entries_.count(name))
      throw ConfigError("ParamStore: duplicate parameter name '" + name + "'");
    auto t = make_tensor<S>(shape);
    t->set_requires_grad(true);
    entries_[name] = Entry{t, false};
    return t;
  }

  bool contains(const std::string& name) const {
    return entries_.count(name) != 0;
  }

  TensorPtr<S> get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ConfigError("ParamStore: no parameter named '" + name + "'");
    return it->second.tensor;
  }

  void set_frozen(const std::string& name, bool frozen) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ConfigError("ParamStore: no parameter named '" + name + "'");
    it->second.frozen = frozen;
    // Frozen leaves opt out of autodiff entirely; backward stops at them.
    it->second.tensor->set_requires_grad(!frozen);
  }

  bool is_frozen(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ConfigError("ParamStore: no parameter named '" + name + "'");
    return it->second.frozen;
  }

  void zero_grad() {
    for (auto& [name, e] : entries_) e.tensor->zero_grad();
  }

  // Exact element count; trainable_only skips frozen entries.
  long long count_params(bool trainable_only) const {
    long long total = 0;
    for (const auto& [name, e] : entries_) {
      if (trainable_only && e.frozen) continue;
      total += static_cast<long long>(e.tensor->size());
    }
    return total;
  }
  double mparams(bool trainable_only = false) const {
    return static_cast<double>(count_params(trainable_only)) / 1e6;
  }

  // Deep copy: fresh tensors (fresh grad buffers), same data and freeze mask.
  ParamStore clone() const {
    ParamStore out;
    for (const auto& [name, e] : entries_) {
      auto t = std::make_shared<Tensor<S>>(*e.tensor);
      t->set_requires_grad(!e.frozen);
      out.entries_[name] = Entry{t, e.frozen};
    }
    return out;
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }

private:
  std::map<std::string, Entry> entries_;
};

// Initializers. Each parameter draws from an RNG stream derived from
// (seed, name), so initialization is independent of creation order.
template <class S>
void init_normal(ParamStore<S>& params, const std::string& name, double mean,
                 double stddev, std::uint64_t seed) {
  auto t = params.get(name);
  Rng rng = Rng::for_stream(seed, fnv1a64(name));
  for (auto& v : t->data) v = static_cast<S>(rng.normal(mean, stddev));
}

template <class S>
void init_he(ParamStore<S>& params, const std::string& name,
             std::uint64_t seed) {
  auto t = params.get(name);
  const Shape4 s = t->shape;
  const double fan_in = static_cast<double>(s.c) * s.h * s.w;
  init_normal(params, name, 0.0, std::sqrt(2.0 / std::max(1.0, fan_in)), seed);
}

template <class S>
void init_const(ParamStore<S>& params, const std::string& name, double value) {
  auto t = params.get(name);
  for (auto& v : t->data) v = static_cast<S>(value);
}

}  // namespace pcbdet
