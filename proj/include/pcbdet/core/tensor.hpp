#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pcbdet/common.hpp"

namespace pcbdet {

// Shape of a rank-4 feature map: batch x channels x height x width.
struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }
};

// Dense rank-4 tensor, row-major (n, c, h, w). Templated on scalar so the
// production path runs float while gradient checking runs double.
//
// `grad` is allocated only for tensors participating in differentiation;
// when present it always matches `data` in length.
template <class S>
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape4 s) : shape(s), data(s.count(), S(0)) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      throw ConfigError("tensor shape has negative dim: " + s.str());
  }
  Tensor(int n, int c, int h, int w) : Tensor(Shape4{n, c, h, w}) {}

  Shape4 shape;
  std::vector<S> data;
  std::vector<S> grad;  // empty unless requires_grad
  bool requires_grad = false;

  std::size_t size() const { return data.size(); }

  std::size_t idx(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) *
               shape.w + x;
  }
  S& at(int n, int c, int y, int x) { return data[idx(n, c, y, x)]; }
  S at(int n, int c, int y, int x) const { return data[idx(n, c, y, x)]; }

  void set_requires_grad(bool on) {
    requires_grad = on;
    if (on)
      grad.assign(data.size(), S(0));
    else
      grad.clear();
  }
  void zero_grad() {
    if (requires_grad) grad.assign(data.size(), S(0));
  }
};

template <class S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <class S>
TensorPtr<S> make_tensor(Shape4 s) {
  return std::make_shared<Tensor<S>>(s);
}
template <class S>
TensorPtr<S> make_tensor(int n, int c, int h, int w) {
  return std::make_shared<Tensor<S>>(n, c, h, w);
}

// Every primitive runs its output through this; NaN/Inf is a contract
// violation, not a value.
template <class S>
void assert_finite(const Tensor<S>& t, const char* op) {
  for (const S v : t.data) {
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericError(std::string(op) + ": non-finite value in output of shape " +
                         t.shape.str());
  }
}

}  // namespace pcbdet
