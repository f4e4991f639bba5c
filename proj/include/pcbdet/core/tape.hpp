#pragma once

#include <functional>
#include <vector>

#include "pcbdet/core/tensor.hpp"

namespace pcbdet {

// Reverse-mode tape. Primitives append one backward step per forward call;
// backward() replays the steps in reverse, which is a valid reverse
// topological order because ops are recorded in forward execution order.
//
// A null Tape* passed to a primitive means pure inference: nothing is
// recorded and outputs carry no grad buffer.
template <class S>
class Tape {
public:
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  std::size_t size() const { return steps_.size(); }

  // Seeds d(loss)/d(loss) = 1 on a scalar-shaped loss tensor and propagates
  // gradients back to every recorded input that requires grad.
  void backward(Tensor<S>& loss) {
    if (loss.size() != 1)
      throw ConfigError("backward: loss must be scalar-shaped, got " +
                        loss.shape.str());
    if (!loss.requires_grad)
      throw ConfigError("backward: loss does not require grad");
    loss.grad[0] = S(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

  void clear() { steps_.clear(); }

private:
  std::vector<std::function<void()>> steps_;
};

// Marks `out` as a differentiation participant when the tape is live and any
// input needs a gradient.
template <class S>
bool wire_grad(Tape<S>* tape, Tensor<S>& out, bool any_input_requires) {
  if (tape != nullptr && any_input_requires) {
    out.set_requires_grad(true);
    return true;
  }
  return false;
}

}  // namespace pcbdet
