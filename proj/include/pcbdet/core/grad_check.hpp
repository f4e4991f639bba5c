#pragma once

#include <functional>

#include "pcbdet/core/param_store.hpp"
#include "pcbdet/core/tape.hpp"

namespace pcbdet {

// Central finite-difference verification of reverse-mode gradients.
//
// `f` evaluates a scalar loss over the store's parameters, recording on the
// given tape when one is supplied. Returns the max over checked coordinates of
//   |analytic - central_difference| / max(1, |central_difference|).
// Checks every coordinate of every unfrozen parameter when the total count is
// <= max_coords, otherwise a deterministic subsample.
//
// Meaningful tolerances require S = double (the 64-bit test mode); float
// round-off swamps the difference quotient.
template <class S>
double grad_check(
    const std::function<TensorPtr<S>(ParamStore<S>&, Tape<S>*)>& f,
    ParamStore<S>& point, double eps, std::size_t max_coords = 4096,
    std::uint64_t sample_seed = 0x5eedu) {
  if (eps <= 0) throw ConfigError("grad_check: eps must be > 0");

  point.zero_grad();
  Tape<S> tape;
  auto loss = f(point, &tape);
  if (!std::isfinite(static_cast<double>(loss->data[0])))
    throw NumericError("grad_check: non-finite loss at evaluation point");
  tape.backward(*loss);

  // Collect (tensor, coord) pairs for unfrozen parameters.
  std::vector<std::pair<TensorPtr<S>, std::size_t>> coords;
  for (const auto& [name, e] : point) {
    if (e.frozen) continue;
    for (std::size_t i = 0; i < e.tensor->size(); ++i)
      coords.emplace_back(e.tensor, i);
  }
  if (coords.size() > max_coords) {
    Rng rng(sample_seed);
    rng.shuffle(coords);
    coords.resize(max_coords);
  }

  double worst = 0.0;
  for (auto& [t, i] : coords) {
    const S saved = t->data[i];
    const double analytic = static_cast<double>(t->grad[i]);

    t->data[i] = saved + static_cast<S>(eps);
    Tape<S> dummy;
    const double up = static_cast<double>(f(point, nullptr)->data[0]);
    t->data[i] = saved - static_cast<S>(eps);
    const double dn = static_cast<double>(f(point, nullptr)->data[0]);
    t->data[i] = saved;

    const double fd = (up - dn) / (2.0 * eps);
    const double rel = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace pcbdet
