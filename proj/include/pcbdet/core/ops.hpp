#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcbdet/core/tape.hpp"
#include "pcbdet/core/tensor.hpp"

// Tensor primitives. Every op here:
//   - uses a fixed loop nest (no reassociation), so repeated calls on equal
//     inputs are bit-identical;
//   - validates shapes up front (ConfigError) and output values afterwards
//     (NumericError on NaN/Inf);
//   - when given a live tape and an input that requires grad, records exactly
//     one backward step that accumulates into the inputs' grad buffers.

namespace pcbdet {

namespace detail {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Valid output range [lo, hi] such that the input coordinate
// o*stride + koff - pad stays inside [0, in).
inline void valid_range(int in, int out, int stride, int pad, int koff,
                        int& lo, int& hi) {
  const int a = pad - koff;
  lo = a <= 0 ? 0 : (a + stride - 1) / stride;
  const int b = in - 1 + pad - koff;
  hi = b < 0 ? -1 : std::min(out - 1, b / stride);
}

template <class S>
S stable_softplus(S z) {  // ln(1 + e^z)
  if (z > S(0)) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace detail

template <class S>
S stable_sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

// ---------------------------------------------------------------------------
// conv2d: square kernel, symmetric padding, grouped.
// weight shape (c_out, c_in/groups, k, k); bias optional, shape (1,c_out,1,1).
// ---------------------------------------------------------------------------
template <class S>
TensorPtr<S> conv2d(const TensorPtr<S>& x, const TensorPtr<S>& w,
                    const TensorPtr<S>& bias, int stride, int padding,
                    int groups, Tape<S>* tape) {
  const Shape4 xs = x->shape, ws = w->shape;
  if (stride < 1 || padding < 0 || groups < 1)
    throw ConfigError("conv2d: stride=" + std::to_string(stride) +
                      " padding=" + std::to_string(padding) +
                      " groups=" + std::to_string(groups));
  if (ws.h != ws.w)
    throw ConfigError("conv2d: kernel must be square, got " + ws.str());
  if (xs.c % groups != 0 || ws.n % groups != 0)
    throw ConfigError("conv2d: channels not divisible by groups: input " +
                      xs.str() + ", weight " + ws.str() + ", groups " +
                      std::to_string(groups));
  if (ws.c != xs.c / groups)
    throw ConfigError("conv2d: weight expects c_in/groups=" +
                      std::to_string(ws.c) + " but input has " + xs.str() +
                      " with groups " + std::to_string(groups));
  if (bias && !(bias->shape == Shape4{1, ws.n, 1, 1}))
    throw ConfigError("conv2d: bias shape " + bias->shape.str() +
                      " != 1x" + std::to_string(ws.n) + "x1x1");
  const int k = ws.h;
  const int oh = detail::conv_out_dim(xs.h, k, stride, padding);
  const int ow = detail::conv_out_dim(xs.w, k, stride, padding);
  if (oh <= 0 || ow <= 0)
    throw ConfigError("conv2d: output would be " + std::to_string(oh) + "x" +
                      std::to_string(ow) + " for input " + xs.str() +
                      " kernel " + std::to_string(k));

  auto out = make_tensor<S>(xs.n, ws.n, oh, ow);
  const int cin_g = xs.c / groups, cout_g = ws.n / groups;

  auto run_forward = [=](const Tensor<S>& xin, const Tensor<S>& wt,
                         const Tensor<S>* b, Tensor<S>& o) {
    for (int in = 0; in < xs.n; ++in)
      for (int g = 0; g < groups; ++g)
        for (int oc = g * cout_g; oc < (g + 1) * cout_g; ++oc) {
          S* obase = &o.data[o.idx(in, oc, 0, 0)];
          const S bval = b ? b->data[oc] : S(0);
          std::fill(obase, obase + static_cast<std::size_t>(oh) * ow, bval);
          for (int ic = g * cin_g; ic < (g + 1) * cin_g; ++ic)
            for (int kh = 0; kh < k; ++kh) {
              int ylo, yhi;
              detail::valid_range(xs.h, oh, stride, padding, kh, ylo, yhi);
              for (int kw = 0; kw < k; ++kw) {
                int xlo, xhi;
                detail::valid_range(xs.w, ow, stride, padding, kw, xlo, xhi);
                const S wv = wt.data[wt.idx(oc, ic - g * cin_g, kh, kw)];
                for (int oy = ylo; oy <= yhi; ++oy) {
                  const int iy = oy * stride + kh - padding;
                  const S* xrow = &xin.data[xin.idx(in, ic, iy, 0)];
                  S* orow = obase + static_cast<std::size_t>(oy) * ow;
                  for (int ox = xlo; ox <= xhi; ++ox)
                    orow[ox] += wv * xrow[ox * stride + kw - padding];
                }
              }
            }
        }
  };
  run_forward(*x, *w, bias ? bias.get() : nullptr, *out);
  assert_finite(*out, "conv2d");

  const bool any = x->requires_grad || w->requires_grad ||
                   (bias && bias->requires_grad);
  if (wire_grad(tape, *out, any)) {
    tape->record([=]() {
      const Tensor<S>& go = *out;
      if (bias && bias->requires_grad) {
        for (int oc = 0; oc < ws.n; ++oc) {
          S acc = 0;
          for (int in = 0; in < xs.n; ++in) {
            const S* row = &go.grad[go.idx(in, oc, 0, 0)];
            for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i)
              acc += row[i];
          }
          bias->grad[oc] += acc;
        }
      }
      if (!x->requires_grad && !w->requires_grad) return;
      for (int g = 0; g < groups; ++g)
        for (int oc = g * cout_g; oc < (g + 1) * cout_g; ++oc)
          for (int ic = g * cin_g; ic < (g + 1) * cin_g; ++ic)
            for (int kh = 0; kh < k; ++kh) {
              int ylo, yhi;
              detail::valid_range(xs.h, oh, stride, padding, kh, ylo, yhi);
              for (int kw = 0; kw < k; ++kw) {
                int xlo, xhi;
                detail::valid_range(xs.w, ow, stride, padding, kw, xlo, xhi);
                const S wv = w->data[w->idx(oc, ic - g * cin_g, kh, kw)];
                S wacc = 0;
                for (int in = 0; in < xs.n; ++in)
                  for (int oy = ylo; oy <= yhi; ++oy) {
                    const int iy = oy * stride + kh - padding;
                    const S* grow = &go.grad[go.idx(in, oc, oy, 0)];
                    const S* xrow = &x->data[x->idx(in, ic, iy, 0)];
                    S* dxrow = x->requires_grad
                                   ? &x->grad[x->idx(in, ic, iy, 0)]
                                   : nullptr;
                    if (w->requires_grad && dxrow) {
                      for (int ox = xlo; ox <= xhi; ++ox) {
                        const int ix = ox * stride + kw - padding;
                        wacc += xrow[ix] * grow[ox];
                        dxrow[ix] += wv * grow[ox];
                      }
                    } else if (w->requires_grad) {
                      for (int ox = xlo; ox <= xhi; ++ox)
                        wacc += xrow[ox * stride + kw - padding] * grow[ox];
                    } else if (dxrow) {
                      for (int ox = xlo; ox <= xhi; ++ox)
                        dxrow[ox * stride + kw - padding] += wv * grow[ox];
                    }
                  }
                if (w->requires_grad)
                  w->grad[w->idx(oc, ic - g * cin_g, kh, kw)] += wacc;
              }
            }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// pool2d: max or average, square window, no padding.
// Max pooling records argmax indices for the backward pass.
// ---------------------------------------------------------------------------
enum class PoolKind { kMax, kAvg };

template <class S>
TensorPtr<S> pool2d(const TensorPtr<S>& x, PoolKind kind, int k, int stride,
                    Tape<S>* tape) {
  const Shape4 xs = x->shape;
  if (k < 1 || stride < 1)
    throw ConfigError("pool2d: k=" + std::to_string(k) +
                      " stride=" + std::to_string(stride));
  if (xs.h < k || xs.w < k)
    throw ConfigError("pool2d: window " + std::to_string(k) +
                      " larger than input " + xs.str());
  const int oh = (xs.h - k) / stride + 1;
  const int ow = (xs.w - k) / stride + 1;
  auto out = make_tensor<S>(xs.n, xs.c, oh, ow);

  auto argmax = std::make_shared<std::vector<std::uint32_t>>();
  if (kind == PoolKind::kMax) argmax->resize(out->size());

  const S inv = S(1) / (S(k) * S(k));
  std::size_t oi = 0;
  for (int in = 0; in < xs.n; ++in)
    for (int c = 0; c < xs.c; ++c)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox, ++oi) {
          if (kind == PoolKind::kMax) {
            std::size_t best = x->idx(in, c, oy * stride, ox * stride);
            S bv = x->data[best];
            for (int kh = 0; kh < k; ++kh)
              for (int kw = 0; kw < k; ++kw) {
                const std::size_t ii =
                    x->idx(in, c, oy * stride + kh, ox * stride + kw);
                if (x->data[ii] > bv) {
                  bv = x->data[ii];
                  best = ii;
                }
              }
            out->data[oi] = bv;
            (*argmax)[oi] = static_cast<std::uint32_t>(best);
          } else {
            S acc = 0;
            for (int kh = 0; kh < k; ++kh) {
              const S* row = &x->data[x->idx(in, c, oy * stride + kh,
                                             ox * stride)];
              for (int kw = 0; kw < k; ++kw) acc += row[kw];
            }
            out->data[oi] = acc * inv;
          }
        }
  assert_finite(*out, "pool2d");

  if (wire_grad(tape, *out, x->requires_grad)) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      if (kind == PoolKind::kMax) {
        for (std::size_t i = 0; i < out->size(); ++i)
          x->grad[(*argmax)[i]] += out->grad[i];
      } else {
        std::size_t i = 0;
        for (int in = 0; in < xs.n; ++in)
          for (int c = 0; c < xs.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
              for (int ox = 0; ox < ow; ++ox, ++i) {
                const S g = out->grad[i] * inv;
                for (int kh = 0; kh < k; ++kh) {
                  S* row = &x->grad[x->idx(in, c, oy * stride + kh,
                                           ox * stride)];
                  for (int kw = 0; kw < k; ++kw) row[kw] += g;
                }
              }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// upsample_nearest: each output pixel equals its source pixel.
// ---------------------------------------------------------------------------
template <class S>
TensorPtr<S> upsample_nearest(const TensorPtr<S>& x, int factor,
                              Tape<S>* tape) {
  if (factor < 1)
    throw ConfigError("upsample_nearest: factor must be >= 1, got " +
                      std::to_string(factor));
  const Shape4 xs = x->shape;
  auto out = make_tensor<S>(xs.n, xs.c, xs.h * factor, xs.w * factor);
  for (int in = 0; in < xs.n; ++in)
    for (int c = 0; c < xs.c; ++c)
      for (int oy = 0; oy < xs.h * factor; ++oy) {
        const S* xrow = &x->data[x->idx(in, c, oy / factor, 0)];
        S* orow = &out->data[out->idx(in, c, oy, 0)];
        for (int ox = 0; ox < xs.w * factor; ++ox) orow[ox] = xrow[ox / factor];
      }
  assert_finite(*out, "upsample_nearest");

  if (wire_grad(tape, *out, x->requires_grad)) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      for (int in = 0; in < xs.n; ++in)
        for (int c = 0; c < xs.c; ++c)
          for (int oy = 0; oy < xs.h * factor; ++oy) {
            S* xrow = &x->grad[x->idx(in, c, oy / factor, 0)];
            const S* orow = &out->grad[out->idx(in, c, oy, 0)];
            for (int ox = 0; ox < xs.w * factor; ++ox)
              xrow[ox / factor] += orow[ox];
          }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------
enum class Activation { kRelu, kSigmoid };

template <class S>
TensorPtr<S> activation(const TensorPtr<S>& x, Activation kind, Tape<S>* tape) {
  auto out = make_tensor<S>(x->shape);
  if (kind == Activation::kRelu) {
    for (std::size_t i = 0; i < x->size(); ++i)
      out->data[i] = x->data[i] > S(0) ? x->data[i] : S(0);
  } else {
    for (std::size_t i = 0; i < x->size(); ++i)
      out->data[i] = stable_sigmoid(x->data[i]);
  }
  assert_finite(*out, "activation");

  if (wire_grad(tape, *out, x->requires_grad)) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      if (kind == Activation::kRelu) {
        for (std::size_t i = 0; i < x->size(); ++i)
          if (x->data[i] > S(0)) x->grad[i] += out->grad[i];
      } else {
        for (std::size_t i = 0; i < x->size(); ++i) {
          const S s = out->data[i];
          x->grad[i] += s * (S(1) - s) * out->grad[i];
        }
      }
    });
  }
  return out;
}

template <class S>
TensorPtr<S> relu(const TensorPtr<S>& x, Tape<S>* tape) {
  return activation(x, Activation::kRelu, tape);
}
template <class S>
TensorPtr<S> sigmoid(const TensorPtr<S>& x, Tape<S>* tape) {
  return activation(x, Activation::kSigmoid, tape);
}

// ---------------------------------------------------------------------------
// elementwise combinators
// ---------------------------------------------------------------------------
template <class S>
void check_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (!(a.shape == b.shape))
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape.str() +
                      " vs " + b.shape.str());
}

template <class S>
TensorPtr<S> add(const TensorPtr<S>& a, const TensorPtr<S>& b, Tape<S>* tape) {
  check_same_shape(*a, *b, "add");
  auto out = make_tensor<S>(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i)
    out->data[i] = a->data[i] + b->data[i];
  assert_finite(*out, "add");
  if (wire_grad(tape, *out, a->requires_grad || b->requires_grad)) {
    tape->record([=]() {
      if (a->requires_grad)
        for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
    });
  }
  return out;
}

template <class S>
TensorPtr<S> mul(const TensorPtr<S>& a, const TensorPtr<S>& b, Tape<S>* tape) {
  check_same_shape(*a, *b, "mul");
  auto out = make_tensor<S>(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i)
    out->data[i] = a->data[i] * b->data[i];
  assert_finite(*out, "mul");
  if (wire_grad(tape, *out, a->requires_grad || b->requires_grad)) {
    tape->record([=]() {
      if (a->requires_grad)
        for (std::size_t i = 0; i < a->size(); ++i)
          a->grad[i] += b->data[i] * out->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < b->size(); ++i)
          b->grad[i] += a->data[i] * out->grad[i];
    });
  }
  return out;
}

// x * g where g has shape (n, c, 1, 1): per-(sample, channel) gate.
template <class S>
TensorPtr<S> mul_channel(const TensorPtr<S>& x, const TensorPtr<S>& g,
                         Tape<S>* tape) {
  const Shape4 xs = x->shape;
  if (!(g->shape == Shape4{xs.n, xs.c, 1, 1}))
    throw ConfigError("mul_channel: gate shape " + g->shape.str() +
                      " does not broadcast over " + xs.str());
  auto out = make_tensor<S>(xs);
  const std::size_t hw = static_cast<std::size_t>(xs.h) * xs.w;
  for (int in = 0; in < xs.n; ++in)
    for (int c = 0; c < xs.c; ++c) {
      const S gv = g->data[g->idx(in, c, 0, 0)];
      const S* xr = &x->data[x->idx(in, c, 0, 0)];
      S* orr = &out->data[out->idx(in, c, 0, 0)];
      for (std::size_t i = 0; i < hw; ++i) orr[i] = xr[i] * gv;
    }
  assert_finite(*out, "mul_channel");
  if (wire_grad(tape, *out, x->requires_grad || g->requires_grad)) {
    tape->record([=]() {
      const std::size_t hw2 = static_cast<std::size_t>(xs.h) * xs.w;
      for (int in = 0; in < xs.n; ++in)
        for (int c = 0; c < xs.c; ++c) {
          const std::size_t base = x->idx(in, c, 0, 0);
          const S gv = g->data[g->idx(in, c, 0, 0)];
          if (x->requires_grad)
            for (std::size_t i = 0; i < hw2; ++i)
              x->grad[base + i] += gv * out->grad[base + i];
          if (g->requires_grad) {
            S acc = 0;
            for (std::size_t i = 0; i < hw2; ++i)
              acc += x->data[base + i] * out->grad[base + i];
            g->grad[g->idx(in, c, 0, 0)] += acc;
          }
        }
    });
  }
  return out;
}

template <class S>
TensorPtr<S> scale(const TensorPtr<S>& x, S k, Tape<S>* tape) {
  auto out = make_tensor<S>(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = x->data[i] * k;
  assert_finite(*out, "scale");
  if (wire_grad(tape, *out, x->requires_grad)) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      for (std::size_t i = 0; i < x->size(); ++i)
        x->grad[i] += k * out->grad[i];
    });
  }
  return out;
}

// y = x * scale[c] + shift[c]; the training-time stand-in for normalization
// (no running statistics, deterministic at batch size 1).
template <class S>
TensorPtr<S> channel_affine(const TensorPtr<S>& x, const TensorPtr<S>& sc,
                            const TensorPtr<S>& sh, Tape<S>* tape) {
  const Shape4 xs = x->shape;
  const Shape4 want{1, xs.c, 1, 1};
  if (!(sc->shape == want) || !(sh->shape == want))
    throw ConfigError("channel_affine: scale/shift must be " + want.str());
  auto out = make_tensor<S>(xs);
  const std::size_t hw = static_cast<std::size_t>(xs.h) * xs.w;
  for (int in = 0; in < xs.n; ++in)
    for (int c = 0; c < xs.c; ++c) {
      const S a = sc->data[c], b = sh->data[c];
      const S* xr = &x->data[x->idx(in, c, 0, 0)];
      S* orr = &out->data[out->idx(in, c, 0, 0)];
      for (std::size_t i = 0; i < hw; ++i) orr[i] = xr[i] * a + b;
    }
  assert_finite(*out, "channel_affine");
  const bool any =
      x->requires_grad || sc->requires_grad || sh->requires_grad;
  if (wire_grad(tape, *out, any)) {
    tape->record([=]() {
      const std::size_t hw2 = static_cast<std::size_t>(xs.h) * xs.w;
      for (int c = 0; c < xs.c; ++c) {
        S dsc = 0, dsh = 0;
        const S a = sc->data[c];
        for (int in = 0; in < xs.n; ++in) {
          const std::size_t base = x->idx(in, c, 0, 0);
          for (std::size_t i = 0; i < hw2; ++i) {
            const S g = out->grad[base + i];
            if (x->requires_grad) x->grad[base + i] += a * g;
            dsc += x->data[base + i] * g;
            dsh += g;
          }
        }
        if (sc->requires_grad) sc->grad[c] += dsc;
        if (sh->requires_grad) sh->grad[c] += dsh;
      }
    });
  }
  return out;
}

// mean over the spatial dims -> (n, c, 1, 1)
template <class S>
TensorPtr<S> spatial_mean(const TensorPtr<S>& x, Tape<S>* tape) {
  const Shape4 xs = x->shape;
  auto out = make_tensor<S>(xs.n, xs.c, 1, 1);
  const std::size_t hw = static_cast<std::size_t>(xs.h) * xs.w;
  const S inv = S(1) / static_cast<S>(hw);
  for (int in = 0; in < xs.n; ++in)
    for (int c = 0; c < xs.c; ++c) {
      const S* xr = &x->data[x->idx(in, c, 0, 0)];
      S acc = 0;
      for (std::size_t i = 0; i < hw; ++i) acc += xr[i];
      out->data[out->idx(in, c, 0, 0)] = acc * inv;
    }
  assert_finite(*out, "spatial_mean");
  if (wire_grad(tape, *out, x->requires_grad)) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      const std::size_t hw2 = static_cast<std::size_t>(xs.h) * xs.w;
      for (int in = 0; in < xs.n; ++in)
        for (int c = 0; c < xs.c; ++c) {
          const S g = out->grad[out->idx(in, c, 0, 0)] * inv;
          S* xr = &x->grad[x->idx(in, c, 0, 0)];
          for (std::size_t i = 0; i < hw2; ++i) xr[i] += g;
        }
    });
  }
  return out;
}

// sum of all elements -> scalar-shaped (1,1,1,1) tensor
template <class S>
TensorPtr<S> sum_all(const TensorPtr<S>& x, Tape<S>* tape) {
  auto out = make_tensor<S>(1, 1, 1, 1);
  S acc = 0;
  for (std::size_t i = 0; i < x->size(); ++i) acc += x->data[i];
  out->data[0] = acc;
  assert_finite(*out, "sum_all");
  if (wire_grad(tape, *out, x->requires_grad)) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      const S g = out->grad[0];
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += g;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// fused loss kernels. Targets/masks are plain data tensors (no grad).
// ---------------------------------------------------------------------------

// Unnormalized focal loss sum over all masked entries:
//   p_t = y ? sigmoid(x) : 1 - sigmoid(x)
//   FL  = alpha_t * (1 - p_t)^gamma * (-ln p_t),  alpha_t = y ? alpha : 1
// Cross-entropy terms use softplus for stability. Caller divides by the
// positive-anchor count.
template <class S>
TensorPtr<S> focal_loss_sum(const TensorPtr<S>& logits,
                            const TensorPtr<S>& targets,
                            const TensorPtr<S>& mask, S alpha, S gamma,
                            Tape<S>* tape) {
  check_same_shape(*logits, *targets, "focal_loss_sum");
  check_same_shape(*logits, *mask, "focal_loss_sum");
  if (gamma < S(0) || alpha <= S(0) || alpha > S(1))
    throw ConfigError("focal_loss_sum: need gamma >= 0 and alpha in (0,1]");
  auto out = make_tensor<S>(1, 1, 1, 1);
  S acc = 0;
  for (std::size_t i = 0; i < logits->size(); ++i) {
    const S m = mask->data[i];
    if (m == S(0)) continue;
    const S x = logits->data[i];
    const bool pos = targets->data[i] > S(0.5);
    const S ce = pos ? detail::stable_softplus(-x)   // -ln p
                     : detail::stable_softplus(x);   // -ln (1-p)
    const S pt = pos ? stable_sigmoid(x) : stable_sigmoid(-x);
    const S at = pos ? alpha : S(1);
    acc += m * at * std::pow(S(1) - pt, gamma) * ce;
  }
  out->data[0] = acc;
  assert_finite(*out, "focal_loss_sum");

  if (wire_grad(tape, *out, logits->requires_grad)) {
    tape->record([=]() {
      if (!logits->requires_grad) return;
      const S g0 = out->grad[0];
      for (std::size_t i = 0; i < logits->size(); ++i) {
        const S m = mask->data[i];
        if (m == S(0)) continue;
        const S x = logits->data[i];
        const S p = stable_sigmoid(x);
        S d;
        if (targets->data[i] > S(0.5)) {
          const S lnp = -detail::stable_softplus(-x);
          d = alpha * std::pow(S(1) - p, gamma) *
              (gamma * p * lnp - (S(1) - p));
        } else {
          const S ln1p = -detail::stable_softplus(x);
          d = std::pow(p, gamma) * (p - gamma * (S(1) - p) * ln1p);
        }
        logits->grad[i] += m * d * g0;
      }
    });
  }
  return out;
}

// Unnormalized smooth-L1 (Huber) sum over masked entries:
//   d = pred - target;  |d| < beta ? 0.5 d^2/beta : |d| - 0.5 beta
template <class S>
TensorPtr<S> smooth_l1_sum(const TensorPtr<S>& pred,
                           const TensorPtr<S>& target,
                           const TensorPtr<S>& mask, S beta, Tape<S>* tape) {
  check_same_shape(*pred, *target, "smooth_l1_sum");
  check_same_shape(*pred, *mask, "smooth_l1_sum");
  if (beta <= S(0)) throw ConfigError("smooth_l1_sum: beta must be > 0");
  auto out = make_tensor<S>(1, 1, 1, 1);
  S acc = 0;
  for (std::size_t i = 0; i < pred->size(); ++i) {
    const S m = mask->data[i];
    if (m == S(0)) continue;
    const S d = pred->data[i] - target->data[i];
    const S a = std::abs(d);
    acc += m * (a < beta ? S(0.5) * d * d / beta : a - S(0.5) * beta);
  }
  out->data[0] = acc;
  assert_finite(*out, "smooth_l1_sum");

  if (wire_grad(tape, *out, pred->requires_grad)) {
    tape->record([=]() {
      if (!pred->requires_grad) return;
      const S g0 = out->grad[0];
      for (std::size_t i = 0; i < pred->size(); ++i) {
        const S m = mask->data[i];
        if (m == S(0)) continue;
        const S d = pred->data[i] - target->data[i];
        const S dd = std::abs(d) < beta ? d / beta : (d > S(0) ? S(1) : S(-1));
        pred->grad[i] += m * dd * g0;
      }
    });
  }
  return out;
}

}  // namespace pcbdet
