#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "srcn/autodiff.hpp"
#include "srcn/errors.hpp"
#include "srcn/tensor.hpp"

namespace srcn {

enum class Padding { Same, Valid };

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

/// C[p×r] = A[p×q] · B[q×r]. Backward: dA += dC·Bᵀ, dB += Aᵀ·dC.
inline TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->shape[1] != b->shape[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a->shape) + " and " +
                     shape_str(b->shape));
  }
  const std::size_t p = a->shape[0], q = a->shape[1], r = b->shape[1];
  auto c = make_tensor({p, r}, a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = &c->data[i * r];
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a->data[i * q + k];
      const double* brow = &b->data[k * r];
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
  check_finite(*c, "matmul");
  if (detail::tracing(tape, a, b)) {
    tape->record([a, b, c, p, q, r] {
      if (!c->has_grad()) return;
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t k = 0; k < q; ++k) {
            double acc = 0.0;
            const double* crow = &c->grad[i * r];
            const double* brow = &b->data[k * r];
            for (std::size_t j = 0; j < r; ++j) acc += crow[j] * brow[j];
            a->grad[i * q + k] += acc;
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t k = 0; k < q; ++k) {
          for (std::size_t i = 0; i < p; ++i) {
            const double aik = a->data[i * q + k];
            const double* crow = &c->grad[i * r];
            double* brow = &b->grad[k * r];
            for (std::size_t j = 0; j < r; ++j) brow[j] += aik * crow[j];
          }
        }
      }
    });
  }
  return c;
}

// ---------------------------------------------------------------------------
// linear (affine map with the weight stored [out×in], bias optional)
// ---------------------------------------------------------------------------

/// y = x·Wᵀ + b for x of shape [N×in] (or a bare [in] vector, treated as
/// N = 1 and returned as [out]).
inline TensorPtr linear(Tape* tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  const bool vec = x->rank() == 1;
  if (w->rank() != 2) throw ShapeError("linear: weight must be 2-d, got " + shape_str(w->shape));
  const std::size_t out = w->shape[0], in = w->shape[1];
  const std::size_t n = vec ? 1 : x->shape[0];
  const std::size_t xin = vec ? x->shape[0] : x->shape[1];
  if (x->rank() > 2 || xin != in) {
    throw ShapeError("linear: input " + shape_str(x->shape) + " does not match weight " +
                     shape_str(w->shape));
  }
  if (b && (b->rank() != 1 || b->shape[0] != out)) {
    throw ShapeError("linear: bias " + shape_str(b->shape) + " does not match weight " +
                     shape_str(w->shape));
  }
  auto y = make_tensor(vec ? Shape{out} : Shape{n, out},
                       x->requires_grad || w->requires_grad || (b && b->requires_grad));
  for (std::size_t i = 0; i < n; ++i) {
    const double* xrow = &x->data[i * in];
    double* yrow = &y->data[i * out];
    for (std::size_t o = 0; o < out; ++o) {
      const double* wrow = &w->data[o * in];
      double acc = b ? b->data[o] : 0.0;
      for (std::size_t k = 0; k < in; ++k) acc += xrow[k] * wrow[k];
      yrow[o] = acc;
    }
  }
  check_finite(*y, "linear");
  if (detail::tracing(tape, x, w, b)) {
    tape->record([x, w, b, y, n, in, out] {
      if (!y->has_grad()) return;
      if (x->requires_grad) x->ensure_grad();
      if (w->requires_grad) w->ensure_grad();
      if (b && b->requires_grad) b->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const double* dyrow = &y->grad[i * out];
        const double* xrow = &x->data[i * in];
        double* dxrow = x->requires_grad ? &x->grad[i * in] : nullptr;
        for (std::size_t o = 0; o < out; ++o) {
          const double dy = dyrow[o];
          if (dy == 0.0) continue;
          if (b && b->requires_grad) b->grad[o] += dy;
          const double* wrow = &w->data[o * in];
          double* dwrow = w->requires_grad ? &w->grad[o * in] : nullptr;
          for (std::size_t k = 0; k < in; ++k) {
            if (dwrow) dwrow[k] += dy * xrow[k];
            if (dxrow) dxrow[k] += dy * wrow[k];
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

namespace detail {

struct ConvDims {
  std::size_t n, ci, h, w, co, k, pad, ho, wo;
  bool batched;
};

inline ConvDims conv_dims(const TensorPtr& input, const TensorPtr& kernels, const TensorPtr& bias,
                          Padding padding) {
  if (input->rank() != 3 && input->rank() != 4) {
    throw ShapeError("conv2d: input must be [C×H×W] or [N×C×H×W], got " + shape_str(input->shape));
  }
  if (kernels->rank() != 4 || kernels->shape[2] != kernels->shape[3]) {
    throw ShapeError("conv2d: kernels must be [Co×Ci×k×k], got " + shape_str(kernels->shape));
  }
  ConvDims d{};
  d.batched = input->rank() == 4;
  d.n = d.batched ? input->shape[0] : 1;
  d.ci = input->shape[d.batched ? 1 : 0];
  d.h = input->shape[d.batched ? 2 : 1];
  d.w = input->shape[d.batched ? 3 : 2];
  d.co = kernels->shape[0];
  d.k = kernels->shape[2];
  if (d.k % 2 == 0) throw ShapeError("conv2d: kernel size must be odd, got " + std::to_string(d.k));
  if (kernels->shape[1] != d.ci) {
    throw ShapeError("conv2d: input channels " + std::to_string(d.ci) + " do not match kernels " +
                     shape_str(kernels->shape));
  }
  if (bias->rank() != 1 || bias->shape[0] != d.co) {
    throw ShapeError("conv2d: bias " + shape_str(bias->shape) + " does not match kernels " +
                     shape_str(kernels->shape));
  }
  if (padding == Padding::Same) {
    d.pad = (d.k - 1) / 2;
    d.ho = d.h;
    d.wo = d.w;
  } else {
    d.pad = 0;
    if (d.h < d.k || d.w < d.k) {
      throw ShapeError("conv2d: kernel " + std::to_string(d.k) + "x" + std::to_string(d.k) +
                       " larger than valid input " + shape_str(input->shape));
    }
    d.ho = d.h - d.k + 1;
    d.wo = d.w - d.k + 1;
  }
  return d;
}

}  // namespace detail

/// 2-d cross-correlation (no kernel flip) with per-output-channel bias.
/// "Same" zero-pads to preserve H×W; "valid" shrinks to (H−k+1)×(W−k+1).
/// Accepts [C×H×W] or [N×C×H×W]; the output keeps the input's rank.
inline TensorPtr conv2d(Tape* tape, const TensorPtr& input, const TensorPtr& kernels,
                        const TensorPtr& bias, Padding padding) {
  const auto d = detail::conv_dims(input, kernels, bias, padding);
  auto out = make_tensor(d.batched ? Shape{d.n, d.co, d.ho, d.wo} : Shape{d.co, d.ho, d.wo},
                         input->requires_grad || kernels->requires_grad || bias->requires_grad);
  const std::size_t in_chw = d.ci * d.h * d.w, out_chw = d.co * d.ho * d.wo;
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* in_n = &input->data[n * in_chw];
    double* out_n = &out->data[n * out_chw];
    for (std::size_t co = 0; co < d.co; ++co) {
      double* out_c = out_n + co * d.ho * d.wo;
      std::fill(out_c, out_c + d.ho * d.wo, bias->data[co]);
      for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* in_c = in_n + ci * d.h * d.w;
        const double* ker = &kernels->data[((co * d.ci) + ci) * d.k * d.k];
        for (std::size_t kh = 0; kh < d.k; ++kh) {
          for (std::size_t kw = 0; kw < d.k; ++kw) {
            const double wgt = ker[kh * d.k + kw];
            if (wgt == 0.0) continue;
            const std::ptrdiff_t ih_off = static_cast<std::ptrdiff_t>(kh) - d.pad;
            const std::ptrdiff_t iw_off = static_cast<std::ptrdiff_t>(kw) - d.pad;
            const std::size_t ow_lo = iw_off < 0 ? static_cast<std::size_t>(-iw_off) : 0;
            const std::size_t ow_hi =
                std::min<std::size_t>(d.wo, static_cast<std::size_t>(
                                                static_cast<std::ptrdiff_t>(d.w) - iw_off));
            for (std::size_t oh = 0; oh < d.ho; ++oh) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh) + ih_off;
              if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
              const double* irow = in_c + static_cast<std::size_t>(ih) * d.w + iw_off;
              double* orow = out_c + oh * d.wo;
              for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wgt * irow[ow];
            }
          }
        }
      }
    }
  }
  check_finite(*out, "conv2d");
  if (detail::tracing(tape, input, kernels, bias)) {
    tape->record([input, kernels, bias, out, d] {
      if (!out->has_grad()) return;
      if (input->requires_grad) input->ensure_grad();
      if (kernels->requires_grad) kernels->ensure_grad();
      if (bias->requires_grad) bias->ensure_grad();
      const std::size_t in_chw = d.ci * d.h * d.w, out_chw = d.co * d.ho * d.wo;
      for (std::size_t n = 0; n < d.n; ++n) {
        const double* in_n = &input->data[n * in_chw];
        double* din_n = input->requires_grad ? &input->grad[n * in_chw] : nullptr;
        const double* dout_n = &out->grad[n * out_chw];
        for (std::size_t co = 0; co < d.co; ++co) {
          const double* dout_c = dout_n + co * d.ho * d.wo;
          if (bias->requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d.ho * d.wo; ++i) acc += dout_c[i];
            bias->grad[co] += acc;
          }
          for (std::size_t ci = 0; ci < d.ci; ++ci) {
            const double* in_c = in_n + ci * d.h * d.w;
            double* din_c = din_n ? din_n + ci * d.h * d.w : nullptr;
            const std::size_t kbase = ((co * d.ci) + ci) * d.k * d.k;
            for (std::size_t kh = 0; kh < d.k; ++kh) {
              for (std::size_t kw = 0; kw < d.k; ++kw) {
                const double wgt = kernels->data[kbase + kh * d.k + kw];
                const std::ptrdiff_t ih_off = static_cast<std::ptrdiff_t>(kh) - d.pad;
                const std::ptrdiff_t iw_off = static_cast<std::ptrdiff_t>(kw) - d.pad;
                const std::size_t ow_lo = iw_off < 0 ? static_cast<std::size_t>(-iw_off) : 0;
                const std::size_t ow_hi =
                    std::min<std::size_t>(d.wo, static_cast<std::size_t>(
                                                    static_cast<std::ptrdiff_t>(d.w) - iw_off));
                double kacc = 0.0;
                for (std::size_t oh = 0; oh < d.ho; ++oh) {
                  const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh) + ih_off;
                  if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
                  const double* irow = in_c + static_cast<std::size_t>(ih) * d.w + iw_off;
                  const double* dorow = dout_c + oh * d.wo;
                  if (kernels->requires_grad) {
                    for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) kacc += dorow[ow] * irow[ow];
                  }
                  if (din_c && wgt != 0.0) {
                    double* dirow = din_c + static_cast<std::size_t>(ih) * d.w + iw_off;
                    for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) dirow[ow] += wgt * dorow[ow];
                  }
                }
                if (kernels->requires_grad) kernels->grad[kbase + kh * d.k + kw] += kacc;
              }
            }
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// max_pool2d (2×2 window, stride 2, floor semantics on odd extents)
// ---------------------------------------------------------------------------

inline TensorPtr max_pool2d(Tape* tape, const TensorPtr& input) {
  if (input->rank() != 3 && input->rank() != 4) {
    throw ShapeError("max_pool2d: input must be [C×H×W] or [N×C×H×W], got " +
                     shape_str(input->shape));
  }
  const bool batched = input->rank() == 4;
  const std::size_t n = batched ? input->shape[0] : 1;
  const std::size_t c = input->shape[batched ? 1 : 0];
  const std::size_t h = input->shape[batched ? 2 : 1];
  const std::size_t w = input->shape[batched ? 3 : 2];
  if (h < 2 || w < 2) {
    throw ShapeError("max_pool2d: input " + shape_str(input->shape) + " smaller than 2x2 window");
  }
  const std::size_t ho = h / 2, wo = w / 2;
  auto out = make_tensor(batched ? Shape{n, c, ho, wo} : Shape{c, ho, wo}, input->requires_grad);
  // source index of the max for each output element; ties go to the first
  // element in row-major window order
  auto argmax = std::make_shared<std::vector<std::size_t>>(out->size());
  std::size_t oi = 0;
  for (std::size_t img = 0; img < n * c; ++img) {
    const double* plane = &input->data[img * h * w];
    const std::size_t plane_base = img * h * w;
    for (std::size_t r = 0; r < ho; ++r) {
      for (std::size_t col = 0; col < wo; ++col) {
        const std::size_t i00 = (2 * r) * w + 2 * col;
        std::size_t best = i00;
        double bv = plane[i00];
        const std::size_t cand[3] = {i00 + 1, i00 + w, i00 + w + 1};
        for (std::size_t idx : cand) {
          if (plane[idx] > bv) {
            bv = plane[idx];
            best = idx;
          }
        }
        out->data[oi] = bv;
        (*argmax)[oi] = plane_base + best;
        ++oi;
      }
    }
  }
  check_finite(*out, "max_pool2d");
  if (detail::tracing(tape, input)) {
    tape->record([input, out, argmax] {
      if (!out->has_grad()) return;
      input->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i) input->grad[(*argmax)[i]] += out->grad[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// batch normalization
// ---------------------------------------------------------------------------

/// Per-channel batch normalization over [N×C] or [N×C×H×W].
/// Train mode normalizes by the batch mean/variance (biased) and updates the
/// running stats as an exponential moving average; infer mode uses the
/// running stats. Gamma/beta apply the affine transform; running stats are
/// plain state, never differentiated.
inline TensorPtr batch_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                            const TensorPtr& beta, const TensorPtr& running_mean,
                            const TensorPtr& running_var, double eps, double momentum, Mode mode) {
  if (x->rank() != 2 && x->rank() != 4) {
    throw ShapeError("batch_norm: input must be [N×C] or [N×C×H×W], got " + shape_str(x->shape));
  }
  const std::size_t n = x->shape[0], c = x->shape[1];
  const std::size_t spatial = x->rank() == 4 ? x->shape[2] * x->shape[3] : 1;
  if (gamma->size() != c || beta->size() != c || running_mean->size() != c ||
      running_var->size() != c) {
    throw ShapeError("batch_norm: parameter size must equal channel count " + std::to_string(c));
  }
  if (mode == Mode::Train && n < 2) {
    throw ShapeError("batch_norm: train mode needs batch size >= 2, got " + std::to_string(n));
  }
  const std::size_t m = n * spatial;
  auto out = make_tensor(x->shape,
                         x->requires_grad || gamma->requires_grad || beta->requires_grad);
  auto xhat = std::make_shared<std::vector<double>>(x->size());
  auto invstd = std::make_shared<std::vector<double>>(c);

  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = &x->data[(i * c + ch) * spatial];
        for (std::size_t s = 0; s < spatial; ++s) sum += p[s];
      }
      mean = sum / static_cast<double>(m);
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = &x->data[(i * c + ch) * spatial];
        for (std::size_t s = 0; s < spatial; ++s) {
          const double d = p[s] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(m);
      running_mean->data[ch] = momentum * running_mean->data[ch] + (1.0 - momentum) * mean;
      running_var->data[ch] = momentum * running_var->data[ch] + (1.0 - momentum) * var;
    } else {
      mean = running_mean->data[ch];
      var = running_var->data[ch];
    }
    const double is = 1.0 / std::sqrt(var + eps);
    (*invstd)[ch] = is;
    const double g = gamma->data[ch], bt = beta->data[ch];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t base = (i * c + ch) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const double xh = (x->data[base + s] - mean) * is;
        (*xhat)[base + s] = xh;
        out->data[base + s] = g * xh + bt;
      }
    }
  }
  check_finite(*out, "batch_norm");
  if (detail::tracing(tape, x, gamma, beta)) {
    const bool train = mode == Mode::Train;
    tape->record([x, gamma, beta, out, xhat, invstd, n, c, spatial, m, train] {
      if (!out->has_grad()) return;
      if (x->requires_grad) x->ensure_grad();
      if (gamma->requires_grad) gamma->ensure_grad();
      if (beta->requires_grad) beta->ensure_grad();
      for (std::size_t ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dyxh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t base = (i * c + ch) * spatial;
          for (std::size_t s = 0; s < spatial; ++s) {
            const double dy = out->grad[base + s];
            sum_dy += dy;
            sum_dyxh += dy * (*xhat)[base + s];
          }
        }
        if (gamma->requires_grad) gamma->grad[ch] += sum_dyxh;
        if (beta->requires_grad) beta->grad[ch] += sum_dy;
        if (x->requires_grad) {
          const double g = gamma->data[ch], is = (*invstd)[ch];
          const double mean_dy = sum_dy / static_cast<double>(m);
          const double mean_dyxh = sum_dyxh / static_cast<double>(m);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
              const double dy = out->grad[base + s];
              // in train mode mean/var depend on x; in infer mode they are
              // constants and only the scale term survives
              if (train) {
                x->grad[base + s] +=
                    g * is * (dy - mean_dy - (*xhat)[base + s] * mean_dyxh);
              } else {
                x->grad[base + s] += g * is * dy;
              }
            }
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// elementwise suite
// ---------------------------------------------------------------------------

inline TensorPtr relu(Tape* tape, const TensorPtr& x) {
  auto y = make_tensor(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->size(); ++i) y->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
  if (detail::tracing(tape, x)) {
    tape->record([x, y] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) {
        if (x->data[i] > 0.0) x->grad[i] += y->grad[i];
      }
    });
  }
  return y;
}

inline double sigmoid_scalar(double v) {
  // split to avoid overflowing exp for very negative inputs
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline TensorPtr sigmoid(Tape* tape, const TensorPtr& x) {
  auto y = make_tensor(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->size(); ++i) y->data[i] = sigmoid_scalar(x->data[i]);
  check_finite(*y, "sigmoid");
  if (detail::tracing(tape, x)) {
    tape->record([x, y] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) {
        x->grad[i] += y->grad[i] * y->data[i] * (1.0 - y->data[i]);
      }
    });
  }
  return y;
}

inline TensorPtr tanh_op(Tape* tape, const TensorPtr& x) {
  auto y = make_tensor(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->size(); ++i) y->data[i] = std::tanh(x->data[i]);
  check_finite(*y, "tanh");
  if (detail::tracing(tape, x)) {
    tape->record([x, y] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) {
        x->grad[i] += y->grad[i] * (1.0 - y->data[i] * y->data[i]);
      }
    });
  }
  return y;
}

inline void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (a->shape != b->shape) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a->shape) + " vs " +
                     shape_str(b->shape));
  }
}

inline TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "add");
  auto c = make_tensor(a->shape, a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < a->size(); ++i) c->data[i] = a->data[i] + b->data[i];
  check_finite(*c, "add");
  if (detail::tracing(tape, a, b)) {
    tape->record([a, b, c] {
      if (!c->has_grad()) return;
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < c->size(); ++i) a->grad[i] += c->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < c->size(); ++i) b->grad[i] += c->grad[i];
      }
    });
  }
  return c;
}

/// Elementwise product (the ⊙ of the gate equations).
inline TensorPtr hadamard(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "hadamard");
  auto c = make_tensor(a->shape, a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < a->size(); ++i) c->data[i] = a->data[i] * b->data[i];
  check_finite(*c, "hadamard");
  if (detail::tracing(tape, a, b)) {
    tape->record([a, b, c] {
      if (!c->has_grad()) return;
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < c->size(); ++i) a->grad[i] += c->grad[i] * b->data[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < c->size(); ++i) b->grad[i] += c->grad[i] * a->data[i];
      }
    });
  }
  return c;
}

inline TensorPtr scale(Tape* tape, const TensorPtr& x, double k) {
  auto y = make_tensor(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->size(); ++i) y->data[i] = k * x->data[i];
  check_finite(*y, "scale");
  if (detail::tracing(tape, x)) {
    tape->record([x, y, k] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += k * y->grad[i];
    });
  }
  return y;
}

inline TensorPtr sum_all(Tape* tape, const TensorPtr& x) {
  auto y = make_tensor({1}, x->requires_grad);
  double acc = 0.0;
  for (double v : x->data) acc += v;
  y->data[0] = acc;
  check_finite(*y, "sum");
  if (detail::tracing(tape, x)) {
    tape->record([x, y] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      const double g = y->grad[0];
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += g;
    });
  }
  return y;
}

inline TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape shape) {
  if (numel(shape) != x->size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x->shape) + " as " + shape_str(shape));
  }
  auto y = make_tensor(std::move(shape), x->requires_grad);
  y->data = x->data;
  if (detail::tracing(tape, x)) {
    tape->record([x, y] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += y->grad[i];
    });
  }
  return y;
}

/// Copies rows [row0, row0+nrows) of a 2-d tensor; backward scatters back.
inline TensorPtr slice_rows(Tape* tape, const TensorPtr& x, std::size_t row0, std::size_t nrows) {
  if (x->rank() != 2 || row0 + nrows > x->shape[0]) {
    throw ShapeError("slice_rows: rows [" + std::to_string(row0) + "," +
                     std::to_string(row0 + nrows) + ") out of range for " + shape_str(x->shape));
  }
  const std::size_t cols = x->shape[1];
  auto y = make_tensor({nrows, cols}, x->requires_grad);
  std::copy(x->data.begin() + row0 * cols, x->data.begin() + (row0 + nrows) * cols,
            y->data.begin());
  if (detail::tracing(tape, x)) {
    tape->record([x, y, row0, cols] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < y->size(); ++i) x->grad[row0 * cols + i] += y->grad[i];
    });
  }
  return y;
}

/// y = x ⊙ mask for a fixed (non-differentiated) mask vector. Dropout is
/// built on this so tests can pin the mask.
inline TensorPtr apply_mask(Tape* tape, const TensorPtr& x,
                            std::shared_ptr<std::vector<double>> mask) {
  if (mask->size() != x->size()) {
    throw ShapeError("apply_mask: mask size " + std::to_string(mask->size()) +
                     " does not match tensor " + shape_str(x->shape));
  }
  auto y = make_tensor(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->size(); ++i) y->data[i] = x->data[i] * (*mask)[i];
  if (detail::tracing(tape, x)) {
    tape->record([x, y, mask] {
      if (!y->has_grad()) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += y->grad[i] * (*mask)[i];
    });
  }
  return y;
}

/// Inverted dropout: train mode zeroes each element independently with
/// probability p and scales survivors by 1/(1−p); infer mode is the
/// identity.
inline TensorPtr dropout(Tape* tape, const TensorPtr& x, double p, Mode mode,
                         std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1), got " + std::to_string(p));
  if (mode == Mode::Infer || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x->size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& m : *mask) m = u(rng) < p ? 0.0 : keep_scale;
  return apply_mask(tape, x, std::move(mask));
}

}  // namespace srcn
