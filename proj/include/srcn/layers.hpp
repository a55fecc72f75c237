#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "srcn/ops.hpp"
#include "srcn/rng.hpp"

namespace srcn {

struct NamedTensor {
  std::string name;
  TensorPtr tensor;
  bool trainable = true;
};

inline void fill_uniform(Tensor& t, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data) v = u(rng);
}

/// Glorot/Xavier uniform: U(±sqrt(6/(fan_in+fan_out))).
inline void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out,
                           std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  fill_uniform(t, -limit, limit, rng);
}

/// One convolution block: 3×3 same-padded conv, optional 2×2 max-pool,
/// relu, then batch normalization, in that order.
struct ConvBlock {
  TensorPtr kernels;  // [C_out×C_in×3×3]
  TensorPtr bias;     // [C_out]
  bool has_pool = false;
  TensorPtr bn_gamma, bn_beta;
  TensorPtr bn_running_mean, bn_running_var;
  double bn_eps = 1e-5;
  double bn_momentum = 0.99;

  static ConvBlock create(std::size_t c_in, std::size_t c_out, bool pool, std::mt19937_64& rng) {
    ConvBlock b;
    b.kernels = make_tensor({c_out, c_in, 3, 3}, true);
    glorot_uniform(*b.kernels, c_in * 9, c_out * 9, rng);
    b.bias = make_tensor({c_out}, true);
    b.has_pool = pool;
    b.bn_gamma = make_tensor({c_out}, true);
    std::fill(b.bn_gamma->data.begin(), b.bn_gamma->data.end(), 1.0);
    b.bn_beta = make_tensor({c_out}, true);
    b.bn_running_mean = make_tensor({c_out}, false);
    b.bn_running_var = make_tensor({c_out}, false);
    std::fill(b.bn_running_var->data.begin(), b.bn_running_var->data.end(), 1.0);
    return b;
  }

  TensorPtr forward(Tape* tape, const TensorPtr& x, Mode mode) const {
    // batch_norm wants an explicit batch axis; lift a bare [C×H×W] image
    const bool lifted = x->rank() == 3;
    TensorPtr y = lifted ? reshape(tape, x, {1, x->shape[0], x->shape[1], x->shape[2]}) : x;
    y = conv2d(tape, y, kernels, bias, Padding::Same);
    if (has_pool) y = max_pool2d(tape, y);
    y = relu(tape, y);
    y = batch_norm(tape, y, bn_gamma, bn_beta, bn_running_mean, bn_running_var, bn_eps,
                   bn_momentum, mode);
    if (lifted) y = reshape(tape, y, {y->shape[1], y->shape[2], y->shape[3]});
    return y;
  }

  void collect(std::vector<NamedTensor>& out, const std::string& prefix) const {
    out.push_back({prefix + ".kernels", kernels, true});
    out.push_back({prefix + ".bias", bias, true});
    out.push_back({prefix + ".bn_gamma", bn_gamma, true});
    out.push_back({prefix + ".bn_beta", bn_beta, true});
    out.push_back({prefix + ".bn_running_mean", bn_running_mean, false});
    out.push_back({prefix + ".bn_running_var", bn_running_var, false});
  }
};

/// Affine layer y = W·x + b with no activation.
struct DenseLayer {
  TensorPtr weight;  // [out×in]
  TensorPtr bias;    // [out]

  static DenseLayer create(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    DenseLayer l;
    l.weight = make_tensor({out, in}, true);
    glorot_uniform(*l.weight, in, out, rng);
    l.bias = make_tensor({out}, true);
    return l;
  }

  TensorPtr forward(Tape* tape, const TensorPtr& x) const { return linear(tape, x, weight, bias); }

  void collect(std::vector<NamedTensor>& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight, true});
    out.push_back({prefix + ".bias", bias, true});
  }
};

/// Row-major linearization: [C×H×W] -> [C·H·W] or [N×C×H×W] -> [N×C·H·W].
inline TensorPtr flatten(Tape* tape, const TensorPtr& x) {
  if (x->rank() == 4) {
    return reshape(tape, x, {x->shape[0], x->shape[1] * x->shape[2] * x->shape[3]});
  }
  return reshape(tape, x, {x->size()});
}

}  // namespace srcn
