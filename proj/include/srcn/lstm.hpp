#pragma once

#include <random>
#include <string>
#include <vector>

#include "srcn/layers.hpp"
#include "srcn/ops.hpp"

namespace srcn {

/// Weights and biases of one memory cell: input-to-gate matrices [q×p],
/// hidden-to-gate matrices [q×q], gate biases [q], for the input, forget,
/// and output gates plus the cell-input candidate.
struct LstmCellParams {
  std::size_t input_size = 0;   // p
  std::size_t hidden_size = 0;  // q
  TensorPtr w_xi, w_xf, w_xo, w_xc;
  TensorPtr w_hi, w_hf, w_ho, w_hc;
  TensorPtr b_i, b_f, b_o, b_c;

  static LstmCellParams create(std::size_t p, std::size_t q, std::mt19937_64& rng) {
    LstmCellParams c;
    c.input_size = p;
    c.hidden_size = q;
    const double lim = 1.0 / std::sqrt(static_cast<double>(q));
    auto mk = [&](std::size_t rows, std::size_t cols) {
      auto t = make_tensor({rows, cols}, true);
      fill_uniform(*t, -lim, lim, rng);
      return t;
    };
    c.w_xi = mk(q, p);
    c.w_xf = mk(q, p);
    c.w_xo = mk(q, p);
    c.w_xc = mk(q, p);
    c.w_hi = mk(q, q);
    c.w_hf = mk(q, q);
    c.w_ho = mk(q, q);
    c.w_hc = mk(q, q);
    c.b_i = make_tensor({q}, true);
    c.b_f = make_tensor({q}, true);
    // forget gate starts open so early training does not wipe the cell state
    std::fill(c.b_f->data.begin(), c.b_f->data.end(), 1.0);
    c.b_o = make_tensor({q}, true);
    c.b_c = make_tensor({q}, true);
    return c;
  }

  void collect(std::vector<NamedTensor>& out, const std::string& prefix) const {
    out.push_back({prefix + ".w_xi", w_xi, true});
    out.push_back({prefix + ".w_xf", w_xf, true});
    out.push_back({prefix + ".w_xo", w_xo, true});
    out.push_back({prefix + ".w_xc", w_xc, true});
    out.push_back({prefix + ".w_hi", w_hi, true});
    out.push_back({prefix + ".w_hf", w_hf, true});
    out.push_back({prefix + ".w_ho", w_ho, true});
    out.push_back({prefix + ".w_hc", w_hc, true});
    out.push_back({prefix + ".b_i", b_i, true});
    out.push_back({prefix + ".b_f", b_f, true});
    out.push_back({prefix + ".b_o", b_o, true});
    out.push_back({prefix + ".b_c", b_c, true});
  }
};

/// Hidden output h and cell state c; [q] vectors, or [B×q] when a batch of
/// independent sequences runs through the cell together.
struct LstmState {
  TensorPtr h;
  TensorPtr c;
};

inline LstmState lstm_zero_state(std::size_t hidden, std::size_t batch = 0) {
  if (batch == 0) return {make_tensor({hidden}), make_tensor({hidden})};
  return {make_tensor({batch, hidden}), make_tensor({batch, hidden})};
}

/// One step of the memory cell:
///   i = σ(Wxi·x + Whi·h + bi)        f = σ(Wxf·x + Whf·h + bf)
///   o = σ(Wxo·x + Who·h + bo)        g = tanh(Wxc·x + Whc·h + bc)
///   c' = i ⊙ g + f ⊙ c               h' = o ⊙ tanh(c')
inline LstmState cell_step(Tape* tape, const LstmCellParams& prm, const TensorPtr& x,
                           const LstmState& prev) {
  auto gate_pre = [&](const TensorPtr& wx, const TensorPtr& wh, const TensorPtr& b) {
    return add(tape, linear(tape, x, wx, b), linear(tape, prev.h, wh, nullptr));
  };
  auto i = sigmoid(tape, gate_pre(prm.w_xi, prm.w_hi, prm.b_i));
  auto f = sigmoid(tape, gate_pre(prm.w_xf, prm.w_hf, prm.b_f));
  auto o = sigmoid(tape, gate_pre(prm.w_xo, prm.w_ho, prm.b_o));
  auto g = tanh_op(tape, gate_pre(prm.w_xc, prm.w_hc, prm.b_c));
  auto c = add(tape, hadamard(tape, i, g), hadamard(tape, f, prev.c));
  auto h = hadamard(tape, o, tanh_op(tape, c));
  return {h, c};
}

struct StackedRun {
  LstmState final_state;            // top layer after the last step
  std::vector<TensorPtr> top_h;     // top layer's h at every step
};

/// Runs a stack of cells over a sequence of inputs (each [p] or [B×p]).
/// Layer 0 consumes the inputs in time order; each higher layer consumes
/// the per-step h of the layer below. States start at zero.
inline StackedRun run_stacked(Tape* tape, const std::vector<LstmCellParams>& layers,
                              const std::vector<TensorPtr>& sequence) {
  if (sequence.empty()) throw DataError("run_stacked: empty input sequence");
  if (layers.empty()) throw ConfigError("run_stacked: no LSTM layers");
  const bool batched = sequence.front()->rank() == 2;
  const std::size_t batch = batched ? sequence.front()->shape[0] : 0;
  std::vector<TensorPtr> inputs = sequence;
  StackedRun run;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LstmState state = lstm_zero_state(layers[l].hidden_size, batch);
    std::vector<TensorPtr> outputs;
    outputs.reserve(inputs.size());
    for (const auto& x : inputs) {
      state = cell_step(tape, layers[l], x, state);
      outputs.push_back(state.h);
    }
    if (l + 1 == layers.size()) {
      run.final_state = state;
      run.top_h = std::move(outputs);
    } else {
      inputs = std::move(outputs);
    }
  }
  return run;
}

}  // namespace srcn
