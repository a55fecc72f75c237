#pragma once

#include <chrono>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "srcn/data.hpp"
#include "srcn/layers.hpp"
#include "srcn/lstm.hpp"
#include "srcn/ops.hpp"
#include "srcn/rng.hpp"

namespace srcn {

/// Structure and training hyperparameters of the full model.
struct SrcnConfig {
  std::size_t grid_height = 163;
  std::size_t grid_width = 148;
  std::vector<std::size_t> conv_channels = {16, 32, 64, 64, 128};
  std::vector<std::size_t> pool_blocks = {0, 1, 4};  // blocks followed by a 2x2 max-pool
  std::size_t feature_dim = 278;                     // per-frame spatial feature X^t
  std::size_t lstm_hidden = 800;
  std::size_t lstm_layers = 2;
  double dropout = 0.2;
  std::size_t seq_len = 15;
  std::vector<std::size_t> horizons = {1, 2, 3};
  std::size_t n_links = 278;

  double learning_rate = 0.003;
  double decay = 0.9;
  std::size_t batch_size = 64;
  double val_fraction = 0.20;
  std::size_t patience = 10;
  double min_delta = 1e-5;
  std::size_t max_epochs = 100;
  double max_train_seconds = 0.0;  // 0 disables the wall-clock cap

  void validate() const {
    if (grid_height < 1 || grid_width < 1) throw ConfigError("config: grid dims must be >= 1");
    if (conv_channels.empty()) throw ConfigError("config: need at least one conv block");
    for (auto p : pool_blocks) {
      if (p >= conv_channels.size()) throw ConfigError("config: pool block index out of range");
    }
    if (feature_dim < 1 || lstm_hidden < 1 || lstm_layers < 1 || n_links < 1) {
      throw ConfigError("config: dimensions must be >= 1");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config: dropout must be in [0,1)");
    if (seq_len < 1) throw ConfigError("config: seq_len must be >= 1");
    validate_horizons(horizons);
    if (learning_rate <= 0.0) throw ConfigError("config: learning rate must be > 0");
    if (decay < 0.0 || decay >= 1.0) throw ConfigError("config: decay must be in [0,1)");
    if (batch_size < 1) throw ConfigError("config: batch size must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0) {
      throw ConfigError("config: validation fraction must be in [0,1)");
    }
    if (min_delta < 0.0) throw ConfigError("config: min_delta must be >= 0");
    if (max_epochs < 1) throw ConfigError("config: max_epochs must be >= 1");
    const auto [c, h, w] = conv_stack_dims();
    (void)c;
    if (h < 1 || w < 1) throw ConfigError("config: conv stack pools the grid away");
  }

  bool block_has_pool(std::size_t i) const {
    return std::find(pool_blocks.begin(), pool_blocks.end(), i) != pool_blocks.end();
  }

  /// (channels, height, width) after the conv stack.
  std::tuple<std::size_t, std::size_t, std::size_t> conv_stack_dims() const {
    std::size_t h = grid_height, w = grid_width;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
      if (block_has_pool(i)) {
        h /= 2;
        w /= 2;
      }
    }
    return {conv_channels.back(), h, w};
  }

  std::size_t flatten_dim() const {
    const auto [c, h, w] = conv_stack_dims();
    return c * h * w;
  }
};

inline nlohmann::json config_to_json(const SrcnConfig& c) {
  return nlohmann::json{{"grid_height", c.grid_height},
                       {"grid_width", c.grid_width},
                       {"conv_channels", c.conv_channels},
                       {"pool_blocks", c.pool_blocks},
                       {"feature_dim", c.feature_dim},
                       {"lstm_hidden", c.lstm_hidden},
                       {"lstm_layers", c.lstm_layers},
                       {"dropout", c.dropout},
                       {"seq_len", c.seq_len},
                       {"horizons", c.horizons},
                       {"n_links", c.n_links},
                       {"learning_rate", c.learning_rate},
                       {"decay", c.decay},
                       {"batch_size", c.batch_size},
                       {"val_fraction", c.val_fraction},
                       {"patience", c.patience},
                       {"min_delta", c.min_delta},
                       {"max_epochs", c.max_epochs},
                       {"max_train_seconds", c.max_train_seconds}};
}

inline SrcnConfig config_from_json(const nlohmann::json& j) {
  SrcnConfig c;
  try {
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("grid_height", c.grid_height);
    get("grid_width", c.grid_width);
    get("conv_channels", c.conv_channels);
    get("pool_blocks", c.pool_blocks);
    get("feature_dim", c.feature_dim);
    get("lstm_hidden", c.lstm_hidden);
    get("lstm_layers", c.lstm_layers);
    get("dropout", c.dropout);
    get("seq_len", c.seq_len);
    get("horizons", c.horizons);
    get("n_links", c.n_links);
    get("learning_rate", c.learning_rate);
    get("decay", c.decay);
    get("batch_size", c.batch_size);
    get("val_fraction", c.val_fraction);
    get("patience", c.patience);
    get("min_delta", c.min_delta);
    get("max_epochs", c.max_epochs);
    get("max_train_seconds", c.max_train_seconds);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

/// The complete learnable state: conv stack, per-frame feature layer, LSTM
/// stack, and one affine output head per horizon offset.
struct SrcnParams {
  std::vector<ConvBlock> blocks;
  DenseLayer feature;
  std::vector<LstmCellParams> lstm;
  std::vector<DenseLayer> heads;

  static SrcnParams init(const SrcnConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    auto rng = make_rng(derive_seed(seed, "param-init"));
    SrcnParams p;
    std::size_t c_in = 1;
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
      p.blocks.push_back(ConvBlock::create(c_in, cfg.conv_channels[i], cfg.block_has_pool(i), rng));
      c_in = cfg.conv_channels[i];
    }
    p.feature = DenseLayer::create(cfg.flatten_dim(), cfg.feature_dim, rng);
    std::size_t in = cfg.feature_dim;
    for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
      p.lstm.push_back(LstmCellParams::create(in, cfg.lstm_hidden, rng));
      in = cfg.lstm_hidden;
    }
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      p.heads.push_back(DenseLayer::create(cfg.lstm_hidden, cfg.n_links, rng));
    }
    return p;
  }

  std::vector<NamedTensor> named() const {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].collect(out, "conv" + std::to_string(i));
    }
    feature.collect(out, "feature");
    for (std::size_t i = 0; i < lstm.size(); ++i) lstm[i].collect(out, "lstm" + std::to_string(i));
    for (std::size_t i = 0; i < heads.size(); ++i) heads[i].collect(out, "head" + std::to_string(i));
    return out;
  }

  std::vector<TensorPtr> trainable() const {
    std::vector<TensorPtr> out;
    for (const auto& nt : named()) {
      if (nt.trainable) out.push_back(nt.tensor);
    }
    return out;
  }

  std::size_t trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : trainable()) n += t->size();
    return n;
  }

  SrcnParams deep_copy() const {
    SrcnParams c = *this;  // copies the shared_ptr structure
    auto clone_tensor = [](TensorPtr& t) {
      auto n = make_tensor(t->shape, t->requires_grad);
      n->data = t->data;
      t = n;
    };
    for (auto& b : c.blocks) {
      clone_tensor(b.kernels);
      clone_tensor(b.bias);
      clone_tensor(b.bn_gamma);
      clone_tensor(b.bn_beta);
      clone_tensor(b.bn_running_mean);
      clone_tensor(b.bn_running_var);
    }
    clone_tensor(c.feature.weight);
    clone_tensor(c.feature.bias);
    for (auto& l : c.lstm) {
      for (auto* t : {&l.w_xi, &l.w_xf, &l.w_xo, &l.w_xc, &l.w_hi, &l.w_hf, &l.w_ho, &l.w_hc,
                      &l.b_i, &l.b_f, &l.b_o, &l.b_c}) {
        clone_tensor(*t);
      }
    }
    for (auto& h : c.heads) {
      clone_tensor(h.weight);
      clone_tensor(h.bias);
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

/// Stacks the frames of a window batch into one leaf tensor [B·L×1×H×W],
/// time-major (row t·B + b holds window b's frame t) so each step is a
/// contiguous row slice.
inline TensorPtr make_window_batch(const std::vector<const SampleWindow*>& batch,
                                   const SrcnConfig& cfg) {
  if (batch.empty()) throw DataError("forward: empty batch");
  const std::size_t b_n = batch.size(), l_n = cfg.seq_len;
  auto x = make_tensor({b_n * l_n, 1, cfg.grid_height, cfg.grid_width});
  const std::size_t frame_elems = cfg.grid_height * cfg.grid_width;
  for (std::size_t b = 0; b < b_n; ++b) {
    const auto& w = *batch[b];
    if (w.inputs.size() != l_n) {
      throw ShapeError("forward: window has " + std::to_string(w.inputs.size()) +
                       " frames, config expects " + std::to_string(l_n));
    }
    for (std::size_t t = 0; t < l_n; ++t) {
      const auto& f = w.inputs[t];
      if (f.height != cfg.grid_height || f.width != cfg.grid_width) {
        throw ShapeError("forward: frame is " + std::to_string(f.height) + "x" +
                         std::to_string(f.width) + ", config expects " +
                         std::to_string(cfg.grid_height) + "x" + std::to_string(cfg.grid_width));
      }
      std::copy(f.values.begin(), f.values.end(), x->data.begin() + (t * b_n + b) * frame_elems);
    }
  }
  return x;
}

inline TensorPtr make_target_tensor(const std::vector<const SampleWindow*>& batch,
                                    std::size_t horizon_index, std::size_t n_links) {
  auto t = make_tensor({batch.size(), n_links});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& tv = batch[b]->targets.at(horizon_index);
    if (tv.size() != n_links) throw ShapeError("target vector size mismatch");
    std::copy(tv.begin(), tv.end(), t->data.begin() + b * n_links);
  }
  return t;
}

/// Full model pass: every frame goes through the conv stack, flatten, and
/// the feature layer to its X^t; the X sequence runs through the stacked
/// LSTM; the final hidden state passes dropout (train mode) and each
/// horizon head. Returns one [B×n_links] prediction per horizon offset,
/// in normalized speed units.
inline std::vector<TensorPtr> forward_batch(Tape* tape, const SrcnParams& params,
                                            const SrcnConfig& cfg, const TensorPtr& frames,
                                            std::size_t batch, Mode mode, std::mt19937_64& rng) {
  if (frames->rank() != 4 || frames->shape[0] != batch * cfg.seq_len ||
      frames->shape[1] != 1 || frames->shape[2] != cfg.grid_height ||
      frames->shape[3] != cfg.grid_width) {
    throw ShapeError("forward: frame tensor " + shape_str(frames->shape) +
                     " does not match config");
  }
  TensorPtr x = frames;
  for (const auto& block : params.blocks) x = block.forward(tape, x, mode);
  x = flatten(tape, x);
  x = params.feature.forward(tape, x);  // [B·L × p]
  std::vector<TensorPtr> steps;
  steps.reserve(cfg.seq_len);
  for (std::size_t t = 0; t < cfg.seq_len; ++t) {
    steps.push_back(slice_rows(tape, x, t * batch, batch));
  }
  auto run = run_stacked(tape, params.lstm, steps);
  TensorPtr h = dropout(tape, run.final_state.h, cfg.dropout, mode, rng);
  std::vector<TensorPtr> outputs;
  outputs.reserve(params.heads.size());
  for (const auto& head : params.heads) outputs.push_back(head.forward(tape, h));
  return outputs;
}

/// Inference on one window; returns per-horizon normalized speed vectors.
inline std::vector<std::vector<double>> predict_window(const SrcnParams& params,
                                                       const SrcnConfig& cfg,
                                                       const SampleWindow& window) {
  auto rng = make_rng(0);  // unused in infer mode
  auto frames = make_window_batch({&window}, cfg);
  auto outs = forward_batch(nullptr, params, cfg, frames, 1, Mode::Infer, rng);
  std::vector<std::vector<double>> result;
  for (auto& o : outs) result.push_back(o->data);
  return result;
}

/// Mean over all horizons, links, and batch elements of the squared error.
inline TensorPtr mse_loss(Tape* tape, const std::vector<TensorPtr>& preds,
                          const std::vector<TensorPtr>& targets) {
  if (preds.size() != targets.size() || preds.empty()) {
    throw ShapeError("mse_loss: horizon count mismatch");
  }
  TensorPtr total;
  std::size_t count = 0;
  for (std::size_t h = 0; h < preds.size(); ++h) {
    auto diff = add(tape, preds[h], scale(tape, targets[h], -1.0));
    auto sq = hadamard(tape, diff, diff);
    auto s = sum_all(tape, sq);
    total = total ? add(tape, total, s) : s;
    count += preds[h]->size();
  }
  return scale(tape, total, 1.0 / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// RMSprop
// ---------------------------------------------------------------------------

/// Per-parameter exponential moving average of squared gradients:
///   acc ← ρ·acc + (1−ρ)·g²,  θ ← θ − η·g/sqrt(acc+ε)
struct RmspropState {
  double learning_rate = 0.003;
  double decay = 0.9;
  double epsilon = 1e-8;
  std::unordered_map<const Tensor*, std::vector<double>> acc;

  void step(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) {
      if (!p->has_grad()) {
        throw DataError("rmsprop: parameter of shape " + shape_str(p->shape) +
                        " has no gradient");
      }
      auto& a = acc[p.get()];
      if (a.size() != p->size()) a.assign(p->size(), 0.0);
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double g = p->grad[i];
        a[i] = decay * a[i] + (1.0 - decay) * g * g;
        p->data[i] -= learning_rate * g / std::sqrt(a[i] + epsilon);
      }
    }
  }
};

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainOutcome {
  SrcnParams params;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
  bool stopped_early = false;
};

/// Squared error of infer-mode predictions against window targets,
/// averaged over all horizons, links, and windows.
inline double evaluate_mse(const SrcnParams& params, const SrcnConfig& cfg,
                           const std::vector<const SampleWindow*>& windows) {
  if (windows.empty()) throw DataError("evaluate_mse: no windows");
  auto rng = make_rng(0);
  double err = 0.0;
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < windows.size(); pos += cfg.batch_size) {
    const std::size_t n = std::min(cfg.batch_size, windows.size() - pos);
    std::vector<const SampleWindow*> batch(windows.begin() + pos, windows.begin() + pos + n);
    auto frames = make_window_batch(batch, cfg);
    auto outs = forward_batch(nullptr, params, cfg, frames, n, Mode::Infer, rng);
    for (std::size_t h = 0; h < outs.size(); ++h) {
      auto target = make_target_tensor(batch, h, cfg.n_links);
      for (std::size_t i = 0; i < outs[h]->size(); ++i) {
        const double d = outs[h]->data[i] - target->data[i];
        err += d * d;
      }
      count += outs[h]->size();
    }
  }
  return err / static_cast<double>(count);
}

/// Mini-batch RMSprop on MSE with a chronological validation split (the
/// last val_fraction of the windows), early stopping on validation loss,
/// and restoration of the best-validation parameters. Fully reproducible
/// for a fixed seed.
inline TrainOutcome train(const SrcnConfig& cfg, const std::vector<SampleWindow>& dataset,
                          std::uint64_t seed, std::ostream* log_jsonl = nullptr) {
  cfg.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(dataset.size())));
  if (cfg.val_fraction > 0.0 && n_val == 0) n_val = 1;
  const std::size_t n_train = dataset.size() - n_val;
  if (n_train < cfg.batch_size) {
    throw DataError("train: " + std::to_string(n_train) + " training windows is smaller than one batch of " +
                    std::to_string(cfg.batch_size));
  }
  std::vector<const SampleWindow*> train_set, val_set;
  for (std::size_t i = 0; i < n_train; ++i) train_set.push_back(&dataset[i]);
  for (std::size_t i = n_train; i < dataset.size(); ++i) val_set.push_back(&dataset[i]);

  TrainOutcome out;
  out.params = SrcnParams::init(cfg, seed);
  auto shuffle_rng = make_rng(derive_seed(seed, "shuffle"));
  auto dropout_rng = make_rng(derive_seed(seed, "dropout"));
  RmspropState opt{cfg.learning_rate, cfg.decay};
  auto trainable = out.params.trainable();

  std::optional<SrcnParams> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto t_start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_err = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - pos);
      std::vector<const SampleWindow*> batch(n);
      for (std::size_t i = 0; i < n; ++i) batch[i] = train_set[order[pos + i]];
      Tape tape;
      auto frames = make_window_batch(batch, cfg);
      auto outs = forward_batch(&tape, out.params, cfg, frames, n, Mode::Train, dropout_rng);
      std::vector<TensorPtr> targets;
      for (std::size_t h = 0; h < outs.size(); ++h) {
        targets.push_back(make_target_tensor(batch, h, cfg.n_links));
      }
      auto loss = mse_loss(&tape, outs, targets);
      epoch_err += loss->data[0] * static_cast<double>(n);
      epoch_count += n;
      tape.backward(loss);
      // a gradient the loss never touched is legitimately zero
      for (auto& p : trainable) p->ensure_grad();
      opt.step(trainable);
      for (auto& p : trainable) p->zero_grad();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = epoch_err / static_cast<double>(epoch_count);
    rec.val_mse = val_set.empty() ? rec.train_mse : evaluate_mse(out.params, cfg, val_set);
    rec.lr = cfg.learning_rate;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
    out.log.push_back(rec);
    if (log_jsonl) {
      *log_jsonl << nlohmann::json{{"epoch", rec.epoch},
                                  {"train_mse", rec.train_mse},
                                  {"val_mse", rec.val_mse},
                                  {"lr", rec.lr},
                                  {"seconds", rec.seconds}}
                        .dump()
                 << "\n";
    }
    if (rec.val_mse < best_val - cfg.min_delta) {
      best_val = rec.val_mse;
      out.best_epoch = epoch;
      epochs_since_best = 0;
      if (!val_set.empty()) best = out.params.deep_copy();
    } else {
      ++epochs_since_best;
      if (!val_set.empty() && epochs_since_best > cfg.patience) {
        out.stopped_early = true;
        break;
      }
    }
    if (cfg.max_train_seconds > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (elapsed > cfg.max_train_seconds) break;
    }
  }
  if (best) out.params = std::move(*best);
  out.best_val_mse = best_val;
  return out;
}

// ---------------------------------------------------------------------------
// checkpoints: magic "SRCN", u32 format version, length-prefixed JSON config,
// then named tensors in the binary tensor serialization.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const SrcnParams& params, const SrcnConfig& cfg, std::ostream& os) {
  os.write("SRCN", 4);
  write_u32_le(os, kCheckpointVersion);
  const std::string cfg_json = config_to_json(cfg).dump();
  write_u64_le(os, cfg_json.size());
  os.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));
  const auto named = params.named();
  write_u64_le(os, named.size());
  for (const auto& nt : named) {
    write_u32_le(os, static_cast<std::uint32_t>(nt.name.size()));
    os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    write_tensor(os, *nt.tensor);
  }
}

inline void save_checkpoint_file(const SrcnParams& params, const SrcnConfig& cfg,
                                 const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint '" + path + "'");
  save_checkpoint(params, cfg, os);
  if (!os) throw DataError("failed writing checkpoint '" + path + "'");
}

inline std::pair<SrcnParams, SrcnConfig> load_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SRCN", 4) != 0) {
    throw DataError("checkpoint: bad magic bytes (not a checkpoint file)");
  }
  const std::uint32_t version = read_u32_le(is);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::uint64_t json_len = read_u64_le(is);
  if (json_len > (1u << 20)) throw DataError("checkpoint: implausible config length");
  std::string cfg_json(json_len, '\0');
  if (!is.read(cfg_json.data(), static_cast<std::streamsize>(json_len))) {
    throw DataError("checkpoint: truncated config block");
  }
  SrcnConfig cfg;
  try {
    cfg = config_from_json(nlohmann::json::parse(cfg_json));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: corrupt config JSON: ") + e.what());
  }
  SrcnParams params = SrcnParams::init(cfg, 0);
  auto named = params.named();
  std::unordered_map<std::string, TensorPtr> by_name;
  for (auto& nt : named) by_name.emplace(nt.name, nt.tensor);
  const std::uint64_t count = read_u64_le(is);
  if (count != named.size()) {
    throw DataError("checkpoint: holds " + std::to_string(count) + " tensors, config implies " +
                    std::to_string(named.size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32_le(is);
    if (name_len > 4096) throw DataError("checkpoint: implausible tensor name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw DataError("checkpoint: truncated tensor name");
    Tensor t = read_tensor(is);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint: unexpected tensor '" + name + "'");
    if (t.shape != it->second->shape) {
      throw DataError("checkpoint: tensor '" + name + "' has shape " + shape_str(t.shape) +
                      ", config implies " + shape_str(it->second->shape));
    }
    it->second->data = std::move(t.data);
  }
  return {std::move(params), cfg};
}

inline std::pair<SrcnParams, SrcnConfig> load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(is);
}

}  // namespace srcn
