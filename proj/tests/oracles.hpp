// Independent reference implementations used to check the library. These
// deliberately share no code with the implementation paths they verify.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "srcn/data.hpp"
#include "srcn/grid_codec.hpp"
#include "srcn/ops.hpp"
#include "srcn/tensor.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// central finite differences
// ---------------------------------------------------------------------------

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Backward-vs-central-difference check of a scalar-valued forward pass.
/// `forward` must be a pure function of the listed inputs' data. When
/// `sample_per_tensor` > 0 only that many randomly chosen coordinates per
/// input are probed.
inline FdReport fd_check(const std::vector<srcn::TensorPtr>& inputs,
                         const std::function<srcn::TensorPtr(srcn::Tape*)>& forward,
                         double step = 1e-5, std::size_t sample_per_tensor = 0,
                         std::uint64_t sample_seed = 1234) {
  for (const auto& in : inputs) in->zero_grad();
  srcn::Tape tape;
  auto loss = forward(&tape);
  tape.backward(loss);
  FdReport report;
  std::mt19937_64 rng(sample_seed);
  for (const auto& in : inputs) {
    std::vector<std::size_t> coords;
    if (sample_per_tensor == 0 || sample_per_tensor >= in->size()) {
      coords.resize(in->size());
      for (std::size_t i = 0; i < in->size(); ++i) coords[i] = i;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, in->size() - 1);
      std::set<std::size_t> chosen;
      while (chosen.size() < sample_per_tensor) chosen.insert(pick(rng));
      coords.assign(chosen.begin(), chosen.end());
    }
    for (auto i : coords) {
      const double saved = in->data[i];
      in->data[i] = saved + step;
      const double up = forward(nullptr)->data[0];
      in->data[i] = saved - step;
      const double down = forward(nullptr)->data[0];
      in->data[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = in->has_grad() ? in->grad[i] : 0.0;
      const double denom = std::max(std::abs(fd), std::abs(an));
      if (denom > 1e-10) {
        report.max_rel_error = std::max(report.max_rel_error, std::abs(fd - an) / denom);
      }
      ++report.checked;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// quadruple-loop convolution
// ---------------------------------------------------------------------------

inline srcn::TensorPtr conv2d_naive(const srcn::TensorPtr& input, const srcn::TensorPtr& kernels,
                                    const srcn::TensorPtr& bias, srcn::Padding padding) {
  const std::size_t ci = input->shape[0], h = input->shape[1], w = input->shape[2];
  const std::size_t co = kernels->shape[0], k = kernels->shape[2];
  const std::ptrdiff_t pad = padding == srcn::Padding::Same ? (k - 1) / 2 : 0;
  const std::size_t ho = padding == srcn::Padding::Same ? h : h - k + 1;
  const std::size_t wo = padding == srcn::Padding::Same ? w : w - k + 1;
  auto out = srcn::make_tensor({co, ho, wo});
  for (std::size_t oc = 0; oc < co; ++oc) {
    for (std::size_t oh = 0; oh < ho; ++oh) {
      for (std::size_t ow = 0; ow < wo; ++ow) {
        double acc = bias->data[oc];
        for (std::size_t ic = 0; ic < ci; ++ic) {
          for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + kh) - pad;
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + kw) - pad;
              if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(h) ||
                  iw >= static_cast<std::ptrdiff_t>(w)) {
                continue;
              }
              acc += input->at(ic, static_cast<std::size_t>(ih), static_cast<std::size_t>(iw)) *
                     kernels->at(oc, ic, kh, kw);
            }
          }
        }
        out->at(oc, oh, ow) = acc;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// scalar (spreadsheet-style) LSTM cell
// ---------------------------------------------------------------------------

struct ScalarLstmOut {
  std::vector<double> i, f, o, g, c, h;
};

inline ScalarLstmOut lstm_cell_scalar(const std::vector<std::vector<double>>& wxi,
                                      const std::vector<std::vector<double>>& wxf,
                                      const std::vector<std::vector<double>>& wxo,
                                      const std::vector<std::vector<double>>& wxc,
                                      const std::vector<std::vector<double>>& whi,
                                      const std::vector<std::vector<double>>& whf,
                                      const std::vector<std::vector<double>>& who,
                                      const std::vector<std::vector<double>>& whc,
                                      const std::vector<double>& bi, const std::vector<double>& bf,
                                      const std::vector<double>& bo, const std::vector<double>& bc,
                                      const std::vector<double>& x, const std::vector<double>& h0,
                                      const std::vector<double>& c0) {
  const std::size_t q = bi.size(), p = x.size();
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto pre = [&](const std::vector<std::vector<double>>& wx,
                 const std::vector<std::vector<double>>& wh, const std::vector<double>& b,
                 std::size_t u) {
    double acc = b[u];
    for (std::size_t j = 0; j < p; ++j) acc += wx[u][j] * x[j];
    for (std::size_t j = 0; j < q; ++j) acc += wh[u][j] * h0[j];
    return acc;
  };
  ScalarLstmOut out;
  out.i.resize(q);
  out.f.resize(q);
  out.o.resize(q);
  out.g.resize(q);
  out.c.resize(q);
  out.h.resize(q);
  for (std::size_t u = 0; u < q; ++u) {
    out.i[u] = sig(pre(wxi, whi, bi, u));
    out.f[u] = sig(pre(wxf, whf, bf, u));
    out.o[u] = sig(pre(wxo, who, bo, u));
    out.g[u] = std::tanh(pre(wxc, whc, bc, u));
    out.c[u] = out.i[u] * out.g[u] + out.f[u] * c0[u];
    out.h[u] = out.o[u] * std::tanh(out.c[u]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// dense point-sampling rasterizer
// ---------------------------------------------------------------------------

/// Samples every segment at steps of 1/samples_per_cell of a cell and maps
/// each sample through the floor convention; first-occurrence order.
inline std::vector<srcn::Cell> rasterize_by_sampling(const srcn::LinkGeometry& geom,
                                                     const srcn::GridSpec& spec,
                                                     std::size_t samples_per_cell = 1000) {
  std::vector<srcn::Cell> cells;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  auto push = [&](double u, double v) {
    const auto col = static_cast<std::size_t>(std::floor(u));
    const auto row = static_cast<std::size_t>(std::floor(v));
    if (seen.emplace(row, col).second) cells.push_back({row, col});
  };
  for (std::size_t s = 1; s < geom.polyline.size(); ++s) {
    const double u0 = spec.col_coord(geom.polyline[s - 1].lon);
    const double v0 = spec.row_coord(geom.polyline[s - 1].lat);
    const double u1 = spec.col_coord(geom.polyline[s].lon);
    const double v1 = spec.row_coord(geom.polyline[s].lat);
    const double len_cells = std::max(std::abs(u1 - u0), std::abs(v1 - v0));
    const auto n = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(len_cells * static_cast<double>(samples_per_cell))));
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n);
      push(u0 + (u1 - u0) * t, v0 + (v1 - v0) * t);
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// group-by binning
// ---------------------------------------------------------------------------

/// Mean of speeds grouped by (link, bin); bins with no records are absent.
inline std::map<std::pair<std::string, std::size_t>, double> group_by_bin(
    const std::vector<srcn::SpeedRecord>& records, const srcn::DaySchedule& schedule) {
  std::map<std::pair<std::string, std::size_t>, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (!std::isfinite(r.speed_kmh) || r.speed_kmh < 0.0) continue;
    const auto bin = schedule.bin_of(r.timestamp);
    if (!bin) continue;
    auto& slot = acc[{r.link_id, *bin}];
    slot.first += r.speed_kmh;
    ++slot.second;
  }
  std::map<std::pair<std::string, std::size_t>, double> out;
  for (const auto& [key, sum_count] : acc) {
    out[key] = sum_count.first / static_cast<double>(sum_count.second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// parameter counting
// ---------------------------------------------------------------------------

/// Closed-form trainable-parameter total for the stacked architecture:
/// conv blocks contribute C_out·(C_in·9 + 1) + 2·C_out, the feature and head
/// layers out·(in+1), each LSTM layer 4·(q·p + q·q + q).
inline std::size_t count_parameters(std::size_t grid_h, std::size_t grid_w,
                                    const std::vector<std::size_t>& channels,
                                    const std::vector<std::size_t>& pool_blocks,
                                    std::size_t feature_dim, std::size_t lstm_hidden,
                                    std::size_t lstm_layers, std::size_t n_links,
                                    std::size_t n_heads) {
  std::size_t total = 0;
  std::size_t c_in = 1, h = grid_h, w = grid_w;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const std::size_t c_out = channels[i];
    total += c_out * (c_in * 9 + 1) + 2 * c_out;
    if (std::find(pool_blocks.begin(), pool_blocks.end(), i) != pool_blocks.end()) {
      h /= 2;
      w /= 2;
    }
    c_in = c_out;
  }
  const std::size_t flat = c_in * h * w;
  total += feature_dim * (flat + 1);
  std::size_t p = feature_dim;
  for (std::size_t l = 0; l < lstm_layers; ++l) {
    total += 4 * (lstm_hidden * p + lstm_hidden * lstm_hidden + lstm_hidden);
    p = lstm_hidden;
  }
  total += n_heads * n_links * (lstm_hidden + 1);
  return total;
}

}  // namespace oracle
