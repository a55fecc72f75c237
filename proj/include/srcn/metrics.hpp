#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "srcn/data.hpp"
#include "srcn/errors.hpp"
#include "srcn/grid_codec.hpp"

namespace srcn {

/// m×n matrices of prediction instants × links, stored as rows.
using PredMatrix = std::vector<std::vector<double>>;

inline void require_matching(const PredMatrix& pred, const PredMatrix& actual, const char* op) {
  if (pred.size() != actual.size() || pred.empty()) {
    throw ShapeError(std::string(op) + ": row count mismatch");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != actual[i].size() || pred[i].empty()) {
      throw ShapeError(std::string(op) + ": column count mismatch at row " + std::to_string(i));
    }
  }
}

/// Mean of |pred − actual| / max(|actual|, epsilon) over all entries.
inline double mape(const PredMatrix& pred, const PredMatrix& actual, double epsilon = 1.0) {
  require_matching(pred, actual, "mape");
  if (epsilon < 0.0) throw ConfigError("mape: epsilon must be >= 0");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred[i].size(); ++j) {
      const double denom = std::max(std::abs(actual[i][j]), epsilon);
      if (denom == 0.0) {
        throw DataError("mape: zero actual value with epsilon 0 at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      }
      acc += std::abs(pred[i][j] - actual[i][j]) / denom;
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

/// The signed variant with the prediction in the denominator; reported
/// alongside the standard value for transparency.
inline double mape_paper_variant(const PredMatrix& pred, const PredMatrix& actual,
                                 double epsilon = 1.0) {
  require_matching(pred, actual, "mape");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred[i].size(); ++j) {
      const double denom = std::max(std::abs(pred[i][j]), epsilon);
      if (denom == 0.0) throw DataError("mape_paper_variant: zero prediction with epsilon 0");
      acc += (pred[i][j] - actual[i][j]) / denom;
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

/// sqrt of the mean squared error over all n_p = m·n entries.
inline double rmse(const PredMatrix& pred, const PredMatrix& actual) {
  require_matching(pred, actual, "rmse");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred[i].size(); ++j) {
      const double d = pred[i][j] - actual[i][j];
      acc += d * d;
      ++n;
    }
  }
  return std::sqrt(acc / static_cast<double>(n));
}

/// Naive forecaster: the last observed per-link speed, repeated at every
/// horizon. Speeds come back in km/h via the grid decode.
inline std::vector<std::vector<double>> persistence_baseline(const SampleWindow& window,
                                                             const NetworkMap& map, double v_max,
                                                             std::size_t n_horizons) {
  if (window.inputs.empty()) throw DataError("persistence_baseline: empty window");
  auto last = decode_frame(map, window.inputs.back(), v_max);
  return std::vector<std::vector<double>>(n_horizons, last);
}

/// Per-link per-bin-of-day mean over the training days.
struct HistoricalAverage {
  std::size_t bins_per_day = 0;
  std::vector<std::vector<double>> slot_mean;  // [link][bin of day]

  /// Builds from the training prefix of a series: bins [0, train_end_bin).
  static HistoricalAverage fit(const BinnedSeries& series, std::size_t train_end_bin) {
    const std::size_t bins = series.schedule.bins_per_day();
    if (train_end_bin < 2 * bins) {
      throw DataError("historical_average: needs at least 2 training days");
    }
    HistoricalAverage h;
    h.bins_per_day = bins;
    h.slot_mean.assign(series.n_links(), std::vector<double>(bins, 0.0));
    std::vector<std::size_t> slot_count(bins, 0);
    const std::size_t full = std::min(train_end_bin, series.schedule.total_bins());
    for (std::size_t g = 0; g < full; ++g) ++slot_count[g % bins];
    for (std::size_t l = 0; l < series.n_links(); ++l) {
      std::vector<double> sums(bins, 0.0);
      for (std::size_t g = 0; g < full; ++g) sums[g % bins] += series.values[l][g];
      for (std::size_t b = 0; b < bins; ++b) {
        if (slot_count[b] == 0) throw DataError("historical_average: unseen bin-of-day");
        h.slot_mean[l][b] = sums[b] / static_cast<double>(slot_count[b]);
      }
    }
    return h;
  }

  double predict(std::size_t link, std::size_t global_bin) const {
    const std::size_t slot = global_bin % bins_per_day;
    if (slot_mean.empty() || link >= slot_mean.size()) {
      throw DataError("historical_average: unknown link");
    }
    return slot_mean[link][slot];
  }
};

}  // namespace srcn
