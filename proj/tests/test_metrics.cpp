#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "srcn/metrics.hpp"
#include "srcn/synth.hpp"

using namespace srcn;

namespace {

PredMatrix constant_matrix(std::size_t m, std::size_t n, double v) {
  return PredMatrix(m, std::vector<double>(n, v));
}

PredMatrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  PredMatrix out(m, std::vector<double>(n));
  for (auto& row : out) {
    for (auto& v : row) v = u(rng);
  }
  return out;
}

}  // namespace

TEST_CASE("mape examples") {
  auto a = constant_matrix(3, 4, 50.0);
  CHECK(mape(a, a, 1.0) == 0.0);
  auto b = constant_matrix(3, 4, 45.0);
  CHECK(mape(b, a, 1.0) == Catch::Approx(0.10).margin(1e-15));
}

TEST_CASE("mape matches the scalar summation oracle on a random 4x3 case") {
  std::mt19937_64 rng(3);
  auto pred = random_matrix(4, 3, rng, 10.0, 70.0);
  auto actual = random_matrix(4, 3, rng, 10.0, 70.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      acc += std::abs(pred[i][j] - actual[i][j]) / std::max(std::abs(actual[i][j]), 1.0);
    }
  }
  CHECK(mape(pred, actual, 1.0) == Catch::Approx(acc / 12.0).margin(1e-12));

  // the signed paper variant divides by the prediction instead
  double paper = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      paper += (pred[i][j] - actual[i][j]) / std::max(std::abs(pred[i][j]), 1.0);
    }
  }
  CHECK(mape_paper_variant(pred, actual, 1.0) == Catch::Approx(paper / 12.0).margin(1e-12));
}

TEST_CASE("mape epsilon floor and zero-actual error") {
  auto pred = constant_matrix(1, 1, 5.0);
  auto zero = constant_matrix(1, 1, 0.0);
  CHECK_THROWS_AS(mape(pred, zero, 0.0), DataError);
  CHECK(mape(pred, zero, 1.0) == 5.0);  // |5-0|/max(0,1)
}

TEST_CASE("rmse examples and oracle") {
  auto a = constant_matrix(2, 5, 30.0);
  CHECK(rmse(a, a) == 0.0);
  auto b = constant_matrix(2, 5, 33.0);
  CHECK(rmse(b, a) == Catch::Approx(3.0).margin(1e-12));

  std::mt19937_64 rng(5);
  auto pred = random_matrix(6, 4, rng, 0.0, 60.0);
  auto actual = random_matrix(6, 4, rng, 0.0, 60.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      acc += (pred[i][j] - actual[i][j]) * (pred[i][j] - actual[i][j]);
    }
  }
  CHECK(rmse(pred, actual) == Catch::Approx(std::sqrt(acc / 24.0)).margin(1e-12));

  auto short_rows = constant_matrix(2, 3, 1.0);
  CHECK_THROWS_AS(rmse(short_rows, a), ShapeError);
}

TEST_CASE("metrics are permutation-invariant over entries") {
  std::mt19937_64 rng(7);
  auto pred = random_matrix(5, 3, rng, 10.0, 60.0);
  auto actual = random_matrix(5, 3, rng, 10.0, 60.0);
  const double m0 = mape(pred, actual, 1.0);
  const double r0 = rmse(pred, actual);
  std::vector<std::size_t> order = {4, 2, 0, 3, 1};
  PredMatrix pred_p, actual_p;
  for (auto i : order) {
    pred_p.push_back(pred[i]);
    actual_p.push_back(actual[i]);
  }
  CHECK(mape(pred_p, actual_p, 1.0) == Catch::Approx(m0).margin(1e-15));
  CHECK(rmse(pred_p, actual_p) == Catch::Approx(r0).margin(1e-15));
}

TEST_CASE("rmse is zero exactly when predictions equal actuals") {
  std::mt19937_64 rng(11);
  auto a = random_matrix(3, 3, rng, 0.0, 10.0);
  auto b = a;
  CHECK(rmse(a, b) == 0.0);
  b[1][2] += 1e-9;
  CHECK(rmse(a, b) > 0.0);
}

TEST_CASE("persistence baseline: constant series has zero error, ramps scale with the offset") {
  GridSpec spec;
  spec.origin = {0.0, 0.0};
  spec.cell_size_deg = 1.0;
  spec.height = 4;
  spec.width = 6;
  auto map = build_network_map({{"a", {{0.5, 0.5}, {0.5, 4.5}}}, {"b", {{2.5, 0.5}, {2.5, 4.5}}}},
                               spec);
  DaySchedule sched;
  sched.days = 1;
  sched.day_start_sec = 6 * 3600;
  sched.day_end_sec = 6 * 3600 + 29 * 120;
  BinnedSeries series;
  series.schedule = sched;
  series.link_ids = {"a", "b"};

  SECTION("constant series") {
    series.values.assign(2, std::vector<double>(30, 42.0));
    series.counts.assign(2, std::vector<std::uint32_t>(30, 1));
    auto windows = make_windows(series, map, 3, {1, 2, 3}, 60.0);
    for (const auto& w : windows) {
      auto pred = persistence_baseline(w, map, 60.0, 3);
      for (std::size_t h = 0; h < 3; ++h) {
        for (double v : pred[h]) CHECK(v == Catch::Approx(42.0).margin(1e-9));
      }
    }
  }

  SECTION("linear ramp of slope s: RMSE at offset k is exactly s*k") {
    const double s = 0.5;
    series.values.assign(2, std::vector<double>(30));
    series.counts.assign(2, std::vector<std::uint32_t>(30, 1));
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t b = 0; b < 30; ++b) series.values[l][b] = 10.0 + s * static_cast<double>(b);
    }
    auto windows = make_windows(series, map, 3, {1, 2, 3}, 60.0);
    for (std::size_t k = 1; k <= 3; ++k) {
      PredMatrix pred, actual;
      for (const auto& w : windows) {
        auto p = persistence_baseline(w, map, 60.0, 3);
        pred.push_back(p[k - 1]);
        std::vector<double> act(2);
        for (std::size_t l = 0; l < 2; ++l) {
          act[l] = series.values[l][w.start_bin + 3 - 1 + k];
        }
        actual.push_back(act);
      }
      CHECK(rmse(pred, actual) == Catch::Approx(s * static_cast<double>(k)).margin(1e-9));
    }
  }
}

TEST_CASE("persistence MAPE is non-decreasing in the horizon on synthetic data") {
  auto mesh = make_mesh_network(2, 3, 12, 12);
  DaySchedule sched;
  sched.days = 2;
  sched.day_start_sec = 6 * 3600;
  sched.day_end_sec = 6 * 3600 + 120 * 120;
  auto synth = generate_synthetic(mesh.map, mesh.adjacency, sched, 17, 3.0);
  std::vector<std::string> ids;
  for (const auto& l : mesh.map.links) ids.push_back(l.id);
  auto series = bin_records(synth.records, ids, sched);
  const std::vector<std::size_t> offsets = {1, 5, 15};
  auto windows = make_windows(series, mesh.map, 3, offsets, 70.0);
  std::vector<PredMatrix> pred(3), actual(3);
  for (const auto& w : windows) {
    auto p = persistence_baseline(w, mesh.map, 70.0, 3);
    for (std::size_t h = 0; h < 3; ++h) {
      pred[h].push_back(p[h]);
      std::vector<double> act(ids.size());
      for (std::size_t l = 0; l < ids.size(); ++l) {
        act[l] = series.values[l][w.start_bin + 3 - 1 + offsets[h]];
      }
      actual[h].push_back(std::move(act));
    }
  }
  double prev = -1.0;
  for (std::size_t h = 0; h < 3; ++h) {
    const double m = mape(pred[h], actual[h], 1.0);
    CHECK(m >= prev);
    prev = m;
  }
}

TEST_CASE("historical average: identical days predict exactly, means combine training days") {
  DaySchedule sched;
  sched.days = 3;
  sched.day_start_sec = 6 * 3600;
  sched.day_end_sec = 6 * 3600 + 9 * 120;
  BinnedSeries series;
  series.schedule = sched;
  series.link_ids = {"a"};
  const std::size_t bins = sched.bins_per_day();
  REQUIRE(bins == 10);

  SECTION("identical days") {
    series.values.assign(1, std::vector<double>(30));
    for (std::size_t g = 0; g < 30; ++g) {
      series.values[0][g] = 20.0 + static_cast<double>(g % bins);
    }
    auto hist = HistoricalAverage::fit(series, 2 * bins);
    for (std::size_t g = 2 * bins; g < 30; ++g) {
      CHECK(hist.predict(0, g) == Catch::Approx(series.values[0][g]).margin(1e-12));
    }
  }

  SECTION("two training days with 40 and 60 at a slot predict 50") {
    series.values.assign(1, std::vector<double>(30, 30.0));
    series.values[0][3] = 40.0;
    series.values[0][bins + 3] = 60.0;
    auto hist = HistoricalAverage::fit(series, 2 * bins);
    CHECK(hist.predict(0, 2 * bins + 3) == Catch::Approx(50.0));
  }

  SECTION("needs two training days") {
    series.values.assign(1, std::vector<double>(30, 30.0));
    CHECK_THROWS_AS(HistoricalAverage::fit(series, bins), DataError);
  }
}

TEST_CASE("historical average matches a group-by-slot oracle on random fixtures") {
  DaySchedule sched;
  sched.days = 5;
  sched.day_start_sec = 6 * 3600;
  sched.day_end_sec = 6 * 3600 + 7 * 120;
  const std::size_t bins = sched.bins_per_day();
  BinnedSeries series;
  series.schedule = sched;
  series.link_ids = {"a", "b"};
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(5.0, 75.0);
  series.values.assign(2, std::vector<double>(sched.total_bins()));
  for (auto& link : series.values) {
    for (auto& v : link) v = u(rng);
  }
  const std::size_t train_days = 3;
  auto hist = HistoricalAverage::fit(series, train_days * bins);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t slot = 0; slot < bins; ++slot) {
      double acc = 0.0;
      for (std::size_t d = 0; d < train_days; ++d) acc += series.values[l][d * bins + slot];
      CHECK(hist.predict(l, 4 * bins + slot) ==
            Catch::Approx(acc / static_cast<double>(train_days)).margin(1e-12));
    }
  }
}
