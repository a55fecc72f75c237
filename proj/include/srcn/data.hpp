#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srcn/errors.hpp"
#include "srcn/grid_codec.hpp"

namespace srcn {

/// One speed observation: a single vehicle reading or a pre-averaged link
/// reading; both go through the same per-bin averaging.
struct SpeedRecord {
  std::string link_id;
  std::int64_t timestamp = 0;  // seconds since epoch
  double speed_kmh = 0.0;
};

/// Time geometry of a dataset: which seconds of each day carry traffic
/// states and how wide a bin is. Bins sit at marks start, start+width, ...
/// end inclusive, so a 06:00–22:00 day at 120 s yields 481 bins.
struct DaySchedule {
  std::int64_t start_epoch = 0;  // 00:00 of day 0
  std::size_t days = 1;
  int day_start_sec = 6 * 3600;
  int day_end_sec = 22 * 3600;
  int bin_width_sec = 120;

  void validate() const {
    if (bin_width_sec <= 0) throw ConfigError("schedule: bin width must be > 0");
    if (days < 1) throw ConfigError("schedule: need at least one day");
    if (day_end_sec <= day_start_sec || day_end_sec > 24 * 3600 || day_start_sec < 0) {
      throw ConfigError("schedule: invalid day window");
    }
    if ((day_end_sec - day_start_sec) % bin_width_sec != 0) {
      throw ConfigError("schedule: day window must be a whole number of bins");
    }
  }

  std::size_t bins_per_day() const {
    return static_cast<std::size_t>((day_end_sec - day_start_sec) / bin_width_sec) + 1;
  }
  std::size_t total_bins() const { return days * bins_per_day(); }

  /// Maps a timestamp to its global bin, or nothing when it falls outside
  /// the declared range or the daily service window.
  std::optional<std::size_t> bin_of(std::int64_t ts) const {
    const std::int64_t rel = ts - start_epoch;
    if (rel < 0) return std::nullopt;
    const std::int64_t day = rel / 86400;
    if (day >= static_cast<std::int64_t>(days)) return std::nullopt;
    const std::int64_t sec = rel % 86400;
    if (sec < day_start_sec || sec >= day_end_sec + bin_width_sec) return std::nullopt;
    const std::size_t bin = static_cast<std::size_t>((sec - day_start_sec) / bin_width_sec);
    if (bin >= bins_per_day()) return std::nullopt;
    return static_cast<std::size_t>(day) * bins_per_day() + bin;
  }

  std::int64_t bin_start_ts(std::size_t global_bin) const {
    const std::size_t day = global_bin / bins_per_day();
    const std::size_t bin = global_bin % bins_per_day();
    return start_epoch + static_cast<std::int64_t>(day) * 86400 + day_start_sec +
           static_cast<std::int64_t>(bin) * bin_width_sec;
  }
};

/// Per-link per-bin mean speeds with observation counts. A count of zero
/// marks a bin filled by the gap rule (carry-forward, else link mean).
struct BinnedSeries {
  DaySchedule schedule;
  std::vector<std::string> link_ids;
  std::vector<std::vector<double>> values;       // [link][global bin], km/h
  std::vector<std::vector<std::uint32_t>> counts;

  std::size_t n_links() const { return link_ids.size(); }
};

struct BinStats {
  std::size_t unknown_link = 0;
  std::size_t negative_speed = 0;
  std::size_t out_of_window = 0;
  std::size_t gap_filled = 0;
};

/// Groups records into per-link per-bin arithmetic means. Records for
/// unknown links or with negative speeds are rejected and counted; empty
/// bins are carried forward from the last observed value, leading gaps take
/// the link's mean over its observed bins.
inline BinnedSeries bin_records(const std::vector<SpeedRecord>& records,
                                const std::vector<std::string>& link_ids,
                                const DaySchedule& schedule, BinStats* stats = nullptr) {
  schedule.validate();
  if (link_ids.empty()) throw ConfigError("bin_records: no links");
  BinnedSeries series;
  series.schedule = schedule;
  series.link_ids = link_ids;
  const std::size_t nbins = schedule.total_bins();
  series.values.assign(link_ids.size(), std::vector<double>(nbins, 0.0));
  series.counts.assign(link_ids.size(), std::vector<std::uint32_t>(nbins, 0));
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < link_ids.size(); ++i) index.emplace(link_ids[i], i);

  BinStats local;
  std::vector<std::vector<double>> sums(link_ids.size(), std::vector<double>(nbins, 0.0));
  for (const auto& rec : records) {
    auto it = index.find(rec.link_id);
    if (it == index.end()) {
      ++local.unknown_link;
      continue;
    }
    if (!std::isfinite(rec.speed_kmh) || rec.speed_kmh < 0.0) {
      ++local.negative_speed;
      continue;
    }
    const auto bin = schedule.bin_of(rec.timestamp);
    if (!bin) {
      ++local.out_of_window;
      continue;
    }
    sums[it->second][*bin] += rec.speed_kmh;
    ++series.counts[it->second][*bin];
  }

  double global_sum = 0.0;
  std::size_t global_count = 0;
  for (std::size_t l = 0; l < link_ids.size(); ++l) {
    for (std::size_t b = 0; b < nbins; ++b) {
      if (series.counts[l][b] > 0) {
        series.values[l][b] = sums[l][b] / series.counts[l][b];
        global_sum += series.values[l][b];
        ++global_count;
      }
    }
  }
  if (global_count == 0) throw DataError("bin_records: no usable records");

  for (std::size_t l = 0; l < link_ids.size(); ++l) {
    double link_sum = 0.0;
    std::size_t link_count = 0;
    for (std::size_t b = 0; b < nbins; ++b) {
      if (series.counts[l][b] > 0) {
        link_sum += series.values[l][b];
        ++link_count;
      }
    }
    // leading gaps fall back to the link mean (or the global mean when the
    // link was never observed); later gaps carry the last value forward
    const double fallback =
        link_count > 0 ? link_sum / static_cast<double>(link_count)
                       : global_sum / static_cast<double>(global_count);
    double last = fallback;
    for (std::size_t b = 0; b < nbins; ++b) {
      if (series.counts[l][b] > 0) {
        last = series.values[l][b];
      } else {
        series.values[l][b] = last;
        ++local.gap_filled;
      }
    }
  }
  if (stats) *stats = local;
  return series;
}

/// Training sample: L consecutive input frames plus normalized per-link
/// target vectors at each horizon offset after the last input frame. Never
/// spans a service-day boundary.
struct SampleWindow {
  std::vector<GridFrame> inputs;
  std::vector<std::vector<double>> targets;  // [horizon][link], normalized
  std::size_t day = 0;
  std::size_t start_bin = 0;  // global bin index of the first input frame

  std::size_t first_bin() const { return start_bin; }
  std::size_t last_bin(std::size_t max_offset) const {
    return start_bin + inputs.size() - 1 + max_offset;
  }
};

inline void validate_horizons(const std::vector<std::size_t>& offsets) {
  if (offsets.empty()) throw ConfigError("horizon offsets must be nonempty");
  std::size_t prev = 0;
  for (auto o : offsets) {
    if (o < 1 || o <= prev) throw ConfigError("horizon offsets must be strictly increasing and >= 1");
    prev = o;
  }
}

/// Stride-1 sliding windows within each service day: inputs are encoded
/// grid frames, targets are normalized per-link speeds (link space, not
/// grids). Yields bins_per_day − L − max(offset) + 1 windows per day.
inline std::vector<SampleWindow> make_windows(const BinnedSeries& series, const NetworkMap& map,
                                              std::size_t seq_len,
                                              const std::vector<std::size_t>& offsets,
                                              double v_max) {
  validate_horizons(offsets);
  if (seq_len < 1) throw ConfigError("make_windows: sequence length must be >= 1");
  if (series.n_links() != map.n_links()) {
    throw ShapeError("make_windows: series has " + std::to_string(series.n_links()) +
                     " links, map has " + std::to_string(map.n_links()));
  }
  const std::size_t bins = series.schedule.bins_per_day();
  const std::size_t max_off = offsets.back();
  if (seq_len + max_off > bins) {
    throw DataError("make_windows: window needs " + std::to_string(seq_len + max_off) +
                    " bins but a day has only " + std::to_string(bins));
  }
  const std::size_t per_day = bins - seq_len - max_off + 1;
  std::vector<double> speeds(series.n_links());
  // frames are shared between overlapping windows; encode each bin once
  std::vector<SampleWindow> windows;
  windows.reserve(series.schedule.days * per_day);
  for (std::size_t day = 0; day < series.schedule.days; ++day) {
    std::vector<GridFrame> day_frames(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t g = day * bins + b;
      for (std::size_t l = 0; l < series.n_links(); ++l) speeds[l] = series.values[l][g];
      day_frames[b] = encode_frame(map, speeds, v_max, nullptr, static_cast<std::int64_t>(g));
    }
    for (std::size_t s = 0; s < per_day; ++s) {
      SampleWindow w;
      w.day = day;
      w.start_bin = day * bins + s;
      w.inputs.assign(day_frames.begin() + s, day_frames.begin() + s + seq_len);
      for (auto off : offsets) {
        const std::size_t g = day * bins + s + seq_len - 1 + off;
        std::vector<double> target(series.n_links());
        for (std::size_t l = 0; l < series.n_links(); ++l) {
          target[l] = std::min(series.values[l][g] / v_max, 1.0);
        }
        w.targets.push_back(std::move(target));
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

/// Prefix/suffix split by time. Windows whose bins straddle the boundary
/// are dropped so no test window shares a bin with any train window.
inline std::pair<std::vector<SampleWindow>, std::vector<SampleWindow>> chronological_split(
    const std::vector<SampleWindow>& windows, double train_fraction, std::size_t max_offset) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("chronological_split: fraction must be in (0,1)");
  }
  if (windows.empty()) throw DataError("chronological_split: no windows");
  const std::size_t k =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(windows.size())));
  if (k == 0) throw DataError("chronological_split: fraction leaves no training window");
  std::vector<SampleWindow> train(windows.begin(), windows.begin() + k);
  std::size_t train_max_bin = 0;
  for (const auto& w : train) train_max_bin = std::max(train_max_bin, w.last_bin(max_offset));
  std::vector<SampleWindow> test;
  for (std::size_t i = k; i < windows.size(); ++i) {
    if (windows[i].first_bin() > train_max_bin) test.push_back(windows[i]);
  }
  if (test.empty()) throw DataError("chronological_split: fraction leaves no test window");
  return {std::move(train), std::move(test)};
}

/// 99.5th-percentile normalization constant over the first train_fraction
/// of the series (by time), so the scale never peeks at test data.
inline double percentile_vmax(const BinnedSeries& series, double train_fraction,
                              double percentile = 99.5) {
  const std::size_t nbins = series.schedule.total_bins();
  const auto cutoff = static_cast<std::size_t>(
      std::ceil(train_fraction * static_cast<double>(nbins)));
  std::vector<double> pool;
  pool.reserve(series.n_links() * cutoff);
  for (std::size_t l = 0; l < series.n_links(); ++l) {
    for (std::size_t b = 0; b < cutoff && b < nbins; ++b) pool.push_back(series.values[l][b]);
  }
  if (pool.empty()) throw DataError("percentile_vmax: empty series");
  std::sort(pool.begin(), pool.end());
  const double rank = percentile / 100.0 * static_cast<double>(pool.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, pool.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  const double v = pool[lo] * (1.0 - frac) + pool[hi] * frac;
  if (v <= 0.0) throw DataError("percentile_vmax: non-positive normalization constant");
  return v;
}

// ---------------------------------------------------------------------------
// CSV input/output: header `link_id,timestamp,speed_kmh`; timestamps are
// ISO-8601 or integer epoch seconds, detected once per file.
// ---------------------------------------------------------------------------

inline std::optional<std::int64_t> parse_iso8601(const std::string& s) {
  std::tm tm{};
  int y, mo, d, h, mi, sec;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &sec) != 6) {
    return std::nullopt;
  }
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = sec;
  return static_cast<std::int64_t>(timegm(&tm));
}

inline std::vector<SpeedRecord> read_speed_csv(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("'" + name + "': empty file");
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "link_id,timestamp,speed_kmh") {
    throw DataError("'" + name + "': expected header 'link_id,timestamp,speed_kmh'");
  }
  std::vector<SpeedRecord> records;
  bool format_known = false, iso = false;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw DataError("'" + name + "' line " + std::to_string(lineno) + ": expected 3 fields");
    }
    SpeedRecord rec;
    rec.link_id = line.substr(0, c1);
    const std::string ts = line.substr(c1 + 1, c2 - c1 - 1);
    if (!format_known) {
      iso = ts.find('-') != std::string::npos || ts.find(':') != std::string::npos;
      format_known = true;
    }
    if (iso) {
      auto parsed = parse_iso8601(ts);
      if (!parsed) {
        throw DataError("'" + name + "' line " + std::to_string(lineno) +
                        ": bad ISO-8601 timestamp '" + ts + "'");
      }
      rec.timestamp = *parsed;
    } else {
      try {
        rec.timestamp = std::stoll(ts);
      } catch (...) {
        throw DataError("'" + name + "' line " + std::to_string(lineno) +
                        ": bad epoch timestamp '" + ts + "'");
      }
    }
    try {
      rec.speed_kmh = std::stod(line.substr(c2 + 1));
    } catch (...) {
      throw DataError("'" + name + "' line " + std::to_string(lineno) + ": bad speed value");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<SpeedRecord> read_speed_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "'");
  return read_speed_csv(is, path);
}

inline void write_speed_csv(std::ostream& os, const std::vector<SpeedRecord>& records) {
  os << "link_id,timestamp,speed_kmh\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.4f", r.speed_kmh);
    os << r.link_id << ',' << r.timestamp << ',' << buf << '\n';
  }
}

inline void write_speed_csv_file(const std::string& path, const std::vector<SpeedRecord>& records) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  write_speed_csv(os, records);
}

}  // namespace srcn
