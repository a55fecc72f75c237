#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcn/data.hpp"
#include "srcn/grid_codec.hpp"
#include "srcn/metrics.hpp"
#include "srcn/model.hpp"
#include "srcn/synth.hpp"

namespace srcn {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_fingerprint(const nlohmann::json& config, std::uint64_t seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(config.dump() + ":" + std::to_string(seed))));
  return buf;
}

// ---------------------------------------------------------------------------
// evaluation report
// ---------------------------------------------------------------------------

struct MetricTriple {
  double mape_value = 0.0;
  double mape_paper = 0.0;
  double rmse_value = 0.0;
};

struct HorizonEval {
  std::size_t offset_bins = 0;
  MetricTriple model;
  MetricTriple persistence;
  MetricTriple historical;
};

struct EvalReport {
  std::string fingerprint;
  std::vector<HorizonEval> horizons;
  std::size_t n = 0;    // links
  std::size_t m = 0;    // prediction instants over all horizons
  std::size_t n_p = 0;  // m * n
  double runtime_seconds = 0.0;
  nlohmann::json config_echo;
};

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json horizons = nlohmann::json::array();
  for (const auto& h : r.horizons) {
    horizons.push_back(
        {{"offset_bins", h.offset_bins},
         {"mape", h.model.mape_value},
         {"mape_paper_variant", h.model.mape_paper},
         {"rmse", h.model.rmse_value},
         {"baseline",
          {{"persistence",
            {{"mape", h.persistence.mape_value},
             {"mape_paper_variant", h.persistence.mape_paper},
             {"rmse", h.persistence.rmse_value}}},
           {"historical",
            {{"mape", h.historical.mape_value},
             {"mape_paper_variant", h.historical.mape_paper},
             {"rmse", h.historical.rmse_value}}}}}});
  }
  return nlohmann::json{{"config_fingerprint", r.fingerprint},
                       {"horizons", horizons},
                       {"n", r.n},
                       {"m", r.m},
                       {"n_p", r.n_p},
                       {"runtime_seconds", r.runtime_seconds},
                       {"config", r.config_echo}};
}

/// Predictions of the trained model plus both baselines over the test
/// windows, scored in km/h against the series' true values.
inline EvalReport evaluate_on_windows(const SrcnParams& params, const SrcnConfig& cfg,
                                      const std::vector<SampleWindow>& test,
                                      const BinnedSeries& series, const NetworkMap& map,
                                      double v_max, const HistoricalAverage& hist,
                                      double mape_eps) {
  if (test.empty()) throw DataError("evaluate: no test windows");
  EvalReport report;
  report.n = map.n_links();
  const std::size_t n_h = cfg.horizons.size();
  std::vector<PredMatrix> model_pred(n_h), persist_pred(n_h), hist_pred(n_h), actual(n_h);

  auto rng = make_rng(0);
  std::vector<const SampleWindow*> ptrs;
  for (const auto& w : test) ptrs.push_back(&w);
  for (std::size_t pos = 0; pos < ptrs.size(); pos += cfg.batch_size) {
    const std::size_t b_n = std::min(cfg.batch_size, ptrs.size() - pos);
    std::vector<const SampleWindow*> batch(ptrs.begin() + pos, ptrs.begin() + pos + b_n);
    auto frames = make_window_batch(batch, cfg);
    auto outs = forward_batch(nullptr, params, cfg, frames, b_n, Mode::Infer, rng);
    for (std::size_t b = 0; b < b_n; ++b) {
      const auto& w = *batch[b];
      auto persist = persistence_baseline(w, map, v_max, n_h);
      for (std::size_t h = 0; h < n_h; ++h) {
        std::vector<double> mp(report.n);
        for (std::size_t l = 0; l < report.n; ++l) {
          mp[l] = outs[h]->at(b, l) * v_max;
        }
        const std::size_t target_bin = w.start_bin + cfg.seq_len - 1 + cfg.horizons[h];
        std::vector<double> hp(report.n), act(report.n);
        for (std::size_t l = 0; l < report.n; ++l) {
          hp[l] = hist.predict(l, target_bin);
          act[l] = series.values[l][target_bin];
        }
        model_pred[h].push_back(std::move(mp));
        persist_pred[h].push_back(std::move(persist[h]));
        hist_pred[h].push_back(std::move(hp));
        actual[h].push_back(std::move(act));
      }
    }
  }

  for (std::size_t h = 0; h < n_h; ++h) {
    HorizonEval he;
    he.offset_bins = cfg.horizons[h];
    he.model = {mape(model_pred[h], actual[h], mape_eps),
                mape_paper_variant(model_pred[h], actual[h], mape_eps),
                rmse(model_pred[h], actual[h])};
    he.persistence = {mape(persist_pred[h], actual[h], mape_eps),
                      mape_paper_variant(persist_pred[h], actual[h], mape_eps),
                      rmse(persist_pred[h], actual[h])};
    he.historical = {mape(hist_pred[h], actual[h], mape_eps),
                     mape_paper_variant(hist_pred[h], actual[h], mape_eps),
                     rmse(hist_pred[h], actual[h])};
    report.horizons.push_back(he);
    report.m += model_pred[h].size();
  }
  report.n_p = report.m * report.n;
  return report;
}

// ---------------------------------------------------------------------------
// table and plot emission
// ---------------------------------------------------------------------------

inline void write_error_table_csv(const EvalReport& r, std::ostream& os) {
  os << "method";
  for (const auto& h : r.horizons) {
    os << ",mape@" << h.offset_bins << ",rmse@" << h.offset_bins;
  }
  os << ",avg_mape,avg_rmse\n";
  auto row = [&](const char* name, auto pick) {
    os << name;
    double sm = 0.0, sr = 0.0;
    for (const auto& h : r.horizons) {
      const MetricTriple& t = pick(h);
      char buf[64];
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", t.mape_value, t.rmse_value);
      os << buf;
      sm += t.mape_value;
      sr += t.rmse_value;
    }
    char buf[64];
    const auto k = static_cast<double>(r.horizons.size());
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", sm / k, sr / k);
    os << buf;
  };
  row("srcn", [](const HorizonEval& h) -> const MetricTriple& { return h.model; });
  row("persistence", [](const HorizonEval& h) -> const MetricTriple& { return h.persistence; });
  row("historical_average",
      [](const HorizonEval& h) -> const MetricTriple& { return h.historical; });
}

namespace detail {

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> y;
};

inline void write_svg_line_chart(std::ostream& os, const std::string& title,
                                 const std::vector<SvgSeries>& series) {
  const double w = 860, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
  double lo = 0.0, hi = 1.0;
  bool first = true;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double px = (w - ml - mr) / static_cast<double>(n > 1 ? n - 1 : 1);
  const double py = (h - mt - mb) / (hi - lo);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\">\n";
  os << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title
     << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"#333\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"#333\"/>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", hi);
  os << "<text x=\"4\" y=\"" << mt + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf
     << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.1f", lo);
  os << "<text x=\"4\" y=\"" << h - mb << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf
     << "</text>\n";
  double legend_x = ml + 10;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double x = ml + px * static_cast<double>(i);
      const double y = h - mb - (s.y[i] - lo) * py;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
      os << buf;
    }
    os << "\"/>\n";
    os << "<text x=\"" << legend_x << "\" y=\"" << mt - 6 << "\" fill=\"" << s.color
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    legend_x += 16 * static_cast<double>(s.label.size());
  }
  os << "</svg>\n";
}

inline void write_svg_bar_chart(std::ostream& os, const std::string& title,
                                const std::vector<std::string>& group_labels,
                                const std::vector<SvgSeries>& series) {
  const double w = 860, h = 420, ml = 60, mr = 20, mt = 40, mb = 60;
  double hi = 0.0;
  for (const auto& s : series) {
    for (double v : s.y) hi = std::max(hi, v);
  }
  if (hi <= 0.0) hi = 1.0;
  const std::size_t groups = group_labels.size();
  const double group_w = (w - ml - mr) / static_cast<double>(groups);
  const double bar_w = group_w / static_cast<double>(series.size() + 1);
  const double py = (h - mt - mb) / hi;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\">\n";
  os << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title
     << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"#333\"/>\n";
  char buf[128];
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (g >= series[s].y.size()) continue;
      const double v = series[s].y[g];
      const double x = ml + group_w * static_cast<double>(g) + bar_w * (static_cast<double>(s) + 0.5);
      const double bh = v * py;
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n",
                    x, h - mb - bh, bar_w * 0.9, bh, series[s].color.c_str());
      os << buf;
    }
    os << "<text x=\"" << ml + group_w * (static_cast<double>(g) + 0.35) << "\" y=\"" << h - mb + 18
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << group_labels[g] << "</text>\n";
  }
  double legend_x = ml + 10;
  for (const auto& s : series) {
    os << "<text x=\"" << legend_x << "\" y=\"" << mt - 6 << "\" fill=\"" << s.color
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    legend_x += 16 * static_cast<double>(s.label.size());
  }
  os << "</svg>\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// experiment configuration
// ---------------------------------------------------------------------------

/// Everything one experiment needs, parsed from a single JSON document.
struct ExperimentConfig {
  nlohmann::json raw;
  DaySchedule schedule;
  double train_fraction = 0.7;
  double v_max_override = 0.0;  // 0 = percentile rule
  double mape_eps = 1.0;
  std::size_t plot_links = 2;
  std::vector<std::size_t> short_horizons = {1, 2, 3};
  std::vector<std::size_t> long_horizons = {10, 20, 30};

  static ExperimentConfig parse(const nlohmann::json& j) {
    ExperimentConfig c;
    c.raw = j;
    try {
      if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        if (s.contains("start_epoch")) c.schedule.start_epoch = s.at("start_epoch").get<std::int64_t>();
        if (s.contains("days")) c.schedule.days = s.at("days").get<std::size_t>();
        if (s.contains("day_start_sec")) c.schedule.day_start_sec = s.at("day_start_sec").get<int>();
        if (s.contains("day_end_sec")) c.schedule.day_end_sec = s.at("day_end_sec").get<int>();
        if (s.contains("bin_width_sec")) c.schedule.bin_width_sec = s.at("bin_width_sec").get<int>();
      }
      if (j.contains("train_fraction")) c.train_fraction = j.at("train_fraction").get<double>();
      if (j.contains("v_max_kmh")) c.v_max_override = j.at("v_max_kmh").get<double>();
      if (j.contains("mape_epsilon_kmh")) c.mape_eps = j.at("mape_epsilon_kmh").get<double>();
      if (j.contains("plot_links")) c.plot_links = j.at("plot_links").get<std::size_t>();
      if (j.contains("horizons")) {
        const auto& h = j.at("horizons");
        if (h.contains("short")) c.short_horizons = h.at("short").get<std::vector<std::size_t>>();
        if (h.contains("long")) c.long_horizons = h.at("long").get<std::vector<std::size_t>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    c.schedule.validate();
    validate_horizons(c.short_horizons);
    validate_horizons(c.long_horizons);
    return c;
  }
};

inline MeshNetwork network_from_config(const nlohmann::json& j) {
  if (!j.contains("network")) throw ConfigError("experiment config: missing 'network'");
  const auto& nj = j.at("network");
  try {
    if (nj.contains("file")) {
      MeshNetwork net;
      net.map = load_network_file(nj.at("file").get<std::string>());
      net.adjacency = link_adjacency_from_endpoints(net.map.links);
      return net;
    }
    if (nj.contains("mesh")) {
      const auto& m = nj.at("mesh");
      return make_mesh_network(m.at("rows").get<std::size_t>(), m.at("cols").get<std::size_t>(),
                               m.at("grid_height").get<std::size_t>(),
                               m.at("grid_width").get<std::size_t>(),
                               m.value("cell_size_deg", 0.001),
                               m.value("max_links", std::size_t{0}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed network config: ") + e.what());
  }
  throw ConfigError("experiment config: 'network' needs 'file' or 'mesh'");
}

inline SyntheticParams synthetic_params_from_config(const nlohmann::json& sj) {
  SyntheticParams p;
  try {
    auto get = [&sj](const char* key, auto& field) {
      if (sj.contains(key)) field = sj.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("free_flow_kmh", p.free_flow_kmh);
    get("congested_kmh", p.congested_kmh);
    get("demand_amplitude", p.demand_amplitude);
    get("noise_sigma_kmh", p.noise_sigma_kmh);
    get("propagation_delay_bins", p.propagation_delay_bins);
    get("severity_decay", p.severity_decay);
    get("recovery_bins", p.recovery_bins);
    get("max_hops", p.max_hops);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synthetic config: ") + e.what());
  }
  return p;
}

/// Model hyperparameters from the experiment document; grid dims, link
/// count, and horizons are filled in by the caller.
inline SrcnConfig model_config_from_experiment(const nlohmann::json& j, const NetworkMap& map,
                                               const std::vector<std::size_t>& horizons) {
  SrcnConfig cfg;
  if (j.contains("model")) cfg = config_from_json(j.at("model"));
  cfg.grid_height = map.spec.height;
  cfg.grid_width = map.spec.width;
  cfg.n_links = map.n_links();
  cfg.horizons = horizons;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// staged experiment runner
// ---------------------------------------------------------------------------

/// Tracks files created by a run so a failed stage can remove its partial
/// outputs before the error propagates.
class OutputTracker {
 public:
  std::ofstream create(const std::string& path, bool binary = false) {
    files_.push_back(path);
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw DataError("cannot create output file '" + path + "'");
    return os;
  }
  void note(const std::string& path) { files_.push_back(path); }
  void purge() {
    for (const auto& f : files_) {
      std::error_code ec;
      std::filesystem::remove(f, ec);
    }
    files_.clear();
  }

 private:
  std::vector<std::string> files_;
};

struct HorizonSetResult {
  std::string name;
  EvalReport report;
  TrainOutcome training;
};

struct ExperimentResult {
  std::vector<HorizonSetResult> sets;
  double v_max = 0.0;
};

/// Runs ingest -> window -> train -> evaluate for the configured horizon
/// sets and writes reports, error tables, plots, checkpoints, and logs into
/// out_dir. Any stage failure removes the partial outputs and rethrows with
/// the stage name.
inline ExperimentResult run_experiment(const nlohmann::json& config, const std::string& out_dir,
                                       std::uint64_t seed, bool timing = false,
                                       std::ostream* progress = nullptr,
                                       const std::string& only_set = "") {
  const auto t0 = std::chrono::steady_clock::now();
  OutputTracker outputs;
  std::string stage = "parse-config";
  auto note = [&](const std::string& msg) {
    if (progress) *progress << "[" << stage << "] " << msg << "\n";
  };
  try {
    const auto exp = ExperimentConfig::parse(config);
    const std::string fingerprint = config_fingerprint(config, seed);
    std::filesystem::create_directories(out_dir);
    auto path = [&](const std::string& name) { return out_dir + "/" + name; };
    {
      auto os = outputs.create(path("config.json"));
      os << config.dump(2) << "\n";
    }

    stage = "network";
    auto net = network_from_config(config);
    note(std::to_string(net.map.n_links()) + " links on " +
         std::to_string(net.map.spec.height) + "x" + std::to_string(net.map.spec.width) +
         " grid");
    {
      auto os = outputs.create(path("network.json"));
      os << network_to_json(net.map.spec, net.map.links).dump(2) << "\n";
    }

    stage = "data";
    std::vector<SpeedRecord> records;
    if (config.contains("data") && config.at("data").contains("csv")) {
      records = read_speed_csv_file(config.at("data").at("csv").get<std::string>());
    } else if (config.contains("data") && config.at("data").contains("synthetic")) {
      const auto& sj = config.at("data").at("synthetic");
      auto params = synthetic_params_from_config(sj);
      const double rate = sj.value("incidents_per_day", 6.0);
      auto synth = generate_synthetic(net.map, net.adjacency, exp.schedule, seed, rate, params);
      {
        auto os = outputs.create(path("speeds.csv"));
        write_speed_csv(os, synth.records);
      }
      {
        auto os = outputs.create(path("incidents.json"));
        os << incidents_to_json(net.map, synth.incidents).dump(2) << "\n";
      }
      records = std::move(synth.records);
    } else {
      throw ConfigError("experiment config: 'data' needs 'csv' or 'synthetic'");
    }
    note(std::to_string(records.size()) + " records");

    stage = "bin";
    std::vector<std::string> link_ids;
    for (const auto& l : net.map.links) link_ids.push_back(l.id);
    BinStats bin_stats;
    auto series = bin_records(records, link_ids, exp.schedule, &bin_stats);
    note(std::to_string(series.schedule.total_bins()) + " bins/link, " +
         std::to_string(bin_stats.gap_filled) + " gap-filled");

    stage = "normalize";
    const double v_max =
        exp.v_max_override > 0.0 ? exp.v_max_override : percentile_vmax(series, exp.train_fraction);

    ExperimentResult result;
    result.v_max = v_max;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> sets;
    if (only_set.empty() || only_set == "short") sets.emplace_back("short", exp.short_horizons);
    if (only_set.empty() || only_set == "long") sets.emplace_back("long", exp.long_horizons);
    if (sets.empty()) throw ConfigError("unknown horizon set '" + only_set + "'");

    for (const auto& [set_name, horizons] : sets) {
      stage = "window-" + set_name;
      auto cfg = model_config_from_experiment(config, net.map, horizons);
      auto windows = make_windows(series, net.map, cfg.seq_len, horizons, v_max);
      auto [train_windows, test_windows] =
          chronological_split(windows, exp.train_fraction, horizons.back());
      note(std::to_string(train_windows.size()) + " train / " +
           std::to_string(test_windows.size()) + " test windows");

      stage = "train-" + set_name;
      auto log_os = outputs.create(path("train_log_" + set_name + ".jsonl"));
      auto outcome = train(cfg, train_windows, seed, &log_os);
      note("best val mse " + std::to_string(outcome.best_val_mse) + " at epoch " +
           std::to_string(outcome.best_epoch));
      {
        auto os = outputs.create(path("checkpoint_" + set_name + ".srcn"), true);
        save_checkpoint(outcome.params, cfg, os);
      }

      stage = "evaluate-" + set_name;
      const std::size_t train_end_bin =
          train_windows.back().last_bin(horizons.back()) + 1;
      auto hist = HistoricalAverage::fit(series, train_end_bin);
      auto report = evaluate_on_windows(outcome.params, cfg, test_windows, series, net.map, v_max,
                                        hist, exp.mape_eps);
      report.fingerprint = fingerprint;
      report.config_echo = config;
      if (timing) {
        report.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      {
        auto os = outputs.create(path("report_" + set_name + ".json"));
        os << report_to_json(report).dump(2) << "\n";
      }
      {
        auto os = outputs.create(path("error_table_" + set_name + ".csv"));
        write_error_table_csv(report, os);
      }

      stage = "plots-" + set_name;
      // error-vs-horizon bars plus per-link predicted/actual traces, each
      // with its data as CSV so any tool can redraw them
      {
        std::vector<std::string> groups;
        detail::SvgSeries sm{"srcn", "#1f77b4", {}}, sp{"persistence", "#d62728", {}},
            sh{"historical", "#2ca02c", {}};
        for (const auto& h : report.horizons) {
          groups.push_back(std::to_string(h.offset_bins * exp.schedule.bin_width_sec / 60) +
                           " min");
          sm.y.push_back(h.model.mape_value);
          sp.y.push_back(h.persistence.mape_value);
          sh.y.push_back(h.historical.mape_value);
        }
        auto os = outputs.create(path("error_vs_horizon_" + set_name + ".svg"));
        detail::write_svg_bar_chart(os, "MAPE by horizon (" + set_name + ")", groups,
                                    {sm, sp, sh});
      }
      {
        const std::size_t n_plot_links = std::min(exp.plot_links, net.map.n_links());
        const std::size_t n_plot_windows = std::min<std::size_t>(test_windows.size(), 300);
        std::vector<std::vector<double>> first_horizon_preds;  // [window][link], km/h
        std::vector<std::size_t> target_bins;
        for (std::size_t i = 0; i < n_plot_windows; ++i) {
          const auto& w = test_windows[i];
          auto preds = predict_window(outcome.params, cfg, w);
          for (auto& v : preds.front()) v *= v_max;
          first_horizon_preds.push_back(std::move(preds.front()));
          target_bins.push_back(w.start_bin + cfg.seq_len - 1 + horizons.front());
        }
        for (std::size_t l = 0; l < n_plot_links; ++l) {
          detail::SvgSeries actual{"actual", "#333333", {}}, predicted{"srcn", "#1f77b4", {}};
          auto csv = outputs.create(path("pred_vs_actual_" + set_name + "_" +
                                         net.map.links[l].id + ".csv"));
          csv << "target_bin,actual_kmh,srcn_kmh\n";
          for (std::size_t i = 0; i < n_plot_windows; ++i) {
            const double a = series.values[l][target_bins[i]];
            const double pv = first_horizon_preds[i][l];
            actual.y.push_back(a);
            predicted.y.push_back(pv);
            csv << target_bins[i] << ',' << a << ',' << pv << '\n';
          }
          auto os = outputs.create(path("pred_vs_actual_" + set_name + "_" +
                                        net.map.links[l].id + ".svg"));
          detail::write_svg_line_chart(os, "link " + net.map.links[l].id + " (" + set_name + ")",
                                       {actual, predicted});
        }
      }
      result.sets.push_back({set_name, std::move(report), std::move(outcome)});
    }
    return result;
  } catch (const ConfigError& e) {
    outputs.purge();
    throw ConfigError("stage '" + stage + "': " + e.what());
  } catch (const NumericsError& e) {
    outputs.purge();
    throw NumericsError("stage '" + stage + "': " + e.what());
  } catch (const std::exception& e) {
    outputs.purge();
    throw DataError("stage '" + stage + "': " + e.what());
  }
}

}  // namespace srcn
