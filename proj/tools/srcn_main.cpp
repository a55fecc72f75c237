// srcn: grid-image traffic forecasting pipeline.
//
// Subcommands: rasterize, synth, train, predict, evaluate, run.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical-health
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "srcn/srcn.hpp"

namespace {

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) throw srcn::ConfigError("--config is required for this command");
  std::ifstream is(path);
  if (!is) throw srcn::ConfigError("cannot open config file '" + path + "'");
  try {
    nlohmann::json j;
    is >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw srcn::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

struct DataBundle {
  srcn::MeshNetwork net;
  srcn::BinnedSeries series;
  double v_max = 0.0;
};

DataBundle load_data(const nlohmann::json& config, const std::string& csv_override) {
  DataBundle b;
  const auto exp = srcn::ExperimentConfig::parse(config);
  b.net = srcn::network_from_config(config);
  std::string csv = csv_override;
  if (csv.empty() && config.contains("data") && config.at("data").contains("csv")) {
    csv = config.at("data").at("csv").get<std::string>();
  }
  if (csv.empty()) throw srcn::ConfigError("no CSV input: pass --data or config data.csv");
  auto records = srcn::read_speed_csv_file(csv);
  std::vector<std::string> ids;
  for (const auto& l : b.net.map.links) ids.push_back(l.id);
  b.series = srcn::bin_records(records, ids, exp.schedule);
  b.v_max = exp.v_max_override > 0.0 ? exp.v_max_override
                                     : srcn::percentile_vmax(b.series, exp.train_fraction);
  return b;
}

int cmd_rasterize(const std::string& config_path, const std::string& network_path,
                  const std::string& out_dir) {
  srcn::MeshNetwork net;
  if (!network_path.empty()) {
    net.map = srcn::load_network_file(network_path);
    net.adjacency = srcn::link_adjacency_from_endpoints(net.map.links);
  } else {
    net = srcn::network_from_config(load_config(config_path));
  }
  std::filesystem::create_directories(out_dir);
  // coverage image: every covered cell at full intensity
  srcn::GridFrame coverage(net.map.spec.height, net.map.spec.width);
  for (std::size_t ci = 0; ci < net.map.cell_links.size(); ++ci) {
    if (!net.map.cell_links[ci].empty()) coverage.values[ci] = 1.0;
  }
  srcn::write_pgm_file(coverage, out_dir + "/coverage.pgm");
  srcn::save_network_file(net.map, out_dir + "/network.json");
  std::size_t covered = 0, shared = 0;
  for (const auto& cl : net.map.cell_links) {
    if (!cl.empty()) ++covered;
    if (cl.size() > 1) ++shared;
  }
  std::cout << "links: " << net.map.n_links() << "\n"
            << "grid: " << net.map.spec.height << "x" << net.map.spec.width << "\n"
            << "covered cells: " << covered << " (" << shared << " shared)\n";
  for (std::size_t l = 0; l < net.map.n_links(); ++l) {
    std::cout << "  " << net.map.links[l].id << ": " << net.map.link_cells[l].size()
              << " cells\n";
  }
  return 0;
}

int cmd_synth(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
  const auto config = load_config(config_path);
  const auto exp = srcn::ExperimentConfig::parse(config);
  auto net = srcn::network_from_config(config);
  srcn::SyntheticParams params;
  double rate = 6.0;
  if (config.contains("data") && config.at("data").contains("synthetic")) {
    const auto& sj = config.at("data").at("synthetic");
    params = srcn::synthetic_params_from_config(sj);
    rate = sj.value("incidents_per_day", rate);
  }
  auto out = srcn::generate_synthetic(net.map, net.adjacency, exp.schedule, seed, rate, params);
  std::filesystem::create_directories(out_dir);
  srcn::write_speed_csv_file(out_dir + "/speeds.csv", out.records);
  {
    std::ofstream os(out_dir + "/incidents.json");
    os << srcn::incidents_to_json(net.map, out.incidents).dump(2) << "\n";
  }
  {
    std::ofstream os(out_dir + "/config.json");
    os << config.dump(2) << "\n";
  }
  srcn::save_network_file(net.map, out_dir + "/network.json");
  std::cout << "wrote " << out.records.size() << " records, " << out.incidents.size()
            << " incidents to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& csv, std::uint64_t seed,
              const std::string& set_name, const std::string& out_dir) {
  const auto config = load_config(config_path);
  const auto exp = srcn::ExperimentConfig::parse(config);
  auto bundle = load_data(config, csv);
  const auto& horizons = set_name == "long" ? exp.long_horizons : exp.short_horizons;
  auto cfg = srcn::model_config_from_experiment(config, bundle.net.map, horizons);
  auto windows = srcn::make_windows(bundle.series, bundle.net.map, cfg.seq_len, horizons,
                                    bundle.v_max);
  auto [train_windows, test_windows] =
      srcn::chronological_split(windows, exp.train_fraction, horizons.back());
  (void)test_windows;
  std::filesystem::create_directories(out_dir);
  std::ofstream log(out_dir + "/train_log_" + set_name + ".jsonl");
  auto outcome = srcn::train(cfg, train_windows, seed, &log);
  srcn::save_checkpoint_file(outcome.params, cfg, out_dir + "/checkpoint_" + set_name + ".srcn");
  {
    std::ofstream os(out_dir + "/config.json");
    os << config.dump(2) << "\n";
  }
  std::cout << "trained " << outcome.log.size() << " epochs, best val mse "
            << outcome.best_val_mse << " at epoch " << outcome.best_epoch << "\n"
            << "checkpoint: " << out_dir << "/checkpoint_" << set_name << ".srcn\n";
  return 0;
}

int cmd_predict(const std::string& config_path, const std::string& checkpoint,
                const std::string& csv, const std::string& out_path) {
  const auto config = load_config(config_path);
  auto [params, cfg] = srcn::load_checkpoint_file(checkpoint);
  auto bundle = load_data(config, csv);
  if (bundle.net.map.n_links() != cfg.n_links) {
    throw srcn::DataError("checkpoint was trained for " + std::to_string(cfg.n_links) +
                          " links, network has " + std::to_string(bundle.net.map.n_links()));
  }
  auto windows = srcn::make_windows(bundle.series, bundle.net.map, cfg.seq_len, cfg.horizons,
                                    bundle.v_max);
  std::ofstream os(out_path);
  if (!os) throw srcn::DataError("cannot write '" + out_path + "'");
  os << "window_start_bin,link_id,offset_bins,predicted_kmh\n";
  for (const auto& w : windows) {
    auto preds = srcn::predict_window(params, cfg, w);
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      for (std::size_t l = 0; l < cfg.n_links; ++l) {
        os << w.start_bin << ',' << bundle.net.map.links[l].id << ',' << cfg.horizons[h] << ','
           << preds[h][l] * bundle.v_max << '\n';
      }
    }
  }
  std::cout << "wrote predictions for " << windows.size() << " windows to " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 const std::string& csv, const std::string& out_dir, std::uint64_t seed,
                 bool timing) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto config = load_config(config_path);
  const auto exp = srcn::ExperimentConfig::parse(config);
  auto [params, cfg] = srcn::load_checkpoint_file(checkpoint);
  auto bundle = load_data(config, csv);
  auto windows = srcn::make_windows(bundle.series, bundle.net.map, cfg.seq_len, cfg.horizons,
                                    bundle.v_max);
  auto [train_windows, test_windows] =
      srcn::chronological_split(windows, exp.train_fraction, cfg.horizons.back());
  const std::size_t train_end_bin = train_windows.back().last_bin(cfg.horizons.back()) + 1;
  auto hist = srcn::HistoricalAverage::fit(bundle.series, train_end_bin);
  auto report = srcn::evaluate_on_windows(params, cfg, test_windows, bundle.series,
                                          bundle.net.map, bundle.v_max, hist, exp.mape_eps);
  report.fingerprint = srcn::config_fingerprint(config, seed);
  report.config_echo = config;
  if (timing) {
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir + "/report.json");
    os << srcn::report_to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream os(out_dir + "/error_table.csv");
    srcn::write_error_table_csv(report, os);
  }
  for (const auto& h : report.horizons) {
    std::cout << "offset " << h.offset_bins << ": mape " << h.model.mape_value << " rmse "
              << h.model.rmse_value << " (persistence mape " << h.persistence.mape_value
              << ")\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
            const std::string& only_set, bool timing) {
  const auto config = load_config(config_path);
  auto result = srcn::run_experiment(config, out_dir, seed, timing, &std::cerr, only_set);
  for (const auto& set : result.sets) {
    std::cout << set.name << "-term report:\n";
    for (const auto& h : set.report.horizons) {
      std::cout << "  offset " << h.offset_bins << ": mape " << h.model.mape_value << " rmse "
                << h.model.rmse_value << " | persistence mape " << h.persistence.mape_value
                << " | historical mape " << h.historical.mape_value << "\n";
    }
  }
  std::cout << "outputs in " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srcn: network-wide traffic forecasting on rasterized speed images"};
  app.require_subcommand(1);

  std::string config_path, network_path, csv_path, checkpoint_path;
  std::string out_dir = "out", out_path = "predictions.csv", set_name = "short", only_set;
  std::uint64_t seed = 0;
  bool timing = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)");
    cmd->add_option("--seed", seed, "RNG seed (default 0)");
  };

  auto* rasterize = app.add_subcommand("rasterize", "rasterize a network and dump coverage");
  add_common(rasterize);
  rasterize->add_option("--network", network_path, "network JSON file");
  rasterize->add_option("--out", out_dir, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);
  synth->add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train);
  train->add_option("--data", csv_path, "speeds CSV (overrides config)");
  train->add_option("--set", set_name, "horizon set: short|long")
      ->check(CLI::IsMember({"short", "long"}));
  train->add_option("--out", out_dir, "output directory");

  auto* predict = app.add_subcommand("predict", "predict with a checkpoint");
  add_common(predict);
  predict->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  predict->add_option("--data", csv_path, "speeds CSV (overrides config)");
  predict->add_option("--out", out_path, "predictions CSV path");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint against baselines");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  evaluate->add_option("--data", csv_path, "speeds CSV (overrides config)");
  evaluate->add_option("--out", out_dir, "output directory");
  evaluate->add_flag("--timing", timing, "write measured runtime into the report");

  auto* run = app.add_subcommand("run", "full experiment: ingest, window, train, evaluate");
  add_common(run);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", only_set, "restrict to one horizon set: short|long")
      ->check(CLI::IsMember({"short", "long"}));
  run->add_flag("--timing", timing, "write measured runtime into reports");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rasterize->parsed()) return cmd_rasterize(config_path, network_path, out_dir);
    if (synth->parsed()) return cmd_synth(config_path, seed, out_dir);
    if (train->parsed()) return cmd_train(config_path, csv_path, seed, set_name, out_dir);
    if (predict->parsed()) return cmd_predict(config_path, checkpoint_path, csv_path, out_path);
    if (evaluate->parsed()) {
      return cmd_evaluate(config_path, checkpoint_path, csv_path, out_dir, seed, timing);
    }
    if (run->parsed()) return cmd_run(config_path, seed, out_dir, only_set, timing);
  } catch (const srcn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const srcn::NumericsError& e) {
    std::cerr << "numerical-health failure: " << e.what() << "\n";
    return 4;
  } catch (const srcn::ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const srcn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
