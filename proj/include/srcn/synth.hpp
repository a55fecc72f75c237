#pragma once

#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcn/data.hpp"
#include "srcn/grid_codec.hpp"
#include "srcn/rng.hpp"

namespace srcn {

struct Incident {
  std::size_t link_index = 0;
  std::size_t start_bin = 0;  // global bin index
  std::size_t duration_bins = 0;
  double severity = 1.0;  // 1 = full drop to the congested speed
};

/// Fixture constants of the generator; not claims about real traffic.
struct SyntheticParams {
  double free_flow_kmh = 60.0;
  double congested_kmh = 10.0;
  double demand_amplitude = 0.35;  // fractional midday dip of the daily profile
  double noise_sigma_kmh = 2.0;
  double link_speed_jitter = 0.05;  // per-link free-flow variation
  double link_amp_jitter = 0.2;     // per-link demand-amplitude variation
  int propagation_delay_bins = 2;   // per hop
  double severity_decay = 0.6;      // per hop
  int recovery_bins = 15;
  int max_hops = 3;
  std::size_t incident_min_duration = 10;
  std::size_t incident_max_duration = 25;
  double severity_min = 0.6;
  double severity_max = 1.0;
  std::vector<Incident> scripted_incidents;  // applied in addition to the Poisson draw
};

struct SynthOutput {
  std::vector<SpeedRecord> records;
  std::vector<Incident> incidents;
  std::vector<double> expected_daily_mean_kmh;  // noiseless incident-free mean per link
};

namespace detail {

/// BFS hop distances from a source link, capped at max_hops.
inline std::vector<int> hop_distances(const std::vector<std::vector<std::size_t>>& adj,
                                      std::size_t source, int max_hops) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    if (dist[u] >= max_hops) continue;
    for (auto v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace detail

/// Congestion-propagation fixture: per-link free-flow speed with a daily
/// sinusoidal demand profile plus noise; Poisson-injected incidents drop the
/// struck link toward the congested speed and spread to graph neighbors one
/// propagation delay per hop with geometric severity decay, recovering
/// linearly afterwards. Deterministic per seed; the injected incidents come
/// back as a ground-truth log.
inline SynthOutput generate_synthetic(const NetworkMap& map,
                                      const std::vector<std::vector<std::size_t>>& adjacency,
                                      const DaySchedule& schedule, std::uint64_t seed,
                                      double incidents_per_day,
                                      const SyntheticParams& params = {}) {
  schedule.validate();
  if (adjacency.size() != map.n_links() || map.n_links() == 0) {
    throw ConfigError("generate_synthetic: adjacency must cover every link");
  }
  if (incidents_per_day < 0.0) throw ConfigError("generate_synthetic: negative incident rate");
  const std::size_t n = map.n_links();
  const std::size_t bins = schedule.bins_per_day();
  const std::size_t total = schedule.total_bins();

  auto structure_rng = make_rng(derive_seed(seed, "synth-structure"));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> free_flow(n), amp(n);
  for (std::size_t l = 0; l < n; ++l) {
    free_flow[l] = params.free_flow_kmh * (1.0 + params.link_speed_jitter * uni(structure_rng));
    amp[l] = params.demand_amplitude * (1.0 + params.link_amp_jitter * uni(structure_rng));
  }

  auto incident_rng = make_rng(derive_seed(seed, "synth-incidents"));
  std::vector<Incident> incidents = params.scripted_incidents;
  if (incidents_per_day > 0.0) {
    std::poisson_distribution<int> count_dist(incidents_per_day);
    std::uniform_int_distribution<std::size_t> link_dist(0, n - 1);
    std::uniform_int_distribution<std::size_t> dur_dist(params.incident_min_duration,
                                                        params.incident_max_duration);
    std::uniform_real_distribution<double> sev_dist(params.severity_min, params.severity_max);
    for (std::size_t day = 0; day < schedule.days; ++day) {
      const int k = count_dist(incident_rng);
      for (int i = 0; i < k; ++i) {
        Incident inc;
        inc.link_index = link_dist(incident_rng);
        std::uniform_int_distribution<std::size_t> start_dist(0, bins - 1);
        inc.start_bin = day * bins + start_dist(incident_rng);
        inc.duration_bins = dur_dist(incident_rng);
        inc.severity = sev_dist(incident_rng);
        incidents.push_back(inc);
      }
    }
  }

  // accumulated incident effect per (link, bin): the strongest overlapping
  // effect wins, speeds never drop below the congested level
  std::vector<std::vector<double>> effect(n, std::vector<double>(total, 0.0));
  for (const auto& inc : incidents) {
    if (inc.link_index >= n) throw ConfigError("generate_synthetic: incident link out of range");
    if (inc.start_bin >= total) throw ConfigError("generate_synthetic: incident start out of range");
    const auto dist = detail::hop_distances(adjacency, inc.link_index, params.max_hops);
    // effects end with the incident's service day; nothing survives the
    // overnight gap
    const std::size_t day_end = (inc.start_bin / bins + 1) * bins;
    for (std::size_t l = 0; l < n; ++l) {
      if (dist[l] < 0) continue;
      const double sev = inc.severity * std::pow(params.severity_decay, dist[l]);
      const std::size_t onset =
          inc.start_bin + static_cast<std::size_t>(dist[l] * params.propagation_delay_bins);
      for (std::size_t b = onset; b < day_end; ++b) {
        const std::size_t since = b - onset;
        double e;
        if (since < inc.duration_bins) {
          e = sev;
        } else {
          const std::size_t rec = since - inc.duration_bins;
          if (rec >= static_cast<std::size_t>(params.recovery_bins)) break;
          e = sev * (1.0 - (static_cast<double>(rec) + 1.0) / params.recovery_bins);
        }
        effect[l][b] = std::max(effect[l][b], e);
      }
    }
  }

  auto noise_rng = make_rng(derive_seed(seed, "synth-noise"));
  std::normal_distribution<double> noise(0.0, params.noise_sigma_kmh);
  SynthOutput out;
  out.incidents = std::move(incidents);
  out.records.reserve(n * total);
  out.expected_daily_mean_kmh.resize(n);
  std::vector<double> profile(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double tau = bins > 1 ? static_cast<double>(b) / static_cast<double>(bins - 1) : 0.0;
    const double s = std::sin(M_PI * tau);
    profile[b] = s * s;
  }
  const double profile_mean =
      std::accumulate(profile.begin(), profile.end(), 0.0) / static_cast<double>(bins);
  for (std::size_t l = 0; l < n; ++l) {
    out.expected_daily_mean_kmh[l] = free_flow[l] * (1.0 - amp[l] * profile_mean);
  }

  for (std::size_t g = 0; g < total; ++g) {
    const std::size_t b = g % bins;
    const std::int64_t ts = schedule.bin_start_ts(g);
    for (std::size_t l = 0; l < n; ++l) {
      const double base = free_flow[l] * (1.0 - amp[l] * profile[b]);
      double v = base - effect[l][g] * (base - params.congested_kmh);
      v += noise(noise_rng);
      if (v < 0.0) v = 0.0;
      out.records.push_back({map.links[l].id, ts, v});
    }
  }
  return out;
}

inline nlohmann::json incidents_to_json(const NetworkMap& map,
                                        const std::vector<Incident>& incidents) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& inc : incidents) {
    j.push_back({{"link_id", map.links[inc.link_index].id},
                 {"start_bin", inc.start_bin},
                 {"duration_bins", inc.duration_bins},
                 {"severity", inc.severity}});
  }
  return j;
}

/// Rectangular street mesh for experiments: `rows` horizontal and `cols`
/// vertical streets crossing on a shared grid of intersections, each street
/// split into one link per espan. Returns the map plus endpoint adjacency.
struct MeshNetwork {
  NetworkMap map;
  std::vector<std::vector<std::size_t>> adjacency;
};

inline MeshNetwork make_mesh_network(std::size_t rows, std::size_t cols, std::size_t grid_height,
                                     std::size_t grid_width, double cell_size_deg = 0.001,
                                     std::size_t max_links = 0) {
  if (rows < 2 || cols < 2) throw ConfigError("mesh: need at least 2 rows and 2 cols");
  GridSpec spec;
  spec.origin = {0.0, 0.0};
  spec.cell_size_deg = cell_size_deg;
  spec.height = grid_height;
  spec.width = grid_width;
  // keep intersections strictly inside the grid
  const double lat_span = cell_size_deg * (static_cast<double>(grid_height) - 1.0);
  const double lon_span = cell_size_deg * (static_cast<double>(grid_width) - 1.0);
  const double lat0 = 0.5 * cell_size_deg, lon0 = 0.5 * cell_size_deg;
  auto node = [&](std::size_t r, std::size_t c) -> LatLon {
    return {lat0 + lat_span * static_cast<double>(r) / static_cast<double>(rows - 1),
            lon0 + lon_span * static_cast<double>(c) / static_cast<double>(cols - 1)};
  };
  std::vector<LinkGeometry> links;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      links.push_back({"h" + std::to_string(r) + "_" + std::to_string(c),
                       {node(r, c), node(r, c + 1)}});
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r + 1 < rows; ++r) {
      links.push_back({"v" + std::to_string(c) + "_" + std::to_string(r),
                       {node(r, c), node(r + 1, c)}});
    }
  }
  if (max_links > 0 && links.size() > max_links) links.resize(max_links);
  MeshNetwork mesh;
  mesh.adjacency = link_adjacency_from_endpoints(links);
  mesh.map = build_network_map(std::move(links), spec);
  return mesh;
}

}  // namespace srcn
