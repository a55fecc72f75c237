#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "srcn/errors.hpp"

namespace srcn {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// A directed road link: identifier plus a polyline of (lat, lon) vertices.
struct LinkGeometry {
  std::string id;
  std::vector<LatLon> polyline;

  void validate() const {
    if (polyline.size() < 2) {
      throw DataError("link '" + id + "': polyline needs at least 2 vertices");
    }
    for (std::size_t i = 1; i < polyline.size(); ++i) {
      if (polyline[i].lat == polyline[i - 1].lat && polyline[i].lon == polyline[i - 1].lon) {
        throw DataError("link '" + id + "': consecutive vertices " + std::to_string(i - 1) +
                        " and " + std::to_string(i) + " coincide");
      }
    }
  }
};

/// Square-cell raster over a lat/lon box. Row 0 starts at the origin
/// latitude, column 0 at the origin longitude; a point exactly on a cell
/// boundary belongs to the higher-index cell (plain floor).
struct GridSpec {
  LatLon origin;
  double cell_size_deg = 0.0;
  std::size_t height = 0;
  std::size_t width = 0;

  void validate() const {
    if (cell_size_deg <= 0.0) throw ConfigError("grid: cell_size_deg must be > 0");
    if (height < 1 || width < 1) throw ConfigError("grid: height and width must be >= 1");
  }

  double col_coord(double lon) const { return (lon - origin.lon) / cell_size_deg; }
  double row_coord(double lat) const { return (lat - origin.lat) / cell_size_deg; }

  bool contains(const LatLon& p) const {
    const double u = col_coord(p.lon), v = row_coord(p.lat);
    return u >= 0.0 && u < static_cast<double>(width) && v >= 0.0 &&
           v < static_cast<double>(height);
  }
};

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Cell&) const = default;
};

/// One rasterized snapshot of network speeds; values are normalized to
/// [0,1] and cells covered by no link are exactly 0.
struct GridFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  std::int64_t timestamp = 0;  // time-bin index

  GridFrame() = default;
  GridFrame(std::size_t h, std::size_t w, std::int64_t ts = 0)
      : height(h), width(w), values(h * w, 0.0), timestamp(ts) {}

  double& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
};

/// Supercover traversal of one polyline: every cell the segments
/// geometrically touch, attributed by the floor convention, ordered along
/// the polyline direction, without duplicates.
inline std::vector<Cell> rasterize_link(const LinkGeometry& geom, const GridSpec& spec) {
  geom.validate();
  spec.validate();
  for (std::size_t i = 0; i < geom.polyline.size(); ++i) {
    if (!spec.contains(geom.polyline[i])) {
      throw DataError("link '" + geom.id + "': vertex " + std::to_string(i) + " (" +
                      std::to_string(geom.polyline[i].lat) + ", " +
                      std::to_string(geom.polyline[i].lon) + ") lies outside the grid extent");
    }
  }
  std::vector<Cell> cells;
  std::unordered_set<std::size_t> seen;
  auto push = [&](std::size_t row, std::size_t col) {
    const std::size_t key = row * spec.width + col;
    if (seen.insert(key).second) cells.push_back({row, col});
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t s = 1; s < geom.polyline.size(); ++s) {
    const double u0 = spec.col_coord(geom.polyline[s - 1].lon);
    const double v0 = spec.row_coord(geom.polyline[s - 1].lat);
    const double u1 = spec.col_coord(geom.polyline[s].lon);
    const double v1 = spec.row_coord(geom.polyline[s].lat);
    const double du = u1 - u0, dv = v1 - v0;
    std::int64_t col = static_cast<std::int64_t>(std::floor(u0));
    std::int64_t row = static_cast<std::int64_t>(std::floor(v0));
    push(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
    const int step_c = du > 0.0 ? 1 : (du < 0.0 ? -1 : 0);
    const int step_r = dv > 0.0 ? 1 : (dv < 0.0 ? -1 : 0);
    const double tdu = step_c ? 1.0 / std::abs(du) : inf;
    const double tdv = step_r ? 1.0 / std::abs(dv) : inf;
    double tmax_u = inf, tmax_v = inf;
    if (step_c > 0) {
      tmax_u = (std::floor(u0) + 1.0 - u0) / du;
    } else if (step_c < 0) {
      tmax_u = (u0 - std::floor(u0)) / -du;
    }
    if (step_r > 0) {
      tmax_v = (std::floor(v0) + 1.0 - v0) / dv;
    } else if (step_r < 0) {
      tmax_v = (v0 - std::floor(v0)) / -dv;
    }
    while (std::min(tmax_u, tmax_v) < 1.0) {
      if (tmax_u < tmax_v) {
        col += step_c;
        tmax_u += tdu;
      } else if (tmax_v < tmax_u) {
        row += step_r;
        tmax_v += tdv;
      } else {
        // exact corner crossing: the point set of the segment only touches
        // the two diagonal cells under the floor convention
        col += step_c;
        row += step_r;
        tmax_u += tdu;
        tmax_v += tdv;
      }
      push(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
    }
    // an endpoint exactly on a boundary belongs to the higher-index cell,
    // which the strict t<1 loop above never enters
    const std::int64_t end_col = static_cast<std::int64_t>(std::floor(u1));
    const std::int64_t end_row = static_cast<std::int64_t>(std::floor(v1));
    if (end_col != col || end_row != row) {
      push(static_cast<std::size_t>(end_row), static_cast<std::size_t>(end_col));
    }
  }
  return cells;
}

/// Immutable link/grid correspondence: per-link ordered cell lists and the
/// inverse per-cell link sets. Safe to share across concurrent encode and
/// decode calls once built.
struct NetworkMap {
  GridSpec spec;
  std::vector<LinkGeometry> links;
  std::vector<std::vector<Cell>> link_cells;
  std::vector<std::vector<std::uint32_t>> cell_links;  // indexed row*width+col
  std::unordered_map<std::string, std::size_t> id_index;

  std::size_t n_links() const { return links.size(); }
};

inline NetworkMap build_network_map(std::vector<LinkGeometry> links, const GridSpec& spec) {
  spec.validate();
  if (links.empty()) throw ConfigError("network: link list is empty");
  NetworkMap map;
  map.spec = spec;
  map.cell_links.assign(spec.height * spec.width, {});
  for (auto& link : links) {
    if (!map.id_index.emplace(link.id, map.links.size()).second) {
      throw ConfigError("network: duplicate link id '" + link.id + "'");
    }
    auto cells = rasterize_link(link, spec);
    const auto idx = static_cast<std::uint32_t>(map.links.size());
    for (const auto& c : cells) map.cell_links[c.row * spec.width + c.col].push_back(idx);
    map.link_cells.push_back(std::move(cells));
    map.links.push_back(std::move(link));
  }
  return map;
}

struct EncodeStats {
  std::size_t clamped_high = 0;  // speeds above v_max, clamped to 1
};

/// Per-link km/h speeds -> normalized grid image. Shared cells take the
/// arithmetic mean of the covering links' scaled speeds; uncovered cells
/// stay exactly 0.
inline GridFrame encode_frame(const NetworkMap& map, const std::vector<double>& speeds_kmh,
                              double v_max, EncodeStats* stats = nullptr,
                              std::int64_t timestamp = 0) {
  if (speeds_kmh.size() != map.n_links()) {
    throw ShapeError("encode_frame: " + std::to_string(speeds_kmh.size()) + " speeds for " +
                     std::to_string(map.n_links()) + " links");
  }
  if (v_max <= 0.0) throw ConfigError("encode_frame: v_max must be > 0");
  std::vector<double> scaled(speeds_kmh.size());
  for (std::size_t j = 0; j < speeds_kmh.size(); ++j) {
    const double s = speeds_kmh[j];
    if (!std::isfinite(s) || s < 0.0) {
      throw DataError("encode_frame: invalid speed " + std::to_string(s) + " for link '" +
                      map.links[j].id + "'");
    }
    double v = s / v_max;
    if (v > 1.0) {
      v = 1.0;
      if (stats) ++stats->clamped_high;
    }
    scaled[j] = v;
  }
  GridFrame frame(map.spec.height, map.spec.width, timestamp);
  for (std::size_t ci = 0; ci < map.cell_links.size(); ++ci) {
    const auto& covering = map.cell_links[ci];
    if (covering.empty()) continue;
    double acc = 0.0;
    for (auto j : covering) acc += scaled[j];
    frame.values[ci] = acc / static_cast<double>(covering.size());
  }
  return frame;
}

/// Grid image -> per-link km/h speeds: each link reads back v_max times the
/// mean of the frame values over its covered cells.
inline std::vector<double> decode_frame(const NetworkMap& map, const GridFrame& frame,
                                        double v_max) {
  if (frame.height != map.spec.height || frame.width != map.spec.width) {
    throw ShapeError("decode_frame: frame " + std::to_string(frame.height) + "x" +
                     std::to_string(frame.width) + " does not match grid " +
                     std::to_string(map.spec.height) + "x" + std::to_string(map.spec.width));
  }
  std::vector<double> speeds(map.n_links(), 0.0);
  for (std::size_t j = 0; j < map.n_links(); ++j) {
    double acc = 0.0;
    for (const auto& c : map.link_cells[j]) acc += frame.at(c.row, c.col);
    speeds[j] = v_max * acc / static_cast<double>(map.link_cells[j].size());
  }
  return speeds;
}

/// Link adjacency by shared polyline endpoints (within tol degrees).
inline std::vector<std::vector<std::size_t>> link_adjacency_from_endpoints(
    const std::vector<LinkGeometry>& links, double tol_deg = 1e-9) {
  std::vector<std::vector<std::size_t>> adj(links.size());
  auto close = [tol_deg](const LatLon& a, const LatLon& b) {
    return std::abs(a.lat - b.lat) <= tol_deg && std::abs(a.lon - b.lon) <= tol_deg;
  };
  for (std::size_t i = 0; i < links.size(); ++i) {
    const LatLon ia = links[i].polyline.front(), ib = links[i].polyline.back();
    for (std::size_t j = i + 1; j < links.size(); ++j) {
      const LatLon ja = links[j].polyline.front(), jb = links[j].polyline.back();
      if (close(ia, ja) || close(ia, jb) || close(ib, ja) || close(ib, jb)) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

// ---------------------------------------------------------------------------
// file formats
// ---------------------------------------------------------------------------

/// Debug export: binary PGM, maxval 255, value = round(255 * cell), with the
/// highest-latitude row on top.
inline void write_pgm(const GridFrame& frame, std::ostream& os) {
  os << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  for (std::size_t r = frame.height; r-- > 0;) {
    for (std::size_t c = 0; c < frame.width; ++c) {
      const double v = std::clamp(frame.at(r, c), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
}

inline void write_pgm_file(const GridFrame& frame, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write PGM file '" + path + "'");
  write_pgm(frame, os);
}

inline nlohmann::json network_to_json(const GridSpec& spec,
                                      const std::vector<LinkGeometry>& links) {
  nlohmann::json j;
  j["cell_size_deg"] = spec.cell_size_deg;
  j["origin"] = {spec.origin.lat, spec.origin.lon};
  j["height"] = spec.height;
  j["width"] = spec.width;
  auto& jl = j["links"] = nlohmann::json::array();
  for (const auto& link : links) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& p : link.polyline) poly.push_back({p.lat, p.lon});
    jl.push_back({{"id", link.id}, {"polyline", std::move(poly)}});
  }
  return j;
}

inline std::pair<GridSpec, std::vector<LinkGeometry>> network_from_json(const nlohmann::json& j) {
  try {
    GridSpec spec;
    spec.cell_size_deg = j.at("cell_size_deg").get<double>();
    spec.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
    spec.height = j.at("height").get<std::size_t>();
    spec.width = j.at("width").get<std::size_t>();
    std::vector<LinkGeometry> links;
    for (const auto& jl : j.at("links")) {
      LinkGeometry link;
      link.id = jl.at("id").get<std::string>();
      for (const auto& p : jl.at("polyline")) {
        link.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      links.push_back(std::move(link));
    }
    return {spec, std::move(links)};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed network file: ") + e.what());
  }
}

inline NetworkMap load_network_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open network file '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("network file '" + path + "' is not valid JSON: " + e.what());
  }
  auto [spec, links] = network_from_json(j);
  return build_network_map(std::move(links), spec);
}

inline void save_network_file(const NetworkMap& map, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write network file '" + path + "'");
  os << network_to_json(map.spec, map.links).dump(2) << "\n";
}

}  // namespace srcn
