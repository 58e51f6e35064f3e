#pragma once

// CSV and JSON artifacts. Floating-point fields carry 9 significant digits;
// column names and order are fixed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ngo/config.hpp"
#include "ngo/engine.hpp"
#include "ngo/estimator.hpp"
#include "ngo/scenario.hpp"

namespace ngo {

inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Value rounded to 9 significant digits, for JSON output.
inline double round9(double v) { return std::stod(fmt9(v)); }

inline constexpr const char* kUploadsHeader =
    "scheme,run,seed,upload,node,created_ci,deadline_ci,fragments,delivered,energy_j";
inline constexpr const char* kModeShareHeader = "scheme,opp_sh,opp_d2d_aided,relay_opp_sh,relay_opp_d2d_aided";
inline constexpr const char* kCiHistHeader = "scheme,ci,share";
inline constexpr const char* kOverheadHeader =
    "scheme,local_map_j,cell_pl_map_j,d2d_pl_map_j,discovery_j,cpu_j,total_j,share_of_sh_pct";
inline constexpr const char* kRecordsHeader = "run,task,fragment,leg_index,from_node,to,mode,ci,energy_j";
inline constexpr const char* kTraceHeader = "ci,node_id,x,y,street_id";
inline constexpr const char* kPathLossHeader = "x,y,pl_db";
inline constexpr const char* kTileTableHeader = "tile,x,y,cost_j,p_i,rank";
inline constexpr const char* kEmptyTableMarker = "# empty: no street tiles";
inline constexpr const char* kComparisonHeader =
    "cell,node_count,t_max,scheme,energy_per_upload_j,energy_half_width_j,reduction_vs_sh_pct,reduction_half_width_pct,"
    "d2d_aided_share,delivery_rate,overhead_share_pct";

inline double overhead_share_pct(const MetricsReport& m) {
  return m.sh_transmission_energy_j > 0.0 ? 100.0 * m.overhead.total() / m.sh_transmission_energy_j : 0.0;
}

inline nlohmann::ordered_json to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["scheme"] = to_string(m.scheme);
  j["runs"] = m.runs;
  j["uploads"] = m.uploads;
  j["arrivals"] = m.arrivals;
  j["energy_per_upload_j"] = round9(m.energy_per_upload.mean);
  j["energy_per_upload_half_width_j"] = round9(m.energy_per_upload.half_width);
  j["reduction_vs_sh_pct"] = round9(m.reduction_vs_sh_pct.mean);
  j["reduction_vs_sh_half_width_pct"] = round9(m.reduction_vs_sh_pct.half_width);
  j["pooled_reduction_vs_sh_pct"] = round9(m.pooled_reduction_vs_sh_pct);
  j["mode_share"] = {{"opp_sh", round9(m.mode_share[0])},
                     {"opp_d2d_aided", round9(m.mode_share[1])},
                     {"relay_opp_sh", round9(m.mode_share[2])},
                     {"relay_opp_d2d_aided", round9(m.mode_share[3])}};
  auto hist = nlohmann::ordered_json::array();
  for (double s : m.ci_share) hist.push_back(round9(s));
  j["ci_share"] = hist;
  j["delivery_rate"] = round9(m.delivery_rate);
  j["transmission_energy_j"] = round9(m.transmission_energy_j);
  j["sh_transmission_energy_j"] = round9(m.sh_transmission_energy_j);
  j["overhead_j"] = {{"local_map", round9(m.overhead.local_map_j)},
                     {"cell_pl_map", round9(m.overhead.cell_pl_map_j)},
                     {"d2d_pl_map", round9(m.overhead.d2d_pl_map_j)},
                     {"discovery", round9(m.overhead.discovery_j)},
                     {"cpu", round9(m.overhead.cpu_j)},
                     {"total", round9(m.overhead.total())}};
  j["overhead_share_of_sh_pct"] = round9(overhead_share_pct(m));
  j["max_legs"] = m.max_legs;
  return j;
}

inline void write_summary_json(std::ostream& out, const SimConfig& cfg, const std::vector<MetricsReport>& reports) {
  nlohmann::ordered_json j;
  j["node_count"] = cfg.node_count;
  j["t_max"] = round9(cfg.t_max);
  j["sim_duration"] = round9(cfg.sim_duration);
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  j["config"] = dump_config(cfg);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& m : reports) arr.push_back(to_json(m));
  j["schemes"] = arr;
  out << j.dump(2) << '\n';
}

inline void write_uploads_csv(std::ostream& out, const std::vector<RunResult>& runs) {
  out << kUploadsHeader << '\n';
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (const auto& u : runs[r].uploads)
      out << to_string(runs[r].scheme) << ',' << r << ',' << runs[r].seed << ',' << u.upload << ',' << u.node << ','
          << u.created_ci << ',' << u.deadline_ci << ',' << u.fragments << ',' << u.delivered << ',' << fmt9(u.energy)
          << '\n';
}

inline void write_mode_share_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << kModeShareHeader << '\n';
  for (const auto& m : reports)
    out << to_string(m.scheme) << ',' << fmt9(m.mode_share[0]) << ',' << fmt9(m.mode_share[1]) << ','
        << fmt9(m.mode_share[2]) << ',' << fmt9(m.mode_share[3]) << '\n';
}

inline void write_ci_hist_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << kCiHistHeader << '\n';
  for (const auto& m : reports)
    for (std::size_t i = 0; i < m.ci_share.size(); ++i)
      out << to_string(m.scheme) << ',' << i << ',' << fmt9(m.ci_share[i]) << '\n';
}

inline void write_overhead_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << kOverheadHeader << '\n';
  for (const auto& m : reports)
    out << to_string(m.scheme) << ',' << fmt9(m.overhead.local_map_j) << ',' << fmt9(m.overhead.cell_pl_map_j) << ','
        << fmt9(m.overhead.d2d_pl_map_j) << ',' << fmt9(m.overhead.discovery_j) << ',' << fmt9(m.overhead.cpu_j) << ','
        << fmt9(m.overhead.total()) << ',' << fmt9(overhead_share_pct(m)) << '\n';
}

inline void write_records_csv(std::ostream& out, const std::vector<RunResult>& runs, bool header = true) {
  if (header) out << kRecordsHeader << '\n';
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (const auto& rec : runs[r].records)
      for (std::size_t i = 0; i < rec.path.size(); ++i) {
        const auto& leg = rec.path[i];
        out << r << ',' << rec.upload << ',' << rec.fragment << ',' << i << ',' << leg.from << ',';
        if (leg.to == kBaseStation) out << "bs";
        else out << leg.to;
        out << ',' << (leg.mode == Mode::kCellular ? "cellular" : "d2d") << ',' << leg.ci << ',' << fmt9(leg.energy)
            << '\n';
      }
}

inline void write_trace_csv(std::ostream& out, const WorldTrace& trace) {
  out << kTraceHeader << '\n';
  for (int k = 0; k <= trace.ci_count(); ++k)
    for (const auto& n : trace.nodes_at(k))
      out << k << ',' << n.id << ',' << fmt9(n.position.x) << ',' << fmt9(n.position.y) << ',' << n.street_id << '\n';
}

/// Nominal cellular path loss at every street tile center of the lattice.
inline void write_path_loss_csv(std::ostream& out, const Grid& grid, const ChannelParams& p) {
  out << kPathLossHeader << '\n';
  const Vec3 bs = grid.bs();
  for (int iy = 0; iy < grid.lattice_ny(); ++iy)
    for (int ix = 0; ix < grid.lattice_nx(); ++ix) {
      const Vec2 c = grid.lattice_center(ix, iy);
      if (!grid.on_street(c)) continue;
      out << fmt9(c.x) << ',' << fmt9(c.y) << ',' << fmt9(cellular_loss_db(grid, p, c, bs)) << '\n';
    }
}

/// Tile table for a source at `pos`; a position off the streets has no table.
inline void write_tile_table_csv(std::ostream& out, const Grid& grid, const ChannelParams& p, Vec2 pos,
                                 const StreetDensities& densities) {
  out << kTileTableHeader << '\n';
  if (!grid.on_street(pos)) {
    out << kEmptyTableMarker << '\n';
    return;
  }
  const auto region = coverage_region(grid, pos, p.r_d2d_m);
  if (region.empty()) {
    out << kEmptyTableMarker << '\n';
    return;
  }
  const auto t = tile_cost_table(grid, p, pos, region, densities);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& tile = t.region.tiles[i];
    out << tile.index << ',' << fmt9(tile.center.x) << ',' << fmt9(tile.center.y) << ',' << fmt9(t.costs[i]) << ','
        << fmt9(t.tile_pmf[i]) << ',' << t.inverse_ranking[i] + 1 << '\n';
  }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace ngo
