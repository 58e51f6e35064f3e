#pragma once

// Sweeps over node count and T_max: per-cell configuration and seeds, runs of
// every scheme on shared traces, per-cell artifacts and the comparison table.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ngo/config.hpp"
#include "ngo/engine.hpp"
#include "ngo/report_io.hpp"

namespace ngo {

struct ExperimentSpec {
  SimConfig base{};
  std::vector<int> node_counts;
  std::vector<double> t_max_values;
  std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  int runs{1};
  std::uint64_t seed_base{1};
  std::filesystem::path out_dir{"out"};

  void validate() const {
    if (node_counts.empty() || t_max_values.empty() || schemes.empty())
      throw std::invalid_argument("experiment: sweep axes must be non-empty");
    if (runs < 1) throw std::invalid_argument("experiment: runs must be >= 1");
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

/// Applies one sweep axis token: `nodes=...`, `tmax=...` or `schemes=...`,
/// values comma-separated.
inline void apply_sweep_axis(ExperimentSpec& spec, const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep: expected axis=values, got '" + token + "'");
  const std::string axis = token.substr(0, eq);
  const auto values = detail::split(token.substr(eq + 1), ',');
  if (values.empty()) throw ConfigError("sweep: axis '" + axis + "' has no values");
  if (axis == "nodes") {
    spec.node_counts.clear();
    for (const auto& v : values) spec.node_counts.push_back(static_cast<int>(detail::parse_int("nodes", v)));
  } else if (axis == "tmax") {
    spec.t_max_values.clear();
    for (const auto& v : values) spec.t_max_values.push_back(detail::parse_double("tmax", v));
  } else if (axis == "schemes") {
    spec.schemes.clear();
    for (const auto& v : values) {
      try {
        spec.schemes.push_back(scheme_from_string(v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
      }
    }
  } else {
    throw ConfigError("sweep: unknown axis '" + axis + "'");
  }
}

struct Cell {
  int index{0};
  SimConfig cfg;
};

/// Cells in node-major order; cell i uses seeds seed_base + i*runs + r.
inline std::vector<Cell> experiment_cells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  int index = 0;
  for (int n : spec.node_counts)
    for (double t : spec.t_max_values) {
      Cell c{index, spec.base};
      c.cfg.node_count = n;
      c.cfg.t_max = t;
      c.cfg.runs = spec.runs;
      c.cfg.seed = spec.seed_base + static_cast<std::uint64_t>(index) * static_cast<std::uint64_t>(spec.runs);
      c.cfg.validate();
      cells.push_back(c);
      ++index;
    }
  return cells;
}

struct CellResult {
  Cell cell;
  std::map<Scheme, std::vector<RunResult>> runs;
  std::vector<MetricsReport> reports;

  const MetricsReport& report(Scheme s) const {
    for (const auto& r : reports)
      if (r.scheme == s) return r;
    throw std::out_of_range(std::string("cell result: scheme not run: ") + to_string(s));
  }
};

inline double broadcast_gain_db(const SimConfig& cfg) {
  return cfg.overhead.broadcast_gain_db ? *cfg.overhead.broadcast_gain_db
                                        : worst_street_gain_db(Grid(cfg.grid), cfg.channel);
}

/// Runs the requested schemes (plus SH traditional as the reference) on one cell.
inline CellResult run_cell(const Cell& cell, const std::vector<Scheme>& schemes, int threads = thread_budget()) {
  std::vector<Scheme> all{Scheme::kShTraditional};
  for (Scheme s : schemes)
    if (s != Scheme::kShTraditional) all.push_back(s);
  CellResult out{cell, run_replications(cell.cfg, all, threads), {}};
  const double g = broadcast_gain_db(cell.cfg);
  const auto& sh = out.runs.at(Scheme::kShTraditional);
  for (Scheme s : kAllSchemes) {
    const auto it = out.runs.find(s);
    if (it == out.runs.end()) continue;
    const bool requested = s != Scheme::kShTraditional ||
                           std::find(schemes.begin(), schemes.end(), Scheme::kShTraditional) != schemes.end();
    if (requested) out.reports.push_back(aggregate(cell.cfg, it->second, sh, g));
  }
  return out;
}

inline std::string cell_dir_name(const Cell& c) {
  std::ostringstream s;
  s << "cell" << c.index << "_n" << c.cfg.node_count << "_t" << fmt9(c.cfg.t_max);
  return s.str();
}

/// summary.json, uploads.csv, mode_share.csv, ci_hist.csv, overhead.csv and
/// config.ini (running it without a sweep reproduces the cell).
inline void write_cell_outputs(const CellResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = open_output(dir / "summary.json");
    write_summary_json(f, r.cell.cfg, r.reports);
  }
  {
    auto f = open_output(dir / "uploads.csv");
    f << kUploadsHeader << '\n';
    for (const auto& m : r.reports) {
      std::ostringstream body;
      write_uploads_csv(body, r.runs.at(m.scheme));
      const std::string s = body.str();
      f << s.substr(s.find('\n') + 1);
    }
  }
  {
    auto f = open_output(dir / "mode_share.csv");
    write_mode_share_csv(f, r.reports);
  }
  {
    auto f = open_output(dir / "ci_hist.csv");
    write_ci_hist_csv(f, r.reports);
  }
  {
    auto f = open_output(dir / "overhead.csv");
    write_overhead_csv(f, r.reports);
  }
  {
    auto f = open_output(dir / "config.ini");
    f << dump_config(r.cell.cfg);
  }
}

inline void write_comparison_rows(std::ostream& out, const CellResult& r) {
  for (const auto& m : r.reports)
    out << r.cell.index << ',' << r.cell.cfg.node_count << ',' << fmt9(r.cell.cfg.t_max) << ',' << to_string(m.scheme)
        << ',' << fmt9(m.energy_per_upload.mean) << ',' << fmt9(m.energy_per_upload.half_width) << ','
        << fmt9(m.reduction_vs_sh_pct.mean) << ',' << fmt9(m.reduction_vs_sh_pct.half_width) << ','
        << fmt9(m.mode_share[1] + m.mode_share[3]) << ',' << fmt9(m.delivery_rate) << ','
        << fmt9(overhead_share_pct(m)) << '\n';
}

/// Human-readable per-cell table of energy and reduction vs SH traditional.
inline void print_cell_table(std::ostream& out, const CellResult& r) {
  char line[160];
  std::snprintf(line, sizeof line, "cell %d: nodes=%d t_max=%s runs=%d seeds=%llu..%llu\n", r.cell.index,
                r.cell.cfg.node_count, fmt9(r.cell.cfg.t_max).c_str(), r.cell.cfg.runs,
                static_cast<unsigned long long>(r.cell.cfg.seed),
                static_cast<unsigned long long>(r.cell.cfg.seed + static_cast<std::uint64_t>(r.cell.cfg.runs) - 1));
  out << line;
  std::snprintf(line, sizeof line, "  %-14s %12s %10s %12s %9s %9s %9s\n", "scheme", "J/upload", "+/-", "reduction%",
                "+/-", "d2d", "ovh%");
  out << line;
  for (const auto& m : r.reports) {
    std::snprintf(line, sizeof line, "  %-14s %12.6g %10.3g %12.2f %9.2f %9.3f %9.2f\n", to_string(m.scheme),
                  m.energy_per_upload.mean, m.energy_per_upload.half_width, m.reduction_vs_sh_pct.mean,
                  m.reduction_vs_sh_pct.half_width, m.mode_share[1] + m.mode_share[3], overhead_share_pct(m));
    out << line;
  }
}

}  // namespace ngo
