// ngo_sim: run sweeps, validate the built-in oracles, dump scenario artifacts.
// Exit codes: 0 ok, 1 check failure or I/O error, 2 usage or config error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ngo/config.hpp"
#include "ngo/experiment.hpp"
#include "ngo/report_io.hpp"
#include "ngo/validate.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kUsageError = 2;

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "INI configuration file (defaults when omitted)");
  cmd->add_option("--set", a.overrides, "Override one key: section.key=value (repeatable)");
}

ngo::SimConfig load(const CommonArgs& a) {
  ngo::SimConfig cfg = a.config.empty() ? ngo::SimConfig{} : ngo::load_config(a.config);
  for (const auto& o : a.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ngo::ConfigError("--set expects section.key=value, got '" + o + "'");
    ngo::set_config_value(cfg, o.substr(0, eq), o.substr(eq + 1));
  }
  return cfg;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& i : items)
    for (auto& s : ngo::detail::split(i, ',')) out.push_back(s);
  return out;
}

struct RunArgs {
  CommonArgs common;
  std::vector<std::string> sweep;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::string out{"out"};
  std::vector<std::string> schemes;
  bool records{false};
  bool trace{false};
};

int cmd_run(const RunArgs& a) {
  ngo::ExperimentSpec spec;
  spec.base = load(a.common);
  spec.node_counts = {spec.base.node_count};
  spec.t_max_values = {spec.base.t_max};
  spec.runs = a.runs.value_or(spec.base.runs);
  spec.seed_base = a.seed.value_or(spec.base.seed);
  spec.out_dir = a.out;
  for (const auto& t : a.sweep) ngo::apply_sweep_axis(spec, t);
  if (!a.schemes.empty()) {
    spec.schemes.clear();
    for (const auto& s : split_list(a.schemes)) spec.schemes.push_back(ngo::scheme_from_string(s));
  }
  spec.validate();
  const auto cells = ngo::experiment_cells(spec);

  fs::create_directories(spec.out_dir);
  auto comparison = ngo::open_output(spec.out_dir / "comparison.csv");
  comparison << ngo::kComparisonHeader << '\n';
  bool invariants_ok = true;
  for (const auto& cell : cells) {
    const auto result = ngo::run_cell(cell, spec.schemes);
    const fs::path dir = spec.out_dir / ngo::cell_dir_name(cell);
    ngo::write_cell_outputs(result, dir);
    if (a.records) {
      auto f = ngo::open_output(dir / "records.csv");
      f << ngo::kRecordsHeader << '\n';
      for (const auto& m : result.reports) ngo::write_records_csv(f, result.runs.at(m.scheme), false);
    }
    if (a.trace) {
      auto f = ngo::open_output(dir / "trace.csv");
      ngo::write_trace_csv(f, ngo::build_trace(cell.cfg, cell.cfg.seed));
    }
    ngo::write_comparison_rows(comparison, result);
    ngo::print_cell_table(std::cout, result);
    for (const auto& m : result.reports)
      if (m.delivery_rate != 1.0) {
        std::cerr << "invariant violated: delivery rate " << m.delivery_rate << " for " << ngo::to_string(m.scheme)
                  << " in " << ngo::cell_dir_name(cell) << '\n';
        invariants_ok = false;
      }
  }
  std::cout << "outputs written to " << spec.out_dir.string() << '\n';
  return invariants_ok ? kOk : kCheckFailure;
}

struct ValidateArgs {
  CommonArgs common;
  std::vector<std::string> only;
  std::vector<std::string> faults;
};

int cmd_validate(const ValidateArgs& a) {
  auto cfg = load(a.common);
  for (const auto& f : a.faults) ngo::inject_fault(cfg, f);
  const auto results = ngo::run_checks(cfg, split_list(a.only));
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %s.%s: %s\n", r.passed ? "PASS" : "FAIL", r.group.c_str(), r.name.c_str(), r.detail.c_str());
    failed += !r.passed;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed == 0 ? kOk : kCheckFailure;
}

struct DumpArgs {
  CommonArgs common;
  std::string out{"dump"};
  std::optional<double> x;
  std::optional<double> y;
  bool trace{false};
};

int cmd_dump(const DumpArgs& a) {
  const auto cfg = load(a.common);
  cfg.validate();
  const ngo::Grid grid(cfg.grid);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  {
    auto f = ngo::open_output(dir / "grid.json");
    f << ngo::to_json(grid).dump(2) << '\n';
  }
  {
    auto f = ngo::open_output(dir / "path_loss.csv");
    ngo::write_path_loss_csv(f, grid, cfg.channel);
  }
  {
    const ngo::Vec2 center{grid.spec().side_x() / 2.0, grid.spec().side_y() / 2.0};
    const ngo::Vec2 pos{a.x.value_or(center.x), a.y.value_or(center.y)};
    auto f = ngo::open_output(dir / "tile_table.csv");
    ngo::write_tile_table_csv(f, grid, cfg.channel, pos, ngo::homogeneous_densities(grid, cfg.node_count));
  }
  if (a.trace) {
    auto f = ngo::open_output(dir / "trace.csv");
    ngo::write_trace_csv(f, ngo::build_trace(cfg, cfg.seed));
  }
  std::cout << "dump written to " << dir.string() << '\n';
  return kOk;
}

struct DumpConfigArgs {
  CommonArgs common;
  std::string out;
};

int cmd_dump_config(const DumpConfigArgs& a) {
  const auto cfg = load(a.common);
  cfg.validate();
  if (a.out.empty()) {
    std::cout << ngo::dump_config(cfg);
  } else {
    auto f = ngo::open_output(a.out);
    f << ngo::dump_config(cfg);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning and execution of delay-tolerant uplink uploads: simulator front end"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one cell or a sweep of node counts and T_max values");
  add_common(run, run_args.common);
  run->add_option("--sweep", run_args.sweep, "Sweep axes, e.g. nodes=100,500,1500 tmax=10,30")->expected(1, -1);
  run->add_option("--runs", run_args.runs, "Runs per cell (default: sim.runs)");
  run->add_option("--seed", run_args.seed, "Seed base (default: sim.seed)");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--scheme", run_args.schemes, "Schemes to run, comma-separated (default: all)");
  run->add_flag("--records", run_args.records, "Also write per-leg delivery records");
  run->add_flag("--trace", run_args.trace, "Also write the node trace of each cell's first run");

  ValidateArgs val_args;
  auto* val = app.add_subcommand("validate", "Run the built-in oracle checks");
  add_common(val, val_args.common);
  val->add_option("--only", val_args.only, "Check groups: energy, flops, estimator, mobility");
  val->add_option("--fault-inject", val_args.faults, "Perturb a constant: key[=value] (bare key scales by 1.01)");

  DumpArgs dump_args;
  auto* dump = app.add_subcommand("dump", "Write grid JSON, path-loss grid and one tile cost table");
  add_common(dump, dump_args.common);
  dump->add_option("--out", dump_args.out, "Output directory");
  dump->add_option("--x", dump_args.x, "Tile table source x in meters (default: scenario center)");
  dump->add_option("--y", dump_args.y, "Tile table source y in meters (default: scenario center)");
  dump->add_flag("--trace", dump_args.trace, "Also write the node trace for sim.seed");

  DumpConfigArgs dc_args;
  auto* dump_cfg = app.add_subcommand("dump-config", "Print the effective configuration with every key");
  add_common(dump_cfg, dc_args.common);
  dump_cfg->add_option("--out", dc_args.out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*val) return cmd_validate(val_args);
    if (*dump) return cmd_dump(dump_args);
    if (*dump_cfg) return cmd_dump_config(dc_args);
  } catch (const ngo::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailure;
  }
  return kUsageError;
}
