#pragma once

// Built-in oracle checks run by `ngo_sim validate`: energy-formula golden
// values, flop-count hand cases, estimator enumeration and Monte-Carlo
// comparisons, and mobility sampling checks. Oracles here are written
// independently of the code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "ngo/channel.hpp"
#include "ngo/config.hpp"
#include "ngo/engine.hpp"
#include "ngo/estimator.hpp"
#include "ngo/mobility.hpp"
#include "ngo/scenario.hpp"

namespace ngo {

struct CheckResult {
  std::string group;
  std::string name;
  bool passed{false};
  std::string detail;
};

inline const std::vector<std::string>& check_groups() {
  static const std::vector<std::string> g{"energy", "flops", "estimator", "mobility"};
  return g;
}

/// Reference values at default constants, g = -100 dB, evaluated to 30
/// digits with an arbitrary-precision calculator.
namespace golden {
inline constexpr double kSpectralLoad = 40.0 / 9.0;
inline constexpr double kExpTerm = 20.7726400027900314;
inline constexpr double kGainDb = -100.0;
inline constexpr double kTxPowerCell = 3.73907520050220566e-4;
inline constexpr double kEnergyCell = 1.86953760025110283e-3;
inline constexpr double kEnergyD2d = 7.44276324279341758e-3;
}  // namespace golden

namespace detail {

inline std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct EnergyConstant {
  const char* key;
  double nominal;
};

/// Channel constants that enter the energy formula, with their default values.
inline const std::vector<EnergyConstant>& energy_constants() {
  static const std::vector<EnergyConstant> c{
      {"channel.noise_psd_dbm_hz", -174.0}, {"channel.prb_bandwidth_hz", 180e3},
      {"channel.prb_duration_s", 5e-4},     {"channel.prbs_per_ci", 10000.0},
      {"traffic.d_ci", 4e6},                {"channel.cell_margin_db", 4.0},
      {"channel.d2d_margin_db", 10.0}};
  return c;
}

inline std::vector<std::string> perturbed_constants(const SimConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& c : energy_constants()) {
    const double v = std::stod(get_config_value(cfg, c.key));
    if (v != c.nominal) out.push_back(std::string(c.key) + "=" + fmt_g(v) + " (default " + fmt_g(c.nominal) + ")");
  }
  return out;
}

inline CheckResult golden_check(const SimConfig& cfg, const char* name, double got, double want, double tol) {
  CheckResult r{"energy", name, rel_err(got, want) <= tol, ""};
  r.detail = "got " + fmt_g(got) + ", expected " + fmt_g(want);
  if (!r.passed) {
    const auto bad = perturbed_constants(cfg);
    if (!bad.empty()) {
      r.detail += "; perturbed constant:";
      for (const auto& b : bad) r.detail += " " + b;
    }
  }
  return r;
}

}  // namespace detail

/// Exhaustive min-of-J distribution over all Q^J ordered draws.
inline std::vector<double> enumerate_min_pmf(const std::vector<double>& ranked_pmf, int j) {
  const std::size_t q = ranked_pmf.size();
  std::vector<double> out(q, 0.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(j), 0);
  while (true) {
    double p = 1.0;
    std::size_t mn = q;
    for (std::size_t d : idx) {
      p *= ranked_pmf[d];
      mn = std::min(mn, d);
    }
    out[mn] += p;
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == q) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return out;
}

/// E[min cost | J >= 1] summed directly over j = 1..j_max of the Poisson
/// law, each term from survival differences of the single-draw CDF.
inline double brute_force_expected_min(const std::vector<double>& sorted_costs, const std::vector<double>& ranked_pmf,
                                       double mean, double mass = 1.0 - 1e-9) {
  double covered = std::exp(-mean);
  double num = 0.0, den = 0.0;
  double pj = std::exp(-mean);
  for (int j = 1; covered < mass || j < 2; ++j) {
    pj *= mean / j;
    covered += pj;
    double e = 0.0, cdf_prev = 0.0;
    for (std::size_t q = 0; q < sorted_costs.size(); ++q) {
      const double cdf = q + 1 == sorted_costs.size() ? 1.0 : std::min(1.0, cdf_prev + ranked_pmf[q]);
      e += sorted_costs[q] * (std::pow(1.0 - cdf_prev, j) - std::pow(1.0 - cdf, j));
      cdf_prev = cdf;
    }
    num += pj * e;
    den += pj;
  }
  return num / den;
}

/// Monte-Carlo E[min cost | J >= 1]: draw J, then J tiles, keep the minimum.
inline double monte_carlo_expected_min(const TileCostTable& t, double mean, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> pj(mean);
  std::discrete_distribution<std::size_t> pick(t.tile_pmf.begin(), t.tile_pmf.end());
  double sum = 0.0;
  int n = 0;
  while (n < samples) {
    const int j = pj(rng);
    if (j == 0) continue;
    double mn = INFINITY;
    for (int d = 0; d < j; ++d) mn = std::min(mn, t.costs[pick(rng)]);
    sum += mn;
    ++n;
  }
  return sum / n;
}

/// Fixed small tables used by the expected-cost checks.
inline std::vector<TileCostTable> fixture_tables() {
  return {make_tile_table({1.0, 2.0}, {0.5, 0.5}), make_tile_table({1.0, 2.0, 3.0}, {0.2, 0.3, 0.5})};
}

inline std::vector<CheckResult> energy_checks(const SimConfig& cfg) {
  const auto& ch = cfg.channel;
  const double g = db_to_linear(golden::kGainDb);
  std::vector<CheckResult> out;
  {
    const auto bad = detail::perturbed_constants(cfg);
    CheckResult r{"energy", "default_constants", bad.empty(), "all energy constants at default values"};
    if (!bad.empty()) {
      r.detail = "perturbed constant:";
      for (const auto& b : bad) r.detail += " " + b;
    }
    out.push_back(r);
  }
  out.push_back(detail::golden_check(cfg, "spectral_load", ch.spectral_load(), golden::kSpectralLoad, 1e-12));
  out.push_back(detail::golden_check(cfg, "exp_term", std::exp2(ch.spectral_load()) - 1.0, golden::kExpTerm, 1e-9));
  out.push_back(detail::golden_check(cfg, "tx_power_cell", tx_power_per_prb(ch, g, ch.m_cell_db),
                                     golden::kTxPowerCell, 1e-9));
  out.push_back(detail::golden_check(cfg, "energy_cell", cellular_energy(ch, g), golden::kEnergyCell, 1e-9));
  out.push_back(detail::golden_check(cfg, "energy_d2d", d2d_energy(ch, g), golden::kEnergyD2d, 1e-9));
  return out;
}

inline std::vector<CheckResult> flop_checks() {
  std::vector<CheckResult> out;
  const auto f = flop_count(640, 0, 10);
  out.push_back({"flops", "operation_bound", f.total() < 1000000,
                 "Q=640 j=[0,10]: " + std::to_string(f.total()) + " operations"});
  const auto h = flop_count(2, 1, 1);
  out.push_back({"flops", "hand_case_q2", h.multiplications == 4 && h.additions == 3,
                 "mul=" + std::to_string(h.multiplications) + " add=" + std::to_string(h.additions)});
  const auto a = flop_count(100, 2, 7), b = flop_count(200, 2, 7), c = flop_count(300, 2, 7);
  out.push_back({"flops", "linear_in_q", b.total() - a.total() == c.total() - b.total(),
                 "increments " + std::to_string(b.total() - a.total()) + ", " + std::to_string(c.total() - b.total())});
  const double p1 = cpu_power(1e6, 1.0, 1e-9);
  const double p2 = cpu_power(5e5, 1.0, 2e-9);
  out.push_back({"flops", "cpu_power_1mw", p1 == 1e-3 && p2 == 1e-3 && cpu_power(0.0, 1.0, 1e-9) == 0.0,
                 "1e6@1nJ=" + detail::fmt_g(p1) + " W, 5e5@2nJ=" + detail::fmt_g(p2) + " W"});
  return out;
}

inline std::vector<CheckResult> estimator_checks(std::uint64_t seed = 11) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  {
    double worst = 0.0;
    for (int fixture = 0; fixture < 20; ++fixture) {
      const int q = 2 + static_cast<int>(rng() % 5);
      const int j = 1 + static_cast<int>(rng() % 4);
      std::vector<double> w(static_cast<std::size_t>(q));
      double s = 0.0;
      for (double& x : w) s += x = 0.05 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      for (double& x : w) x /= s;
      const auto got = min_cost_pmf(w, j);
      const auto want = enumerate_min_pmf(w, j);
      for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    out.push_back({"estimator", "min_pmf_enumeration", worst <= 1e-12, "max abs error " + detail::fmt_g(worst)});
  }
  {
    const std::vector<double> p{0.2, 0.3, 0.5};
    const auto pmf = min_cost_pmf(p, 3);
    std::discrete_distribution<int> pick(p.begin(), p.end());
    std::vector<double> hist(3, 0.0);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) hist[static_cast<std::size_t>(std::min({pick(rng), pick(rng), pick(rng)}))] += 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(hist[i] / n - pmf[i]));
    out.push_back({"estimator", "min_pmf_monte_carlo", worst <= 0.003, "max abs deviation " + detail::fmt_g(worst)});
  }
  {
    double worst = 0.0;
    for (double mean : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const auto w = poisson_window(mean, 0.95);
      double mass = 0.0;
      for (double x : w.window_pmf) mass += x;
      if (mass < 0.95) worst = std::max(worst, 0.95 - mass);
      // Exhaustive scan over contiguous intervals for the shortest one.
      int best_len = 1 << 30;
      for (int lo = 0; lo <= 60; ++lo) {
        double acc = 0.0;
        for (int hi = lo; hi <= 60; ++hi) {
          acc += w.pmf(hi);
          if (acc >= 0.95) {
            best_len = std::min(best_len, hi - lo + 1);
            break;
          }
        }
      }
      if (w.j_ue - w.j_le + 1 != best_len) worst = std::max(worst, 1.0);
    }
    out.push_back({"estimator", "window_shortest_interval", worst == 0.0,
                   worst == 0.0 ? "windows hold >= 0.95 mass and are shortest" : "window mismatch"});
  }
  EstimatorOptions opt;
  opt.p_empty_max = 1.0;
  {
    double worst = 0.0;
    for (const auto& t : fixture_tables())
      for (double mean : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double got = *expected_d2d_aided_cost(t, poisson_window(mean, opt.window_mass), opt);
        const double want = brute_force_expected_min(t.sorted_costs, t.ranked_pmf, mean);
        worst = std::max(worst, detail::rel_err(got, want));
      }
    out.push_back({"estimator", "expected_cost_wide_window", worst <= 0.01,
                   "max relative error " + detail::fmt_g(worst)});
  }
  {
    double worst = 0.0;
    std::uint64_t s = seed;
    for (const auto& t : fixture_tables())
      for (double mean : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double got = *expected_d2d_aided_cost(t, poisson_window(mean, opt.window_mass), opt);
        const double want = monte_carlo_expected_min(t, mean, 1000000, ++s);
        worst = std::max(worst, detail::rel_err(got, want));
      }
    out.push_back({"estimator", "expected_cost_monte_carlo", worst <= 0.005,
                   "max relative error " + detail::fmt_g(worst)});
  }
  return out;
}

inline std::vector<CheckResult> mobility_checks(const SimConfig& cfg, std::uint64_t seed = 13) {
  std::vector<CheckResult> out;
  const Grid grid(cfg.grid);
  std::mt19937_64 rng(seed);
  auto exit_frequencies = [&](IntersectionIndex at, Vec2 heading) {
    // Start outside the intersection square; one 6 m step crosses it.
    NodeState n;
    n.heading = heading;
    n.speed = 6.0;
    const Vec2 c = grid.intersection(at.i, at.j);
    n.position = c - heading * 5.5;
    n.street_id = grid.street_at(n.position);
    std::array<double, 3> hist{0.0, 0.0, 0.0};
    const int samples = 100000;
    for (int i = 0; i < samples; ++i) {
      const auto m = step(n, grid, 1.0, rng);
      for (Turn t : {Turn::kRight, Turn::kLeft, Turn::kForward})
        if (distance(m.heading, turn_direction(heading, t)) < 1e-9) hist[static_cast<std::size_t>(t)] += 1.0;
    }
    for (double& h : hist) h /= samples;
    return hist;
  };
  {
    const int mid = grid.intersections_x() / 2;
    const auto f = exit_frequencies({mid, mid}, {1.0, 0.0});
    double worst = 0.0;
    for (double x : f) worst = std::max(worst, std::abs(x - 1.0 / 3.0));
    out.push_back({"mobility", "turns_four_way", worst <= 0.01,
                   "frequencies " + detail::fmt_g(f[0]) + ", " + detail::fmt_g(f[1]) + ", " + detail::fmt_g(f[2])});
  }
  {
    // Heading up into the bottom boundary row: right and left exist, forward does not.
    const auto f = exit_frequencies({1, 0}, {0.0, -1.0});
    const bool ok = std::abs(f[0] - 0.5) <= 0.01 && std::abs(f[1] - 0.5) <= 0.01 && f[2] == 0.0;
    out.push_back({"mobility", "turns_two_exits", ok,
                   "frequencies " + detail::fmt_g(f[0]) + ", " + detail::fmt_g(f[1]) + ", " + detail::fmt_g(f[2])});
  }
  {
    NodeState n;
    n.heading = {1.0, 0.0};
    n.speed = 1.5;
    n.position = {50.0, grid.intersection(0, 1).y};
    n.street_id = grid.street_at(n.position);
    const auto m = step(n, grid, 1.0, rng);
    const bool ok = std::abs(m.position.x - 51.5) < 1e-12 && m.position.y == n.position.y;
    out.push_back({"mobility", "step_kinematics", ok, "x after 1 s: " + detail::fmt_g(m.position.x)});
  }
  {
    NodeState n;
    n.heading = {1.0, 0.0};
    n.speed = 1.5;
    const Vec2 c = grid.intersection(2, 1);
    n.position = c - Vec2{3.0, 0.0};
    n.street_id = grid.street_at(n.position);
    const auto f = forecast_trajectory(n, grid, 10);
    bool ok = f.branch_events.size() == 1 && f.branch_events[0].arrival_ci == 2;
    if (ok)
      for (Turn t : feasible_turns(grid, f.branch_events[0].intersection, n.heading)) {
        const Vec2 want = c + turn_direction(n.heading, t) * 1.5;
        ok = ok && distance(f.branch_events[0].branch_positions[static_cast<std::size_t>(t)][0], want) < 1e-9;
      }
    out.push_back({"mobility", "forecast_branch_point", ok, "arrival at CI 2, 1.5 m along each exit at CI 3"});
  }
  {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto nodes = spawn_nodes(grid, 1500, substream_seed(seed, s));
      const double density = static_cast<double>(nodes.size()) / grid.total_axis_length();
      for (const auto& n : nodes)
        if (!grid.on_street(n.position)) worst = 1.0;
      worst = std::max(worst, std::abs(density - 0.18) / 0.18);
    }
    out.push_back({"mobility", "spawn_density", worst <= 0.10,
                   "1500 nodes, relative deviation from 0.18 nodes/m: " + detail::fmt_g(worst)});
  }
  return out;
}

/// Runs the requested groups (all when `only` is empty).
inline std::vector<CheckResult> run_checks(const SimConfig& cfg, const std::vector<std::string>& only = {}) {
  auto wanted = [&](const std::string& g) { return only.empty() || std::find(only.begin(), only.end(), g) != only.end(); };
  for (const auto& g : only)
    if (std::find(check_groups().begin(), check_groups().end(), g) == check_groups().end())
      throw std::invalid_argument("unknown check group '" + g + "'");
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (wanted("energy")) append(energy_checks(cfg));
  if (wanted("flops")) append(flop_checks());
  if (wanted("estimator")) append(estimator_checks());
  if (wanted("mobility")) append(mobility_checks(cfg));
  return out;
}

/// Applies a `--fault-inject` argument: `key=value`, or a bare key whose
/// value is then scaled by 1.01. Keys without a section are taken from
/// [channel].
inline void inject_fault(SimConfig& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  std::string key = spec.substr(0, eq);
  if (key.find('.') == std::string::npos) key = "channel." + key;
  if (eq != std::string::npos) {
    set_config_value(cfg, key, spec.substr(eq + 1));
    return;
  }
  const double v = std::stod(get_config_value(cfg, key));
  set_config_value(cfg, key, detail::format_double(v != 0.0 ? v * 1.01 : 1.0));
}

}  // namespace ngo
