#pragma once

// Expected per-CI energy cost of the two uplink modes:
//  - opportunistic single-hop cellular at the forecast source position;
//  - opportunistic D2D-aided cellular through the best of an unknown number of
//    relays, using tile ranking, the staircase CDF of the per-relay cost, the
//    minimum-of-J order statistic and a Poisson relay-count mixture.
// Turn uncertainty is folded in by averaging over the exits of the first
// intersection on the forecast trajectory.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ngo/channel.hpp"
#include "ngo/mobility.hpp"
#include "ngo/scenario.hpp"

namespace ngo {

inline double cell_cost_at(const Grid& grid, const ChannelParams& params, Vec2 position, Vec3 bs) {
  return cellular_energy(params, cellular_gain(grid, params, position, bs));
}

inline double cell_cost_at(const Grid& grid, const ChannelParams& params, Vec2 position) {
  return cell_cost_at(grid, params, position, grid.bs());
}

/// Probability-weighted average over turn directions (right, left, forward).
inline double branch_average(std::span<const double> costs, std::span<const double> probs) {
  if (costs.size() != probs.size())
    throw std::invalid_argument("branch_average: costs and probabilities differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i)
    if (probs[i] > 0.0) acc += costs[i] * probs[i];
  return acc;
}

struct TileCostTable {
  CoverageRegion region;
  /// Per tile (region order): D2D leg plus relay cellular leg, joules.
  std::vector<double> costs;
  /// ranking[q] = tile position (0-based) holding the q-th cheapest cost.
  std::vector<std::size_t> ranking;
  /// inverse_ranking[i] = rank (0-based) of tile i.
  std::vector<std::size_t> inverse_ranking;
  std::vector<double> sorted_costs;
  std::vector<double> tile_pmf;
  std::vector<double> ranked_pmf;

  std::size_t size() const { return costs.size(); }
  bool infeasible() const { return costs.empty(); }
};

/// Linear node density per street id (index id-1), nodes per meter.
using StreetDensities = std::vector<double>;

inline StreetDensities homogeneous_densities(const Grid& grid, double node_count) {
  return StreetDensities(grid.streets().size(), node_count / grid.total_axis_length());
}

namespace detail {

inline void rank_table(TileCostTable& t) {
  const std::size_t q = t.costs.size();
  t.ranking.resize(q);
  std::iota(t.ranking.begin(), t.ranking.end(), std::size_t{0});
  std::stable_sort(t.ranking.begin(), t.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return t.costs[a] < t.costs[b]; });
  t.inverse_ranking.assign(q, 0);
  t.sorted_costs.resize(q);
  t.ranked_pmf.resize(q);
  for (std::size_t r = 0; r < q; ++r) {
    t.inverse_ranking[t.ranking[r]] = r;
    t.sorted_costs[r] = t.costs[t.ranking[r]];
    t.ranked_pmf[r] = t.tile_pmf[t.ranking[r]];
  }
}

}  // namespace detail

/// Build a table from explicit per-tile costs and weights (weights need not
/// be normalized). Used by the estimator and by synthetic fixtures.
inline TileCostTable make_tile_table(std::vector<double> costs, std::vector<double> weights) {
  if (costs.size() != weights.size())
    throw std::invalid_argument("make_tile_table: costs and weights differ in length");
  TileCostTable t;
  t.costs = std::move(costs);
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("make_tile_table: negative weight");
    total += w;
  }
  t.tile_pmf.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    t.tile_pmf[i] = total > 0.0 ? weights[i] / total : 1.0 / static_cast<double>(weights.size());
  detail::rank_table(t);
  return t;
}

/// Per-tile D2D-aided cost for a source at `source_pos`. The relay leg uses
/// `cell_map` when given, otherwise it is computed from geometry.
inline TileCostTable tile_cost_table(const Grid& grid, const ChannelParams& params, Vec2 source_pos,
                                     const CoverageRegion& region, const StreetDensities& densities,
                                     const CellCostMap* cell_map = nullptr) {
  std::vector<double> costs;
  std::vector<double> weights;
  costs.reserve(region.tiles.size());
  weights.reserve(region.tiles.size());
  const Vec3 bs = grid.bs();
  for (const auto& tile : region.tiles) {
    const double leg1 = d2d_energy(params, d2d_gain(grid, params, source_pos, tile.center));
    double leg2 = cell_map != nullptr ? cell_map->at(tile.ix, tile.iy) : -1.0;
    if (leg2 < 0.0) leg2 = cell_cost_at(grid, params, tile.center, bs);
    costs.push_back(leg1 + leg2);
    weights.push_back(densities.at(static_cast<std::size_t>(tile.street_id - 1)) * region.tile_side);
  }
  TileCostTable t = make_tile_table(std::move(costs), std::move(weights));
  t.region = region;
  return t;
}

/// Right-continuous staircase CDF of the single-relay cost.
class StaircaseCdf {
 public:
  explicit StaircaseCdf(const TileCostTable& table) : costs_(table.sorted_costs) {
    if (costs_.empty()) throw std::invalid_argument("staircase_cdf: empty table");
    cumulative_.resize(costs_.size());
    double acc = 0.0;
    for (std::size_t q = 0; q < costs_.size(); ++q) {
      acc += table.ranked_pmf[q];
      cumulative_[q] = acc;
    }
    cumulative_.back() = 1.0;
  }

  double operator()(double c) const {
    const auto it = std::upper_bound(costs_.begin(), costs_.end(), c);
    if (it == costs_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - costs_.begin()) - 1];
  }

  const std::vector<double>& cumulative() const { return cumulative_; }

 private:
  std::vector<double> costs_;
  std::vector<double> cumulative_;
};

inline StaircaseCdf staircase_cdf(const TileCostTable& table) { return StaircaseCdf(table); }

/// Distribution of the minimum of J i.i.d. draws from the ranked pmf,
/// computed with the three-case recursion (first rank, middle ranks, last
/// rank). Returns an empty vector for J = 0 (no relay).
inline std::vector<double> min_cost_pmf(std::span<const double> ranked_pmf, int j) {
  if (j < 0) throw std::invalid_argument("min_cost_pmf: negative J");
  const std::size_t q_count = ranked_pmf.size();
  if (q_count == 0) throw std::invalid_argument("min_cost_pmf: empty table");
  if (j == 0) return {};
  std::vector<double> out(q_count, 0.0);
  const double jd = static_cast<double>(j);
  out[0] = 1.0 - std::pow(1.0 - ranked_pmf[0], jd);
  if (q_count == 1) {
    out[0] = 1.0;
    return out;
  }
  double partial = ranked_pmf[0];
  double emitted = out[0];
  for (std::size_t q = 1; q + 1 < q_count; ++q) {
    partial += ranked_pmf[q];
    out[q] = 1.0 - std::pow(std::max(0.0, 1.0 - partial), jd) - emitted;
    emitted += out[q];
  }
  out[q_count - 1] = 1.0 - emitted;
  return out;
}

inline std::vector<double> min_cost_pmf(const TileCostTable& table, int j) {
  return min_cost_pmf(std::span<const double>(table.ranked_pmf), j);
}

/// Treatment of relay-count mass outside the truncation window.
enum class WindowTail {
  /// Mass below the window joins its first term, mass above joins its last.
  kFold,
  /// Window terms are rescaled by the window mass.
  kRenormalize,
};

struct RelayCountModel {
  double mean{0.0};
  int j_le{0};
  int j_ue{0};
  /// p_J(j) for j = j_le .. j_ue.
  std::vector<double> window_pmf;

  double pmf(int j) const {
    if (j < 0) return 0.0;
    if (mean <= 0.0) return j == 0 ? 1.0 : 0.0;
    return std::exp(j * std::log(mean) - mean - std::lgamma(j + 1.0));
  }
  double window_mass() const { return std::accumulate(window_pmf.begin(), window_pmf.end(), 0.0); }
  double p_empty() const { return pmf(0); }

  /// Mixture weights for j = j_first .. j_ue (j_first >= max(1, j_le)).
  /// Under kFold the weights sum to P(J >= 1).
  std::vector<double> term_weights(int j_first, WindowTail tail) const {
    std::vector<double> w;
    if (j_first > j_ue) return w;
    for (int j = j_first; j <= j_ue; ++j) w.push_back(window_pmf[static_cast<std::size_t>(j - j_le)]);
    if (tail == WindowTail::kFold) {
      double below = 0.0;
      for (int j = 1; j < j_first; ++j) below += pmf(j);
      double upto = 0.0;
      for (int j = 0; j <= j_ue; ++j) upto += pmf(j);
      w.front() += below;
      w.back() += std::max(0.0, 1.0 - upto);
    }
    return w;
  }
};

/// Shortest contiguous interval of a Poisson(mean) pmf holding at least
/// `mass`, grown greedily from the mode.
inline RelayCountModel poisson_window(double mean, double mass) {
  if (mean < 0.0) throw std::invalid_argument("relay_count_stats: negative mean");
  if (!(mass > 0.0) || mass > 1.0) throw std::invalid_argument("relay_count_stats: mass in (0,1]");
  RelayCountModel m;
  m.mean = mean;
  if (mean <= 0.0) {
    m.window_pmf = {1.0};
    return m;
  }
  const int mode = static_cast<int>(std::floor(mean));
  int lo = mode, hi = mode;
  double acc = m.pmf(mode);
  // Stops growing once the tail underflows; the window then holds all the
  // representable mass.
  while (acc < mass) {
    const double left = lo > 0 ? m.pmf(lo - 1) : -1.0;
    const double right = m.pmf(hi + 1);
    if (left <= 0.0 && right <= 0.0) break;
    if (left >= right) {
      --lo;
      acc += left;
    } else {
      ++hi;
      acc += right;
    }
  }
  m.j_le = lo;
  m.j_ue = hi;
  for (int j = lo; j <= hi; ++j) m.window_pmf.push_back(m.pmf(j));
  return m;
}

/// Mean relay count from covered street lengths and linear densities.
inline RelayCountModel relay_count_stats(std::span<const StreetCoverage> streets,
                                         const StreetDensities& densities, double mass = 0.95) {
  double mean = 0.0;
  for (const auto& s : streets) {
    if (s.covered_length < 0.0) throw std::invalid_argument("relay_count_stats: negative length");
    const double lambda = densities.at(static_cast<std::size_t>(s.street_id - 1));
    if (lambda < 0.0) throw std::invalid_argument("relay_count_stats: negative density");
    mean += lambda * s.covered_length;
  }
  return poisson_window(mean, mass);
}

/// Relay-count mixture of the minimum-cost CDF over the truncation window.
/// J = 0 never completes, so the CDF tops out at P(J >= 1).
class MixtureCdf {
 public:
  MixtureCdf(const TileCostTable& table, const RelayCountModel& model, WindowTail tail = WindowTail::kFold)
      : single_(table), j_first_(std::max(1, model.j_le)), weights_(model.term_weights(j_first_, tail)) {
    if (tail == WindowTail::kRenormalize) {
      const double mass = model.window_mass();
      for (double& w : weights_) w = mass > 0.0 ? w / mass : 0.0;
    }
  }

  double operator()(double c) const {
    const double f = single_(c);
    double acc = 0.0;
    for (std::size_t w = 0; w < weights_.size(); ++w)
      acc += weights_[w] * (1.0 - std::pow(1.0 - f, static_cast<double>(j_first_ + static_cast<int>(w))));
    return acc;
  }

 private:
  StaircaseCdf single_;
  int j_first_;
  std::vector<double> weights_;
};

inline MixtureCdf mixture_cdf(const TileCostTable& table, const RelayCountModel& model,
                              WindowTail tail = WindowTail::kFold) {
  return MixtureCdf(table, model, tail);
}

enum class ZeroRelayPolicy {
  /// Weights over j >= 1 in the window are renormalized to one.
  kConditionOnNonEmpty,
  /// Raw truncated sum; j = 0 contributes nothing and nothing is renormalized.
  kLiteral,
};

struct EstimatorOptions {
  double window_mass{0.95};
  double p_empty_max{0.5};
  ZeroRelayPolicy zero_policy{ZeroRelayPolicy::kConditionOnNonEmpty};
  WindowTail tail{WindowTail::kFold};
};

/// Expected cost of the best relay, summed rank by rank over the window of
/// relay counts. nullopt marks the mode infeasible.
inline std::optional<double> expected_d2d_aided_cost(const TileCostTable& table,
                                                     const RelayCountModel& model,
                                                     const EstimatorOptions& opt = {}) {
  if (table.infeasible()) return std::nullopt;
  if (model.p_empty() > opt.p_empty_max) return std::nullopt;
  const int j_first = std::max(1, model.j_le);
  if (j_first > model.j_ue) return std::nullopt;
  std::vector<double> weight = model.term_weights(j_first, opt.tail);
  const std::size_t n_j = weight.size();
  const double weight_sum = std::accumulate(weight.begin(), weight.end(), 0.0);
  if (!(weight_sum > 0.0)) return std::nullopt;
  if (opt.zero_policy == ZeroRelayPolicy::kConditionOnNonEmpty)
    for (double& w : weight) w /= weight_sum;

  // emitted[w] tracks sum_{q' < q} p*(c_q'|j) for each j in the window.
  const std::size_t q_count = table.size();
  std::vector<double> emitted(n_j, 0.0);
  std::vector<double> power(n_j);
  double partial = 0.0;
  double expectation = 0.0;
  for (std::size_t q = 0; q < q_count; ++q) {
    double mass_q = 0.0;
    if (q + 1 == q_count) {
      for (std::size_t w = 0; w < n_j; ++w) mass_q += weight[w] * (1.0 - emitted[w]);
    } else {
      partial += table.ranked_pmf[q];
      const double base = std::max(0.0, 1.0 - partial);
      double pw = std::pow(base, static_cast<double>(j_first));
      for (std::size_t w = 0; w < n_j; ++w) {
        const double pq = 1.0 - pw - emitted[w];
        emitted[w] += pq;
        mass_q += weight[w] * pq;
        pw *= base;
      }
    }
    expectation += table.sorted_costs[q] * mass_q;
  }
  return expectation;
}

struct CostForecast {
  int horizon{0};
  std::vector<double> cell;
  /// nullopt: D2D-aided infeasible at that CI.
  std::vector<std::optional<double>> d2d_aided;
  /// True where the entry averages over turn branches.
  std::vector<bool> branch_averaged;
  /// Tiles and relay-count window of every evaluated table, for CPU accounting.
  struct TableStats {
    std::size_t tiles{0};
    int j_le{0};
    int j_ue{0};
  };
  std::vector<TableStats> tables;

  double best(int k) const {
    const auto& d = d2d_aided[static_cast<std::size_t>(k)];
    const double c = cell[static_cast<std::size_t>(k)];
    return d && *d < c ? *d : c;
  }
};

struct PointEstimate {
  double cell{0.0};
  std::optional<double> d2d;
};

inline PointEstimate estimate_at(const Grid& grid, const ChannelParams& params, Vec2 pos,
                                 const StreetDensities& densities, const EstimatorOptions& opt,
                                 bool allow_d2d, const CellCostMap* cell_map,
                                 std::vector<CostForecast::TableStats>* stats) {
  PointEstimate e;
  e.cell = cell_cost_at(grid, params, pos);
  if (!allow_d2d) return e;
  const auto region = coverage_region(grid, pos, params.r_d2d_m);
  if (region.empty()) return e;
  const auto table = tile_cost_table(grid, params, pos, region, densities, cell_map);
  const auto streets = streets_in_region(grid, region);
  const auto model = relay_count_stats(streets, densities, opt.window_mass);
  e.d2d = expected_d2d_aided_cost(table, model, opt);
  if (stats != nullptr) stats->push_back({table.size(), model.j_le, model.j_ue});
  return e;
}

/// Per-CI expected costs over the trajectory forecast. Past the first
/// intersection both entries average the per-exit estimates; D2D-aided is
/// infeasible there if any reachable exit is infeasible.
inline CostForecast forecast_costs(const Grid& grid, const ChannelParams& params,
                                   const TrajectoryForecast& trajectory,
                                   const StreetDensities& densities, int horizon,
                                   const EstimatorOptions& opt = {}, bool allow_d2d = true,
                                   const CellCostMap* cell_map = nullptr) {
  if (horizon > trajectory.horizon)
    throw std::invalid_argument("forecast_costs: horizon exceeds trajectory forecast");
  CostForecast f;
  f.horizon = horizon;
  f.cell.resize(static_cast<std::size_t>(horizon));
  f.d2d_aided.resize(static_cast<std::size_t>(horizon));
  f.branch_averaged.assign(static_cast<std::size_t>(horizon), false);
  for (int k = 0; k < horizon; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (trajectory.deterministic_at(k)) {
      const auto e = estimate_at(grid, params, trajectory.deterministic_prefix[uk], densities, opt,
                                 allow_d2d, cell_map, &f.tables);
      f.cell[uk] = e.cell;
      f.d2d_aided[uk] = e.d2d;
      continue;
    }
    const auto& ev = trajectory.branch_events.front();
    const auto offset = static_cast<std::size_t>(k - ev.arrival_ci - 1);
    std::array<double, 3> cells{0.0, 0.0, 0.0};
    std::array<double, 3> d2ds{0.0, 0.0, 0.0};
    bool d2d_ok = allow_d2d;
    for (std::size_t dir = 0; dir < 3; ++dir) {
      if (ev.turn_probs[dir] <= 0.0) continue;
      const auto e = estimate_at(grid, params, ev.branch_positions[dir][offset], densities, opt,
                                 allow_d2d, cell_map, &f.tables);
      cells[dir] = e.cell;
      if (e.d2d) d2ds[dir] = *e.d2d;
      else d2d_ok = false;
    }
    f.cell[uk] = branch_average(cells, ev.turn_probs);
    if (d2d_ok) f.d2d_aided[uk] = branch_average(d2ds, ev.turn_probs);
    f.branch_averaged[uk] = true;
  }
  return f;
}

}  // namespace ngo
