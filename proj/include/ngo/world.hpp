#pragma once

// Precomputed world trace (node states at every CI boundary and upload
// activations) plus the per-scheme mutable view used for discovery and
// realized link costs. Every scheme replays the same trace, so node motion and
// activation sequences are identical across schemes for a given seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "ngo/channel.hpp"
#include "ngo/estimator.hpp"
#include "ngo/mobility.hpp"
#include "ngo/scenario.hpp"

namespace ngo {

struct Activation {
  int upload{0};
  int node{0};
  int created_ci{0};
  int deadline_ci{0};
};

struct TraceOptions {
  int node_count{0};
  double speed{1.5};
  double t_ci{1.0};
  int ci_count{0};
  double lambda_req{0.1};
  /// Control intervals available per upload.
  int n_ci_per_upload{10};
  std::uint64_t seed{1};
  EstimatorOptions estimator{};
};

inline constexpr std::uint64_t kSpawnStream = 0x5370617774ULL;
inline constexpr std::uint64_t kActivationStream = 0x4163746976ULL;

class WorldTrace {
 public:
  WorldTrace(Grid grid, ChannelParams params, const TraceOptions& opt)
      : grid_(std::move(grid)), params_(params), opt_(opt), cell_map_(grid_, params_),
        densities_(homogeneous_densities(grid_, opt.node_count)) {
    build_states();
    build_activations();
    const std::size_t cells = static_cast<std::size_t>(opt_.ci_count + 1) *
                              static_cast<std::size_t>(std::max(opt_.node_count, 1));
    cell_cache_.assign(cells, std::numeric_limits<double>::quiet_NaN());
  }

  /// Scripted trace: explicit node states per CI (states[k][node]) and activations.
  WorldTrace(Grid grid, ChannelParams params, const TraceOptions& opt,
             std::vector<std::vector<NodeState>> states, std::vector<Activation> activations)
      : grid_(std::move(grid)), params_(params), opt_(opt), cell_map_(grid_, params_),
        densities_(homogeneous_densities(grid_, opt.node_count)), states_(std::move(states)),
        activations_(std::move(activations)) {
    opt_.ci_count = static_cast<int>(states_.size()) - 1;
    arrivals_ = static_cast<int>(activations_.size());
    const std::size_t cells = states_.size() * std::max<std::size_t>(states_.front().size(), 1);
    cell_cache_.assign(cells, std::numeric_limits<double>::quiet_NaN());
  }

  const Grid& grid() const { return grid_; }
  const ChannelParams& params() const { return params_; }
  const TraceOptions& options() const { return opt_; }
  const CellCostMap& cell_map() const { return cell_map_; }
  const StreetDensities& densities() const { return densities_; }
  void set_densities(StreetDensities d) { densities_ = std::move(d); }

  int ci_count() const { return opt_.ci_count; }
  int node_count() const { return states_.empty() ? 0 : static_cast<int>(states_.front().size()); }
  const NodeState& node(int ci, int id) const {
    return states_.at(static_cast<std::size_t>(ci)).at(static_cast<std::size_t>(id));
  }
  const std::vector<NodeState>& nodes_at(int ci) const { return states_.at(static_cast<std::size_t>(ci)); }
  const std::vector<Activation>& activations() const { return activations_; }
  /// Poisson arrivals before the warm-up filter.
  int arrivals() const { return arrivals_; }

  bool active_source(int node, int ci) const {
    for (const auto& a : activations_)
      if (a.node == node && a.created_ci <= ci && ci <= a.deadline_ci) return true;
    return false;
  }

  /// Realized cellular fragment cost of a node at a CI.
  double cell_cost(int node, int ci) const {
    const std::size_t idx = static_cast<std::size_t>(ci) * static_cast<std::size_t>(node_count()) +
                            static_cast<std::size_t>(node);
    double& slot = cell_cache_[idx];
    if (std::isnan(slot)) slot = cell_cost_at(grid_, params_, this->node(ci, node).position);
    return slot;
  }

  double d2d_cost(int from, int to, int ci) const {
    return d2d_energy(params_, d2d_gain(grid_, params_, node(ci, from).position, node(ci, to).position));
  }

  /// Cost forecast for `node` starting at CI `ci`, cached per trace.
  const CostForecast& forecast(int node_id, int ci, int horizon, bool allow_d2d) const {
    const auto key = std::make_tuple(node_id, ci, horizon, allow_d2d);
    auto it = forecast_cache_.find(key);
    if (it != forecast_cache_.end()) return it->second;
    const auto traj = forecast_trajectory(node(ci, node_id), grid_, horizon, opt_.t_ci);
    auto f = forecast_costs(grid_, params_, traj, densities_, horizon, opt_.estimator, allow_d2d, &cell_map_);
    return forecast_cache_.emplace(key, std::move(f)).first->second;
  }

 private:
  void build_states() {
    auto nodes = spawn_nodes(grid_, opt_.node_count, substream_seed(opt_.seed, kSpawnStream), opt_.speed);
    std::vector<std::mt19937_64> rngs;
    rngs.reserve(nodes.size());
    for (const auto& n : nodes) rngs.emplace_back(substream_seed(opt_.seed, static_cast<std::uint64_t>(n.id) + 1));
    states_.reserve(static_cast<std::size_t>(opt_.ci_count + 1));
    states_.push_back(nodes);
    for (int k = 1; k <= opt_.ci_count; ++k) {
      if (opt_.speed > 0.0)
        for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = step(nodes[i], grid_, opt_.t_ci, rngs[i]);
      states_.push_back(nodes);
    }
  }

  void build_activations() {
    if (opt_.node_count <= 0 || opt_.lambda_req <= 0.0) return;
    std::mt19937_64 rng(substream_seed(opt_.seed, kActivationStream));
    std::exponential_distribution<double> gap(opt_.lambda_req);
    const double duration = opt_.ci_count * opt_.t_ci;
    double t = gap(rng);
    int upload = 0;
    while (t < duration) {
      ++arrivals_;
      const int ci = static_cast<int>(std::floor(t / opt_.t_ci));
      const int deadline = ci + opt_.n_ci_per_upload - 1;
      if (deadline < opt_.ci_count) {
        std::vector<int> free;
        for (int id = 0; id < opt_.node_count; ++id)
          if (!active_source(id, ci)) free.push_back(id);
        if (!free.empty()) {
          std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
          activations_.push_back({upload++, free[pick(rng)], ci, deadline});
        }
      }
      t += gap(rng);
    }
  }

  Grid grid_;
  ChannelParams params_;
  TraceOptions opt_;
  CellCostMap cell_map_;
  StreetDensities densities_;
  std::vector<std::vector<NodeState>> states_;
  std::vector<Activation> activations_;
  int arrivals_{0};
  mutable std::vector<double> cell_cache_;
  mutable std::map<std::tuple<int, int, int, bool>, CostForecast> forecast_cache_;
};

/// Per-scheme mutable view: relays currently holding a delegated fragment.
class World {
 public:
  explicit World(const WorldTrace& trace)
      : trace_(&trace), holding_(static_cast<std::size_t>(trace.node_count()), 0) {}

  const WorldTrace& trace() const { return *trace_; }
  const Grid& grid() const { return trace_->grid(); }
  const ChannelParams& params() const { return trace_->params(); }

  void add_holder(int node) { ++holding_.at(static_cast<std::size_t>(node)); }
  void remove_holder(int node) { --holding_.at(static_cast<std::size_t>(node)); }
  bool holding(int node) const { return holding_.at(static_cast<std::size_t>(node)) > 0; }

  bool busy(int node, int ci) const { return holding(node) || trace_->active_source(node, ci); }

  /// Free nodes within D2D range of `source` at `ci`, ascending id.
  std::vector<int> discover(int source, int ci, const std::vector<int>& exclude = {}) const {
    std::vector<int> out;
    const auto& nodes = trace_->nodes_at(ci);
    const Vec2 at = nodes.at(static_cast<std::size_t>(source)).position;
    const double r2 = params().r_d2d_m * params().r_d2d_m;
    for (const auto& n : nodes) {
      if (n.id == source) continue;
      const double dx = n.position.x - at.x, dy = n.position.y - at.y;
      if (dx * dx + dy * dy > r2) continue;
      if (busy(n.id, ci)) continue;
      if (std::find(exclude.begin(), exclude.end(), n.id) != exclude.end()) continue;
      out.push_back(n.id);
    }
    return out;
  }

  struct RelayChoice {
    int relay{-1};
    double d2d_leg{0.0};
    double cell_leg{0.0};
    double total() const { return d2d_leg + cell_leg; }
  };

  /// Candidate minimizing the realized two-leg cost (ties: lower id).
  std::optional<RelayChoice> best_relay(int source, int ci, const std::vector<int>& candidates) const {
    std::optional<RelayChoice> best;
    for (int r : candidates) {
      RelayChoice c{r, trace_->d2d_cost(source, r, ci), trace_->cell_cost(r, ci)};
      if (!best || c.total() < best->total()) best = c;
    }
    return best;
  }

 private:
  const WorldTrace* trace_;
  std::vector<int> holding_;
};

}  // namespace ngo
