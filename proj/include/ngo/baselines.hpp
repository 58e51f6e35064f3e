#pragma once

// Benchmark schemes: single-hop traditional, opportunistic cellular,
// 5G-Relay, and the clairvoyant two-hop Optimum.

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ngo/scheduler.hpp"
#include "ngo/world.hpp"

namespace ngo {

enum class BaselineKind { kShTraditional, kOppCell, kFiveGRelay, kOptimum };

struct BaselineResult {
  std::vector<DeliveryRecord> records;
  int discoveries{0};
  bool used_forecast{false};
};

namespace detail {

inline DeliveryRecord new_record(const FragmentTask& task, int upload, int fragment) {
  DeliveryRecord r;
  r.upload = upload;
  r.fragment = fragment;
  r.created_ci = task.created_ci;
  r.deadline_ci = task.deadline_ci;
  return r;
}

inline void deliver_cellular(DeliveryRecord& r, const World& world, int node, int ci) {
  r.path.push_back({node, kBaseStation, Mode::kCellular, ci, world.trace().cell_cost(node, ci)});
  r.delivered = true;
  r.delivery_ci = ci;
}

inline void deliver_relayed(DeliveryRecord& r, int source, const World::RelayChoice& c, int ci) {
  r.path.push_back({source, c.relay, Mode::kD2DAided, ci, c.d2d_leg});
  r.path.push_back({c.relay, kBaseStation, Mode::kCellular, ci, c.cell_leg});
  r.delivered = true;
  r.delivery_ci = ci;
}

}  // namespace detail

/// One direct upload per CI over the first N_c CIs.
inline BaselineResult run_sh_traditional(const FragmentTask& task, const World& world, int upload = 0) {
  BaselineResult out;
  for (int n = 0; n < task.fragments_remaining; ++n) {
    auto r = detail::new_record(task, upload, n);
    detail::deliver_cellular(r, world, task.owner, task.created_ci + n);
    out.records.push_back(std::move(r));
  }
  return out;
}

/// Planning restricted to cellular estimates, then direct uploads.
inline BaselineResult run_opp_cell(const FragmentTask& task, const World& world, const CostForecast& forecast,
                                   int upload = 0) {
  BaselineResult out;
  out.used_forecast = true;
  const auto p = plan(task, forecast, /*allow_d2d=*/false);
  int n = 0;
  for (const auto& slot : p.slots) {
    auto r = detail::new_record(task, upload, n++);
    detail::deliver_cellular(r, world, task.owner, slot.ci);
    out.records.push_back(std::move(r));
  }
  return out;
}

inline BaselineResult run_opp_cell(const FragmentTask& task, const World& world, int upload = 0) {
  const auto& f = world.trace().forecast(task.owner, task.created_ci, task.window(), false);
  return run_opp_cell(task, world, f, upload);
}

/// First N_c CIs; best discovered relay with same-CI forwarding when any
/// relay answers, otherwise direct.
inline BaselineResult run_5g_relay(const FragmentTask& task, const World& world, int upload = 0) {
  BaselineResult out;
  for (int n = 0; n < task.fragments_remaining; ++n) {
    const int ci = task.created_ci + n;
    auto r = detail::new_record(task, upload, n);
    ++out.discoveries;
    const auto best = world.best_relay(task.owner, ci, world.discover(task.owner, ci));
    if (best) detail::deliver_relayed(r, task.owner, *best, ci);
    else detail::deliver_cellular(r, world, task.owner, ci);
    out.records.push_back(std::move(r));
  }
  return out;
}

struct OptimumChoice {
  int ci{0};
  double cost{0.0};
  std::optional<World::RelayChoice> relay;
};

/// Realized best two-hop cost per CI of the task window.
inline std::vector<OptimumChoice> optimum_costs(const FragmentTask& task, const World& world) {
  std::vector<OptimumChoice> out;
  for (int ci = task.created_ci; ci <= task.deadline_ci; ++ci) {
    OptimumChoice c{ci, world.trace().cell_cost(task.owner, ci), std::nullopt};
    const auto best = world.best_relay(task.owner, ci, world.discover(task.owner, ci));
    if (best && best->total() < c.cost) {
      c.cost = best->total();
      c.relay = best;
    }
    out.push_back(c);
  }
  return out;
}

/// Clairvoyant: the N_c CIs with the lowest realized best two-hop cost.
inline BaselineResult run_optimum(const FragmentTask& task, const World& world, int upload = 0) {
  BaselineResult out;
  auto costs = optimum_costs(task, world);
  std::stable_sort(costs.begin(), costs.end(),
                   [](const OptimumChoice& a, const OptimumChoice& b) { return a.cost < b.cost; });
  costs.resize(static_cast<std::size_t>(task.fragments_remaining));
  std::sort(costs.begin(), costs.end(), [](const OptimumChoice& a, const OptimumChoice& b) { return a.ci < b.ci; });
  int n = 0;
  for (const auto& c : costs) {
    auto r = detail::new_record(task, upload, n++);
    if (c.relay) {
      ++out.discoveries;
      detail::deliver_relayed(r, task.owner, *c.relay, c.ci);
    } else {
      detail::deliver_cellular(r, world, task.owner, c.ci);
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline BaselineResult run_baseline(BaselineKind kind, const FragmentTask& task, const World& world, int upload = 0) {
  switch (kind) {
    case BaselineKind::kShTraditional: return run_sh_traditional(task, world, upload);
    case BaselineKind::kOppCell: return run_opp_cell(task, world, upload);
    case BaselineKind::kFiveGRelay: return run_5g_relay(task, world, upload);
    case BaselineKind::kOptimum: return run_optimum(task, world, upload);
  }
  return {};
}

}  // namespace ngo
