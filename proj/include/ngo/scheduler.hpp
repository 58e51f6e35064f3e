#pragma once

// Two-phase upload scheduling. Planning picks the N_c cheapest CIs from the
// cost forecast; Execution revises the plan each CI from realized link costs
// and transmits, either directly or by delegating one fragment to the best
// relay, which then plans its own upload under the inherited deadline.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngo/estimator.hpp"
#include "ngo/world.hpp"

namespace ngo {

enum class Mode { kCellular, kD2DAided };

inline const char* to_string(Mode m) { return m == Mode::kCellular ? "cellular" : "d2d"; }

enum class Variant { kPlanOnly, kPlanLimExec, kPlanCompExec };

struct FragmentTask {
  int id{0};
  int owner{0};
  double fragment_bits{4e6};
  int fragments_remaining{1};
  int created_ci{0};
  int deadline_ci{0};
  /// Owners that held this fragment before, oldest first.
  std::vector<int> lineage;
  /// Further relays this task may still delegate to.
  int hop_budget{2};

  int window() const { return deadline_ci - created_ci + 1; }
};

/// N_c = ceil(D_c / D_CI) fragments over N_CI = T_max / T_CI intervals.
inline FragmentTask make_task(double content_bits, double t_max, double t_ci, double d_ci,
                              int now_ci, int owner = 0, int hop_budget = 2) {
  if (!(content_bits > 0.0) || !(d_ci > 0.0) || !(t_ci > 0.0) || !(t_max > 0.0))
    throw std::invalid_argument("make_task: sizes and durations must be positive");
  const int n_c = static_cast<int>(std::ceil(content_bits / d_ci - 1e-12));
  const int n_ci = static_cast<int>(std::floor(t_max / t_ci + 1e-9));
  if (n_c > n_ci)
    throw std::invalid_argument("make_task: " + std::to_string(n_c) + " fragments cannot fit in " +
                                std::to_string(n_ci) + " control intervals");
  FragmentTask t;
  t.owner = owner;
  t.fragment_bits = d_ci;
  t.fragments_remaining = n_c;
  t.created_ci = now_ci;
  t.deadline_ci = now_ci + n_ci - 1;
  t.hop_budget = hop_budget;
  return t;
}

struct ScheduledTx {
  int ci{0};
  Mode mode{Mode::kCellular};
  double planned_cost{0.0};
};

struct TransmissionPlan {
  /// Sorted by ascending CI.
  std::vector<ScheduledTx> slots;

  std::size_t size() const { return slots.size(); }
  bool scheduled(int ci) const { return find(ci) != nullptr; }
  const ScheduledTx* find(int ci) const {
    for (const auto& s : slots)
      if (s.ci == ci) return &s;
    return nullptr;
  }
  ScheduledTx* find(int ci) {
    for (auto& s : slots)
      if (s.ci == ci) return &s;
    return nullptr;
  }
  double total_estimate() const {
    double t = 0.0;
    for (const auto& s : slots) t += s.planned_cost;
    return t;
  }
  void insert(ScheduledTx s) {
    auto it = std::lower_bound(slots.begin(), slots.end(), s.ci,
                               [](const ScheduledTx& a, int ci) { return a.ci < ci; });
    slots.insert(it, s);
  }
  void erase(int ci) {
    std::erase_if(slots, [ci](const ScheduledTx& s) { return s.ci == ci; });
  }
};

/// Cheapest-first selection of `task.fragments_remaining` CIs. Forecast
/// index 0 is `task.created_ci`. With `allow_d2d` false the D2D-aided
/// estimates are ignored.
inline TransmissionPlan plan(const FragmentTask& task, const CostForecast& forecast, bool allow_d2d = true) {
  const int horizon = task.window();
  if (forecast.horizon < horizon) throw std::invalid_argument("plan: forecast shorter than task window");
  struct Entry {
    int k;
    double cost;
    Mode mode;
  };
  std::vector<Entry> entries;
  for (int k = 0; k < horizon; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    double cost = forecast.cell[uk];
    Mode mode = Mode::kCellular;
    const auto& d = forecast.d2d_aided[uk];
    if (allow_d2d && d && *d < cost) {
      cost = *d;
      mode = Mode::kD2DAided;
    }
    if (std::isfinite(cost)) entries.push_back({k, cost, mode});
  }
  if (static_cast<int>(entries.size()) < task.fragments_remaining)
    throw std::runtime_error("plan: not enough feasible control intervals");
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.cost < b.cost; });
  TransmissionPlan p;
  for (int n = 0; n < task.fragments_remaining; ++n) {
    const auto& e = entries[static_cast<std::size_t>(n)];
    p.insert({task.created_ci + e.k, e.mode, e.cost});
  }
  return p;
}

struct RealtimeCosts {
  double cell{0.0};
  std::optional<double> d2d;

  Mode best_mode() const { return d2d && *d2d < cell ? Mode::kD2DAided : Mode::kCellular; }
  double best() const { return best_mode() == Mode::kD2DAided ? *d2d : cell; }
};

struct AdaptOptions {
  /// Adopt the realtime-cheapest mode at scheduled CIs even when it is not
  /// cheaper than the stored estimate.
  bool always_adopt_rt_mode{true};
  /// Re-forecast pending estimates once the owner is past the branch point
  /// of the forecast they came from.
  bool refresh_estimates{true};
};

enum class AdaptAction { kNone, kModeSubstituted, kSwapped };

/// Realtime revision at CI `k`. At a scheduled CI the mode switches to the
/// realtime argmin when that is cheaper than the stored estimate. At a free
/// CI the pending slot with the largest stored estimate (latest on ties) moves
/// to `k` when the realtime cost beats it.
inline AdaptAction adapt(TransmissionPlan& p, const FragmentTask& task, int k, const RealtimeCosts& rt,
                         const AdaptOptions& opt = {}) {
  (void)task;
  const double rt_best = rt.best();
  const Mode rt_mode = rt.best_mode();
  if (auto* slot = p.find(k)) {
    if (rt_mode == slot->mode) return AdaptAction::kNone;
    if (rt_best < slot->planned_cost) {
      slot->mode = rt_mode;
      slot->planned_cost = rt_best;
      return AdaptAction::kModeSubstituted;
    }
    if (opt.always_adopt_rt_mode) {
      slot->mode = rt_mode;
      return AdaptAction::kModeSubstituted;
    }
    return AdaptAction::kNone;
  }
  const ScheduledTx* victim = nullptr;
  for (const auto& s : p.slots) {
    if (s.ci < k) continue;
    if (victim == nullptr || s.planned_cost >= victim->planned_cost) victim = &s;
  }
  if (victim == nullptr || !(rt_best < victim->planned_cost)) return AdaptAction::kNone;
  const int victim_ci = victim->ci;
  p.erase(victim_ci);
  p.insert({k, rt_mode, rt_best});
  return AdaptAction::kSwapped;
}

/// Keeps the plan deliverable: stale slots dropped, missing slots added, and
/// every remaining CI scheduled once slack reaches zero. Returns true if the
/// plan changed.
inline bool enforce_deadline(TransmissionPlan& p, const FragmentTask& task, int k, const RealtimeCosts& rt) {
  bool changed = false;
  const auto before = p.size();
  std::erase_if(p.slots, [k](const ScheduledTx& s) { return s.ci < k; });
  changed |= p.size() != before;
  const int remaining_ci = task.deadline_ci - k + 1;
  const auto needed = static_cast<std::size_t>(std::max(0, task.fragments_remaining));
  for (int ci = k; ci <= task.deadline_ci && p.size() < needed; ++ci) {
    if (p.scheduled(ci)) continue;
    p.insert({ci, ci == k ? rt.best_mode() : Mode::kCellular, ci == k ? rt.best() : rt.cell});
    changed = true;
  }
  if (task.fragments_remaining >= remaining_ci && !p.scheduled(k) && task.fragments_remaining > 0) {
    // Slack is zero: the latest slot yields to the current CI.
    p.slots.pop_back();
    p.insert({k, rt.best_mode(), rt.best()});
    changed = true;
  }
  while (p.size() > needed) {
    p.slots.pop_back();
    changed = true;
  }
  return changed;
}

inline constexpr int kBaseStation = -1;

struct Leg {
  int from{0};
  /// Receiving node, or kBaseStation.
  int to{kBaseStation};
  Mode mode{Mode::kCellular};
  int ci{0};
  double energy{0.0};
};

struct DeliveryRecord {
  int upload{0};
  int fragment{0};
  std::vector<Leg> path;
  bool delivered{false};
  int delivery_ci{-1};
  int created_ci{0};
  int deadline_ci{0};

  double energy() const {
    double e = 0.0;
    for (const auto& l : path) e += l.energy;
    return e;
  }
  int d2d_legs() const {
    int n = 0;
    for (const auto& l : path) n += l.mode == Mode::kD2DAided;
    return n;
  }
};

/// Fragment outcome as seen from the source.
enum class ModeClass { kOppSH = 0, kOppD2D = 1, kRelayOppSH = 2, kRelayOppD2D = 3 };

inline const char* to_string(ModeClass c) {
  switch (c) {
    case ModeClass::kOppSH: return "opp_sh";
    case ModeClass::kOppD2D: return "opp_d2d_aided";
    case ModeClass::kRelayOppSH: return "relay_opp_sh";
    case ModeClass::kRelayOppD2D: return "relay_opp_d2d_aided";
  }
  return "?";
}

inline ModeClass classify(const DeliveryRecord& r) {
  const int d2d = r.d2d_legs();
  if (d2d == 0) return ModeClass::kOppSH;
  if (d2d >= 2) return ModeClass::kRelayOppD2D;
  return r.path.back().ci == r.path.front().ci ? ModeClass::kOppD2D : ModeClass::kRelayOppSH;
}

enum class GraphEdgeKind { kGamma, kDelta };

struct GraphEdgeEvent {
  GraphEdgeKind kind{GraphEdgeKind::kGamma};
  int from_task{0};
  /// Receiving task (DELTA) or the same task (GAMMA).
  int to_task{0};
  int ci{0};
  int fragments{0};
  int deadline_ci{0};
};

struct ExecutionOptions {
  Variant variant{Variant::kPlanCompExec};
  AdaptOptions adapt{};
};

/// One upload: the source task plus every task delegated from it.
class UploadSession {
 public:
  struct TaskState {
    FragmentTask task;
    TransmissionPlan plan;
    /// Fragment record carried by a delegate; -1 for the source task.
    int record{-1};
    int parent{-1};
    /// First CI whose stored estimates averaged over turn branches.
    int stale_from{std::numeric_limits<int>::max()};
  };

  struct Counters {
    int discoveries{0};
    int d2d_map_requests{0};
    int substitutions{0};
    int swaps{0};
    int forced{0};
    int refreshes{0};
    /// Nominal cellular gain of each D2D map recipient at request time.
    std::vector<double> d2d_map_gains;
    std::vector<CostForecast::TableStats> tables;
  };

  UploadSession(int upload, FragmentTask source, const ExecutionOptions& opt, const WorldTrace& trace)
      : upload_(upload), opt_(opt) {
    source.id = 0;
    if (opt_.variant != Variant::kPlanCompExec) source.hop_budget = std::min(source.hop_budget, 1);
    add_task(std::move(source), -1, -1, trace);
  }

  int upload() const { return upload_; }
  const std::vector<TaskState>& tasks() const { return tasks_; }
  const std::vector<DeliveryRecord>& records() const { return records_; }
  const std::vector<GraphEdgeEvent>& events() const { return events_; }
  const Counters& counters() const { return counters_; }
  int created_ci() const { return tasks_.front().task.created_ci; }
  int deadline_ci() const { return tasks_.front().task.deadline_ci; }

  bool finished() const {
    for (const auto& t : tasks_)
      if (t.task.fragments_remaining > 0) return false;
    return true;
  }

  /// Process CI `k` for every task of the session, delegates included.
  void step(int k, World& world) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) step_task(i, k, world);
  }

  /// Realized costs at CI k for the owner of a task.
  RealtimeCosts realtime(const FragmentTask& t, int k, const World& world) const {
    RealtimeCosts rt;
    rt.cell = world.trace().cell_cost(t.owner, k);
    if (t.hop_budget > 0) {
      const auto cands = world.discover(t.owner, k, t.lineage);
      if (auto best = world.best_relay(t.owner, k, cands)) rt.d2d = best->total();
    }
    return rt;
  }

 private:
  void add_task(FragmentTask t, int record, int parent, const WorldTrace& trace) {
    t.id = static_cast<int>(tasks_.size());
    const bool allow_d2d = t.hop_budget > 0;
    const auto& f = trace.forecast(t.owner, t.created_ci, t.window(), allow_d2d);
    if (allow_d2d) {
      ++counters_.d2d_map_requests;
      counters_.d2d_map_gains.push_back(
          cellular_gain(trace.grid(), trace.params(), trace.node(t.created_ci, t.owner).position));
      counters_.tables.insert(counters_.tables.end(), f.tables.begin(), f.tables.end());
    }
    TaskState st{t, ngo::plan(t, f, allow_d2d), record, parent, first_branch_ci(f, t.created_ci)};
    tasks_.push_back(std::move(st));
  }

  static int first_branch_ci(const CostForecast& f, int start) {
    for (std::size_t b = 0; b < f.branch_averaged.size(); ++b)
      if (f.branch_averaged[b]) return start + static_cast<int>(b);
    return std::numeric_limits<int>::max();
  }

  void refresh(std::size_t i, int k, const WorldTrace& trace) {
    auto& ts = tasks_[i];
    const bool allow_d2d = ts.task.hop_budget > 0;
    const auto& f = trace.forecast(ts.task.owner, k, ts.task.deadline_ci - k + 1, allow_d2d);
    if (allow_d2d) counters_.tables.insert(counters_.tables.end(), f.tables.begin(), f.tables.end());
    for (auto& s : ts.plan.slots) {
      if (s.ci < k) continue;
      const auto idx = static_cast<std::size_t>(s.ci - k);
      const auto& d = f.d2d_aided[idx];
      if (s.mode == Mode::kD2DAided && d) {
        s.planned_cost = *d;
      } else {
        s.mode = Mode::kCellular;
        s.planned_cost = f.cell[idx];
      }
    }
    ts.stale_from = first_branch_ci(f, k);
    ++counters_.refreshes;
  }

  void step_task(std::size_t i, int k, World& world) {
    if (tasks_[i].task.fragments_remaining <= 0) return;
    if (k < tasks_[i].task.created_ci || k > tasks_[i].task.deadline_ci) return;
    const bool realtime_step = opt_.variant != Variant::kPlanOnly;
    if (realtime_step && opt_.adapt.refresh_estimates && k >= tasks_[i].stale_from) refresh(i, k, world.trace());
    if (realtime_step) {
      const auto rt = realtime(tasks_[i].task, k, world);
      const double before = tasks_[i].plan.total_estimate();
      const auto action = adapt(tasks_[i].plan, tasks_[i].task, k, rt, opt_.adapt);
      if (action == AdaptAction::kModeSubstituted) ++counters_.substitutions;
      if (action == AdaptAction::kSwapped) ++counters_.swaps;
      const double after = tasks_[i].plan.total_estimate();
      if ((action == AdaptAction::kSwapped && !(after < before)) || after > before)
        throw std::logic_error("adapt increased the plan estimate");
      if (enforce_deadline(tasks_[i].plan, tasks_[i].task, k, rt)) ++counters_.forced;
    }
    const ScheduledTx* slot = tasks_[i].plan.find(k);
    if (slot == nullptr) {
      if (tasks_[i].task.fragments_remaining > 0)
        events_.push_back({GraphEdgeKind::kGamma, tasks_[i].task.id, tasks_[i].task.id, k,
                           tasks_[i].task.fragments_remaining, tasks_[i].task.deadline_ci});
      return;
    }
    const Mode mode = slot->mode;
    tasks_[i].plan.erase(k);
    transmit(i, k, mode, world);
    if (tasks_[i].task.fragments_remaining > 0)
      events_.push_back({GraphEdgeKind::kGamma, tasks_[i].task.id, tasks_[i].task.id, k,
                         tasks_[i].task.fragments_remaining, tasks_[i].task.deadline_ci});
  }

  int record_for(std::size_t i, int k) {
    if (tasks_[i].record >= 0) return tasks_[i].record;
    DeliveryRecord r;
    r.upload = upload_;
    r.fragment = static_cast<int>(records_.size());
    r.created_ci = tasks_[i].task.created_ci;
    r.deadline_ci = tasks_[i].task.deadline_ci;
    (void)k;
    records_.push_back(r);
    return r.fragment;
  }

  void transmit(std::size_t i, int k, Mode mode, World& world) {
    const FragmentTask task = tasks_[i].task;
    const int rec = record_for(i, k);
    const bool is_delegate = tasks_[i].record >= 0;
    --tasks_[i].task.fragments_remaining;
    if (is_delegate) world.remove_holder(task.owner);

    std::optional<World::RelayChoice> relay;
    if (mode == Mode::kD2DAided && task.hop_budget > 0) {
      ++counters_.discoveries;
      relay = world.best_relay(task.owner, k, world.discover(task.owner, k, task.lineage));
    }
    if (!relay) {
      auto& r = records_[static_cast<std::size_t>(rec)];
      r.path.push_back({task.owner, kBaseStation, Mode::kCellular, k, world.trace().cell_cost(task.owner, k)});
      r.delivered = true;
      r.delivery_ci = k;
      return;
    }
    records_[static_cast<std::size_t>(rec)].path.push_back(
        {task.owner, relay->relay, Mode::kD2DAided, k, relay->d2d_leg});
    if (opt_.variant != Variant::kPlanCompExec) {
      auto& r = records_[static_cast<std::size_t>(rec)];
      r.path.push_back({relay->relay, kBaseStation, Mode::kCellular, k, relay->cell_leg});
      r.delivered = true;
      r.delivery_ci = k;
      return;
    }
    FragmentTask child;
    child.owner = relay->relay;
    child.fragment_bits = task.fragment_bits;
    child.fragments_remaining = 1;
    child.created_ci = k;
    child.deadline_ci = task.deadline_ci;
    child.lineage = task.lineage;
    child.lineage.push_back(task.owner);
    child.hop_budget = task.hop_budget - 1;
    world.add_holder(child.owner);
    add_task(std::move(child), rec, task.id, world.trace());
    events_.push_back({GraphEdgeKind::kDelta, task.id, tasks_.back().task.id, k, 1, task.deadline_ci});
  }

  int upload_;
  ExecutionOptions opt_;
  std::vector<TaskState> tasks_;
  std::vector<DeliveryRecord> records_;
  std::vector<GraphEdgeEvent> events_;
  Counters counters_;
};

/// Runs one upload to completion on its own (no concurrent uploads).
inline UploadSession run_task(const FragmentTask& task, World& world, const ExecutionOptions& opt,
                              int upload = 0) {
  UploadSession s(upload, task, opt, world.trace());
  for (int k = task.created_ci; k <= task.deadline_ci && !s.finished(); ++k) s.step(k, world);
  return s;
}

}  // namespace ngo
