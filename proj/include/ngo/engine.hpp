#pragma once

// Control-interval simulation driver, metrics aggregation and overhead
// accounting (context-map broadcasts, on-demand D2D maps, relay discovery and
// estimator CPU energy).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ngo/baselines.hpp"
#include "ngo/channel.hpp"
#include "ngo/scenario.hpp"
#include "ngo/scheduler.hpp"
#include "ngo/world.hpp"

namespace ngo {

enum class Scheme {
  kShTraditional,
  kOppCell,
  kFiveGRelay,
  kOptimum,
  kPlanOnly,
  kPlanLimExec,
  kPlanCompExec,
};

inline constexpr std::array<Scheme, 7> kAllSchemes = {
    Scheme::kShTraditional, Scheme::kOppCell,    Scheme::kFiveGRelay,  Scheme::kOptimum,
    Scheme::kPlanOnly,      Scheme::kPlanLimExec, Scheme::kPlanCompExec};

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kShTraditional: return "sh";
    case Scheme::kOppCell: return "oppcell";
    case Scheme::kFiveGRelay: return "5g-relay";
    case Scheme::kOptimum: return "optimum";
    case Scheme::kPlanOnly: return "plan";
    case Scheme::kPlanLimExec: return "plan+limexec";
    case Scheme::kPlanCompExec: return "plan+compexec";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  for (Scheme x : kAllSchemes)
    if (s == to_string(x)) return x;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

inline bool is_planning_scheme(Scheme s) {
  return s == Scheme::kPlanOnly || s == Scheme::kPlanLimExec || s == Scheme::kPlanCompExec;
}

/// At most two hops per fragment.
inline bool is_two_hop(Scheme s) { return s != Scheme::kPlanCompExec; }

struct OverheadModel {
  double local_map_bytes{6.0 * 1024.0};
  double cell_pl_map_bytes{24.0 * 1024.0};
  double d2d_pl_map_bytes{19.2 * 1024.0};
  double broadcast_period_s{10.0};
  int discovery_messages{4};
  double discovery_message_bits{400.0};
  double energy_per_flop_j{1e-9};
  /// Downlink gain for broadcasts; unset means the worst street location.
  std::optional<double> broadcast_gain_db;
  /// Cost on-demand D2D maps at the recipient's own gain instead of the
  /// broadcast gain.
  bool d2d_map_at_recipient_gain{true};
  bool include_maps{true};
  bool include_discovery{true};
  bool include_cpu{true};
};

struct SimConfig {
  GridSpec grid{};
  ChannelParams channel{};
  int node_count{500};
  double speed{1.5};
  double t_ci{1.0};
  double d_c{24e6};
  double t_max{10.0};
  double lambda_req{0.1};
  double sim_duration{500.0};
  int runs{1};
  std::uint64_t seed{1};
  Scheme scheme{Scheme::kPlanCompExec};
  int hop_limit{3};
  EstimatorOptions estimator{};
  AdaptOptions adapt{};
  OverheadModel overhead{};

  int n_c() const { return static_cast<int>(std::ceil(d_c / channel.d_ci_bits - 1e-12)); }
  int n_ci() const { return static_cast<int>(std::floor(t_max / t_ci + 1e-9)); }
  int ci_count() const { return static_cast<int>(std::floor(sim_duration / t_ci + 1e-9)); }

  void validate() const {
    channel.validate();
    (void)Grid(grid);
    if (node_count < 0) throw std::invalid_argument("config: node_count must be >= 0");
    if (speed < 0.0) throw std::invalid_argument("config: speed must be >= 0");
    if (!(t_ci > 0.0) || !(d_c > 0.0) || !(t_max > 0.0))
      throw std::invalid_argument("config: t_ci, d_c and t_max must be positive");
    if (sim_duration < 0.0) throw std::invalid_argument("config: sim_duration must be >= 0");
    if (lambda_req < 0.0) throw std::invalid_argument("config: lambda_req must be >= 0");
    if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
    if (hop_limit < 1) throw std::invalid_argument("config: hop_limit must be >= 1");
    if (n_c() > n_ci())
      throw std::invalid_argument("config: " + std::to_string(n_c()) + " fragments do not fit in " +
                                  std::to_string(n_ci()) + " control intervals");
  }
};

struct UploadOutcome {
  int upload{0};
  int node{0};
  int created_ci{0};
  int deadline_ci{0};
  int fragments{0};
  int delivered{0};
  double energy{0.0};
};

struct RunResult {
  Scheme scheme{Scheme::kShTraditional};
  std::uint64_t seed{0};
  int n_ci{0};
  int arrivals{0};
  std::vector<UploadOutcome> uploads;
  std::vector<DeliveryRecord> records;
  std::array<int, 4> mode_counts{0, 0, 0, 0};
  /// Final (to-BS) leg CI relative to the upload start.
  std::vector<int> ci_hist;
  int discoveries{0};
  int d2d_map_requests{0};
  std::vector<double> d2d_map_gains;
  int max_legs{0};
  std::vector<CostForecast::TableStats> tables;

  double transmission_energy() const {
    double e = 0.0;
    for (const auto& u : uploads) e += u.energy;
    return e;
  }
};

struct FlopCount {
  std::int64_t multiplications{0};
  std::int64_t additions{0};
  std::int64_t total() const { return multiplications + additions; }
};

/// Operations to evaluate the minimum-cost pmf for every j in the window and
/// the resulting expectation, for one table of Q tiles.
inline FlopCount flop_count(std::int64_t q, std::int64_t j_le, std::int64_t j_ue) {
  if (q < 2) throw std::invalid_argument("flop_count: Q must be >= 2");
  if (j_le < 0 || j_ue < j_le) throw std::invalid_argument("flop_count: need 0 <= j_le <= j_ue");
  const std::int64_t w = j_ue - j_le;
  FlopCount f;
  f.multiplications = (q - 1) * (j_ue - 1) + q * (w + 2);
  f.additions = (q - 2) * (2 * w + 5) + w + 2 + q * w + q - 1;
  return f;
}

inline double cpu_power(double flops_per_ci, double t_ci, double energy_per_flop) {
  if (flops_per_ci < 0.0 || energy_per_flop < 0.0 || !(t_ci > 0.0))
    throw std::invalid_argument("cpu_power: inputs must be non-negative");
  return flops_per_ci * energy_per_flop / t_ci;
}

struct OverheadBreakdown {
  double local_map_j{0.0};
  double cell_pl_map_j{0.0};
  double d2d_pl_map_j{0.0};
  double discovery_j{0.0};
  double cpu_j{0.0};
  double total() const { return local_map_j + cell_pl_map_j + d2d_pl_map_j + discovery_j + cpu_j; }
};

/// Gain of the worst-served street location, dB.
inline double worst_street_gain_db(const Grid& grid, const ChannelParams& p) {
  double worst = 0.0;
  const Vec3 bs = grid.bs();
  for (int iy = 0; iy < grid.lattice_ny(); ++iy)
    for (int ix = 0; ix < grid.lattice_nx(); ++ix) {
      const Vec2 c = grid.lattice_center(ix, iy);
      if (!grid.on_street(c)) continue;
      worst = std::max(worst, cellular_loss_db(grid, p, c, bs));
    }
  return -worst;
}

inline OverheadBreakdown comm_overhead(const SimConfig& cfg, const RunResult& run, double broadcast_gain_db) {
  OverheadBreakdown o;
  const auto& om = cfg.overhead;
  const auto& ch = cfg.channel;
  const double g_bc = db_to_linear(broadcast_gain_db);
  const bool uses_maps = run.scheme == Scheme::kOppCell || is_planning_scheme(run.scheme);
  if (om.include_maps && uses_maps && om.broadcast_period_s > 0.0) {
    const double broadcasts = cfg.sim_duration / om.broadcast_period_s;
    o.local_map_j = broadcasts * message_energy(ch, g_bc, ch.m_cell_db, om.local_map_bytes * 8.0);
    o.cell_pl_map_j = broadcasts * message_energy(ch, g_bc, ch.m_cell_db, om.cell_pl_map_bytes * 8.0);
  }
  if (om.include_maps) {
    const double bits = om.d2d_pl_map_bytes * 8.0;
    if (om.d2d_map_at_recipient_gain && run.d2d_map_gains.size() == static_cast<std::size_t>(run.d2d_map_requests)) {
      for (double g : run.d2d_map_gains) o.d2d_pl_map_j += message_energy(ch, g, ch.m_cell_db, bits);
    } else {
      o.d2d_pl_map_j = run.d2d_map_requests * message_energy(ch, g_bc, ch.m_cell_db, bits);
    }
  }
  if (om.include_discovery) {
    const double g_d2d = db_to_linear(-log_distance_loss_db(ch.reference_loss_1m_d2d_db, ch.d2d_nlos_exponent,
                                                            ch.r_d2d_m, ch.mcl_db));
    o.discovery_j = run.discoveries * om.discovery_messages *
                    message_energy(ch, g_d2d, ch.m_d2d_db, om.discovery_message_bits);
  }
  if (om.include_cpu) {
    double ops = 0.0;
    for (const auto& t : run.tables)
      if (t.tiles >= 2) ops += static_cast<double>(flop_count(static_cast<std::int64_t>(t.tiles), t.j_le, t.j_ue).total());
    o.cpu_j = ops * om.energy_per_flop_j;
  }
  return o;
}

inline OverheadBreakdown comm_overhead(const SimConfig& cfg, const RunResult& run) {
  const Grid grid(cfg.grid);
  const double g = cfg.overhead.broadcast_gain_db ? *cfg.overhead.broadcast_gain_db
                                                  : worst_street_gain_db(grid, cfg.channel);
  return comm_overhead(cfg, run, g);
}

inline TraceOptions trace_options(const SimConfig& cfg, std::uint64_t seed) {
  TraceOptions t;
  t.node_count = cfg.node_count;
  t.speed = cfg.speed;
  t.t_ci = cfg.t_ci;
  t.ci_count = cfg.ci_count();
  t.lambda_req = cfg.lambda_req;
  t.n_ci_per_upload = cfg.n_ci();
  t.seed = seed;
  t.estimator = cfg.estimator;
  return t;
}

inline WorldTrace build_trace(const SimConfig& cfg, std::uint64_t seed) {
  return WorldTrace(Grid(cfg.grid), cfg.channel, trace_options(cfg, seed));
}

namespace detail {

inline void tally(RunResult& out, const std::vector<DeliveryRecord>& records, int created_ci) {
  for (const auto& r : records) {
    ++out.mode_counts[static_cast<std::size_t>(classify(r))];
    out.max_legs = std::max(out.max_legs, static_cast<int>(r.path.size()));
    if (r.delivered) {
      const int rel = r.delivery_ci - created_ci;
      if (rel >= 0 && rel < static_cast<int>(out.ci_hist.size())) ++out.ci_hist[static_cast<std::size_t>(rel)];
    }
    out.records.push_back(r);
  }
}

inline UploadOutcome outcome(const Activation& a, const std::vector<DeliveryRecord>& records) {
  UploadOutcome u{a.upload, a.node, a.created_ci, a.deadline_ci, static_cast<int>(records.size()), 0, 0.0};
  for (const auto& r : records) {
    u.energy += r.energy();
    if (r.delivered && r.delivery_ci <= r.deadline_ci) ++u.delivered;
  }
  return u;
}

}  // namespace detail

/// Run one scheme over a prepared trace.
inline RunResult run_scheme(const WorldTrace& trace, const SimConfig& cfg, Scheme scheme) {
  RunResult out;
  out.scheme = scheme;
  out.seed = trace.options().seed;
  out.n_ci = cfg.n_ci();
  out.arrivals = trace.arrivals();
  out.ci_hist.assign(static_cast<std::size_t>(cfg.n_ci()), 0);
  World world(trace);
  const auto& acts = trace.activations();
  auto task_for = [&](const Activation& a) {
    auto t = make_task(cfg.d_c, cfg.t_max, cfg.t_ci, cfg.channel.d_ci_bits, a.created_ci, a.node, cfg.hop_limit - 1);
    return t;
  };

  if (!is_planning_scheme(scheme)) {
    const BaselineKind kind = scheme == Scheme::kShTraditional ? BaselineKind::kShTraditional
                              : scheme == Scheme::kOppCell     ? BaselineKind::kOppCell
                              : scheme == Scheme::kFiveGRelay  ? BaselineKind::kFiveGRelay
                                                               : BaselineKind::kOptimum;
    for (const auto& a : acts) {
      auto res = run_baseline(kind, task_for(a), world, a.upload);
      out.discoveries += res.discoveries;
      out.uploads.push_back(detail::outcome(a, res.records));
      detail::tally(out, res.records, a.created_ci);
    }
    return out;
  }

  ExecutionOptions opt;
  opt.variant = scheme == Scheme::kPlanOnly      ? Variant::kPlanOnly
                : scheme == Scheme::kPlanLimExec ? Variant::kPlanLimExec
                                                 : Variant::kPlanCompExec;
  opt.adapt = cfg.adapt;
  std::vector<UploadSession> sessions;
  sessions.reserve(acts.size());
  std::size_t next = 0;
  for (int k = 0; k <= trace.ci_count(); ++k) {
    while (next < acts.size() && acts[next].created_ci == k) {
      sessions.emplace_back(acts[next].upload, task_for(acts[next]), opt, trace);
      ++next;
    }
    for (auto& s : sessions)
      if (!s.finished() && k <= s.deadline_ci()) s.step(k, world);
  }
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    out.discoveries += s.counters().discoveries;
    out.d2d_map_requests += s.counters().d2d_map_requests;
    out.d2d_map_gains.insert(out.d2d_map_gains.end(), s.counters().d2d_map_gains.begin(),
                             s.counters().d2d_map_gains.end());
    out.tables.insert(out.tables.end(), s.counters().tables.begin(), s.counters().tables.end());
    out.uploads.push_back(detail::outcome(acts[i], s.records()));
    detail::tally(out, s.records(), acts[i].created_ci);
  }
  return out;
}

/// Every requested scheme on one shared trace.
inline std::map<Scheme, RunResult> run_replication(const SimConfig& cfg, std::uint64_t seed,
                                                   const std::vector<Scheme>& schemes) {
  const auto trace = build_trace(cfg, seed);
  std::map<Scheme, RunResult> out;
  for (Scheme s : schemes) out.emplace(s, run_scheme(trace, cfg, s));
  return out;
}

struct MeanCi {
  double mean{0.0};
  double half_width{0.0};
};

/// Normal-approximation 95% interval over per-run values.
inline MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi m;
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double v = 0.0;
  for (double x : xs) v += (x - m.mean) * (x - m.mean);
  v /= static_cast<double>(xs.size() - 1);
  m.half_width = 1.96 * std::sqrt(v / static_cast<double>(xs.size()));
  return m;
}

struct MetricsReport {
  Scheme scheme{Scheme::kShTraditional};
  int runs{0};
  int uploads{0};
  int arrivals{0};
  MeanCi energy_per_upload;
  MeanCi reduction_vs_sh_pct;
  double pooled_reduction_vs_sh_pct{0.0};
  std::array<double, 4> mode_share{0.0, 0.0, 0.0, 0.0};
  std::vector<double> ci_share;
  double delivery_rate{1.0};
  double transmission_energy_j{0.0};
  double sh_transmission_energy_j{0.0};
  OverheadBreakdown overhead;
  int max_legs{0};
};

/// Aggregate per-run results of one scheme against SH-traditional runs on the
/// same seeds (index-aligned).
inline MetricsReport aggregate(const SimConfig& cfg, const std::vector<RunResult>& runs,
                               const std::vector<RunResult>& sh_runs, double broadcast_gain_db) {
  MetricsReport m;
  m.runs = static_cast<int>(runs.size());
  if (!runs.empty()) m.scheme = runs.front().scheme;
  m.ci_share.assign(static_cast<std::size_t>(cfg.n_ci()), 0.0);
  std::vector<double> per_run_energy;
  std::vector<double> per_run_reduction;
  std::array<double, 4> modes{0, 0, 0, 0};
  double fragments = 0.0, delivered = 0.0;
  double total_hist = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    m.uploads += static_cast<int>(run.uploads.size());
    m.arrivals += run.arrivals;
    m.max_legs = std::max(m.max_legs, run.max_legs);
    const double e = run.transmission_energy();
    m.transmission_energy_j += e;
    if (!run.uploads.empty()) per_run_energy.push_back(e / static_cast<double>(run.uploads.size()));
    if (r < sh_runs.size()) {
      const double sh = sh_runs[r].transmission_energy();
      m.sh_transmission_energy_j += sh;
      if (sh > 0.0) per_run_reduction.push_back(100.0 * (1.0 - e / sh));
    }
    for (std::size_t i = 0; i < 4; ++i) modes[i] += run.mode_counts[i];
    for (const auto& u : run.uploads) {
      fragments += u.fragments;
      delivered += u.delivered;
    }
    for (std::size_t i = 0; i < run.ci_hist.size() && i < m.ci_share.size(); ++i) {
      m.ci_share[i] += run.ci_hist[i];
      total_hist += run.ci_hist[i];
    }
    const auto o = comm_overhead(cfg, run, broadcast_gain_db);
    m.overhead.local_map_j += o.local_map_j;
    m.overhead.cell_pl_map_j += o.cell_pl_map_j;
    m.overhead.d2d_pl_map_j += o.d2d_pl_map_j;
    m.overhead.discovery_j += o.discovery_j;
    m.overhead.cpu_j += o.cpu_j;
  }
  m.energy_per_upload = mean_ci(per_run_energy);
  m.reduction_vs_sh_pct = mean_ci(per_run_reduction);
  if (m.sh_transmission_energy_j > 0.0)
    m.pooled_reduction_vs_sh_pct = 100.0 * (1.0 - m.transmission_energy_j / m.sh_transmission_energy_j);
  const double mode_total = modes[0] + modes[1] + modes[2] + modes[3];
  for (std::size_t i = 0; i < 4; ++i) m.mode_share[i] = mode_total > 0.0 ? modes[i] / mode_total : 0.0;
  if (mode_total <= 0.0) m.mode_share[0] = 1.0;
  for (double& c : m.ci_share) c = total_hist > 0.0 ? c / total_hist : 0.0;
  m.delivery_rate = fragments > 0.0 ? delivered / fragments : 1.0;
  return m;
}

inline int thread_budget() {
  if (const char* env = std::getenv("NGO_SIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `cfg.runs` replications (seeds cfg.seed + r) of every scheme in
/// `schemes`, in parallel across replications. Result: [scheme][run].
inline std::map<Scheme, std::vector<RunResult>> run_replications(const SimConfig& cfg,
                                                                 const std::vector<Scheme>& schemes,
                                                                 int threads = thread_budget()) {
  cfg.validate();
  std::vector<std::map<Scheme, RunResult>> per_run(static_cast<std::size_t>(cfg.runs));
  int next = 0;
  auto worker = [&](int r) { per_run[static_cast<std::size_t>(r)] = run_replication(cfg, cfg.seed + static_cast<std::uint64_t>(r), schemes); };
  while (next < cfg.runs) {
    std::vector<std::future<void>> batch;
    for (int t = 0; t < threads && next < cfg.runs; ++t) batch.push_back(std::async(std::launch::async, worker, next++));
    for (auto& f : batch) f.get();
  }
  std::map<Scheme, std::vector<RunResult>> out;
  for (auto& m : per_run)
    for (auto& [s, r] : m) out[s].push_back(std::move(r));
  return out;
}

/// Configured scheme, aggregated over replications against SH traditional.
inline MetricsReport run_simulation(const SimConfig& cfg, int threads = thread_budget()) {
  std::vector<Scheme> schemes{cfg.scheme};
  if (cfg.scheme != Scheme::kShTraditional) schemes.push_back(Scheme::kShTraditional);
  auto results = run_replications(cfg, schemes, threads);
  const Grid grid(cfg.grid);
  const double g = cfg.overhead.broadcast_gain_db ? *cfg.overhead.broadcast_gain_db
                                                  : worst_street_gain_db(grid, cfg.channel);
  return aggregate(cfg, results[cfg.scheme], results[Scheme::kShTraditional], g);
}

}  // namespace ngo
