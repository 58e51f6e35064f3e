#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ngo/engine.hpp"

using namespace ngo;

namespace {

SimConfig small_config(int nodes = 300, double duration = 80.0) {
  SimConfig c;
  c.node_count = nodes;
  c.sim_duration = duration;
  c.runs = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Config, TableDefaults) {
  const SimConfig c;
  EXPECT_EQ(c.n_c(), 6);
  EXPECT_EQ(c.n_ci(), 10);
  EXPECT_DOUBLE_EQ(c.lambda_req, 0.1);
  EXPECT_DOUBLE_EQ(c.speed, 1.5);
  EXPECT_EQ(c.hop_limit, 3);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, InfeasibleTrafficRejected) {
  SimConfig c;
  c.t_max = 5.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(run_simulation(c, 1), std::invalid_argument);
}

TEST(Simulation, ZeroDurationEmptyReport) {
  SimConfig c = small_config();
  c.sim_duration = 0.0;
  const auto m = run_simulation(c, 1);
  EXPECT_EQ(m.uploads, 0);
  EXPECT_EQ(m.delivery_rate, 1.0);
  EXPECT_NEAR(m.mode_share[0] + m.mode_share[1] + m.mode_share[2] + m.mode_share[3], 1.0, 1e-12);
}

TEST(Simulation, PoissonActivationMean) {
  SimConfig c;
  c.node_count = 10;
  c.sim_duration = 500.0;
  double total = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) total += build_trace(c, 1000 + s).arrivals();
  EXPECT_NEAR(total / 100.0, 50.0, 2.0);
}

TEST(Simulation, WarmupDropsLateUploads) {
  const auto tr = build_trace(small_config(), 3);
  for (const auto& a : tr.activations()) {
    EXPECT_LT(a.deadline_ci, tr.ci_count());
    EXPECT_EQ(a.deadline_ci - a.created_ci + 1, 10);
  }
  EXPECT_LE(static_cast<int>(tr.activations().size()), tr.arrivals());
}

TEST(Simulation, DifferentSeedsDifferentActivations) {
  const auto a = build_trace(small_config(), 1), b = build_trace(small_config(), 2);
  bool differ = a.activations().size() != b.activations().size();
  for (std::size_t i = 0; !differ && i < a.activations().size(); ++i)
    differ = a.activations()[i].created_ci != b.activations()[i].created_ci ||
             a.activations()[i].node != b.activations()[i].node;
  EXPECT_TRUE(differ);
}

TEST(Simulation, DeterministicPerSeed) {
  const auto cfg = small_config();
  const auto a = run_replications(cfg, {Scheme::kPlanCompExec, Scheme::kShTraditional}, 2);
  const auto b = run_replications(cfg, {Scheme::kPlanCompExec, Scheme::kShTraditional}, 1);
  for (const auto& [s, runs] : a)
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto& x = runs[r];
      const auto& y = b.at(s)[r];
      ASSERT_EQ(x.records.size(), y.records.size());
      EXPECT_EQ(x.transmission_energy(), y.transmission_energy());
      EXPECT_EQ(x.mode_counts, y.mode_counts);
      EXPECT_EQ(x.discoveries, y.discoveries);
    }
}

TEST(Simulation, InvariantsEveryScheme) {
  const auto cfg = small_config(500, 100.0);
  const auto results = run_replications(cfg, std::vector<Scheme>(kAllSchemes.begin(), kAllSchemes.end()), 2);
  const double g = worst_street_gain_db(Grid(cfg.grid), cfg.channel);
  for (const auto& [s, runs] : results) {
    for (const auto& run : runs) {
      ASSERT_GT(run.uploads.size(), 0u);
      double legs = 0.0;
      for (const auto& r : run.records)
        for (const auto& l : r.path) legs += l.energy;
      EXPECT_NEAR(legs, run.transmission_energy(), 1e-9 * legs);
      for (const auto& u : run.uploads) EXPECT_EQ(u.delivered, u.fragments);
      EXPECT_LE(run.max_legs, s == Scheme::kPlanCompExec ? 3 : 2);
      EXPECT_EQ(std::accumulate(run.mode_counts.begin(), run.mode_counts.end(), 0),
                static_cast<int>(run.records.size()));
      EXPECT_EQ(std::accumulate(run.ci_hist.begin(), run.ci_hist.end(), 0), static_cast<int>(run.records.size()));
    }
    const auto m = aggregate(cfg, runs, results.at(Scheme::kShTraditional), g);
    EXPECT_EQ(m.delivery_rate, 1.0);
    EXPECT_NEAR(m.mode_share[0] + m.mode_share[1] + m.mode_share[2] + m.mode_share[3], 1.0, 1e-12);
    EXPECT_NEAR(std::accumulate(m.ci_share.begin(), m.ci_share.end(), 0.0), 1.0, 1e-12);
  }
  // Same-CI relay forwarding only outside complete execution.
  for (Scheme s : {Scheme::kPlanOnly, Scheme::kPlanLimExec, Scheme::kFiveGRelay, Scheme::kOptimum})
    for (const auto& run : results.at(s)) EXPECT_EQ(run.mode_counts[2] + run.mode_counts[3], 0);
  for (Scheme s : {Scheme::kShTraditional, Scheme::kOppCell})
    for (const auto& run : results.at(s)) EXPECT_EQ(run.mode_counts[0], static_cast<int>(run.records.size()));
}

TEST(Simulation, ShCiHistogramIsFirstSixIntervals) {
  const auto cfg = small_config(100, 60.0);
  const auto r = run_replications(cfg, {Scheme::kShTraditional}, 1).at(Scheme::kShTraditional).front();
  ASSERT_GT(r.uploads.size(), 0u);
  for (int i = 0; i < 10; ++i)
    EXPECT_EQ(r.ci_hist[static_cast<std::size_t>(i)], i < 6 ? static_cast<int>(r.uploads.size()) : 0);
}

TEST(Flops, OperatingPoint) {
  const auto f = flop_count(640, 0, 10);
  EXPECT_EQ(f.multiplications, 639 * 9 + 640 * 12);
  EXPECT_EQ(f.total(), 36432);
  EXPECT_LT(f.total(), 1000000);
}

TEST(Flops, HandCase) {
  const auto f = flop_count(2, 1, 1);
  EXPECT_EQ(f.multiplications, 4);
  EXPECT_EQ(f.additions, 3);
}

TEST(Flops, LinearInTiles) {
  for (std::int64_t jle : {0, 2})
    for (std::int64_t jue : {3, 9}) {
      const auto a = flop_count(10, jle, jue), b = flop_count(20, jle, jue), c = flop_count(30, jle, jue);
      EXPECT_EQ(b.total() - a.total(), c.total() - b.total());
      EXPECT_EQ(b.multiplications - a.multiplications, c.multiplications - b.multiplications);
    }
}

TEST(Flops, InvalidArguments) {
  EXPECT_THROW(flop_count(1, 0, 3), std::invalid_argument);
  EXPECT_THROW(flop_count(5, 4, 3), std::invalid_argument);
}

TEST(CpuPower, OneMilliwatt) {
  EXPECT_EQ(cpu_power(1e6, 1.0, 1e-9), 1e-3);
  EXPECT_EQ(cpu_power(0.0, 1.0, 1e-9), 0.0);
  EXPECT_DOUBLE_EQ(cpu_power(5e5, 1.0, 2e-9), 1e-3);
}

TEST(Overhead, BroadcastOnlyWithoutActivations) {
  const auto cfg = small_config();
  RunResult empty;
  empty.scheme = Scheme::kPlanCompExec;
  const auto o = comm_overhead(cfg, empty, -120.0);
  EXPECT_GT(o.local_map_j, 0.0);
  EXPECT_GT(o.cell_pl_map_j, 0.0);
  EXPECT_EQ(o.d2d_pl_map_j, 0.0);
  EXPECT_EQ(o.discovery_j, 0.0);
  EXPECT_EQ(o.cpu_j, 0.0);
  empty.scheme = Scheme::kShTraditional;
  EXPECT_EQ(comm_overhead(cfg, empty, -120.0).total(), 0.0);
}

TEST(Overhead, BroadcastLinearInPeriod) {
  auto cfg = small_config();
  RunResult r;
  r.scheme = Scheme::kOppCell;
  const auto a = comm_overhead(cfg, r, -120.0);
  cfg.overhead.broadcast_period_s *= 2.0;
  const auto b = comm_overhead(cfg, r, -120.0);
  EXPECT_NEAR(b.local_map_j, a.local_map_j / 2.0, 1e-15 * a.local_map_j);
  EXPECT_NEAR(b.cell_pl_map_j, a.cell_pl_map_j / 2.0, 1e-15 * a.cell_pl_map_j);
}

TEST(Overhead, LocalMapEnergyByHand) {
  const auto cfg = small_config();
  RunResult r;
  r.scheme = Scheme::kPlanOnly;
  const double g = db_to_linear(-120.0);
  const auto o = comm_overhead(cfg, r, -120.0);
  EXPECT_NEAR(o.local_map_j, cfg.sim_duration / 10.0 * message_energy(cfg.channel, g, cfg.channel.m_cell_db, 6.0 * 1024.0 * 8.0),
              1e-12 * o.local_map_j);
}

TEST(Overhead, DiscoveryAndCpuScaleWithCounts) {
  const auto cfg = small_config();
  RunResult r;
  r.scheme = Scheme::kFiveGRelay;
  r.discoveries = 3;
  const double one = [&] {
    RunResult s = r;
    s.discoveries = 1;
    return comm_overhead(cfg, s, -120.0).discovery_j;
  }();
  EXPECT_NEAR(comm_overhead(cfg, r, -120.0).discovery_j, 3.0 * one, 1e-15);
  r.tables = {{640, 0, 10}, {640, 0, 10}};
  EXPECT_NEAR(comm_overhead(cfg, r, -120.0).cpu_j, 2.0 * 36432 * 1e-9, 1e-15);
}

TEST(MeanCi, NormalApproximation) {
  const auto m = mean_ci({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.half_width, 1.96 * std::sqrt(5.0 / 3.0 / 4.0), 1e-12);
  EXPECT_EQ(mean_ci({7.0}).half_width, 0.0);
}
