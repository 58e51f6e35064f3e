#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <array>
#include <map>
#include <random>

#include "ngo/mobility.hpp"

using namespace ngo;

namespace {

NodeState walker(const Grid& g, Vec2 pos, Vec2 heading, double speed) {
  NodeState n;
  n.position = pos;
  n.heading = heading;
  n.speed = speed;
  n.street_id = g.street_at(pos);
  return n;
}

std::array<double, 3> exit_frequencies(const Grid& g, IntersectionIndex at, Vec2 heading, int samples,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vec2 c = g.intersection(at.i, at.j);
  const auto n = walker(g, c - heading * 5.5, heading, 6.0);
  std::array<double, 3> hist{0.0, 0.0, 0.0};
  for (int i = 0; i < samples; ++i) {
    const auto m = step(n, g, 1.0, rng);
    for (Turn t : {Turn::kRight, Turn::kLeft, Turn::kForward})
      if (distance(m.heading, turn_direction(heading, t)) < 1e-12) hist[static_cast<std::size_t>(t)] += 1.0;
  }
  for (double& h : hist) h /= samples;
  return hist;
}

}  // namespace

TEST(Spawn, ZeroNodes) { EXPECT_TRUE(spawn_nodes(Grid(GridSpec{}), 0, 1).empty()); }

TEST(Spawn, NegativeCountRejected) { EXPECT_THROW(spawn_nodes(Grid(GridSpec{}), -1, 1), std::invalid_argument); }

TEST(Spawn, LinearDensityAtFifteenHundred) {
  const Grid g(GridSpec{});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto nodes = spawn_nodes(g, 1500, seed);
    EXPECT_NEAR(static_cast<double>(nodes.size()) / g.total_axis_length(), 0.18, 0.018);
  }
}

TEST(Spawn, NodesOnTheirStreetAxis) {
  const Grid g(GridSpec{});
  for (const auto& n : spawn_nodes(g, 500, 9)) {
    const auto& s = g.street(n.street_id);
    const Vec2 d = s.b - s.a;
    const Vec2 w = n.position - s.a;
    EXPECT_NEAR(d.x * w.y - d.y * w.x, 0.0, 1e-9);
    EXPECT_TRUE(g.on_street(n.position));
    EXPECT_NEAR(n.heading.norm(), 1.0, 1e-12);
  }
}

TEST(Spawn, PerStreetCountsFitLengthProportionalMultinomial) {
  const Grid g(GridSpec{});
  std::vector<double> counts(g.streets().size(), 0.0);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    for (const auto& n : spawn_nodes(g, 100, substream_seed(seed, 77))) {
      counts[static_cast<std::size_t>(n.street_id - 1)] += 1.0;
      total += 1.0;
    }
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = total * g.streets()[i].length() / g.total_axis_length();
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, stat)), 0.01);
}

TEST(Spawn, DeterministicPerSeed) {
  const Grid g(GridSpec{});
  const auto a = spawn_nodes(g, 50, 42), b = spawn_nodes(g, 50, 42), c = spawn_nodes(g, 50, 43);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].position, b[i].position);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) differ |= !(a[i].position == c[i].position);
  EXPECT_TRUE(differ);
}

TEST(Step, MidBlockAdvance) {
  const Grid g(GridSpec{});
  std::mt19937_64 rng(1);
  const auto n = walker(g, {50.0, 105.0}, {1.0, 0.0}, 1.5);
  const auto m = step(n, g, 1.0, rng);
  EXPECT_DOUBLE_EQ(m.position.x, 51.5);
  EXPECT_DOUBLE_EQ(m.position.y, 105.0);
  EXPECT_EQ(m.street_id, n.street_id);
}

TEST(Step, RejectsNonPositiveDt) {
  const Grid g(GridSpec{});
  std::mt19937_64 rng(1);
  EXPECT_THROW(step(walker(g, {50.0, 5.0}, {1.0, 0.0}, 1.5), g, 0.0, rng), std::invalid_argument);
}

TEST(Turns, FourWayEquiprobable) {
  const Grid g(GridSpec{});
  const auto f = exit_frequencies(g, {3, 3}, {1.0, 0.0}, 100000, 2);
  for (double x : f) EXPECT_NEAR(x, 1.0 / 3.0, 0.01);
}

TEST(Turns, BoundaryTJunctionTwoExits) {
  const Grid g(GridSpec{});
  const auto f = exit_frequencies(g, {2, 0}, {0.0, -1.0}, 100000, 3);
  EXPECT_NEAR(f[0], 0.5, 0.01);
  EXPECT_NEAR(f[1], 0.5, 0.01);
  EXPECT_EQ(f[2], 0.0);
}

TEST(Turns, OuterCornerSingleExit) {
  const Grid g(GridSpec{});
  const auto turns = feasible_turns(g, {0, 0}, {-1.0, 0.0});
  ASSERT_EQ(turns.size(), 1u);
  EXPECT_EQ(turns[0], Turn::kRight);
  const auto p = turn_probabilities(g, {0, 0}, {-1.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(Turns, ProbabilitiesSumToOne) {
  const Grid g(GridSpec{});
  for (int i = 0; i < g.intersections_x(); ++i)
    for (int j = 0; j < g.intersections_y(); ++j)
      for (Vec2 h : {Vec2{1, 0}, Vec2{-1, 0}, Vec2{0, 1}, Vec2{0, -1}}) {
        const auto p = turn_probabilities(g, {i, j}, h);
        EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
      }
}

TEST(Step, NodesStayOnStreetsOverLongWalks) {
  const Grid g(GridSpec{});
  auto nodes = spawn_nodes(g, 200, 5);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 600; ++k)
    for (auto& n : nodes) {
      const Vec2 before = n.position;
      n = step(n, g, 1.0, rng);
      ASSERT_TRUE(g.on_street(n.position));
      // Manhattan distance walked equals speed * dt.
      ASSERT_LE(std::abs(n.position.x - before.x) + std::abs(n.position.y - before.y), 1.5 + 1e-9);
      const auto& s = g.street(n.street_id);
      const Vec2 d = s.b - s.a, w = n.position - s.a;
      ASSERT_NEAR(d.x * w.y - d.y * w.x, 0.0, 1e-6);
    }
}

TEST(Forecast, NoBranchWhenIntersectionBeyondHorizon) {
  const Grid g(GridSpec{});
  const Vec2 c = g.intersection(2, 1);
  const auto n = walker(g, c - Vec2{30.0, 0.0}, {1.0, 0.0}, 1.5);
  const auto f = forecast_trajectory(n, g, 10);
  EXPECT_TRUE(f.branch_events.empty());
  ASSERT_EQ(f.deterministic_prefix.size(), 10u);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(f.deterministic_prefix[static_cast<std::size_t>(k)].x, c.x - 30.0 + 1.5 * k, 1e-12);
}

TEST(Forecast, BranchPointKinematics) {
  const Grid g(GridSpec{});
  const Vec2 c = g.intersection(2, 1);
  const auto n = walker(g, c - Vec2{3.0, 0.0}, {1.0, 0.0}, 1.5);
  const auto f = forecast_trajectory(n, g, 10);
  ASSERT_EQ(f.branch_events.size(), 1u);
  const auto& ev = f.branch_events[0];
  EXPECT_EQ(ev.arrival_ci, 2);
  EXPECT_EQ(f.deterministic_prefix.size(), 3u);
  EXPECT_EQ(f.deterministic_prefix[2], c);
  for (Turn t : {Turn::kRight, Turn::kLeft, Turn::kForward}) {
    const auto& seq = ev.branch_positions[static_cast<std::size_t>(t)];
    ASSERT_EQ(seq.size(), 7u);
    const Vec2 want = c + turn_direction(n.heading, t) * 1.5;
    EXPECT_NEAR(distance(seq[0], want), 0.0, 1e-12);
    EXPECT_NEAR(ev.turn_probs[static_cast<std::size_t>(t)], 1.0 / 3.0, 1e-12);
  }
}

TEST(Forecast, MatchesSampledWalkAlongTakenBranch) {
  const Grid g(GridSpec{});
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto n = walker(g, g.intersection(3, 3) - Vec2{7.0, 0.0}, {1.0, 0.0}, 1.5);
    const auto f = forecast_trajectory(n, g, 12);
    const auto& ev = f.branch_events.at(0);
    std::vector<Vec2> walk{n.position};
    for (int k = 1; k < 12; ++k) walk.push_back((n = step(n, g, 1.0, rng)).position);
    int taken = -1;
    for (Turn t : {Turn::kRight, Turn::kLeft, Turn::kForward})
      if (distance(n.heading, turn_direction({1.0, 0.0}, t)) < 1e-12) taken = static_cast<int>(t);
    ASSERT_GE(taken, 0);
    for (int k = 0; k < 12; ++k) {
      const Vec2 want = f.deterministic_at(k) ? f.deterministic_prefix[static_cast<std::size_t>(k)]
                                              : ev.branch_positions[static_cast<std::size_t>(taken)]
                                                                   [static_cast<std::size_t>(k - ev.arrival_ci - 1)];
      EXPECT_NEAR(distance(walk[static_cast<std::size_t>(k)], want), 0.0, 1e-9);
    }
  }
}

TEST(Forecast, StationaryNode) {
  const Grid g(GridSpec{});
  const auto n = walker(g, {50.0, 5.0}, {1.0, 0.0}, 0.0);
  const auto f = forecast_trajectory(n, g, 10);
  ASSERT_EQ(f.deterministic_prefix.size(), 10u);
  for (const auto& p : f.deterministic_prefix) EXPECT_EQ(p, n.position);
  EXPECT_TRUE(f.branch_events.empty());
}

TEST(Forecast, RejectsEmptyHorizon) {
  const Grid g(GridSpec{});
  EXPECT_THROW(forecast_trajectory(walker(g, {50.0, 5.0}, {1.0, 0.0}, 1.5), g, 0), std::invalid_argument);
}

TEST(Substreams, DistinctStreams) {
  std::map<std::uint64_t, int> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) ++seen[substream_seed(7, s)];
  EXPECT_EQ(seen.size(), 1000u);
}
