#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ngo/estimator.hpp"
#include "ngo/validate.hpp"

using namespace ngo;

namespace {

TileCostTable q2() { return make_tile_table({1.0, 2.0}, {0.5, 0.5}); }
TileCostTable q3() { return make_tile_table({1.0, 2.0, 3.0}, {0.2, 0.3, 0.5}); }

TileCostTable random_table(std::mt19937_64& rng, int q) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c, w;
  for (int i = 0; i < q; ++i) {
    c.push_back(std::exp(4.0 * u(rng)));
    w.push_back(0.05 + u(rng));
  }
  return make_tile_table(c, w);
}

RelayCountModel deterministic_j(int j) {
  RelayCountModel m;
  m.j_le = m.j_ue = j;
  m.window_pmf = {1.0};
  return m;
}

EstimatorOptions permissive() {
  EstimatorOptions o;
  o.p_empty_max = 1.0;
  return o;
}

}  // namespace

TEST(BranchAverage, UniformWeights) {
  const std::vector<double> c{3.0, 6.0, 9.0}, p{1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_NEAR(branch_average(c, p), 6.0, 1e-12);
}

TEST(BranchAverage, DegenerateRight) {
  const std::vector<double> c{3.0, 6.0, 9.0}, p{1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(branch_average(c, p), 3.0);
}

TEST(BranchAverage, HandWeighted) {
  const std::vector<double> c{2.0, 4.0, 8.0}, p{0.5, 0.25, 0.25};
  EXPECT_DOUBLE_EQ(branch_average(c, p), 4.0);
}

TEST(BranchAverage, LengthMismatch) {
  const std::vector<double> c{1.0, 2.0}, p{1.0};
  EXPECT_THROW(branch_average(c, p), std::invalid_argument);
}

TEST(TileTable, HomogeneousDensityUniformPmf) {
  const Grid g(GridSpec{});
  const ChannelParams p;
  const Vec2 src{305.5, 205.5};
  const auto t = tile_cost_table(g, p, src, coverage_region(g, src, p.r_d2d_m), homogeneous_densities(g, 500));
  ASSERT_GT(t.size(), 100u);
  for (double x : t.tile_pmf) EXPECT_NEAR(x, 1.0 / static_cast<double>(t.size()), 1e-15);
}

TEST(TileTable, LosToBsRanksAboveNlosAtEqualD2dCost) {
  const Grid g(GridSpec{});
  const ChannelParams p;
  const Vec2 src{305.5, 205.5};
  const Vec2 north{305.5, 215.5}, west{295.5, 205.5};
  ASSERT_TRUE(g.los(lift(north, 1.5), g.bs()));
  ASSERT_FALSE(g.los(lift(west, 1.5), g.bs()));
  const auto t = tile_cost_table(g, p, src, coverage_region(g, src, p.r_d2d_m), homogeneous_densities(g, 500));
  std::size_t in = t.size(), iw = t.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.region.tiles[i].center == north) in = i;
    if (t.region.tiles[i].center == west) iw = i;
  }
  ASSERT_LT(in, t.size());
  ASSERT_LT(iw, t.size());
  EXPECT_DOUBLE_EQ(d2d_gain(g, p, src, north), d2d_gain(g, p, src, west));
  EXPECT_LT(t.inverse_ranking[in], t.inverse_ranking[iw]);
}

TEST(TileTable, RankingMatchesBruteForceSort) {
  const std::vector<double> costs{4.0, 1.5, 4.0, 0.5, 2.5};
  const auto t = make_tile_table(costs, {1, 1, 1, 1, 1});
  std::vector<std::size_t> order{0, 1, 2, 3, 4};
  // Selection sort by (cost, index).
  for (std::size_t a = 0; a < order.size(); ++a)
    for (std::size_t b = a + 1; b < order.size(); ++b)
      if (costs[order[b]] < costs[order[a]] || (costs[order[b]] == costs[order[a]] && order[b] < order[a]))
        std::swap(order[a], order[b]);
  EXPECT_EQ(t.ranking, order);
  for (std::size_t r = 0; r < order.size(); ++r) EXPECT_EQ(t.inverse_ranking[order[r]], r);
}

TEST(TileTable, RelayLegUsesCellMapWhenGiven) {
  const Grid g(GridSpec{});
  const ChannelParams p;
  const CellCostMap m(g, p);
  const Vec2 src{155.5, 5.5};
  const auto region = coverage_region(g, src, p.r_d2d_m);
  const auto d = homogeneous_densities(g, 100);
  const auto a = tile_cost_table(g, p, src, region, d);
  const auto b = tile_cost_table(g, p, src, region, d, &m);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a.costs[i], b.costs[i]);
}

TEST(Staircase, SupportBounds) {
  const auto f = staircase_cdf(q3());
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_EQ(f(3.0), 1.0);
  EXPECT_EQ(f(100.0), 1.0);
}

TEST(Staircase, SingleStep) { EXPECT_DOUBLE_EQ(staircase_cdf(q2())(1.5), 0.5); }

TEST(Staircase, PartialSums) {
  std::mt19937_64 rng(1);
  const auto t = random_table(rng, 9);
  const auto f = staircase_cdf(t);
  double acc = 0.0;
  for (std::size_t q = 0; q < t.size(); ++q) {
    acc += t.ranked_pmf[q];
    EXPECT_NEAR(f(t.sorted_costs[q]), q + 1 == t.size() ? 1.0 : acc, 1e-12);
  }
}

TEST(MinCostPmf, SingleDrawUnchanged) {
  const auto t = q3();
  const auto pmf = min_cost_pmf(t, 1);
  for (std::size_t q = 0; q < 3; ++q) EXPECT_NEAR(pmf[q], t.ranked_pmf[q], 1e-15);
}

TEST(MinCostPmf, TwoOfTwo) {
  const auto pmf = min_cost_pmf(q2(), 2);
  EXPECT_DOUBLE_EQ(pmf[0], 0.75);
  EXPECT_DOUBLE_EQ(pmf[1], 0.25);
}

TEST(MinCostPmf, ZeroRelaysEmpty) { EXPECT_TRUE(min_cost_pmf(q2(), 0).empty()); }

TEST(MinCostPmf, Errors) {
  EXPECT_THROW(min_cost_pmf(q2(), -1), std::invalid_argument);
  EXPECT_THROW(min_cost_pmf(std::span<const double>{}, 1), std::invalid_argument);
}

TEST(MinCostPmf, MonteCarloThreeDraws) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  const auto pmf = min_cost_pmf(p, 3);
  std::mt19937_64 rng(17);
  std::discrete_distribution<int> pick(p.begin(), p.end());
  std::vector<double> hist(3, 0.0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) hist[static_cast<std::size_t>(std::min({pick(rng), pick(rng), pick(rng)}))] += 1.0;
  for (std::size_t q = 0; q < 3; ++q) EXPECT_NEAR(hist[q] / n, pmf[q], 0.003);
}

TEST(MinCostPmf, ExhaustiveEnumeration) {
  std::mt19937_64 rng(23);
  for (int fixture = 0; fixture < 40; ++fixture) {
    const int q = 1 + static_cast<int>(rng() % 7);
    const int j = 1 + static_cast<int>(rng() % 5);
    const auto t = random_table(rng, q);
    const auto got = min_cost_pmf(t, j);
    const auto want = enumerate_min_pmf(t.ranked_pmf, j);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(MinCostPmf, RowsSumToOneAndMatchSurvival) {
  std::mt19937_64 rng(29);
  for (int fixture = 0; fixture < 30; ++fixture) {
    const auto t = random_table(rng, 2 + static_cast<int>(rng() % 30));
    const auto f = staircase_cdf(t);
    for (int j = 1; j <= 12; ++j) {
      const auto pmf = min_cost_pmf(t, j);
      EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-12);
      double acc = 0.0;
      for (std::size_t q = 0; q < pmf.size(); ++q) {
        acc += pmf[q];
        EXPECT_NEAR(acc, 1.0 - std::pow(1.0 - f(t.sorted_costs[q]), j), 1e-12);
      }
    }
  }
}

TEST(MinCostPmf, StochasticDominanceInJ) {
  std::mt19937_64 rng(31);
  const auto t = random_table(rng, 12);
  for (int j1 = 1; j1 < 8; ++j1) {
    const auto a = min_cost_pmf(t, j1), b = min_cost_pmf(t, j1 + 1);
    double ca = 0.0, cb = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) {
      ca += a[q];
      cb += b[q];
      EXPECT_GE(cb, ca - 1e-12);
    }
  }
}

TEST(MinCostPmf, ExpectedMinimumBelowSingleDraw) {
  std::mt19937_64 rng(37);
  for (int fixture = 0; fixture < 20; ++fixture) {
    const auto t = random_table(rng, 2 + static_cast<int>(rng() % 20));
    double single = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) single += t.sorted_costs[q] * t.ranked_pmf[q];
    for (int j = 1; j <= 6; ++j) {
      const auto pmf = min_cost_pmf(t, j);
      double e = 0.0;
      for (std::size_t q = 0; q < t.size(); ++q) e += t.sorted_costs[q] * pmf[q];
      EXPECT_LE(e, single + 1e-12);
    }
  }
}

TEST(RelayCount, MeanFromCoveredLengths) {
  GridSpec s;
  const Grid g(s);
  StreetDensities d(g.streets().size(), 0.012);
  const std::vector<StreetCoverage> cov{{1, 100.0}, {2, 60.0}};
  EXPECT_NEAR(relay_count_stats(cov, d).mean, 1.92, 1e-12);
}

TEST(RelayCount, EmptyProbability) {
  EXPECT_NEAR(poisson_window(2.0, 0.95).p_empty(), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(poisson_window(2.0, 0.95).p_empty(), 0.13534, 1e-5);
}

TEST(RelayCount, WindowIsShortestContiguousInterval) {
  for (double mean : {0.3, 0.5, 1.0, 1.92, 2.0, 4.0, 8.0, 15.0, 40.0}) {
    const auto w = poisson_window(mean, 0.95);
    EXPECT_GE(w.window_mass(), 0.95);
    int best = 1 << 30;
    for (int lo = 0; lo < 200; ++lo) {
      double acc = 0.0;
      for (int hi = lo; hi < 200; ++hi) {
        acc += w.pmf(hi);
        if (acc >= 0.95) {
          best = std::min(best, hi - lo + 1);
          break;
        }
      }
    }
    EXPECT_EQ(w.j_ue - w.j_le + 1, best) << "mean " << mean;
  }
}

TEST(RelayCount, ZeroMean) {
  const auto w = poisson_window(0.0, 0.95);
  EXPECT_EQ(w.j_le, 0);
  EXPECT_EQ(w.j_ue, 0);
  EXPECT_THROW(poisson_window(-1.0, 0.95), std::invalid_argument);
}

TEST(RelayCount, NegativeInputsRejected) {
  const Grid g(GridSpec{});
  StreetDensities d(g.streets().size(), 0.01);
  const std::vector<StreetCoverage> bad{{1, -5.0}};
  EXPECT_THROW(relay_count_stats(bad, d), std::invalid_argument);
}

TEST(Mixture, SingleRelayEqualsStaircase) {
  const auto t = q3();
  const auto m = mixture_cdf(t, deterministic_j(1));
  const auto f = staircase_cdf(t);
  for (double c : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0}) EXPECT_NEAR(m(c), f(c), 1e-15);
}

TEST(Mixture, NondecreasingAndBounded) {
  std::mt19937_64 rng(41);
  const auto t = random_table(rng, 25);
  for (double mean : {0.5, 2.0, 9.0}) {
    const auto m = mixture_cdf(t, poisson_window(mean, 0.95));
    double prev = 0.0;
    for (double c = 0.0; c < 60.0; c += 0.25) {
      const double v = m(c);
      EXPECT_GE(v, prev - 1e-15);
      EXPECT_LE(v, 1.0 + 1e-12);
      prev = v;
    }
  }
}

TEST(Mixture, MonteCarloKolmogorovDistance) {
  const auto t = q3();
  const double mean = 1.5;
  const auto m = mixture_cdf(t, poisson_window(mean, 0.95));
  std::mt19937_64 rng(43);
  std::poisson_distribution<int> pj(mean);
  std::discrete_distribution<std::size_t> pick(t.tile_pmf.begin(), t.tile_pmf.end());
  std::vector<double> hist(3, 0.0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const int j = pj(rng);
    if (j == 0) continue;
    std::size_t best = 3;
    for (int d = 0; d < j; ++d) best = std::min(best, t.inverse_ranking[pick(rng)]);
    hist[best] += 1.0;
  }
  double acc = 0.0, ks = 0.0;
  for (std::size_t q = 0; q < 3; ++q) {
    acc += hist[q] / n;
    ks = std::max(ks, std::abs(acc - m(t.sorted_costs[q])));
  }
  EXPECT_LE(ks, 0.005);
}

TEST(ExpectedCost, TwoDeterministicRelays) {
  EXPECT_NEAR(*expected_d2d_aided_cost(q2(), deterministic_j(2), permissive()), 1.25, 1e-15);
}

TEST(ExpectedCost, OneDeterministicRelay) {
  EXPECT_NEAR(*expected_d2d_aided_cost(q2(), deterministic_j(1), permissive()), 1.5, 1e-15);
}

TEST(ExpectedCost, NonincreasingInMean) {
  for (const auto& t : {q2(), q3()}) {
    double prev = INFINITY;
    for (double mean : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double e = *expected_d2d_aided_cost(t, poisson_window(mean, 0.95), permissive());
      EXPECT_LE(e, prev + 1e-12);
      prev = e;
    }
  }
}

TEST(ExpectedCost, WideWindowBruteForce) {
  for (const auto& t : {q2(), q3()})
    for (double mean : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double got = *expected_d2d_aided_cost(t, poisson_window(mean, 0.95), permissive());
      const double want = brute_force_expected_min(t.sorted_costs, t.ranked_pmf, mean);
      EXPECT_NEAR(got, want, 0.01 * want) << "Q=" << t.size() << " mean " << mean;
    }
}

TEST(ExpectedCost, FullWindowIsExact) {
  std::mt19937_64 rng(47);
  const auto t = random_table(rng, 15);
  for (double mean : {0.7, 3.0, 11.0}) {
    const double got = *expected_d2d_aided_cost(t, poisson_window(mean, 1.0 - 1e-12), permissive());
    EXPECT_NEAR(got, brute_force_expected_min(t.sorted_costs, t.ranked_pmf, mean, 1.0 - 1e-14), 1e-9 * got);
  }
}

TEST(ExpectedCost, MonteCarlo) {
  std::uint64_t seed = 100;
  for (const auto& t : {q2(), q3()})
    for (double mean : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double got = *expected_d2d_aided_cost(t, poisson_window(mean, 0.95), permissive());
      const double mc = monte_carlo_expected_min(t, mean, 1000000, ++seed);
      EXPECT_NEAR(got, mc, 0.005 * mc) << "Q=" << t.size() << " mean " << mean;
    }
}

TEST(ExpectedCost, EmptyTableInfeasible) {
  EXPECT_FALSE(expected_d2d_aided_cost(TileCostTable{}, poisson_window(3.0, 0.95)).has_value());
}

TEST(ExpectedCost, SparseRegionInfeasible) {
  // P(J = 0) = e^-0.5 > 0.5.
  EXPECT_FALSE(expected_d2d_aided_cost(q3(), poisson_window(0.5, 0.95)).has_value());
  EXPECT_TRUE(expected_d2d_aided_cost(q3(), poisson_window(0.8, 0.95)).has_value());
}

TEST(ExpectedCost, LiteralPolicyDoesNotCondition) {
  EstimatorOptions lit = permissive();
  lit.zero_policy = ZeroRelayPolicy::kLiteral;
  const auto m = poisson_window(1.0, 0.95);
  const double cond = *expected_d2d_aided_cost(q3(), m, permissive());
  const double raw = *expected_d2d_aided_cost(q3(), m, lit);
  EXPECT_NEAR(raw, cond * (1.0 - m.p_empty()), 1e-12);
}

TEST(ExpectedCost, RenormalizedTailOption) {
  EstimatorOptions o = permissive();
  o.tail = WindowTail::kRenormalize;
  const auto m = poisson_window(2.0, 0.95);
  const double got = *expected_d2d_aided_cost(q3(), m, o);
  // Direct: window terms over j >= 1, reweighted to one.
  double num = 0.0, den = 0.0;
  for (int j = std::max(1, m.j_le); j <= m.j_ue; ++j) {
    const auto pmf = min_cost_pmf(q3(), j);
    double e = 0.0;
    for (std::size_t q = 0; q < 3; ++q) e += q3().sorted_costs[q] * pmf[q];
    num += m.pmf(j) * e;
    den += m.pmf(j);
  }
  EXPECT_NEAR(got, num / den, 1e-12);
}

TEST(Forecast, StationarySourceFlatCellCosts) {
  const Grid g(GridSpec{});
  const ChannelParams p;
  NodeState n;
  n.position = {155.0, 5.0};
  n.speed = 0.0;
  n.street_id = g.street_at(n.position);
  const auto traj = forecast_trajectory(n, g, 10);
  const auto f = forecast_costs(g, p, traj, homogeneous_densities(g, 500), 10);
  for (double c : f.cell) EXPECT_EQ(c, f.cell[0]);
}

TEST(Forecast, ApproachingBsInLosNonincreasing) {
  const Grid g(GridSpec{});
  const ChannelParams p;
  NodeState n;
  n.position = {305.0, 255.0};
  n.heading = {0.0, 1.0};
  n.speed = 1.5;
  n.street_id = g.street_at(n.position);
  const auto traj = forecast_trajectory(n, g, 20);
  ASSERT_EQ(traj.deterministic_prefix.size(), 20u);
  const auto f = forecast_costs(g, p, traj, homogeneous_densities(g, 500), 20, {}, false);
  for (int k = 1; k < 20; ++k) EXPECT_LE(f.cell[static_cast<std::size_t>(k)], f.cell[static_cast<std::size_t>(k - 1)]);
}

TEST(Forecast, BranchAveragedEntryMatchesHandCombination) {
  const Grid g(GridSpec{});
  const ChannelParams p;
  const auto dens = homogeneous_densities(g, 500);
  NodeState n;
  const Vec2 c = g.intersection(2, 2);
  n.position = c - Vec2{3.0, 0.0};
  n.heading = {1.0, 0.0};
  n.speed = 1.5;
  n.street_id = g.street_at(n.position);
  const auto traj = forecast_trajectory(n, g, 6);
  const auto f = forecast_costs(g, p, traj, dens, 6, permissive());
  const int k = 3;
  ASSERT_TRUE(f.branch_averaged[k]);
  double cell = 0.0, d2d = 0.0;
  for (Turn t : {Turn::kRight, Turn::kLeft, Turn::kForward}) {
    const Vec2 x = c + turn_direction(n.heading, t) * 1.5;
    cell += cell_cost_at(g, p, x) / 3.0;
    const auto region = coverage_region(g, x, p.r_d2d_m);
    const auto table = tile_cost_table(g, p, x, region, dens);
    d2d += *expected_d2d_aided_cost(table, relay_count_stats(streets_in_region(g, region), dens), permissive()) / 3.0;
  }
  EXPECT_NEAR(f.cell[k], cell, 1e-12 * cell);
  ASSERT_TRUE(f.d2d_aided[k].has_value());
  EXPECT_NEAR(*f.d2d_aided[k], d2d, 1e-12 * d2d);
}

TEST(Forecast, HorizonBeyondTrajectoryRejected) {
  const Grid g(GridSpec{});
  NodeState n;
  n.position = {50.0, 5.0};
  n.street_id = g.street_at(n.position);
  const auto traj = forecast_trajectory(n, g, 5);
  EXPECT_THROW(forecast_costs(g, ChannelParams{}, traj, homogeneous_densities(g, 100), 6), std::invalid_argument);
}
