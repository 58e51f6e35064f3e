#pragma once

// Pedestrian mobility along street axes with equiprobable turns at
// intersections, plus the single-turn trajectory forecast used for cost
// estimation.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "ngo/geometry.hpp"
#include "ngo/scenario.hpp"

namespace ngo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (seed, stream) pairs.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

struct NodeState {
  int id{0};
  Vec2 position;
  /// Unit vector along the current street axis.
  Vec2 heading{1.0, 0.0};
  double speed{1.5};
  int street_id{0};
  bool busy{false};

  Vec2 velocity() const { return heading * speed; }
};

enum class Turn { kRight = 0, kLeft = 1, kForward = 2 };

inline constexpr Vec2 rotate_left(Vec2 h) { return {-h.y, h.x}; }
inline constexpr Vec2 rotate_right(Vec2 h) { return {h.y, -h.x}; }

inline Vec2 turn_direction(Vec2 heading, Turn t) {
  switch (t) {
    case Turn::kRight: return rotate_right(heading);
    case Turn::kLeft: return rotate_left(heading);
    case Turn::kForward: return heading;
  }
  return heading;
}

struct IntersectionIndex {
  int i{0};
  int j{0};
  constexpr bool operator==(const IntersectionIndex&) const = default;
};

namespace detail {

inline IntersectionIndex nearest_intersection(const Grid& grid, Vec2 p) {
  const double half = grid.spec().street_width / 2.0;
  const double pch = grid.spec().pitch();
  return {static_cast<int>(std::lround((p.x - half) / pch)),
          static_cast<int>(std::lround((p.y - half) / pch))};
}

inline bool has_neighbor(const Grid& grid, IntersectionIndex at, Vec2 dir) {
  const int ni = at.i + static_cast<int>(std::lround(dir.x));
  const int nj = at.j + static_cast<int>(std::lround(dir.y));
  return ni >= 0 && nj >= 0 && ni < grid.intersections_x() && nj < grid.intersections_y();
}

inline int segment_from(const Grid& grid, IntersectionIndex at, Vec2 dir) {
  const int dx = static_cast<int>(std::lround(dir.x));
  const int dy = static_cast<int>(std::lround(dir.y));
  if (dx > 0) return grid.horizontal_id(at.i, at.j);
  if (dx < 0) return grid.horizontal_id(at.i - 1, at.j);
  if (dy > 0) return grid.vertical_id(at.i, at.j);
  return grid.vertical_id(at.i, at.j - 1);
}

/// Intersection the node is walking toward.
inline Vec2 target_intersection(const Grid& grid, const NodeState& n) {
  const auto& s = grid.street(n.street_id);
  const Vec2 d = s.b - s.a;
  const double along = d.x * n.heading.x + d.y * n.heading.y;
  return along > 0.0 ? s.b : s.a;
}

}  // namespace detail

/// Feasible exits at an intersection for a node arriving with `heading`, in
/// (right, left, forward) order. Falls back to a U-turn only when empty.
inline std::vector<Turn> feasible_turns(const Grid& grid, IntersectionIndex at, Vec2 heading) {
  std::vector<Turn> out;
  for (Turn t : {Turn::kRight, Turn::kLeft, Turn::kForward})
    if (detail::has_neighbor(grid, at, turn_direction(heading, t))) out.push_back(t);
  return out;
}

/// Equal split over feasible exits; (P_r, P_l, P_f).
inline std::array<double, 3> turn_probabilities(const Grid& grid, IntersectionIndex at, Vec2 heading) {
  const auto turns = feasible_turns(grid, at, heading);
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (Turn t : turns) p[static_cast<int>(t)] = 1.0 / static_cast<double>(turns.size());
  return p;
}

/// Uniform placement along the total street axis length with a random heading.
inline std::vector<NodeState> spawn_nodes(const Grid& grid, int total_count, std::uint64_t seed,
                                          double speed = 1.5) {
  if (total_count < 0) throw std::invalid_argument("spawn_nodes: negative count");
  std::vector<NodeState> nodes;
  nodes.reserve(static_cast<std::size_t>(total_count));
  std::mt19937_64 rng(seed);
  std::vector<double> lengths;
  for (const auto& s : grid.streets()) lengths.push_back(s.length());
  std::discrete_distribution<int> pick(lengths.begin(), lengths.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int id = 0; id < total_count; ++id) {
    const auto& s = grid.streets()[static_cast<std::size_t>(pick(rng))];
    const double u = unit(rng);
    const Vec2 dir = (s.b - s.a) * (1.0 / s.length());
    NodeState n;
    n.id = id;
    n.position = s.a + (s.b - s.a) * u;
    n.heading = coin(rng) ? dir : dir * -1.0;
    n.speed = speed;
    n.street_id = s.id;
    nodes.push_back(n);
  }
  return nodes;
}

/// Advance a node by speed*dt along its street, sampling an exit at every
/// intersection crossed. Overshoot carries into the new direction.
template <class Rng>
NodeState step(NodeState node, const Grid& grid, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  double remaining = node.speed * dt;
  while (remaining > 0.0) {
    const Vec2 target = detail::target_intersection(grid, node);
    const double to_target = distance(node.position, target);
    if (remaining < to_target) {
      node.position = node.position + node.heading * remaining;
      break;
    }
    node.position = target;
    remaining -= to_target;
    const IntersectionIndex at = detail::nearest_intersection(grid, target);
    const auto turns = feasible_turns(grid, at, node.heading);
    Vec2 dir = node.heading * -1.0;
    if (!turns.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, turns.size() - 1);
      dir = turn_direction(node.heading, turns[pick(rng)]);
    }
    node.heading = dir;
    node.street_id = detail::segment_from(grid, at, dir);
  }
  return node;
}

struct IntersectionEvent {
  IntersectionIndex intersection;
  /// Last CI at or before the arrival at the intersection.
  int arrival_ci{0};
  std::array<double, 3> turn_probs{0.0, 0.0, 0.0};
  /// Per direction (right, left, forward): positions for CIs arrival_ci+1 ..
  /// horizon-1. Empty for infeasible directions.
  std::array<std::vector<Vec2>, 3> branch_positions;
};

struct TrajectoryForecast {
  int horizon{0};
  std::vector<Vec2> deterministic_prefix;
  std::vector<IntersectionEvent> branch_events;

  bool deterministic_at(int k) const { return k < static_cast<int>(deterministic_prefix.size()); }
};

/// Straight walk from `from` along `dir` for `length` meters, clamped at the
/// last intersection before the scenario boundary.
inline Vec2 walk_straight(const Grid& grid, IntersectionIndex from, Vec2 dir, double length) {
  const double pch = grid.spec().pitch();
  const int dx = static_cast<int>(std::lround(dir.x));
  const int dy = static_cast<int>(std::lround(dir.y));
  int steps_avail = 0;
  if (dx > 0) steps_avail = grid.intersections_x() - 1 - from.i;
  if (dx < 0) steps_avail = from.i;
  if (dy > 0) steps_avail = grid.intersections_y() - 1 - from.j;
  if (dy < 0) steps_avail = from.j;
  const double max_len = steps_avail * pch;
  return grid.intersection(from.i, from.j) + dir * std::min(length, max_len);
}

inline TrajectoryForecast forecast_trajectory(const NodeState& node, const Grid& grid, int horizon,
                                              double t_ci = 1.0) {
  if (horizon < 1) throw std::invalid_argument("forecast_trajectory: horizon must be >= 1");
  TrajectoryForecast f;
  f.horizon = horizon;
  const double stride = node.speed * t_ci;
  if (!(stride > 0.0)) {
    f.deterministic_prefix.assign(static_cast<std::size_t>(horizon), node.position);
    return f;
  }
  const Vec2 target = detail::target_intersection(grid, node);
  const double d = distance(node.position, target);
  // k*stride <= d keeps the node on its current segment.
  const double ratio = d / stride;
  int arrival = static_cast<int>(std::floor(ratio + 1e-9));
  const int det_count = std::min(horizon, arrival + 1);
  for (int k = 0; k < det_count; ++k) {
    const double travelled = std::min(k * stride, d);
    f.deterministic_prefix.push_back(node.position + node.heading * travelled);
  }
  if (arrival + 1 >= horizon) return f;

  IntersectionEvent ev;
  ev.intersection = detail::nearest_intersection(grid, target);
  ev.arrival_ci = arrival;
  ev.turn_probs = turn_probabilities(grid, ev.intersection, node.heading);
  for (Turn t : feasible_turns(grid, ev.intersection, node.heading)) {
    const Vec2 dir = turn_direction(node.heading, t);
    auto& seq = ev.branch_positions[static_cast<std::size_t>(t)];
    for (int k = arrival + 1; k < horizon; ++k)
      seq.push_back(walk_straight(grid, ev.intersection, dir, k * stride - d));
  }
  // Dead end: only a U-turn is possible.
  if (feasible_turns(grid, ev.intersection, node.heading).empty()) {
    ev.turn_probs = {0.0, 0.0, 1.0};
    auto& seq = ev.branch_positions[static_cast<std::size_t>(Turn::kForward)];
    for (int k = arrival + 1; k < horizon; ++k)
      seq.push_back(walk_straight(grid, ev.intersection, node.heading * -1.0, k * stride - d));
  }
  f.branch_events.push_back(std::move(ev));
  return f;
}

}  // namespace ngo
