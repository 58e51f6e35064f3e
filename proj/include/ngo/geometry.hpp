#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace ngo {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr bool operator==(const Vec3&) const = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline constexpr Vec3 lift(Vec2 p, double z) { return {p.x, p.y, z}; }

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
  double x0{0.0};
  double y0{0.0};
  double x1{0.0};
  double y1{0.0};

  constexpr bool contains(Vec2 p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  constexpr bool contains_strict(Vec2 p) const {
    return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1;
  }
  constexpr double area() const { return (x1 - x0) * (y1 - y0); }
  constexpr bool operator==(const Rect&) const = default;
};

// Slab test of segment a-b against the open box (r extruded over (0, height)).
// Touching a face or an edge does not count as an intersection.
inline bool segment_hits_box(Vec3 a, Vec3 b, const Rect& r, double height) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double lo[3] = {r.x0, r.y0, 0.0};
  const double hi[3] = {r.x1, r.y1, height};
  const double p[3] = {a.x, a.y, a.z};
  const double d[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (p[axis] <= lo[axis] || p[axis] >= hi[axis]) return false;
      continue;
    }
    double ta = (lo[axis] - p[axis]) / d[axis];
    double tb = (hi[axis] - p[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return t1 - t0 > 1e-12;
}

// Length of the part of segment a-b that lies inside the disk (center, radius).
inline double chord_length(Vec2 a, Vec2 b, Vec2 center, double radius) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len <= 0.0) return 0.0;
  const Vec2 u = d * (1.0 / len);
  const Vec2 w = center - a;
  const double proj = w.x * u.x + w.y * u.y;
  const double perp2 = w.x * w.x + w.y * w.y - proj * proj;
  const double h2 = radius * radius - perp2;
  if (h2 <= 0.0) return 0.0;
  const double h = std::sqrt(h2);
  const double s0 = std::max(0.0, proj - h);
  const double s1 = std::min(len, proj + h);
  return std::max(0.0, s1 - s0);
}

}  // namespace ngo
