#pragma once

// Small 2D vector helpers shared by the mesh and post-processing code.

#include <cmath>
#include <numbers>
#include <vector>

namespace cpml {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 polar(double r, double t) { return {r * std::cos(t), r * std::sin(t)}; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double t) {
  constexpr double pi = std::numbers::pi;
  t = std::remainder(t, 2.0 * pi);
  if (t <= -pi) t += 2.0 * pi;
  return t;
}

/// Twice the signed area of triangle abc (positive when counterclockwise).
inline double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

/// Even-odd point-in-polygon test; points on the boundary are unspecified.
inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

}  // namespace cpml
