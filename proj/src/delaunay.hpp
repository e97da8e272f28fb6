#pragma once

// Conforming Delaunay triangulation with Ruppert-style refinement.
// Internal to the mesh module.

#include <array>
#include <functional>
#include <vector>

#include "cornerpml/geometry.hpp"

namespace cpml::detail {

struct Segment {
  int a = 0;
  int b = 0;
  /// Unsplittable segments keep their end points (outer circle, holes).
  bool splittable = true;
  int tag = 0;
};

struct Pslg {
  std::vector<Vec2> points;
  std::vector<Segment> segments;
  /// Vertices whose small input angles are exempt from the quality bound.
  std::vector<int> corners;
  /// Domain membership of a point (triangle centroids, Steiner candidates).
  std::function<bool(Vec2)> inside;
};

struct RefineOptions {
  double min_angle_deg = 20.7;
  /// Target edge length.
  std::function<double(Vec2)> size;
  std::size_t max_points = 400000;
};

struct Triangulation {
  std::vector<Vec2> points;
  /// Counterclockwise triangles inside the domain.
  std::vector<std::array<int, 3>> tris;
  /// Final (split) segments.
  std::vector<Segment> segments;
  std::size_t skipped = 0;
};

Triangulation triangulate(const Pslg& pslg, const RefineOptions& opts);

}  // namespace cpml::detail
