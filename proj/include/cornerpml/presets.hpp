#pragma once

// Named scene geometries.

#include <vector>

#include "cornerpml/geometry.hpp"

namespace cpml {

/// Isosceles triangle with apex angle pi/6 (top, on the y axis) and base
/// angles 5pi/12, base length 0.1 (micrometres), centroid at the origin.
/// Vertices counterclockwise: base left, base right, apex.
std::vector<Vec2> paper_triangle_polygon();

inline constexpr double kPaperTriangleRadius = 0.3;
inline constexpr double kPaperTriangleRho = 0.02;

}  // namespace cpml
