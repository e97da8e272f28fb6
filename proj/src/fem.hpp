#pragma once

// P2 reference element and quadrature shared by assembly and postprocessing.

#include <array>

#include "cornerpml/geometry.hpp"
#include "cornerpml/mesh.hpp"

namespace cpml::detail {

// Six-point degree-4 rule on the reference triangle: barycentric points and
// weights summing to one.
struct QuadPoint {
  double l[3];
  double w;
};

inline constexpr double kQa = 0.44594849091596489;
inline constexpr double kQb = 0.091576213509770743;
inline constexpr double kQwa = 0.22338158967801147;
inline constexpr double kQwb = 0.10995174365532187;

inline constexpr QuadPoint kQuad[6] = {
    {{kQa, kQa, 1.0 - 2.0 * kQa}, kQwa}, {{kQa, 1.0 - 2.0 * kQa, kQa}, kQwa},
    {{1.0 - 2.0 * kQa, kQa, kQa}, kQwa}, {{kQb, kQb, 1.0 - 2.0 * kQb}, kQwb},
    {{kQb, 1.0 - 2.0 * kQb, kQb}, kQwb}, {{1.0 - 2.0 * kQb, kQb, kQb}, kQwb},
};

struct P2Element {
  double area = 0.0;
  Vec2 grad_l[3];
  Vec2 p[3];

  explicit P2Element(const std::array<Vec2, 3>& v) {
    for (int k = 0; k < 3; ++k) p[k] = v[static_cast<std::size_t>(k)];
    const double det = orient(p[0], p[1], p[2]);
    area = 0.5 * det;
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = p[(k + 1) % 3], b = p[(k + 2) % 3];
      grad_l[k] = {(a.y - b.y) / det, (b.x - a.x) / det};
    }
  }

  Vec2 point(const QuadPoint& q) const {
    return q.l[0] * p[0] + q.l[1] * p[1] + q.l[2] * p[2];
  }

  // Shape values and gradients; order v0 v1 v2 m01 m12 m20.
  void eval(const double* l, double N[6], Vec2 dN[6]) const {
    for (int k = 0; k < 3; ++k) {
      N[k] = l[k] * (2.0 * l[k] - 1.0);
      dN[k] = (4.0 * l[k] - 1.0) * grad_l[k];
    }
    for (int k = 0; k < 3; ++k) {
      const int a = k, b = (k + 1) % 3;
      N[3 + k] = 4.0 * l[a] * l[b];
      dN[3 + k] = 4.0 * (l[a] * grad_l[b] + l[b] * grad_l[a]);
    }
  }
};

inline std::array<Vec2, 3> corners_of(const Mesh& m, const std::array<int, 6>& t) {
  return {m.nodes[static_cast<std::size_t>(t[0])], m.nodes[static_cast<std::size_t>(t[1])],
          m.nodes[static_cast<std::size_t>(t[2])]};
}

/// Barycentric coordinates of p; all within [-tol, 1 + tol] when inside.
inline std::array<double, 3> barycentric(const P2Element& el, Vec2 p) {
  std::array<double, 3> l{};
  for (int k = 0; k < 3; ++k) l[static_cast<std::size_t>(k)] = dot(el.grad_l[k], p - el.p[(k + 1) % 3]);
  return l;
}

}  // namespace cpml::detail
