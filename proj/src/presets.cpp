#include "cornerpml/presets.hpp"

#include <cmath>
#include <numbers>

namespace cpml {

std::vector<Vec2> paper_triangle_polygon() {
  const double half_base = 0.05;
  const double height = half_base / std::tan(std::numbers::pi / 12.0);
  const double y0 = -height / 3.0;
  return {{-half_base, y0}, {half_base, y0}, {0.0, y0 + height}};
}

}  // namespace cpml
