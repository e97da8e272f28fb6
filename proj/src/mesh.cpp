#include "cornerpml/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "cornerpml/error.hpp"
#include "delaunay.hpp"

namespace cpml {
namespace {

constexpr double kPi = std::numbers::pi;

bool is_grid_line(double phi, int M) {
  const double j = (kPi + 0.5 * phi) * M / (2.0 * kPi);
  return std::abs(j - std::round(j)) < 1e-9;
}

double seg_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
  return norm(p - (a + t * d));
}

struct SigmaPiece {
  Vec2 a;
  Vec2 b;
};

// Interface pieces: polygon edges trimmed at the holes of their end corners.
std::vector<SigmaPiece> sigma_pieces(const SceneGeometry& scene) {
  const std::size_t n = scene.polygon.size();
  std::vector<double> trim(n, 0.0);
  for (const SceneCorner& c : scene.corners) trim[static_cast<std::size_t>(c.vertex)] = c.spec.rho;
  std::vector<SigmaPiece> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const Vec2 a = scene.polygon[i], b = scene.polygon[j];
    out.push_back({a + (trim[i] / norm(b - a)) * (b - a), b + (trim[j] / norm(a - b)) * (a - b)});
  }
  return out;
}

// Hole vertex on the interface at local theta = +-phi/2 is computed from the
// edge direction so Sigma end points and hole vertices coincide exactly.
Vec2 hole_vertex(const SceneCorner& c, int j, const SceneGeometry& scene) {
  const double t = c.grid.theta[static_cast<std::size_t>(j)];
  const double half = 0.5 * c.spec.aperture;
  const std::size_t n = scene.polygon.size();
  const std::size_t v = static_cast<std::size_t>(c.vertex);
  if (t == half || t == -half) {
    // theta = +phi/2 lies on the edge towards the previous vertex for a
    // counterclockwise polygon with the metal bisector inside.
    const Vec2 o = scene.polygon[v];
    const Vec2 prev = scene.polygon[(v + n - 1) % n];
    const Vec2 next = scene.polygon[(v + 1) % n];
    const Vec2 target = (t == half) ? prev : next;
    const Vec2 d = target - o;
    const Vec2 cand = o + (c.spec.rho / norm(d)) * d;
    const auto [r, th] = c.spec.local_polar(cand);
    if (std::abs(th - t) < 1e-9) return cand;
    const Vec2 other = (t == half) ? next : prev;
    const Vec2 d2 = other - o;
    return o + (c.spec.rho / norm(d2)) * d2;
  }
  return c.spec.from_local(c.spec.rho, t);
}

struct Features {
  std::vector<Vec2> points;
  std::vector<detail::Segment> segments;
  std::vector<int> corners;
};

int add_point(Features& f, Vec2 p) {
  f.points.push_back(p);
  return static_cast<int>(f.points.size()) - 1;
}

int outer_segment_count(const SceneGeometry& scene) {
  const int need = std::max(64, static_cast<int>(std::ceil(2.0 * kPi * scene.R / scene.h)));
  int n = std::max(need, scene.outer_segments);
  if (n % 2) ++n;
  return n;
}

}  // namespace

int boundary_segments_for(double R, double h, double k) {
  if (!(R > 0.0 && h > 0.0 && k > 0.0)) throw MeshError("boundary segment rule needs R, h, k > 0");
  const double kh = k * h;
  const double n = std::max({64.0, std::ceil(2.0 * kPi * R / h), std::ceil(2.0 * kPi * std::sqrt(45.0 * k * R / (kh * kh * kh)))});
  int m = static_cast<int>(n);
  if (m % 2) ++m;
  return m;
}

namespace {

// Full set of constraint points and segments, with Sigma pre-subdivided.
Features build_features(const SceneGeometry& scene, bool split_at_axis) {
  Features f;
  const int nb = outer_segment_count(scene);
  const int first_outer = static_cast<int>(f.points.size());
  for (int k = 0; k < nb; ++k) {
    const double t = -0.5 * kPi + 2.0 * kPi * k / nb;
    Vec2 p = polar(scene.R, t);
    if (k == 0) p = {0.0, -scene.R};
    if (2 * k == nb) p = {0.0, scene.R};
    add_point(f, p);
  }
  for (int k = 0; k < nb; ++k) {
    f.segments.push_back({first_outer + k, first_outer + (k + 1) % nb, false, kTagOuter});
  }

  // Holes and a lookup from hole vertices on Sigma to point indices.
  std::map<std::pair<double, double>, int> sigma_anchor;
  for (std::size_t n = 0; n < scene.corners.size(); ++n) {
    const SceneCorner& c = scene.corners[n];
    const int M = c.grid.intervals();
    const int first = static_cast<int>(f.points.size());
    for (int j = 0; j < M; ++j) {
      const Vec2 p = hole_vertex(c, j, scene);
      add_point(f, p);
      const double t = c.grid.theta[static_cast<std::size_t>(j)];
      if (std::abs(std::abs(t) - 0.5 * c.spec.aperture) == 0.0) sigma_anchor[{p.x, p.y}] = first + j;
    }
    for (int j = 0; j < M; ++j) {
      f.segments.push_back({first + j, first + (j + 1) % M, false, kTagHoleBase + static_cast<int>(n)});
    }
  }

  // Polygon vertices that stay in the mesh.
  std::vector<int> vertex_index(scene.polygon.size(), -1);
  std::vector<bool> has_hole(scene.polygon.size(), false);
  for (const SceneCorner& c : scene.corners) has_hole[static_cast<std::size_t>(c.vertex)] = true;
  for (std::size_t i = 0; i < scene.polygon.size(); ++i) {
    if (!has_hole[i]) {
      vertex_index[i] = add_point(f, scene.polygon[i]);
      f.corners.push_back(vertex_index[i]);
    }
  }

  const auto pieces = sigma_pieces(scene);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const std::size_t j = (i + 1) % pieces.size();
    auto endpoint = [&](Vec2 p, std::size_t v) {
      if (vertex_index[v] >= 0) return vertex_index[v];
      const auto it = sigma_anchor.find({p.x, p.y});
      if (it == sigma_anchor.end()) throw MeshError("interface end point is not a hole vertex");
      return it->second;
    };
    const int ia = endpoint(pieces[i].a, i);
    const int ib = endpoint(pieces[i].b, j);
    const Vec2 a = f.points[static_cast<std::size_t>(ia)];
    const Vec2 b = f.points[static_cast<std::size_t>(ib)];

    // Optional split where the piece crosses the symmetry axis x = 0.
    std::vector<std::pair<int, int>> parts{{ia, ib}};
    if (split_at_axis && ((a.x < 0 && b.x > 0) || (a.x > 0 && b.x < 0))) {
      const double t = a.x / (a.x - b.x);
      const int im = add_point(f, {0.0, a.y + t * (b.y - a.y)});
      parts = {{ia, im}, {im, ib}};
    }
    for (auto [pa, pb] : parts) {
      const Vec2 p0 = f.points[static_cast<std::size_t>(pa)];
      const Vec2 p1 = f.points[static_cast<std::size_t>(pb)];
      const int cnt = std::max(1, static_cast<int>(std::ceil(norm(p1 - p0) / scene.h_int - 1e-9)));
      int prev = pa;
      for (int k = 1; k <= cnt; ++k) {
        int cur = pb;
        if (k < cnt) {
          // Symmetric evaluation keeps mirrored pieces mirrored.
          const double s = static_cast<double>(k) / cnt;
          const Vec2 q = (k * 2 <= cnt) ? p0 + s * (p1 - p0) : p1 + (1.0 - s) * (p0 - p1);
          cur = add_point(f, q);
        }
        f.segments.push_back({prev, cur, true, 0});
        prev = cur;
      }
    }
  }
  return f;
}

struct Domain {
  const SceneGeometry* scene;
  std::vector<Vec2> outer;
  std::vector<std::vector<Vec2>> holes;
  double r_in = 0.0;

  bool inside(Vec2 p) const {
    const double r = norm(p);
    if (r >= scene->R) return false;
    if (r > r_in && !point_in_polygon(p, outer)) return false;
    for (std::size_t n = 0; n < holes.size(); ++n) {
      const CornerSpec& c = scene->corners[n].spec;
      if (norm(p - c.position) < c.rho && point_in_polygon(p, holes[n])) return false;
    }
    return true;
  }
};

double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

Mesh finish_mesh(const SceneGeometry& scene, const std::vector<Vec2>& pts,
                 const std::vector<std::array<int, 3>>& tris) {
  Mesh mesh;
  mesh.nodes = pts;
  std::map<std::pair<int, int>, int> mid;
  std::map<std::pair<int, int>, int> edge_count;
  auto midpoint = [&](int a, int b) {
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    ++edge_count[key];
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    mesh.nodes.push_back(0.5 * (pts[static_cast<std::size_t>(a)] + pts[static_cast<std::size_t>(b)]));
    const int id = static_cast<int>(mesh.nodes.size()) - 1;
    mid[key] = id;
    return id;
  };
  for (const auto& t : tris) {
    const int m01 = midpoint(t[0], t[1]);
    const int m12 = midpoint(t[1], t[2]);
    const int m20 = midpoint(t[2], t[0]);
    mesh.tris.push_back({t[0], t[1], t[2], m01, m12, m20});
    const Vec2 c = (1.0 / 3.0) * (pts[static_cast<std::size_t>(t[0])] + pts[static_cast<std::size_t>(t[1])] +
                                   pts[static_cast<std::size_t>(t[2])]);
    mesh.region.push_back(scene.polygon.size() >= 3 && point_in_polygon(c, scene.polygon)
                              ? Region::metal
                              : Region::dielectric);
  }

  const double tol = 1e-9 * scene.R;
  for (const auto& [key, cnt] : edge_count) {
    if (cnt != 1) continue;
    const Vec2 a = pts[static_cast<std::size_t>(key.first)];
    const Vec2 b = pts[static_cast<std::size_t>(key.second)];
    int tag = 0;
    if (std::abs(norm(a) - scene.R) < tol && std::abs(norm(b) - scene.R) < tol) tag = kTagOuter;
    for (std::size_t n = 0; n < scene.corners.size() && tag == 0; ++n) {
      const CornerSpec& c = scene.corners[n].spec;
      if (std::abs(norm(a - c.position) - c.rho) < tol && std::abs(norm(b - c.position) - c.rho) < tol) {
        tag = kTagHoleBase + static_cast<int>(n);
      }
    }
    if (tag == 0) {
      std::ostringstream msg;
      msg << "untagged boundary edge at (" << a.x << ", " << a.y << ")";
      throw MeshError(msg.str());
    }
    mesh.boundary.push_back({{key.first, key.second, mid.at(key)}, tag});
  }

  // Hole node tables ordered by local theta from -pi.
  for (std::size_t n = 0; n < scene.corners.size(); ++n) {
    const SceneCorner& c = scene.corners[n];
    std::vector<std::pair<double, int>> nodes;
    std::vector<bool> seen(mesh.nodes.size(), false);
    for (const BoundaryEdge& e : mesh.boundary) {
      if (e.tag != kTagHoleBase + static_cast<int>(n)) continue;
      for (int id : e.nodes) {
        if (seen[static_cast<std::size_t>(id)]) continue;
        seen[static_cast<std::size_t>(id)] = true;
        double th = c.spec.local_polar(mesh.nodes[static_cast<std::size_t>(id)]).second;
        if (th > kPi - 1e-9) th -= 2.0 * kPi;
        nodes.push_back({th, id});
      }
    }
    std::sort(nodes.begin(), nodes.end());
    const int M = c.grid.intervals();
    if (static_cast<int>(nodes.size()) != 2 * M) {
      std::ostringstream msg;
      msg << "hole " << n + 1 << " has " << nodes.size() << " boundary nodes, expected " << 2 * M;
      throw MeshError(msg.str());
    }
    std::vector<int> ids;
    for (const auto& [th, id] : nodes) ids.push_back(id);
    mesh.hole_nodes.push_back(std::move(ids));
  }
  return mesh;
}

}  // namespace

std::size_t Mesh::num_vertices() const {
  std::vector<bool> used(nodes.size(), false);
  std::size_t n = 0;
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) {
      if (!used[static_cast<std::size_t>(t[k])]) {
        used[static_cast<std::size_t>(t[k])] = true;
        ++n;
      }
    }
  }
  return n;
}

ThetaGrid equispaced_theta_grid(double phi, int M) {
  if (!(phi > 0.0 && phi < 2.0 * kPi)) throw MeshError("aperture must lie in (0, 2pi)");
  if (M < 4) throw MeshError("theta grid needs at least 4 intervals");
  if (!is_grid_line(phi, M)) {
    const int sug = compatible_theta_intervals(phi, M);
    std::ostringstream msg;
    msg << "M = " << M << " does not place theta = +-phi/2 on grid lines";
    if (sug > 0) {
      msg << "; use M = " << sug;
    } else {
      msg << "; use a piecewise-uniform grid";
    }
    throw MeshError(msg.str());
  }
  ThetaGrid g;
  g.theta.resize(static_cast<std::size_t>(M) + 1);
  for (int j = 0; 2 * j <= M; ++j) {
    const double t = -kPi + 2.0 * kPi * j / M;
    g.theta[static_cast<std::size_t>(j)] = t;
    g.theta[static_cast<std::size_t>(M - j)] = -t;
  }
  if (M % 2 == 0) g.theta[static_cast<std::size_t>(M / 2)] = 0.0;
  const auto j1 = static_cast<std::size_t>(std::lround((kPi - 0.5 * phi) * M / (2.0 * kPi)));
  g.theta[j1] = -0.5 * phi;
  g.theta[static_cast<std::size_t>(M) - j1] = 0.5 * phi;
  g.theta.front() = -kPi;
  g.theta.back() = kPi;
  return g;
}

ThetaGrid piecewise_theta_grid(double phi, int M) {
  if (!(phi > 0.0 && phi < 2.0 * kPi)) throw MeshError("aperture must lie in (0, 2pi)");
  if (M < 4) throw MeshError("theta grid needs at least 4 intervals");
  const int nm = std::max(2, static_cast<int>(std::lround(phi / (2.0 * kPi) * M)));
  const int nd = std::max(1, static_cast<int>(std::lround((kPi - 0.5 * phi) / (2.0 * kPi) * M)));
  const double half = 0.5 * phi;
  ThetaGrid g;
  std::vector<double> lower;
  for (int k = 0; k < nd; ++k) lower.push_back(-kPi + (kPi - half) * k / nd);
  for (int k = 0; 2 * k < nm; ++k) lower.push_back(-half + phi * k / nm);
  // lower holds theta < 0 (or the centre line when nm is even).
  g.theta = lower;
  if (nm % 2 == 0) {
    g.theta.back() = 0.0;
    for (std::size_t i = lower.size() - 1; i-- > 0;) g.theta.push_back(-lower[i]);
  } else {
    for (std::size_t i = lower.size(); i-- > 0;) g.theta.push_back(-lower[i]);
  }
  g.theta.front() = -kPi;
  g.theta.back() = kPi;
  return g;
}

int compatible_theta_intervals(double phi, int M) {
  for (int m = std::max(M, 4); m <= 4 * std::max(M, 4); ++m) {
    if (is_grid_line(phi, m)) return m;
  }
  return 0;
}

ThetaGrid default_theta_grid(double phi, int M) {
  const int m = compatible_theta_intervals(phi, M);
  return m > 0 ? equispaced_theta_grid(phi, m) : piecewise_theta_grid(phi, M);
}

std::vector<CornerSpec> polygon_corners(const std::vector<Vec2>& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw MeshError("polygon needs at least three vertices");
  std::vector<CornerSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 v = polygon[i];
    const Vec2 e1 = polygon[(i + 1) % n] - v;
    const Vec2 e2 = polygon[(i + n - 1) % n] - v;
    double a = std::atan2(cross(e1, e2), dot(e1, e2));
    if (a <= 0.0) a += 2.0 * kPi;
    CornerSpec c;
    c.position = v;
    c.aperture = a;
    c.bisector = wrap_angle(std::atan2(e1.y, e1.x) + 0.5 * a);
    out.push_back(c);
  }
  return out;
}

void SceneGeometry::validate() const {
  if (!(R > 0.0)) throw MeshError("outer radius must be positive");
  if (!(h > 0.0) || !(h_int > 0.0)) throw MeshError("mesh sizes must be positive");
  if (!(grading > 0.0)) throw MeshError("grading must be positive");
  if (!polygon.empty()) {
    if (polygon.size() < 3) throw MeshError("polygon needs at least three vertices");
    if (!(polygon_area(polygon) > 0.0)) throw MeshError("polygon must be counterclockwise");
    for (std::size_t i = 0; i < polygon.size(); ++i) {
      if (!(norm(polygon[i]) < R)) throw MeshError("polygon vertex outside the disk");
      for (std::size_t j = i + 2; j < polygon.size(); ++j) {
        if (i == 0 && j + 1 == polygon.size()) continue;
        const Vec2 a = polygon[i], b = polygon[(i + 1) % polygon.size()];
        const Vec2 c = polygon[j], d = polygon[(j + 1) % polygon.size()];
        if (orient(a, b, c) * orient(a, b, d) < 0 && orient(c, d, a) * orient(c, d, b) < 0) {
          throw MeshError("polygon edges intersect");
        }
      }
    }
  }
  const double r_in = R * std::cos(kPi / outer_segment_count(*this));
  const auto all = polygon.empty() ? std::vector<CornerSpec>{} : polygon_corners(polygon);
  for (std::size_t n = 0; n < corners.size(); ++n) {
    const SceneCorner& c = corners[n];
    const std::string who = "corner " + std::to_string(n + 1);
    if (c.vertex < 0 || static_cast<std::size_t>(c.vertex) >= polygon.size()) {
      throw MeshError(who + ": vertex index out of range");
    }
    const CornerSpec& ref = all[static_cast<std::size_t>(c.vertex)];
    if (norm(ref.position - c.spec.position) > 1e-12 * R ||
        std::abs(ref.aperture - c.spec.aperture) > 1e-9 ||
        std::abs(wrap_angle(ref.bisector - c.spec.bisector)) > 1e-9) {
      throw MeshError(who + ": geometry does not match the polygon vertex");
    }
    if (!(c.spec.rho > 0.0)) throw MeshError(who + ": hole radius must be positive");
    if (!(norm(c.spec.position) + c.spec.rho < r_in)) throw MeshError(who + ": hole leaves the disk");
    const std::size_t v = static_cast<std::size_t>(c.vertex);
    const std::size_t np = polygon.size();
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t j = (i + 1) % np;
      const Vec2 a = polygon[i], b = polygon[j];
      if (i == v || j == v) {
        const Vec2 far = (i == v) ? b : a;
        if (!(norm(far - c.spec.position) > c.spec.rho)) {
          throw MeshError(who + ": hole swallows an adjacent edge");
        }
        continue;
      }
      if (!(seg_distance(c.spec.position, a, b) > c.spec.rho)) {
        throw MeshError(who + ": hole cuts a non-adjacent edge");
      }
    }
    for (std::size_t m = n + 1; m < corners.size(); ++m) {
      if (corners[m].vertex == c.vertex) throw MeshError(who + ": duplicate corner");
      if (!(norm(corners[m].spec.position - c.spec.position) > c.spec.rho + corners[m].spec.rho)) {
        throw MeshError(who + ": hole overlaps corner " + std::to_string(m + 1));
      }
    }
    const auto& th = c.grid.theta;
    if (th.size() < 5 || th.front() != -kPi || th.back() != kPi) {
      throw MeshError(who + ": theta grid must run from -pi to pi");
    }
    for (std::size_t i = 1; i < th.size(); ++i) {
      if (!(th[i] > th[i - 1])) throw MeshError(who + ": theta grid must increase");
    }
    const double half = 0.5 * c.spec.aperture;
    if (std::find(th.begin(), th.end(), half) == th.end() ||
        std::find(th.begin(), th.end(), -half) == th.end()) {
      throw MeshError(who + ": theta grid misses +-phi/2");
    }
  }
}

bool SceneGeometry::is_mirror_symmetric(double tol) const {
  auto has = [&](Vec2 p) {
    return std::any_of(polygon.begin(), polygon.end(),
                       [&](Vec2 q) { return norm(q - p) <= tol * R; });
  };
  for (Vec2 p : polygon) {
    if (!has({-p.x, p.y})) return false;
  }
  for (const SceneCorner& c : corners) {
    const Vec2 m{-c.spec.position.x, c.spec.position.y};
    const auto it = std::find_if(corners.begin(), corners.end(), [&](const SceneCorner& o) {
      return norm(o.spec.position - m) <= tol * R;
    });
    if (it == corners.end()) return false;
    if (std::abs(it->spec.rho - c.spec.rho) > tol * R) return false;
    const auto& a = c.grid.theta;
    const auto& b = it->grid.theta;
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] + b[a.size() - 1 - i]) > 1e-12) return false;
    }
  }
  return true;
}

Mesh build_disk_mesh(const SceneGeometry& scene, MeshStats* stats) {
  scene.validate();
  if (scene.mirror && !scene.is_mirror_symmetric()) {
    throw MeshError("mirror meshing requested for a non-symmetric scene");
  }
  const bool half = scene.mirror;
  Features f = build_features(scene, half);

  Domain dom;
  dom.scene = &scene;
  const int nb = outer_segment_count(scene);
  for (int k = 0; k < nb; ++k) dom.outer.push_back(f.points[static_cast<std::size_t>(k)]);
  dom.r_in = scene.R * std::cos(kPi / nb) * (1.0 - 1e-12);
  for (const SceneCorner& c : scene.corners) {
    std::vector<Vec2> poly;
    for (int j = 0; j < c.grid.intervals(); ++j) poly.push_back(hole_vertex(c, j, scene));
    dom.holes.push_back(std::move(poly));
  }

  const auto pieces = sigma_pieces(scene);
  const double g = scene.grading;
  const double s_out = 2.0 * kPi * scene.R / nb;
  auto size = [&](Vec2 p) {
    double hs = std::min(scene.h, s_out + g * std::max(0.0, scene.R - norm(p)));
    for (const SigmaPiece& s : pieces) hs = std::min(hs, scene.h_int + g * seg_distance(p, s.a, s.b));
    for (const SceneCorner& c : scene.corners) {
      const double sh = 2.0 * kPi * c.spec.rho / c.grid.intervals();
      hs = std::min(hs, sh + g * std::max(0.0, norm(p - c.spec.position) - c.spec.rho));
    }
    return hs;
  };

  detail::Pslg pslg;
  detail::RefineOptions opts;
  opts.size = size;
  const double snap = 1e-13 * scene.R;

  if (!half) {
    pslg.points = f.points;
    pslg.segments = f.segments;
    pslg.corners = f.corners;
    pslg.inside = [&](Vec2 p) { return dom.inside(p); };
  } else {
    // Keep x <= 0, with points on the axis snapped to x = 0.
    std::vector<int> remap(f.points.size(), -1);
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      Vec2 p = f.points[i];
      if (std::abs(p.x) <= snap) p.x = 0.0;
      if (p.x <= 0.0) {
        remap[i] = static_cast<int>(pslg.points.size());
        pslg.points.push_back(p);
      }
    }
    for (const detail::Segment& s : f.segments) {
      const int a = remap[static_cast<std::size_t>(s.a)], b = remap[static_cast<std::size_t>(s.b)];
      if (a >= 0 && b >= 0) {
        pslg.segments.push_back({a, b, s.splittable, s.tag});
      } else if (a >= 0 || b >= 0) {
        const Vec2 in = pslg.points[static_cast<std::size_t>(a >= 0 ? a : b)];
        if (in.x != 0.0) throw MeshError("symmetry axis crosses a segment away from its vertices");
      }
    }
    for (int c : f.corners) {
      if (remap[static_cast<std::size_t>(c)] >= 0) pslg.corners.push_back(remap[static_cast<std::size_t>(c)]);
    }
    std::vector<int> axis;
    for (std::size_t i = 0; i < pslg.points.size(); ++i) {
      if (pslg.points[i].x == 0.0) axis.push_back(static_cast<int>(i));
    }
    std::sort(axis.begin(), axis.end(), [&](int a, int b) {
      return pslg.points[static_cast<std::size_t>(a)].y < pslg.points[static_cast<std::size_t>(b)].y;
    });
    for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
      const Vec2 a = pslg.points[static_cast<std::size_t>(axis[i])];
      const Vec2 b = pslg.points[static_cast<std::size_t>(axis[i + 1])];
      if (dom.inside(0.5 * (a + b))) pslg.segments.push_back({axis[i], axis[i + 1], true, 0});
    }
    pslg.inside = [&](Vec2 p) { return p.x < 0.0 && dom.inside(p); };
  }

  const detail::Triangulation tri = detail::triangulate(pslg, opts);

  std::vector<Vec2> pts = tri.points;
  std::vector<std::array<int, 3>> tris = tri.tris;
  if (half) {
    std::vector<int> image(pts.size());
    const std::size_t n0 = pts.size();
    for (std::size_t i = 0; i < n0; ++i) {
      if (pts[i].x == 0.0) {
        image[i] = static_cast<int>(i);
      } else {
        image[i] = static_cast<int>(pts.size());
        pts.push_back({-pts[i].x, pts[i].y});
      }
    }
    const std::size_t t0 = tris.size();
    for (std::size_t t = 0; t < t0; ++t) {
      const auto& v = tris[t];
      tris.push_back({image[static_cast<std::size_t>(v[0])], image[static_cast<std::size_t>(v[2])],
                      image[static_cast<std::size_t>(v[1])]});
    }
  }

  Mesh mesh = finish_mesh(scene, pts, tris);
  if (stats) {
    std::vector<int> exempt;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
      for (Vec2 p : scene.polygon) {
        if (mesh.nodes[i] == p) exempt.push_back(static_cast<int>(i));
      }
    }
    stats->min_angle_deg = audit_mesh(mesh, nullptr, 0.0, exempt).min_angle_deg;
    stats->skipped_refinements = tri.skipped;
  }
  return mesh;
}

std::vector<double> strip_rows(const StripSpec& spec) {
  if (!(spec.rho > 0.0) || !(spec.L > 0.0) || !(spec.L0 >= 0.0) || !(spec.L0 < spec.L)) {
    throw MeshError("strip needs rho > 0 and 0 <= L0 < L");
  }
  if (spec.nz_physical < 1 || (spec.nz_layer < 1 && spec.L > spec.L0)) {
    throw MeshError("strip needs at least one z interval per part");
  }
  const double zr = std::log(spec.rho);
  const double zo = zr - spec.L0;
  const double zl = zr - spec.L;
  std::vector<double> z;
  const int nl = spec.nz_layer, np = spec.nz_physical;
  for (int k = 0; k < 2 * nl; ++k) z.push_back(zl + (zo - zl) * k / (2.0 * nl));
  for (int k = 0; k < 2 * np; ++k) z.push_back(zo + (zr - zo) * k / (2.0 * np));
  z.push_back(zr);
  z[0] = zl;
  z[static_cast<std::size_t>(2 * nl)] = zo;
  return z;
}

Mesh build_strip_mesh(const StripSpec& spec) {
  const auto& th = spec.grid.theta;
  if (th.size() < 5) throw MeshError("strip theta grid too short");
  const double half = 0.5 * spec.phi;
  if (std::find(th.begin(), th.end(), half) == th.end() ||
      std::find(th.begin(), th.end(), -half) == th.end()) {
    const int sug = compatible_theta_intervals(spec.phi, spec.grid.intervals());
    std::ostringstream msg;
    msg << "strip theta grid misses +-phi/2";
    if (sug > 0) msg << "; use M = " << sug;
    throw MeshError(msg.str());
  }
  const std::vector<double> z = strip_rows(spec);
  const int M = spec.grid.intervals();
  const int cols = 2 * M + 1;
  const int rows = static_cast<int>(z.size());
  Mesh mesh;
  std::vector<double> tcol;
  for (int j = 0; j < M; ++j) {
    tcol.push_back(th[static_cast<std::size_t>(j)]);
    tcol.push_back(0.5 * (th[static_cast<std::size_t>(j)] + th[static_cast<std::size_t>(j + 1)]));
  }
  tcol.push_back(th.back());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) mesh.nodes.push_back({z[static_cast<std::size_t>(r)], tcol[static_cast<std::size_t>(c)]});
  }
  auto id = [&](int r, int c) { return r * cols + c; };
  const int nz = (rows - 1) / 2;
  for (int i = 0; i < nz; ++i) {
    for (int j = 0; j < M; ++j) {
      const int r0 = 2 * i, c0 = 2 * j;
      const int A = id(r0, c0), B = id(r0 + 2, c0), C = id(r0 + 2, c0 + 2), D = id(r0, c0 + 2);
      const int AB = id(r0 + 1, c0), BC = id(r0 + 2, c0 + 1), CD = id(r0 + 1, c0 + 2), DA = id(r0, c0 + 1);
      const int ctr = id(r0 + 1, c0 + 1);
      const double tc = 0.5 * (th[static_cast<std::size_t>(j)] + th[static_cast<std::size_t>(j + 1)]);
      const Region reg = std::abs(tc) < half ? Region::metal : Region::dielectric;
      if (tc < 0.0) {
        mesh.tris.push_back({A, B, C, AB, BC, ctr});
        mesh.tris.push_back({A, C, D, ctr, CD, DA});
      } else {
        mesh.tris.push_back({A, B, D, AB, ctr, DA});
        mesh.tris.push_back({B, C, D, BC, CD, ctr});
      }
      mesh.region.push_back(reg);
      mesh.region.push_back(reg);
    }
  }
  for (int j = 0; j < M; ++j) {
    const int c0 = 2 * j;
    mesh.boundary.push_back({{id(0, c0), id(0, c0 + 2), id(0, c0 + 1)}, kTagStripEnd});
    const int rl = rows - 1;
    mesh.boundary.push_back({{id(rl, c0), id(rl, c0 + 2), id(rl, c0 + 1)}, kTagStripInterface});
  }
  for (int r = 0; r < rows; ++r) mesh.periodic.push_back({id(r, 0), id(r, cols - 1)});
  for (int c = 0; c + 1 < cols; ++c) mesh.interface_nodes.push_back(id(rows - 1, c));
  return mesh;
}

AuditReport audit_mesh(const Mesh& mesh, const std::vector<Vec2>* polygon, double min_angle_deg,
                       const std::vector<int>& exempt) {
  AuditReport rep;
  auto fail = [&](const std::string& what) {
    rep.ok = false;
    if (rep.problems.size() < 20) rep.problems.push_back(what);
  };
  if (mesh.region.size() != mesh.tris.size()) fail("region table size mismatch");
  std::vector<bool> is_exempt(mesh.nodes.size(), false);
  for (int e : exempt) {
    if (e >= 0 && static_cast<std::size_t>(e) < mesh.nodes.size()) is_exempt[static_cast<std::size_t>(e)] = true;
  }
  std::map<std::pair<int, int>, int> count;
  std::map<std::pair<int, int>, int> mids;
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
    const auto& v = mesh.tris[t];
    for (int k = 0; k < 6; ++k) {
      if (v[k] < 0 || static_cast<std::size_t>(v[k]) >= mesh.nodes.size()) {
        fail("triangle " + std::to_string(t) + " has an invalid node index");
        return rep;
      }
    }
    const Vec2 p[3] = {mesh.nodes[static_cast<std::size_t>(v[0])], mesh.nodes[static_cast<std::size_t>(v[1])],
                       mesh.nodes[static_cast<std::size_t>(v[2])]};
    if (!(orient(p[0], p[1], p[2]) > 0.0)) fail("triangle " + std::to_string(t) + " is not counterclockwise");
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = p[k], b = p[(k + 1) % 3];
      const Vec2 m = mesh.nodes[static_cast<std::size_t>(v[3 + k])];
      if (norm(m - 0.5 * (a + b)) > 1e-12 * (norm(b - a) + norm(a) + norm(b))) {
        fail("triangle " + std::to_string(t) + " has a misplaced midpoint");
      }
      const std::pair<int, int> key{std::min(v[k], v[(k + 1) % 3]), std::max(v[k], v[(k + 1) % 3])};
      ++count[key];
      const auto it = mids.find(key);
      if (it == mids.end()) {
        mids[key] = v[3 + k];
      } else if (it->second != v[3 + k]) {
        fail("edge midpoint not shared by neighbours of triangle " + std::to_string(t));
      }
      // Angle at vertex k.
      if (!is_exempt[static_cast<std::size_t>(v[k])]) {
        const Vec2 e1 = p[(k + 1) % 3] - p[k], e2 = p[(k + 2) % 3] - p[k];
        const double ang = std::atan2(std::abs(cross(e1, e2)), dot(e1, e2)) * 180.0 / kPi;
        rep.min_angle_deg = std::min(rep.min_angle_deg, ang);
      }
    }
    if (polygon && polygon->size() >= 3 && t < mesh.region.size()) {
      const Vec2 c = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
      const bool metal = mesh.region[t] == Region::metal;
      bool pure = point_in_polygon(c, *polygon) == metal;
      for (int k = 0; k < 3 && pure; ++k) {
        const Vec2 q = p[k] + 1e-6 * (c - p[k]);
        const Vec2 r = 0.5 * (p[k] + p[(k + 1) % 3]) + 1e-6 * (c - 0.5 * (p[k] + p[(k + 1) % 3]));
        pure = point_in_polygon(q, *polygon) == metal && point_in_polygon(r, *polygon) == metal;
      }
      if (!pure) fail("triangle " + std::to_string(t) + " straddles the material interface");
    }
  }
  std::map<std::pair<int, int>, int> tagged;
  for (const BoundaryEdge& e : mesh.boundary) {
    const std::pair<int, int> key{std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1])};
    ++tagged[key];
    const auto it = count.find(key);
    if (it == count.end() || it->second != 1) fail("tagged boundary edge is not a mesh boundary edge");
    if (e.tag <= 0) fail("boundary edge without a tag");
  }
  std::vector<bool> periodic(mesh.nodes.size(), false);
  for (auto [a, b] : mesh.periodic) {
    periodic[static_cast<std::size_t>(a)] = true;
    periodic[static_cast<std::size_t>(b)] = true;
  }
  for (const auto& [key, cnt] : count) {
    if (cnt > 2) fail("edge shared by more than two triangles");
    if (cnt == 1 && !tagged.count(key) &&
        !(periodic[static_cast<std::size_t>(key.first)] && periodic[static_cast<std::size_t>(key.second)])) {
      fail("untagged boundary edge");
    }
  }
  if (min_angle_deg > 0.0 && rep.min_angle_deg < min_angle_deg) {
    std::ostringstream msg;
    msg << "minimum angle " << rep.min_angle_deg << " below " << min_angle_deg;
    fail(msg.str());
  }
  return rep;
}

AuditReport audit_coupling(const Mesh& disk, const SceneGeometry& scene, const std::vector<Mesh>& strips) {
  AuditReport rep;
  auto fail = [&](const std::string& what) {
    rep.ok = false;
    if (rep.problems.size() < 20) rep.problems.push_back(what);
  };
  if (disk.hole_nodes.size() != scene.corners.size() || strips.size() != scene.corners.size()) {
    fail("corner count mismatch between disk, scene and strips");
    return rep;
  }
  for (std::size_t n = 0; n < strips.size(); ++n) {
    const std::string who = "corner " + std::to_string(n + 1);
    const CornerSpec& c = scene.corners[n].spec;
    const auto& hole = disk.hole_nodes[n];
    const Mesh& s = strips[n];
    if (hole.size() != s.interface_nodes.size()) {
      fail(who + ": interface node counts differ");
      continue;
    }
    for (std::size_t k = 0; k < hole.size(); ++k) {
      const auto [r, th] = c.local_polar(disk.nodes[static_cast<std::size_t>(hole[k])]);
      const Vec2 q = s.nodes[static_cast<std::size_t>(s.interface_nodes[k])];
      if (std::abs(wrap_angle(th - q.y)) > 1e-9) fail(who + ": theta mismatch at interface node " + std::to_string(k));
      if (k % 2 == 0 && std::abs(r - c.rho) > 1e-9 * c.rho) fail(who + ": hole vertex off the circle");
      if (std::abs(q.x - std::log(c.rho)) > 1e-12) fail(who + ": strip interface not at ln(rho)");
    }
    const double zmin = s.nodes.empty() ? 0.0 : s.nodes.front().x;
    std::size_t rows = 0;
    for (const Vec2& p : s.nodes) {
      if (p.x > std::log(c.rho) + 1e-12) fail(who + ": strip image leaves the hole");
      if (p.y == -kPi) ++rows;
    }
    (void)zmin;
    if (s.periodic.size() != rows) fail(who + ": periodic pairs incomplete");
    for (auto [a, b] : s.periodic) {
      const Vec2 pa = s.nodes[static_cast<std::size_t>(a)], pb = s.nodes[static_cast<std::size_t>(b)];
      if (pa.x != pb.x || pa.y != -kPi || pb.y != kPi) fail(who + ": periodic pair mismatch");
    }
  }
  return rep;
}

}  // namespace cpml
