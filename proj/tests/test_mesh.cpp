#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "cornerpml/error.hpp"
#include "cornerpml/mesh.hpp"
#include "cornerpml/mesh_io.hpp"
#include "cornerpml/presets.hpp"

using namespace cpml;

namespace {

constexpr double pi = std::numbers::pi;

SceneGeometry triangle_scene(double h, bool mirror) {
  SceneGeometry s;
  s.R = kPaperTriangleRadius;
  s.polygon = paper_triangle_polygon();
  s.h = h;
  s.h_int = h / 4.0;
  s.mirror = mirror;
  const auto cs = polygon_corners(s.polygon);
  for (int i = 0; i < 3; ++i) {
    SceneCorner c;
    c.spec = cs[static_cast<std::size_t>(i)];
    c.spec.rho = kPaperTriangleRho;
    c.vertex = i;
    const int M = std::max(16, static_cast<int>(std::ceil(2.0 * pi * c.spec.rho / s.h_int)));
    c.grid = default_theta_grid(c.spec.aperture, M);
    s.corners.push_back(c);
  }
  return s;
}

std::set<std::pair<int, int>> vertex_edges(const Mesh& m) {
  std::set<std::pair<int, int>> e;
  for (const auto& t : m.tris) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      e.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return e;
}

StripSpec strip_for(const SceneCorner& c) {
  StripSpec s;
  s.phi = c.spec.aperture;
  s.rho = c.spec.rho;
  s.L = 6.0;
  s.L0 = 2.0;
  s.grid = c.grid;
  s.nz_physical = 8;
  s.nz_layer = 16;
  return s;
}

}  // namespace

TEST(ThetaGrid, EquispacedHitsInterfaceLines) {
  const ThetaGrid g = equispaced_theta_grid(pi / 6.0, 24);
  ASSERT_EQ(g.intervals(), 24);
  EXPECT_EQ(g.theta.front(), -pi);
  EXPECT_EQ(g.theta.back(), pi);
  EXPECT_EQ(g.theta[11], -pi / 12.0);
  EXPECT_EQ(g.theta[13], pi / 12.0);
  for (std::size_t i = 0; i < g.theta.size(); ++i) {
    EXPECT_EQ(g.theta[i], -g.theta[g.theta.size() - 1 - i]);
    EXPECT_NEAR(g.theta[i], -pi + 2.0 * pi * static_cast<double>(i) / 24.0, 1e-14);
  }
}

TEST(ThetaGrid, IncompatibleCountSuggestsValue) {
  try {
    equispaced_theta_grid(5.0 * pi / 12.0, 30);
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("use M = 48"), std::string::npos) << e.what();
  }
  EXPECT_EQ(compatible_theta_intervals(pi / 6.0, 25), 48);
  EXPECT_EQ(compatible_theta_intervals(5.0 * pi / 12.0, 49), 96);
}

TEST(ThetaGrid, PiecewiseGridForIrrationalAperture) {
  const double phi = 1.0;
  EXPECT_EQ(compatible_theta_intervals(phi, 32), 0);
  const ThetaGrid g = default_theta_grid(phi, 32);
  EXPECT_NE(std::find(g.theta.begin(), g.theta.end(), 0.5), g.theta.end());
  EXPECT_NE(std::find(g.theta.begin(), g.theta.end(), -0.5), g.theta.end());
  EXPECT_EQ(g.theta.front(), -pi);
  EXPECT_EQ(g.theta.back(), pi);
  for (std::size_t i = 1; i < g.theta.size(); ++i) {
    EXPECT_GT(g.theta[i], g.theta[i - 1]);
    EXPECT_LT(g.theta[i] - g.theta[i - 1], 2.0 * (2.0 * pi / 32.0));
  }
  for (std::size_t i = 0; i < g.theta.size(); ++i) {
    EXPECT_EQ(g.theta[i], -g.theta[g.theta.size() - 1 - i]);
  }
}

TEST(Scene, PolygonCornersOfPaperTriangle) {
  const auto c = polygon_corners(paper_triangle_polygon());
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0].aperture, 5.0 * pi / 12.0, 1e-12);
  EXPECT_NEAR(c[1].aperture, 5.0 * pi / 12.0, 1e-12);
  EXPECT_NEAR(c[2].aperture, pi / 6.0, 1e-12);
  EXPECT_NEAR(c[2].bisector, -pi / 2.0, 1e-12);
  EXPECT_NEAR(c[0].bisector, 5.0 * pi / 24.0, 1e-12);
  EXPECT_NEAR(c[1].bisector, pi - 5.0 * pi / 24.0, 1e-12);
}

TEST(Scene, ValidationRejectsBadHoles) {
  SceneGeometry s = triangle_scene(0.02, false);
  EXPECT_NO_THROW(s.validate());
  SceneGeometry big = s;
  for (auto& c : big.corners) c.spec.rho = 0.06;
  EXPECT_THROW(big.validate(), MeshError);
  SceneGeometry outside = s;
  outside.R = 0.13;
  EXPECT_THROW(outside.validate(), MeshError);
  SceneGeometry nogrid = s;
  nogrid.corners[0].grid = equispaced_theta_grid(pi / 6.0, 24);
  EXPECT_THROW(nogrid.validate(), MeshError);
  EXPECT_TRUE(s.is_mirror_symmetric());
}

TEST(DiskMesh, PlainDiskTopology) {
  SceneGeometry s;
  s.R = 1.0;
  s.h = 1.0 / 8.0;
  s.h_int = s.h;
  MeshStats st;
  const Mesh m = build_disk_mesh(s, &st);
  for (Region r : m.region) EXPECT_EQ(r, Region::dielectric);
  const long V = static_cast<long>(m.num_vertices());
  const long E = static_cast<long>(vertex_edges(m).size());
  const long F = static_cast<long>(m.tris.size());
  EXPECT_EQ(V - E + F, 1);
  for (const BoundaryEdge& e : m.boundary) EXPECT_EQ(e.tag, kTagOuter);
  EXPECT_GE(m.boundary.size(), 64u);
  const AuditReport rep = audit_mesh(m, nullptr, 20.0);
  EXPECT_TRUE(rep.ok) << (rep.problems.empty() ? "" : rep.problems.front());
  EXPECT_EQ(m.nodes.size(), static_cast<std::size_t>(V + E));
}

TEST(DiskMesh, PaperTriangleWithHoles) {
  for (bool mirror : {false, true}) {
    const SceneGeometry s = triangle_scene(0.0105, mirror);
    MeshStats st;
    const Mesh m = build_disk_mesh(s, &st);
    std::map<int, int> tags;
    for (const BoundaryEdge& e : m.boundary) ++tags[e.tag];
    EXPECT_GT(tags[kTagOuter], 0);
    for (int n = 0; n < 3; ++n) {
      EXPECT_EQ(tags[kTagHoleBase + n], s.corners[static_cast<std::size_t>(n)].grid.intervals());
    }
    EXPECT_EQ(tags.size(), 4u);
    const AuditReport rep = audit_mesh(m, &s.polygon, 20.0);
    EXPECT_TRUE(rep.ok) << (rep.problems.empty() ? "" : rep.problems.front());
    EXPECT_GE(st.min_angle_deg, 20.0);

    // Constraint oracle: the mesh edges lying on each trimmed polygon edge
    // cover it completely.
    const auto edges = vertex_edges(m);
    for (std::size_t i = 0; i < 3; ++i) {
      const Vec2 a0 = s.polygon[i], b0 = s.polygon[(i + 1) % 3];
      const Vec2 u = (1.0 / norm(b0 - a0)) * (b0 - a0);
      const double len = norm(b0 - a0) - 2.0 * kPaperTriangleRho;
      double covered = 0.0;
      for (auto [p, q] : edges) {
        const Vec2 P = m.nodes[static_cast<std::size_t>(p)], Q = m.nodes[static_cast<std::size_t>(q)];
        if (std::abs(cross(u, P - a0)) < 1e-12 && std::abs(cross(u, Q - a0)) < 1e-12) covered += norm(Q - P);
      }
      EXPECT_NEAR(covered, len, 1e-12);
    }
    bool has_metal = false, has_dielectric = false;
    for (Region r : m.region) (r == Region::metal ? has_metal : has_dielectric) = true;
    EXPECT_TRUE(has_metal && has_dielectric);
  }
}

TEST(DiskMesh, MirrorModeIsExactlySymmetric) {
  const Mesh m = build_disk_mesh(triangle_scene(0.0105, true));
  std::set<std::pair<double, double>> pts;
  for (const Vec2& p : m.nodes) pts.insert({p.x, p.y});
  for (const Vec2& p : m.nodes) EXPECT_TRUE(pts.count({-p.x, p.y})) << p.x << " " << p.y;
}

TEST(DiskMesh, HoleNodesOrderedByTheta) {
  const SceneGeometry s = triangle_scene(0.0105, false);
  const Mesh m = build_disk_mesh(s);
  ASSERT_EQ(m.hole_nodes.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) {
    const auto& grid = s.corners[n].grid.theta;
    const auto& h = m.hole_nodes[n];
    ASSERT_EQ(h.size(), 2 * (grid.size() - 1));
    for (std::size_t k = 0; k < h.size(); k += 2) {
      const auto [r, th] = s.corners[n].spec.local_polar(m.nodes[static_cast<std::size_t>(h[k])]);
      EXPECT_NEAR(r, kPaperTriangleRho, 1e-15);
      EXPECT_NEAR(std::abs(wrap_angle(th - grid[k / 2])), 0.0, 1e-12);
    }
  }
}

TEST(StripMesh, CountsPeriodicAndRegions) {
  const SceneGeometry s = triangle_scene(0.0105, false);
  const StripSpec spec = strip_for(s.corners[2]);
  const Mesh m = build_strip_mesh(spec);
  const std::size_t M = static_cast<std::size_t>(spec.grid.intervals());
  const std::size_t Nz = static_cast<std::size_t>(spec.nz_physical + spec.nz_layer);
  EXPECT_EQ(m.num_vertices(), (Nz + 1) * (M + 1));
  EXPECT_EQ(m.nodes.size(), (2 * Nz + 1) * (2 * M + 1));
  EXPECT_EQ(m.tris.size(), 2 * Nz * M);
  EXPECT_EQ(m.periodic.size(), 2 * Nz + 1);
  EXPECT_EQ(m.interface_nodes.size(), 2 * M);
  const auto rows = strip_rows(spec);
  EXPECT_EQ(rows.front(), std::log(spec.rho) - spec.L);
  EXPECT_EQ(rows.back(), std::log(spec.rho));
  EXPECT_EQ(rows[2 * static_cast<std::size_t>(spec.nz_layer)], std::log(spec.rho) - spec.L0);
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    const auto& v = m.tris[t];
    const double tc = (m.nodes[static_cast<std::size_t>(v[0])].y + m.nodes[static_cast<std::size_t>(v[1])].y +
                       m.nodes[static_cast<std::size_t>(v[2])].y) / 3.0;
    EXPECT_EQ(m.region[t] == Region::metal, std::abs(tc) < spec.phi / 2.0);
  }
  const AuditReport rep = audit_mesh(m, nullptr, 0.0);
  EXPECT_TRUE(rep.ok) << (rep.problems.empty() ? "" : rep.problems.front());
}

TEST(StripMesh, MirroredDiagonals) {
  const SceneGeometry s = triangle_scene(0.0105, false);
  const Mesh m = build_strip_mesh(strip_for(s.corners[0]));
  std::set<std::pair<double, double>> pts;
  for (const Vec2& p : m.nodes) pts.insert({p.x, p.y});
  for (const auto& e : vertex_edges(m)) {
    const Vec2 a = m.nodes[static_cast<std::size_t>(e.first)], b = m.nodes[static_cast<std::size_t>(e.second)];
    EXPECT_TRUE(pts.count({a.x, -a.y}) && pts.count({b.x, -b.y}));
  }
  // Every edge has its mirror image.
  std::set<std::array<double, 4>> lines;
  for (const auto& e : vertex_edges(m)) {
    Vec2 a = m.nodes[static_cast<std::size_t>(e.first)], b = m.nodes[static_cast<std::size_t>(e.second)];
    if (std::tie(a.x, a.y) > std::tie(b.x, b.y)) std::swap(a, b);
    lines.insert({a.x, a.y, b.x, b.y});
  }
  for (const auto& l : lines) {
    Vec2 a{l[0], -l[1]}, b{l[2], -l[3]};
    if (std::tie(a.x, a.y) > std::tie(b.x, b.y)) std::swap(a, b);
    EXPECT_TRUE(lines.count({a.x, a.y, b.x, b.y}));
  }
}

TEST(StripMesh, IncompatibleGridSuggestsValue) {
  StripSpec spec;
  spec.phi = pi / 6.0;
  spec.rho = 0.02;
  spec.L = 4.0;
  spec.L0 = 1.0;
  spec.nz_physical = 2;
  spec.nz_layer = 4;
  ThetaGrid g;
  for (int j = 0; j <= 20; ++j) g.theta.push_back(-pi + 2.0 * pi * j / 20.0);
  g.theta.back() = pi;
  spec.grid = g;
  try {
    build_strip_mesh(spec);
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("use M = 24"), std::string::npos) << e.what();
  }
}

TEST(Coupling, InterfaceBijectionAndImageInsideHole) {
  const SceneGeometry s = triangle_scene(0.0105, true);
  const Mesh disk = build_disk_mesh(s);
  std::vector<Mesh> strips;
  for (const SceneCorner& c : s.corners) strips.push_back(build_strip_mesh(strip_for(c)));
  const AuditReport rep = audit_coupling(disk, s, strips);
  EXPECT_TRUE(rep.ok) << (rep.problems.empty() ? "" : rep.problems.front());
  for (std::size_t n = 0; n < 3; ++n) {
    const CornerSpec& c = s.corners[n].spec;
    for (const Vec2& q : strips[n].nodes) {
      const Vec2 p = c.from_local(std::exp(q.x), q.y);
      EXPECT_LE(norm(p - c.position), c.rho * (1.0 + 1e-12));
    }
  }
  strips[1].periodic.pop_back();
  EXPECT_FALSE(audit_coupling(disk, s, strips).ok);
}

TEST(Audit, DetectsBrokenMidpoint) {
  SceneGeometry s;
  s.R = 1.0;
  s.h = 0.25;
  s.h_int = s.h;
  Mesh m = build_disk_mesh(s);
  m.nodes[static_cast<std::size_t>(m.tris[0][3])].x += 1e-3;
  EXPECT_FALSE(audit_mesh(m, nullptr, 0.0).ok);
}

TEST(MeshIo, TwoTriangleFixture) {
  const Mesh m = import_msh(std::string(CPML_TEST_DATA) + "/two_triangles.msh");
  ASSERT_EQ(m.tris.size(), 2u);
  EXPECT_EQ(m.num_vertices(), 4u);
  EXPECT_EQ(m.nodes.size(), 9u);
  EXPECT_EQ((std::array<int, 3>{m.tris[0][0], m.tris[0][1], m.tris[0][2]}), (std::array<int, 3>{0, 1, 2}));
  // Second triangle was clockwise in the file and is reoriented.
  EXPECT_EQ((std::array<int, 3>{m.tris[1][0], m.tris[1][1], m.tris[1][2]}), (std::array<int, 3>{0, 2, 3}));
  EXPECT_EQ(m.tris[0][5], m.tris[1][3]);  // shared diagonal midpoint
  EXPECT_EQ(m.region[0], Region::dielectric);
  EXPECT_EQ(m.region[1], Region::metal);
  EXPECT_EQ(m.boundary.size(), 4u);
  EXPECT_EQ(m.nodes[static_cast<std::size_t>(m.tris[0][5])].x, 0.5);
  EXPECT_EQ(m.nodes[static_cast<std::size_t>(m.tris[0][5])].y, 0.5);
}

TEST(MeshIo, RoundTripIsBitExact) {
  const Mesh m = build_disk_mesh(triangle_scene(0.02, false));
  const Mesh back = parse_msh(format_msh(m));
  ASSERT_EQ(back.tris.size(), m.tris.size());
  std::set<std::pair<double, double>> a, b;
  for (const auto& t : m.tris) {
    for (int k = 0; k < 3; ++k) a.insert({m.nodes[static_cast<std::size_t>(t[k])].x, m.nodes[static_cast<std::size_t>(t[k])].y});
  }
  for (const auto& t : back.tris) {
    for (int k = 0; k < 3; ++k) b.insert({back.nodes[static_cast<std::size_t>(t[k])].x, back.nodes[static_cast<std::size_t>(t[k])].y});
  }
  EXPECT_EQ(a, b);
  for (std::size_t t = 0; t < m.tris.size(); ++t) EXPECT_EQ(m.region[t], back.region[t]);
}

TEST(MeshIo, StraddlingElementRejected) {
  // Triangle tagged metal that pokes out of the unit-square inclusion.
  const std::string text =
      "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0.2 0.2 0\n2 1.5 0.2 0\n3 0.2 0.8 0\n$EndNodes\n"
      "$Elements\n4\n1 1 2 1 1 1 2\n2 1 2 1 1 2 3\n3 1 2 1 1 3 1\n4 2 2 101 101 1 2 3\n$EndElements\n";
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_NO_THROW(parse_msh(text));
  EXPECT_THROW(parse_msh(text, &square), MeshError);
}

TEST(MeshIo, ErrorsCarryLineNumbers) {
  const std::string bad_type =
      "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n"
      "$Elements\n1\n1 3 2 100 100 1 2 3 1\n$EndElements\n";
  try {
    parse_msh(bad_type);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 12);
    EXPECT_NE(std::string(e.what()).find("unsupported element type 3"), std::string::npos);
  }
  const std::string bad_node = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n2\n1 0 0 0\n2 x 0 0\n$EndNodes\n";
  try {
    parse_msh(bad_node);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7);
  }
}

TEST(MeshIo, VtkHasQuadraticCellsAndField) {
  const Mesh m = parse_msh(format_msh(build_disk_mesh(triangle_scene(0.03, false))));
  std::vector<std::complex<double>> u(m.nodes.size(), {1.0, -2.0});
  const auto path = std::filesystem::temp_directory_path() / "cpml_test_mesh.vtk";
  export_vtk(m, path.string(), u);
  std::ifstream f(path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("CELL_TYPES " + std::to_string(m.tris.size())), std::string::npos);
  EXPECT_NE(text.find("\n22\n"), std::string::npos);
  EXPECT_NE(text.find("SCALARS u_imag double 1"), std::string::npos);
  std::filesystem::remove(path);
}
