#pragma once

// Split-domain meshes: the perforated disk (conforming to the interface) and
// one structured periodic strip per corner in (z, theta) = (ln r, theta).

#include <array>
#include <string>
#include <vector>

#include "cornerpml/corner_modes.hpp"
#include "cornerpml/geometry.hpp"

namespace cpml {

enum class Region : int { dielectric = 0, metal = 1 };

/// Boundary tags. Holes use kTagHoleBase + corner index.
inline constexpr int kTagOuter = 1;
inline constexpr int kTagStripEnd = 2;
inline constexpr int kTagStripInterface = 3;
inline constexpr int kTagHoleBase = 10;

struct BoundaryEdge {
  /// End vertices and the P2 midpoint.
  std::array<int, 3> nodes{};
  int tag = 0;
};

/// P2 triangulation. Triangle node order: v0 v1 v2, m01 m12 m20, with the
/// vertices counterclockwise.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 6>> tris;
  std::vector<Region> region;
  std::vector<BoundaryEdge> boundary;
  /// Strip meshes: (theta = -pi node, theta = pi node).
  std::vector<std::pair<int, int>> periodic;
  /// Disk meshes: per corner, the 2M hole nodes ordered by local theta
  /// starting at -pi (vertices at even positions, chord midpoints at odd).
  std::vector<std::vector<int>> hole_nodes;
  /// Strip meshes: the 2M right-end nodes ordered like hole_nodes.
  std::vector<int> interface_nodes;

  std::size_t num_vertices() const;
};

/// Piecewise-uniform theta grid with exact lines at -pi, -phi/2, phi/2, pi.
struct ThetaGrid {
  std::vector<double> theta;  // M + 1 values from -pi to pi

  int intervals() const { return static_cast<int>(theta.size()) - 1; }
};

/// Equispaced grid of M intervals; throws MeshError with a suggested M when
/// +-phi/2 are not grid lines.
ThetaGrid equispaced_theta_grid(double phi, int M);
/// Piecewise-uniform grid with about M intervals: n_m in the metal sector and
/// n_d on each dielectric side, chosen so both spacings are close to 2pi/M.
ThetaGrid piecewise_theta_grid(double phi, int M);
/// Smallest M' >= M (up to 4M) compatible with phi, or 0 when none exists.
int compatible_theta_intervals(double phi, int M);
/// Equispaced grid with the smallest compatible M' >= M when one exists
/// within a factor four, otherwise the piecewise-uniform grid.
ThetaGrid default_theta_grid(double phi, int M);

struct SceneCorner {
  CornerSpec spec;
  /// Index of the vertex in the inclusion polygon.
  int vertex = 0;
  ThetaGrid grid;
};

struct SceneGeometry {
  double R = 0.0;
  /// Counterclockwise inclusion polygon (metal inside).
  std::vector<Vec2> polygon;
  /// Corners with a hole and a strip. Other polygon vertices stay meshed.
  std::vector<SceneCorner> corners;
  /// Target size away from the interface.
  double h = 0.0;
  /// Target size on the interface.
  double h_int = 0.0;
  /// Number of straight segments on the outer circle.
  int outer_segments = 0;
  /// Mesh-size growth rate away from the interface and the holes.
  double grading = 0.3;
  /// Generate one half and mirror it across x = 0 (scene must be symmetric).
  bool mirror = false;

  /// Throws MeshError when holes overlap, leave the disk, or cut edges other
  /// than the two adjacent to their corner.
  void validate() const;
  bool is_mirror_symmetric(double tol = 1e-12) const;
};

/// Outer-circle segment count for target size h at wavenumber k: at least
/// 2 pi R / h, and enough that the chord sagitta error decays like h^3.
int boundary_segments_for(double R, double h, double k);

/// Corner data (position, aperture, metal bisector) for every polygon vertex.
std::vector<CornerSpec> polygon_corners(const std::vector<Vec2>& polygon);

struct MeshStats {
  double min_angle_deg = 0.0;
  std::size_t skipped_refinements = 0;
};

/// Perforated disk (or the full disk when scene.corners is empty).
Mesh build_disk_mesh(const SceneGeometry& scene, MeshStats* stats = nullptr);

struct StripSpec {
  double phi = 0.0;
  double rho = 0.0;
  double L = 0.0;
  /// PML onset distance from ln(rho); a z grid line.
  double L0 = 0.0;
  ThetaGrid grid;
  /// z intervals in the physical part and in the layer.
  int nz_physical = 0;
  int nz_layer = 0;
};

/// Structured P2 strip on (ln rho - L, ln rho) x (-pi, pi). Node positions are
/// (z, theta); region metal for |theta| < phi/2.
Mesh build_strip_mesh(const StripSpec& spec);

/// Number of z grid rows (vertices) and the z value of each P2 row.
std::vector<double> strip_rows(const StripSpec& spec);

struct AuditReport {
  bool ok = true;
  std::vector<std::string> problems;
  double min_angle_deg = 180.0;
};

/// Conformity (every interior edge shared by exactly two triangles, boundary
/// edges tagged), region purity against the polygon, orientation, P2
/// midpoints, and minimum angle (ignoring angles at `exempt` vertices).
AuditReport audit_mesh(const Mesh& mesh, const std::vector<Vec2>* polygon, double min_angle_deg,
                       const std::vector<int>& exempt = {});

/// Checks that hole n of the disk and strip n share theta values node by node,
/// and that strip periodic pairs are complete.
AuditReport audit_coupling(const Mesh& disk, const SceneGeometry& scene,
                           const std::vector<Mesh>& strips);

}  // namespace cpml
