#pragma once

// Run orchestration: scene construction from a run configuration, repeated
// solves sharing one factorization, and energy reports.

#include <optional>
#include <string>
#include <vector>

#include "cornerpml/assembly.hpp"
#include "cornerpml/postprocess.hpp"

namespace cpml {

struct GeometryConfig {
  double R = 0.0;
  /// Counterclockwise inclusion polygon (metal inside).
  std::vector<Vec2> polygon;
  /// Polygon vertices that receive a corner hole when their contrast is
  /// critical, in report order. Empty selects all vertices.
  std::vector<int> corner_vertices;
  std::vector<std::string> corner_labels;
  /// Hole radius per entry of corner_vertices (one value applies to all).
  std::vector<double> rho;
  /// Name of the preset the block was filled from, if any.
  std::string preset;
};

struct DiscretizationConfig {
  double h = 0.0;
  /// Interface size; 0 selects h / 4.
  double h_int = 0.0;
  /// Theta intervals per strip; 0 selects max(16, ceil(2 pi rho / h_int)).
  int theta_intervals = 0;
  /// z spacing in the unstretched strip; 0 selects 2 pi / M (unit aspect).
  double dz = 0.0;
  /// Points per outgoing wavelength 2 pi / eta in the layer.
  double layer_points_per_wavelength = 16.0;
  int n_fourier = 0;
  double grading = 0.3;
  /// Mirror meshing; unset selects it for symmetric scenes.
  std::optional<bool> mirror;
};

struct PmlConfig {
  bool enabled = true;
  /// Stretch angle per corner; unset entries use the clipped midpoint rule.
  std::vector<std::optional<double>> theta;
  double clip = 0.39269908169872414;  // pi / 8
  StripTolerances tol;
};

struct RunConfig {
  GeometryConfig geometry;
  MaterialConfig material;
  DiscretizationConfig discretization;
  PmlConfig pml;
  std::vector<double> alpha_inc;
  BoundaryMode boundary = BoundaryMode::dtn;
  /// Uniform refinement count: h, h_int and dz halve and M doubles per step.
  int refine = 0;
  /// Also compute the dual coefficients.
  bool dual = false;
  std::string output_dir = "out";
};

/// Per-corner data fixed before assembly.
struct CornerInfo {
  std::string label;
  int vertex = 0;
  CornerSpec spec;
  CornerMode mode;
  std::vector<cplx> roots;
  ThetaInterval interval;
  bool theta_auto = true;
  PmlSpec pml;
  StripSpec strip;
};

struct Scene {
  RunConfig config;
  SceneGeometry geometry;
  Problem problem;
  std::vector<CornerInfo> corners;
  MeshStats stats;
  /// Nonfatal diagnostics recorded in the report.
  std::vector<std::string> warnings;
  /// Contrast lies in the critical interval of some polygon corner.
  bool critical = false;
};

/// Paper-triangle preset: R = 0.3, rho = 0.02 at every corner (top, left,
/// right), vacuum around a lossless Drude metal with omega_p = 13.3 at the
/// given omega, h = 0.0105.
RunConfig paper_triangle_config(double omega);

/// Throws ConfigError for contrast -1 or an inadmissible stretch angle.
Scene build_scene(const RunConfig& config);

struct RunResult {
  double alpha_inc = 0.0;
  VectorC x;
  double residual = 0.0;
  EnergyReport energy;
};

/// Assembles and factors once; solve() can then be called per incidence.
class Runner {
 public:
  explicit Runner(const Scene& scene);

  RunResult solve(double alpha_inc, bool dual = false);

  const LinearSystem& system() const { return sys_; }
  const Solver& solver() const { return solver_; }
  const Scene& scene() const { return *scene_; }
  /// Dual solution of corner n, computed on first use and shared by all
  /// incidences.
  const VectorC& dual_solution(std::size_t n);

 private:
  const Scene* scene_;
  LinearSystem sys_;
  Solver solver_;
  std::vector<std::optional<VectorC>> dual_;
};

/// Sample points of a uniform Cartesian grid covering the disk of radius R.
std::vector<Vec2> disk_grid(double R, int n);

/// Points on the interface polygon away from the corner holes.
std::vector<Vec2> interface_samples(const Scene& scene, int per_edge);

/// sqrt(sum |a - b|^2 / sum |b|^2) over points where both are physical.
double relative_difference(const std::vector<FieldSample>& a, const std::vector<FieldSample>& b);

/// Run report: configuration with resolved defaults, mesh statistics,
/// corner data and per-incidence energies.
nlohmann::json scene_json(const Scene& scene, std::size_t dofs);
nlohmann::json result_json(const RunResult& r);

}  // namespace cpml
