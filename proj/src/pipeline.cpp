#include "cornerpml/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cornerpml/error.hpp"
#include "cornerpml/presets.hpp"

namespace cpml {
namespace {

constexpr double kPi = std::numbers::pi;

nlohmann::json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

double rho_for(const GeometryConfig& g, std::size_t n) {
  if (g.rho.empty()) throw ConfigError("geometry: rho is required for corner holes");
  if (g.rho.size() == 1) return g.rho[0];
  if (n >= g.rho.size()) throw ConfigError("geometry: one rho per corner (or a single value) is required");
  return g.rho[n];
}

}  // namespace

RunConfig paper_triangle_config(double omega) {
  RunConfig c;
  c.geometry.preset = "paper-triangle";
  c.geometry.R = kPaperTriangleRadius;
  c.geometry.polygon = paper_triangle_polygon();
  c.geometry.corner_vertices = {2, 0, 1};
  c.geometry.corner_labels = {"top", "left", "right"};
  c.geometry.rho = {kPaperTriangleRho};
  c.material.eps_d = 1.0;
  c.material.drude = DrudeParams{13.3, 0.0};
  c.material.omega = omega;
  c.discretization.h = 0.0105;
  return c;
}

Scene build_scene(const RunConfig& config) {
  Scene sc;
  sc.config = config;
  const GeometryConfig& g = config.geometry;
  const DiscretizationConfig& d = config.discretization;
  if (!(g.R > 0.0)) throw ConfigError("geometry: R must be positive");
  if (!(d.h > 0.0)) throw ConfigError("discretization: h must be positive");
  if (config.refine < 0) throw ConfigError("refine must be non-negative");
  config.material.validate();

  const double scale = std::ldexp(1.0, -config.refine);
  const double h = d.h * scale;
  const double h_int = (d.h_int > 0.0 ? d.h_int : 0.25 * d.h) * scale;
  const cplx kappa = config.material.contrast();
  if (std::abs(kappa + 1.0) < 1e-12) {
    throw ConfigError("contrast -1 makes the problem ill-posed; refusing to solve");
  }
  const double kr = kappa.real();
  if (kappa.imag() != 0.0) {
    sc.warnings.push_back("lossy metal: corner modes use the real part of the contrast");
  }
  const double k0 = config.material.k0();
  const double eps_d = config.material.eps_d;

  SceneGeometry& geo = sc.geometry;
  geo.R = g.R;
  geo.polygon = g.polygon;
  geo.h = h;
  geo.h_int = h_int;
  geo.grading = d.grading;
  geo.outer_segments = boundary_segments_for(g.R, h, config.material.k());

  std::vector<int> vertices = g.corner_vertices;
  if (vertices.empty() && !g.polygon.empty()) {
    for (int i = 0; i < static_cast<int>(g.polygon.size()); ++i) vertices.push_back(i);
  }
  const std::vector<CornerSpec> all = g.polygon.empty() ? std::vector<CornerSpec>{} : polygon_corners(g.polygon);
  for (const CornerSpec& c : all) {
    if (critical_interval({c.aperture}).contains_open(kr)) sc.critical = true;
  }
  if (sc.critical && !config.pml.enabled) {
    sc.warnings.push_back(
        "contrast lies in the critical interval and corner PMLs are disabled: the discrete solution is not "
        "expected to converge under refinement");
  }

  for (std::size_t n = 0; n < vertices.size(); ++n) {
    const int v = vertices[n];
    if (v < 0 || static_cast<std::size_t>(v) >= all.size()) throw ConfigError("geometry: corner vertex out of range");
    CornerSpec spec = all[static_cast<std::size_t>(v)];
    if (!config.pml.enabled || !critical_interval({spec.aperture}).contains_open(kr)) continue;
    spec.rho = rho_for(g, n);
    CornerInfo ci;
    ci.label = n < g.corner_labels.size() ? g.corner_labels[n] : "corner" + std::to_string(n + 1);
    ci.vertex = v;
    ci.spec = spec;
    ci.mode = corner_mode(spec.aperture, kr, eps_d);
    for (const Exponent& e : singular_exponents(spec.aperture, kr).roots) ci.roots.push_back(e.lambda);
    ci.interval = admissible_theta(ci.roots, ci.mode.lambda_out);
    const std::optional<double> fixed = n < config.pml.theta.size() ? config.pml.theta[n] : std::nullopt;
    ci.theta_auto = !fixed.has_value();
    const double theta = fixed ? *fixed : default_theta(ci.interval, config.pml.clip);
    if (!stretch_is_admissible(theta, ci.roots, ci.mode.lambda_out)) {
      std::ostringstream msg;
      msg << "pml: corner " << ci.label << " stretch angle " << theta << " is not admissible; admissible interval ("
          << ci.interval.lo << ", " << ci.interval.hi << ")";
      throw ConfigError(msg.str());
    }
    const StripGeometry sg = default_strip_geometry(k0, spec.rho, ci.mode.eta, theta, config.pml.tol);

    const int M0 = d.theta_intervals > 0
                       ? d.theta_intervals
                       : std::max(16, static_cast<int>(std::ceil(2.0 * kPi * spec.rho / (d.h_int > 0.0 ? d.h_int : 0.25 * d.h))));
    const int M = M0 << config.refine;
    ThetaGrid grid = default_theta_grid(spec.aperture, M);
    const double dz = (d.dz > 0.0 ? d.dz : 2.0 * kPi / M0) * scale;
    const double dz_layer =
        std::max(dz, 2.0 * kPi / (ci.mode.eta * d.layer_points_per_wavelength) * scale);

    StripSpec& st = ci.strip;
    st.phi = spec.aperture;
    st.rho = spec.rho;
    st.nz_physical = std::max(1, static_cast<int>(std::ceil(sg.L0 / dz)));
    st.nz_layer = std::max(1, static_cast<int>(std::ceil((sg.L - sg.L0) / dz_layer)));
    st.L0 = sg.L0;
    st.L = sg.L;
    st.grid = grid;

    ci.pml.rho = spec.rho;
    ci.pml.L = sg.L;
    ci.pml.L0 = sg.L0;
    ci.pml.theta = theta;

    SceneCorner scn;
    scn.spec = spec;
    scn.vertex = v;
    scn.grid = std::move(grid);
    geo.corners.push_back(std::move(scn));
    sc.corners.push_back(std::move(ci));
  }
  geo.mirror = d.mirror.value_or(geo.is_mirror_symmetric());
  geo.validate();

  Problem& pb = sc.problem;
  pb.R = g.R;
  pb.material = config.material;
  pb.boundary = config.boundary;
  pb.n_fourier = d.n_fourier;
  pb.disk = build_disk_mesh(geo, &sc.stats);
  for (const CornerInfo& ci : sc.corners) {
    pb.strips.push_back(build_strip_mesh(ci.strip));
    pb.corners.push_back({ci.spec, ci.pml, ci.mode.lambda_out, ci.roots});
  }
  const AuditReport audit = audit_coupling(pb.disk, geo, pb.strips);
  if (!audit.ok) throw MeshError("coupling audit failed: " + audit.problems.front());
  return sc;
}

Runner::Runner(const Scene& scene)
    : scene_(&scene), sys_(assemble(scene.problem)), solver_(sys_.A), dual_(scene.corners.size()) {}

const VectorC& Runner::dual_solution(std::size_t n) {
  if (n >= dual_.size()) throw ConfigError("corner index out of range");
  if (!dual_[n]) {
    const CornerInfo& ci = scene_->corners[n];
    const VectorC G = assemble_dual_source(scene_->problem, sys_, n, -ci.mode.lambda_out, ci.mode.mode,
                                           default_cutoff(ci.spec.rho));
    dual_[n] = solver_.solve(G);
  }
  return *dual_[n];
}

RunResult Runner::solve(double alpha_inc, bool dual) {
  const Problem& pb = scene_->problem;
  RunResult r;
  r.alpha_inc = alpha_inc;
  const VectorC rhs = assemble_rhs(pb, sys_, alpha_inc);
  r.x = solver_.solve(rhs, &r.residual);
  const double J_ext = exterior_flux(pb, sys_, r.x, alpha_inc);
  std::vector<CornerReport> corners;
  for (std::size_t n = 0; n < scene_->corners.size(); ++n) {
    const CornerInfo& ci = scene_->corners[n];
    CornerReport c;
    c.b = extract_coefficient_overlap(pb, sys_, r.x, n, ci.mode, default_overlap_depth(ci.pml));
    if (dual) c.b_dual = dual_coefficient(dual_solution(n), rhs, ci.mode);
    c.eta = ci.mode.eta;
    c.flux_integral = ci.mode.flux_integral;
    c.J = corner_flux(c.b, c.eta, c.flux_integral);
    corners.push_back(c);
  }
  r.energy = make_energy_report(J_ext, std::move(corners), energy_floor(pb.material.k0(), pb.R));
  return r;
}

std::vector<Vec2> disk_grid(double R, int n) {
  std::vector<Vec2> pts;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 p{-R + 2.0 * R * (i + 0.5) / n, -R + 2.0 * R * (j + 0.5) / n};
      if (norm(p) < R) pts.push_back(p);
    }
  }
  return pts;
}

std::vector<Vec2> interface_samples(const Scene& scene, int per_edge) {
  const auto& poly = scene.geometry.polygon;
  const GeometryConfig& g = scene.config.geometry;
  double guard = 0.0;
  for (double r : g.rho) guard = std::max(guard, r);
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    for (int j = 0; j < per_edge; ++j) {
      const Vec2 p = a + ((j + 0.5) / per_edge) * (b - a);
      if (norm(p - a) > 1.5 * guard && norm(p - b) > 1.5 * guard) pts.push_back(p);
    }
  }
  return pts;
}

double relative_difference(const std::vector<FieldSample>& a, const std::vector<FieldSample>& b) {
  if (a.size() != b.size()) throw ConfigError("sample sets differ in size");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].mask != SampleMask::physical || b[i].mask != SampleMask::physical) continue;
    num += std::norm(a[i].value - b[i].value);
    den += std::norm(b[i].value);
  }
  if (den == 0.0) throw NumericalError("no common physical samples");
  return std::sqrt(num / den);
}

nlohmann::json scene_json(const Scene& sc, std::size_t dofs) {
  using nlohmann::json;
  const RunConfig& c = sc.config;
  const MaterialConfig& m = c.material;
  json poly = json::array();
  for (const Vec2& p : c.geometry.polygon) poly.push_back({p.x, p.y});
  json material{{"eps_d", m.eps_d}, {"mu_d", m.mu_d}, {"mu_m", m.mu_m}, {"c", m.c}, {"omega", m.omega},
                {"k0", m.k0()}, {"eps_m", complex_json(m.metal_permittivity())}, {"contrast", complex_json(m.contrast())}};
  if (m.drude) material["drude"] = {{"omega_p", m.drude->omega_p}, {"gamma", m.drude->gamma}};
  json corners = json::array();
  for (const CornerInfo& ci : sc.corners) {
    corners.push_back({{"label", ci.label},
                       {"vertex", ci.vertex},
                       {"position", {ci.spec.position.x, ci.spec.position.y}},
                       {"aperture", ci.spec.aperture},
                       {"bisector", ci.spec.bisector},
                       {"rho", ci.spec.rho},
                       {"lambda_out", complex_json(ci.mode.lambda_out)},
                       {"eta", ci.mode.eta},
                       {"parity", to_string(ci.mode.parity)},
                       {"flux_integral", ci.mode.flux_integral},
                       {"roots", ci.roots.size()},
                       {"theta", ci.pml.theta},
                       {"theta_auto", ci.theta_auto},
                       {"theta_interval", {ci.interval.lo, ci.interval.hi}},
                       {"L0", ci.pml.L0},
                       {"L", ci.pml.L},
                       {"theta_intervals", ci.strip.grid.intervals()},
                       {"nz_physical", ci.strip.nz_physical},
                       {"nz_layer", ci.strip.nz_layer}});
  }
  std::size_t strip_nodes = 0;
  for (const Mesh& s : sc.problem.strips) strip_nodes += s.nodes.size();
  const double scale = std::ldexp(1.0, -c.refine);
  return {{"geometry", {{"preset", c.geometry.preset}, {"R", c.geometry.R}, {"polygon", poly}, {"rho", c.geometry.rho}}},
          {"material", material},
          {"discretization",
           {{"h", sc.geometry.h},
            {"h_int", sc.geometry.h_int},
            {"dz", (c.discretization.dz > 0.0 ? c.discretization.dz : 0.0) * scale},
            {"layer_points_per_wavelength", c.discretization.layer_points_per_wavelength},
            {"n_fourier", sc.problem.fourier_order()},
            {"grading", sc.geometry.grading},
            {"mirror", sc.geometry.mirror},
            {"outer_segments", sc.geometry.outer_segments},
            {"refine", c.refine}}},
          {"pml",
           {{"enabled", c.pml.enabled}, {"clip", c.pml.clip}, {"tau1", c.pml.tol.tau1}, {"tau2", c.pml.tol.tau2}}},
          {"boundary", c.boundary == BoundaryMode::dtn ? "dtn" : "abc"},
          {"critical", sc.critical},
          {"corners", corners},
          {"mesh",
           {{"disk_nodes", sc.problem.disk.nodes.size()},
            {"disk_triangles", sc.problem.disk.tris.size()},
            {"min_angle_deg", sc.stats.min_angle_deg},
            {"strip_nodes", strip_nodes},
            {"dofs", dofs}}},
          {"warnings", sc.warnings}};
}

nlohmann::json result_json(const RunResult& r) {
  nlohmann::json j = to_json(r.energy);
  j["alpha_inc"] = r.alpha_inc;
  j["residual"] = r.residual;
  return j;
}

}  // namespace cpml
