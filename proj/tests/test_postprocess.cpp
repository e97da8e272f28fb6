#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "cornerpml/error.hpp"
#include "cornerpml/pipeline.hpp"
#include "cornerpml/postprocess.hpp"

using namespace cpml;

namespace {

constexpr double pi = std::numbers::pi;

// Coarse paper-triangle run at omega = 9 shared by the tests below.
struct TriangleRun {
  Scene scene;
  std::unique_ptr<Runner> runner;
  RunResult result;

  TriangleRun() {
    RunConfig c = paper_triangle_config(9.0);
    c.discretization.h = 0.021;
    scene = build_scene(c);
    runner = std::make_unique<Runner>(scene);
    result = runner->solve(-pi / 12.0, true);
  }
};

const TriangleRun& triangle_run() {
  static const TriangleRun run;
  return run;
}

// Global vector holding f(z, theta) on the strip of one corner.
template <class F>
VectorC strip_field(const TriangleRun& r, std::size_t corner, F f) {
  const LinearSystem& sys = r.runner->system();
  VectorC x = VectorC::Zero(sys.dofs.size());
  const Mesh& s = r.scene.problem.strips[corner];
  for (std::size_t i = 0; i < s.nodes.size(); ++i) x[sys.dofs.strip[corner][i]] = f(s.nodes[i].x, s.nodes[i].y);
  return x;
}

// z values of the unstretched P2 rows of a strip.
std::vector<double> physical_rows(const TriangleRun& r, std::size_t corner) {
  const CornerInfo& ci = r.scene.corners[corner];
  std::vector<double> rows;
  for (double z : strip_rows(ci.strip)) {
    if (z >= ci.pml.z_onset()) rows.push_back(z);
  }
  return rows;
}

}  // namespace

TEST(CornerModeData, OutgoingSelection) {
  const CornerMode m = corner_mode(pi / 6.0, -1.1838, 1.0);
  EXPECT_NEAR(m.eta, 4.726592839935213, 1e-3);
  EXPECT_EQ(m.lambda_out.real(), 0.0);
  EXPECT_LT(m.lambda_out.imag(), 0.0);
  EXPECT_THROW(corner_mode(pi / 6.0, 2.0, 1.0), DomainError);
}

TEST(Overlap, RecoversPureMode) {
  const TriangleRun& r = triangle_run();
  for (std::size_t n = 0; n < r.scene.corners.size(); ++n) {
    const CornerMode& m = r.scene.corners[n].mode;
    const VectorC x = strip_field(r, n, [&](double z, double t) { return 3.7 * std::exp(m.lambda_out * z) * m.mode(t); });
    const cplx b = extract_coefficient_overlap(r.scene.problem, r.runner->system(), x, n, m,
                                               default_overlap_depth(r.scene.corners[n].pml));
    EXPECT_LT(std::abs(b - 3.7), 1e-8) << b;
  }
}

TEST(Overlap, RemainderDecaysWithDepth) {
  const TriangleRun& r = triangle_run();
  const std::size_t n = 0;
  const CornerInfo& ci = r.scene.corners[n];
  const CornerMode& m = ci.mode;
  const double beta0 = singular_exponents(ci.spec.aperture, m.kappa).beta0;
  // Remainder e^{beta0 z} (1 + cos theta) is not orthogonal to Phi.
  const VectorC x = strip_field(r, n, [&](double z, double t) {
    return std::exp(m.lambda_out * z) * m.mode(t) + std::exp(beta0 * z) * (1.0 + std::cos(t) + std::sin(t));
  });
  const std::vector<double> rows = physical_rows(r, n);
  const double z1 = rows[rows.size() * 3 / 4], z2 = rows[rows.size() / 2];
  const cplx e1 = extract_coefficient_overlap(r.scene.problem, r.runner->system(), x, n, m, z1) - 1.0;
  const cplx e2 = extract_coefficient_overlap(r.scene.problem, r.runner->system(), x, n, m, z2) - 1.0;
  ASSERT_GT(std::abs(e1), 0.0);
  EXPECT_LT(std::abs(e2), std::abs(e1));
  EXPECT_NEAR(std::abs(e1) / std::abs(e2), std::exp(beta0 * (z1 - z2)), 1e-9 * std::exp(beta0 * (z1 - z2)));
}

TEST(Overlap, RefusesLayerDepth) {
  const TriangleRun& r = triangle_run();
  const CornerInfo& ci = r.scene.corners[0];
  EXPECT_THROW(extract_coefficient_overlap(r.scene.problem, r.runner->system(), r.result.x, 0, ci.mode,
                                           ci.pml.z_onset() - 0.5),
               ConfigError);
}

TEST(Overlap, TwoDepthsAgreeOnTriangleRun) {
  const TriangleRun& r = triangle_run();
  for (std::size_t n = 0; n < r.scene.corners.size(); ++n) {
    const CornerInfo& ci = r.scene.corners[n];
    const double beta0 = singular_exponents(ci.spec.aperture, ci.mode.kappa).beta0;
    const double z1 = std::log(ci.spec.rho) - 1.5, z2 = default_overlap_depth(ci.pml);
    const cplx b1 = extract_coefficient_overlap(r.scene.problem, r.runner->system(), r.result.x, n, ci.mode, z1);
    const cplx b2 = extract_coefficient_overlap(r.scene.problem, r.runner->system(), r.result.x, n, ci.mode, z2);
    // The remainder at depth z1 is bounded by the field size near r = rho.
    EXPECT_LT(std::abs(b1 - b2), 0.05 * std::abs(b2) + 2.0 * std::exp(beta0 * (z1 - std::log(ci.spec.rho))))
        << ci.label;
  }
}

TEST(Dual, AgreesWithOverlapAndIsLinear) {
  const TriangleRun& r = triangle_run();
  const VectorC rhs = assemble_rhs(r.scene.problem, r.runner->system(), -pi / 12.0);
  double bmax = 0.0;
  for (const CornerReport& c : r.result.energy.corners) bmax = std::max(bmax, std::abs(c.b));
  for (std::size_t n = 0; n < r.scene.corners.size(); ++n) {
    const CornerReport& c = r.result.energy.corners[n];
    ASSERT_TRUE(c.b_dual.has_value());
    // Coarse mesh (about three elements across the cutoff transition): the
    // two estimates differ by the discretization error.
    EXPECT_LT(std::abs(*c.b_dual - c.b), 0.25 * bmax) << r.scene.corners[n].label;
    const VectorC& w = r.runner->dual_solution(n);
    const cplx b1 = dual_coefficient(w, rhs, r.scene.corners[n].mode);
    const cplx b2 = dual_coefficient(w, VectorC(2.0 * rhs), r.scene.corners[n].mode);
    EXPECT_EQ(b2, 2.0 * b1);
    EXPECT_LT(std::abs(b1 - *c.b_dual), 1e-12 * std::abs(b1));
  }
}

TEST(Dual, SymmetricSystemGivesSameValueFromForwardSolution) {
  const TriangleRun& r = triangle_run();
  const Solver solver(r.runner->system().A);
  const VectorC rhs = assemble_rhs(r.scene.problem, r.runner->system(), -pi / 12.0);
  const CornerInfo& ci = r.scene.corners[1];
  const DualResult d = extract_coefficient_dual(r.scene.problem, r.runner->system(), solver, rhs, r.result.x, 1,
                                                ci.mode, default_cutoff(ci.spec.rho));
  EXPECT_LT(std::abs(d.b - d.b_forward), 1e-8 * std::abs(d.b));
}

TEST(Dual, RejectsCutoffOutsideStrip) {
  const TriangleRun& r = triangle_run();
  const CornerInfo& ci = r.scene.corners[0];
  const double rho = ci.spec.rho;
  EXPECT_THROW(assemble_dual_source(r.scene.problem, r.runner->system(), 0, -ci.mode.lambda_out, ci.mode.mode,
                                    {0.6 * rho, 1.2 * rho}),
               ConfigError);
  EXPECT_THROW(assemble_dual_source(r.scene.problem, r.runner->system(), 0, -ci.mode.lambda_out, ci.mode.mode,
                                    {1e-3 * rho * std::exp(-ci.pml.L0), 0.5 * rho}),
               ConfigError);
}

TEST(CornerFlux, FormulaProperties) {
  EXPECT_EQ(corner_flux(0.0, 4.7, -0.3), 0.0);
  const double j1 = corner_flux({0.3, -0.2}, 4.7, -0.3);
  const double j2 = corner_flux({0.6, -0.4}, 4.7, -0.3);
  EXPECT_LT(j1, 0.0);
  EXPECT_NEAR(j2, 4.0 * j1, 1e-15);
  EXPECT_NEAR(j1, -4.7 * 0.13 * 0.3, 1e-15);
}

TEST(EnergyReportTest, MismatchAndFloor) {
  std::vector<CornerReport> cs(2);
  cs[0].J = -0.4;
  cs[1].J = -0.5;
  const EnergyReport r = make_energy_report(-1.0, cs, 1e-12);
  EXPECT_NEAR(r.sum_J(), -0.9, 1e-15);
  EXPECT_NEAR(r.mismatch, 0.1, 1e-15);
  const EnergyReport z = make_energy_report(0.0, {}, energy_floor(30.0, 0.3));
  EXPECT_EQ(z.mismatch, 0.0);
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j["corners"].size(), 2u);
  EXPECT_EQ(j["corners"][1]["index"], 2);
  EXPECT_DOUBLE_EQ(j["mismatch"].get<double>(), r.mismatch);
}

TEST(EnergyReportTest, TriangleRunBalances) {
  const TriangleRun& r = triangle_run();
  EXPECT_LT(r.result.energy.J_ext, 0.0);
  for (const CornerReport& c : r.result.energy.corners) EXPECT_LE(c.J, 0.0);
  EXPECT_LT(r.result.energy.mismatch, 0.05);
}

TEST(ExteriorFlux, IncidentWaveCarriesNoNetFlux) {
  for (BoundaryMode mode : {BoundaryMode::dtn, BoundaryMode::abc}) {
    RunConfig c;
    c.geometry.R = 0.3;
    c.material.eps_m = cplx(1.0);
    c.material.k0_override = 30.0;
    c.discretization.h = 0.02;
    c.boundary = mode;
    const Scene sc = build_scene(c);
    const LinearSystem sys = assemble(sc.problem);
    VectorC x = VectorC::Zero(sys.dofs.size());
    for (std::size_t i = 0; i < sc.problem.disk.nodes.size(); ++i) {
      const Vec2 p = sc.problem.disk.nodes[i];
      x[sys.dofs.disk[i]] = std::exp(cplx(0.0, 30.0 * (p.x * std::cos(0.5) + p.y * std::sin(0.5))));
    }
    const double J = exterior_flux(sc.problem, sys, x, 0.5);
    // Boundary midpoints sit on chords, so the trace is only accurate to the
    // polygonal approximation; scale by k |u_inc|^2 on the circle.
    EXPECT_LT(std::abs(J), 1e-4 * 30.0 * 2.0 * pi * 0.3) << (mode == BoundaryMode::dtn ? "dtn" : "abc");
  }
}

TEST(Sampler, HomogeneousFieldOnGrid) {
  RunConfig c;
  c.geometry.R = 0.3;
  c.material.eps_m = cplx(1.0);
  c.material.k0_override = 30.0;
  c.discretization.h = 2.0 * pi / 30.0 / 20.0;
  const Scene sc = build_scene(c);
  Runner run(sc);
  const RunResult r = run.solve(0.3);
  const FieldSampler fs(sc.problem, run.system(), r.x);
  double num = 0.0, den = 0.0;
  int outside = 0;
  for (const Vec2& p : disk_grid(0.3, 60)) {
    const FieldSample s = fs(p);
    if (s.mask != SampleMask::physical) {
      ++outside;
      continue;
    }
    const cplx u = std::exp(cplx(0.0, 30.0 * (p.x * std::cos(0.3) + p.y * std::sin(0.3))));
    num += std::norm(s.value - u);
    den += std::norm(u);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-3);
  EXPECT_LT(outside, 10);
  EXPECT_EQ(fs({0.5, 0.0}).mask, SampleMask::outside);
}

TEST(Sampler, ContinuousAcrossHoleBoundary) {
  const TriangleRun& r = triangle_run();
  const FieldSampler fs(r.scene.problem, r.runner->system(), r.result.x);
  for (const CornerInfo& ci : r.scene.corners) {
    for (double t : ci.strip.grid.theta) {
      const Vec2 in = ci.spec.from_local(ci.spec.rho * (1.0 - 1e-12), t);
      const Vec2 out = ci.spec.from_local(ci.spec.rho * (1.0 + 1e-12), t);
      const FieldSample a = fs(in), b = fs(out);
      ASSERT_EQ(a.mask, SampleMask::physical);
      ASSERT_EQ(b.mask, SampleMask::physical);
      EXPECT_LT(std::abs(a.value - b.value), 1e-10) << ci.label << " theta " << t;
    }
  }
}

TEST(Sampler, MaskedFractionIsLayerFraction) {
  const TriangleRun& r = triangle_run();
  const FieldSampler fs(r.scene.problem, r.runner->system(), r.result.x);
  for (const CornerInfo& ci : r.scene.corners) {
    const int nz = 400, nt = 37;
    int layer = 0, total = 0;
    for (int i = 0; i < nz; ++i) {
      const double z = ci.pml.z_left() + ci.pml.L * (i + 0.5) / nz;
      for (int j = 0; j < nt; ++j) {
        const double t = -pi + 2.0 * pi * (j + 0.5) / nt;
        const FieldSample s = fs.strip_sample(static_cast<std::size_t>(&ci - r.scene.corners.data()), z, t);
        ASSERT_NE(s.mask, SampleMask::outside);
        layer += s.mask == SampleMask::layer;
        ++total;
      }
    }
    EXPECT_NEAR(static_cast<double>(layer) / total, (ci.pml.L - ci.pml.L0) / ci.pml.L, 1.0 / nz) << ci.label;
  }
}
