#pragma once

// Energy fluxes, black-hole coefficients and field sampling.

#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cornerpml/assembly.hpp"

namespace cpml {

/// Outgoing black-hole mode of one corner.
struct CornerMode {
  double kappa = 0.0;
  cplx lambda_out;
  double eta = 0.0;
  Parity parity = Parity::skew;
  /// Integral over (-pi, pi) of eps^{-1} Phi^2.
  double flux_integral = 0.0;
  ModeFunction mode{1.0, 1.0, Parity::skew};
};

/// Throws DomainError when kappa is outside the open critical interval.
CornerMode corner_mode(double phi, double kappa, double eps_d);

/// Im of the integral over r = R of eps_d^-1 (d_r u) conj(u). With the DtN
/// boundary d_r u = S(u - u_inc) + d_r u_inc is evaluated spectrally; with the
/// ABC boundary the same identity uses the ABC relation at Gauss points.
double exterior_flux(const Problem& problem, const LinearSystem& sys, const VectorC& x, double alpha_inc);

/// Default overlap depth: ln(rho) - L0 / 2.
double default_overlap_depth(const PmlSpec& pml);

/// b = e^{-lambda z} (int eps^-1 u(z, .) Phi) / (int eps^-1 Phi^2) on the strip
/// grid row nearest to z_eval. Throws ConfigError inside the layer.
cplx extract_coefficient_overlap(const Problem& problem, const LinearSystem& sys, const VectorC& x,
                                 std::size_t corner, const CornerMode& mode, double z_eval);

/// Default dual cutoff: 1 below 0.6 rho, 0 above 0.9 rho.
Cutoff default_cutoff(double rho);

struct DualResult {
  cplx b;
  /// Same quantity evaluated from the forward solution, u^T G / (2 lambda I).
  cplx b_forward;
  /// Dual solution (one per corner), usable for any incidence.
  VectorC w;
};

/// Solves A w = G for the dual source of `corner` and returns
/// b = F^T w / (2 lambda_out I). `forward` may be empty.
DualResult extract_coefficient_dual(const Problem& problem, const LinearSystem& sys, const Solver& solver,
                                    const VectorC& rhs, const VectorC& forward, std::size_t corner,
                                    const CornerMode& mode, const Cutoff& cutoff);

/// Reuses a dual solution for another load vector.
cplx dual_coefficient(const VectorC& w, const VectorC& rhs, const CornerMode& mode);

/// -eta |b|^2 |I|.
double corner_flux(cplx b, double eta, double flux_integral);

struct CornerReport {
  cplx b;
  std::optional<cplx> b_dual;
  double eta = 0.0;
  double flux_integral = 0.0;
  double J = 0.0;
};

struct EnergyReport {
  double J_ext = 0.0;
  std::vector<CornerReport> corners;
  double mismatch = 0.0;

  double sum_J() const;
};

/// Fills mismatch = |J_ext - sum J_n| / max(|J_ext|, floor).
EnergyReport make_energy_report(double J_ext, std::vector<CornerReport> corners, double floor);

/// 1e-14 k0 times the squared boundary norm of the unit plane wave.
double energy_floor(double k0, double R);

enum class SampleMask { physical, layer, outside };

struct FieldSample {
  cplx value;
  SampleMask mask = SampleMask::outside;
};

/// Point evaluation of a solved state in physical coordinates.
class FieldSampler {
 public:
  FieldSampler(const Problem& problem, const LinearSystem& sys, const VectorC& x);

  FieldSample operator()(Vec2 p) const;
  /// Strip value of a corner at (z, theta); the layer is flagged.
  FieldSample strip_sample(std::size_t corner, double z, double theta) const;
  std::vector<FieldSample> sample(const std::vector<Vec2>& points) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// P2 interpolation of nodal values at a point given barycentric coordinates.
cplx p2_interpolate(const std::array<int, 6>& tri, const std::vector<cplx>& values, const double l[3]);

/// ||u_h - u|| and ||u|| in L2 over the mesh with the degree-4 rule.
std::pair<double, double> l2_error(const Mesh& mesh, const std::vector<cplx>& values,
                                   const std::function<cplx(Vec2)>& exact);

/// JSON object of a report (schema in docs/report_schema.md).
nlohmann::json to_json(const EnergyReport& report);

}  // namespace cpml
