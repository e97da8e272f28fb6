#include "cornerpml/pml.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cornerpml/error.hpp"

namespace cpml {
namespace {
constexpr double kHalfPi = 0.5 * std::numbers::pi;
}

double PmlSpec::z_right() const { return std::log(rho); }

void PmlSpec::validate() const {
  if (!(rho > 0.0)) throw ConfigError("PML: rho must be positive");
  if (!(L0 > 0.0 && L0 < L)) throw ConfigError("PML: need 0 < L0 < L");
  if (!(std::abs(theta) < kHalfPi)) throw ConfigError("PML: need |theta| < pi/2");
}

ThetaInterval admissible_theta(const std::vector<cplx>& roots, cplx lambda_out) {
  if (lambda_out.imag() == 0.0) throw DomainError("outgoing exponent must be imaginary");
  ThetaInterval iv;
  if (lambda_out.imag() < 0.0) {
    double max_arg = 0.0;
    for (cplx l : roots) max_arg = std::max(max_arg, std::arg(l));
    iv = {-kHalfPi + max_arg, 0.0};
  } else {
    double min_arg = 0.0;
    for (cplx l : roots) min_arg = std::min(min_arg, std::arg(l));
    iv = {0.0, kHalfPi + min_arg};
  }
  if (!(iv.lo < iv.hi)) {
    std::ostringstream msg;
    msg << "empty admissible PML interval; offending roots:";
    for (cplx l : roots) {
      if (std::abs(std::arg(l)) >= kHalfPi - 1e-12) msg << " " << l;
    }
    throw NumericalError(msg.str());
  }
  return iv;
}

double default_theta(const ThetaInterval& iv, double clip) {
  return std::clamp(iv.midpoint(), -clip, clip);
}

bool stretch_is_admissible(double theta, const std::vector<cplx>& roots, cplx lambda_out) {
  const cplx inv_alpha = std::polar(1.0, -theta);
  if (!((lambda_out * inv_alpha).real() > 0.0)) return false;
  return std::all_of(roots.begin(), roots.end(),
                     [&](cplx l) { return (l * inv_alpha).real() > 0.0; });
}

StripGeometry default_strip_geometry(double k0, double rho, double eta, double theta,
                                     const StripTolerances& tol) {
  if (!(k0 > 0.0 && rho > 0.0 && eta > 0.0)) {
    throw DomainError("strip geometry needs positive k0, rho and eta");
  }
  if (!(tol.tau1 > 0.0 && tol.tau1 <= 1.0 && tol.tau2 > 0.0 && tol.tau2 <= 1.0)) {
    throw DomainError("strip tolerances must lie in (0, 1]");
  }
  if (theta == 0.0) throw DomainError("theta = 0 gives an infinitely long layer");
  StripGeometry g;
  g.L0 = std::max(0.0, std::log(k0 * rho)) + 0.5 * std::abs(std::log(tol.tau1));
  g.L = g.L0 + std::abs(std::log(tol.tau2)) / (eta * std::abs(std::sin(theta)));
  return g;
}

StretchedCoeffs stretched_coeffs(double z, const PmlSpec& spec) {
  const double zr = spec.z_right();
  const double slack = 1e-12 * (1.0 + std::abs(zr) + spec.L);
  if (z > zr + slack || z < spec.z_left() - slack) {
    throw DomainError("z = " + std::to_string(z) + " lies outside the strip");
  }
  if (z > spec.z_onset()) return {1.0, 1.0, std::exp(2.0 * z)};
  const cplx a = spec.alpha();
  return {a, 1.0 / a, std::exp(2.0 * z / a) / a};
}

}  // namespace cpml
