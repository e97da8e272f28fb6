#pragma once

// Corner PML parameters in the log-unfolded strip (z, theta) = (ln r, theta).

#include <complex>
#include <vector>

namespace cpml {

using cplx = std::complex<double>;

struct PmlSpec {
  double rho = 0.0;
  /// Total strip length in z.
  double L = 0.0;
  /// Distance from ln(rho) to the PML onset.
  double L0 = 0.0;
  /// Stretch angle; alpha = exp(i theta).
  double theta = 0.0;

  cplx alpha() const { return std::polar(1.0, theta); }
  double z_right() const;
  double z_left() const { return z_right() - L; }
  double z_onset() const { return z_right() - L0; }
  /// Throws ConfigError when an invariant fails.
  void validate() const;
};

struct ThetaInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double t) const { return t > lo && t < hi; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

/// Open interval of stretch angles mapping every root (Re lambda > 0) and the
/// outgoing exponent into the right half-plane. Throws NumericalError when the
/// interval is empty.
ThetaInterval admissible_theta(const std::vector<cplx>& roots, cplx lambda_out);

/// Midpoint of the interval, clipped to |theta| <= clip.
double default_theta(const ThetaInterval& iv, double clip);

/// True when Re(lambda / alpha) > 0 for every root and the outgoing exponent.
bool stretch_is_admissible(double theta, const std::vector<cplx>& roots, cplx lambda_out);

struct StripTolerances {
  /// Bound on (k0 rho e^{-L0})^2 at the PML onset.
  double tau1 = 1e-8;
  /// Decay of the outgoing mode across the layer.
  double tau2 = 1e-8;
};

struct StripGeometry {
  double L0 = 0.0;
  double L = 0.0;
};

StripGeometry default_strip_geometry(double k0, double rho, double eta, double theta,
                                     const StripTolerances& tol = {});

struct StretchedCoeffs {
  cplx a_z;
  cplx a_theta;
  cplx m;
};

/// Coefficients of the eps^{-1} dz.dz, eps^{-1} dtheta.dtheta and k0^2 mu terms.
StretchedCoeffs stretched_coeffs(double z, const PmlSpec& spec);

}  // namespace cpml
