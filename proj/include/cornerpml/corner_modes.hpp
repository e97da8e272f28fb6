#pragma once

// Singular exponents and black-hole modes of a two-phase corner.
//
// Conventions: the corner has aperture phi, the metal occupies |theta| < phi/2
// in the local polar frame (theta = 0 on the bisector), and b = (2pi - phi)/phi.
// Exponents lambda enter the dispersion functions through z = i lambda phi / 2.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cornerpml/geometry.hpp"

namespace cpml {

using cplx = std::complex<double>;

enum class Parity { sym, skew };
std::string to_string(Parity p);

struct CornerSpec {
  Vec2 position;
  double aperture = 0.0;
  /// Direction of the bisector pointing into the metal wedge.
  double bisector = 0.0;
  double rho = 0.0;

  double b() const;
  /// Polar coordinates (r, theta) of p in the local frame, theta in (-pi, pi].
  std::pair<double, double> local_polar(Vec2 p) const;
  Vec2 from_local(double r, double theta) const;
};

/// f(z) = k^{-1} tanh z + tanh bz (sym) or k tanh z + tanh bz (skew).
cplx dispersion(cplx z, cplx kappa, double b, Parity parity);

/// g(z) = k^{+-1} sinh z cosh bz + sinh bz cosh z, the pole-free form of the
/// dispersion relation (g = cosh z cosh bz f), and its derivative.
cplx dispersion_entire(cplx z, cplx kappa, double b, Parity parity);
cplx dispersion_entire_deriv(cplx z, cplx kappa, double b, Parity parity);

struct ImaginaryExponent {
  double eta = 0.0;
  Parity parity = Parity::skew;
  /// Bracket [t_lo, t_hi] of t = eta phi / 2 at termination.
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// The pair +-i eta on the imaginary axis, if any. Throws DomainError for
/// kappa == -1 or kappa >= 0.
std::optional<ImaginaryExponent> imaginary_exponent(double phi, double kappa);

struct Exponent {
  cplx lambda;
  Parity parity = Parity::skew;
  /// True when cosh z and cosh bz vanish together. Such exponents solve the
  /// corner eigenproblem for every contrast, but f has a pole there.
  bool pole_point = false;
  /// |g| / max(1, |cosh z cosh bz|).
  double residual = 0.0;
};

struct RootWindow {
  double re_max = 10.0;
  double im_max = 10.0;
  /// Left edge of the rectangle; the imaginary axis itself is excluded.
  double re_min = 1e-6;
};

struct SingularExponentSet {
  double phi = 0.0;
  cplx kappa;
  double b = 0.0;
  std::optional<ImaginaryExponent> imaginary;
  /// Roots with Re lambda > 0 inside the window, sorted by (Re, Im).
  std::vector<Exponent> roots;
  /// min Re lambda over `roots`, or +inf when empty.
  double beta0 = 0.0;

  /// 0, the imaginary pair, and +-lambda for every root.
  std::vector<cplx> all() const;
};

/// Zeros of both dispersion relations inside the window, found by
/// argument-principle subdivision and Newton refinement.
std::vector<Exponent> complex_exponents(double phi, cplx kappa, const RootWindow& window = {});

/// Winding number of g on the window boundary, counted with a fixed uniform
/// contour of `samples_per_edge` points per edge (an independent check of the
/// adaptive count used by complex_exponents).
int winding_number(double phi, cplx kappa, Parity parity, const RootWindow& window,
                   int samples_per_edge);

SingularExponentSet singular_exponents(double phi, cplx kappa, const RootWindow& window = {});

class ModeFunction {
 public:
  ModeFunction(double eta, double phi, Parity parity);

  double eta() const { return eta_; }
  double phi() const { return phi_; }
  Parity parity() const { return parity_; }

  /// Phi(theta) for theta in [-pi, pi]; values outside are wrapped.
  double operator()(double theta) const;
  double derivative(double theta) const;

 private:
  double eta_;
  double phi_;
  Parity parity_;
};

/// Integral over (-pi, pi) of eps^{-1} Phi^2, eps = kappa eps_d in the metal.
double flux_integral(double eta, double phi, double kappa, Parity parity, double eps_d);

struct OutgoingMode {
  cplx lambda;
  Parity parity = Parity::skew;
  double eta = 0.0;
};

/// Outgoing black-hole exponent: -i eta for kappa in (-b, -1), +i eta for
/// kappa in (-1, -1/b). Throws DomainError outside the open critical interval.
OutgoingMode select_outgoing(double phi, double kappa);
OutgoingMode select_outgoing(double phi, double kappa, const ImaginaryExponent& ie);

/// Continues the outgoing root along a contrast path ending at a real
/// contrast. Returns one exponent per path entry.
std::vector<cplx> track_dissipative(double phi, const std::vector<cplx>& kappa_path);

struct FieldValue {
  cplx value;
  /// Derivative along r (disk form) or z (strip form).
  cplx d_radial;
  /// (1/r) d/dtheta (disk form) or d/dtheta (strip form).
  cplx d_angular;
};

/// r^lambda Phi(theta) with its polar gradient. Throws DomainError for r <= 0.
FieldValue singularity_field_polar(cplx lambda, const ModeFunction& mode, double r, double theta);
/// e^{lambda z} Phi(theta) with (d/dz, d/dtheta).
FieldValue singularity_field_strip(cplx lambda, const ModeFunction& mode, double z, double theta);

}  // namespace cpml
