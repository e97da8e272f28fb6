#pragma once

// Drude permittivities, contrasts and critical intervals.

#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace cpml {

using cplx = std::complex<double>;

/// Speed of light in um * PHz (um per fs).
inline constexpr double kLightSpeed = 0.299792458;

struct DrudeParams {
  double omega_p = 0.0;
  double gamma = 0.0;
};

struct MaterialConfig {
  double eps_d = 1.0;
  double mu_d = 1.0;
  double mu_m = 1.0;
  /// Fixed metal permittivity; takes precedence over `drude` when set.
  std::optional<cplx> eps_m;
  std::optional<DrudeParams> drude;
  double omega = 0.0;
  double c = kLightSpeed;
  /// Direct free-space wavenumber; bypasses omega / c when set.
  std::optional<double> k0_override;

  /// Throws ConfigError when an invariant fails.
  void validate() const;
  cplx metal_permittivity() const;
  /// eps_m / eps_d.
  cplx contrast() const;
  double k0() const;
  /// Wavenumber in the dielectric, k0 sqrt(eps_d mu_d).
  double k() const;
};

struct CriticalInterval {
  double b = 1.0;
  double lower() const { return -b; }
  double upper() const { return -1.0 / b; }
  /// True when kappa lies in the open interval and differs from -1.
  bool contains_open(double kappa) const;
};

/// 1 - omega_p^2 / omega^2.
double drude_lossless(double omega, double omega_p);
/// 1 - omega_p^2 / (omega^2 + i omega gamma).
cplx drude_lossy(double omega, double omega_p, double gamma);
/// Smallest gamma with Im drude_lossy(omega, omega_p, gamma) == target_imag.
/// Throws DomainError when the target exceeds omega_p^2 / (2 omega^2).
double drude_gamma_for_imag(double omega, double omega_p, double target_imag);

/// max((2pi - phi)/phi, phi/(2pi - phi)).
double aperture_ratio(double phi);
CriticalInterval critical_interval(const std::vector<double>& apertures);
/// Frequencies where drude_lossless lands on -b and -1/b.
std::pair<double, double> critical_band(double omega_p, double b);

}  // namespace cpml
