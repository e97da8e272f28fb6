#include "cornerpml/materials.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cornerpml/error.hpp"

namespace cpml {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive, got " + std::to_string(v));
  }
}

}  // namespace

double drude_lossless(double omega, double omega_p) {
  require_positive(omega, "omega");
  require_positive(omega_p, "omega_p");
  return 1.0 - (omega_p * omega_p) / (omega * omega);
}

cplx drude_lossy(double omega, double omega_p, double gamma) {
  require_positive(omega, "omega");
  require_positive(omega_p, "omega_p");
  if (!(gamma >= 0.0)) throw DomainError("gamma must be nonnegative");
  if (gamma == 0.0) return {drude_lossless(omega, omega_p), 0.0};
  return 1.0 - (omega_p * omega_p) / cplx(omega * omega, omega * gamma);
}

double drude_gamma_for_imag(double omega, double omega_p, double target_imag) {
  require_positive(omega, "omega");
  require_positive(omega_p, "omega_p");
  if (target_imag == 0.0) return 0.0;
  require_positive(target_imag, "target imaginary part");
  // Im eps = wp^2 g / (w (w^2 + g^2)); solve t g^2 - (wp^2/w) g + t w^2 = 0.
  const double a = omega_p * omega_p / omega;
  const double disc = a * a - 4.0 * target_imag * target_imag * omega * omega;
  if (disc < 0.0) {
    throw DomainError("target Im eps above the Drude maximum " +
                      std::to_string(omega_p * omega_p / (2.0 * omega * omega)));
  }
  // Cancellation-free small root.
  return 2.0 * target_imag * omega * omega / (a + std::sqrt(disc));
}

double aperture_ratio(double phi) {
  if (!(phi > 0.0 && phi < kTwoPi)) {
    throw DomainError("aperture must lie in (0, 2pi), got " + std::to_string(phi));
  }
  if (std::abs(phi - std::numbers::pi) < 1e-14) {
    throw DomainError("aperture pi is not a corner");
  }
  const double r = (kTwoPi - phi) / phi;
  return std::max(r, 1.0 / r);
}

CriticalInterval critical_interval(const std::vector<double>& apertures) {
  CriticalInterval ci;
  for (double phi : apertures) ci.b = std::max(ci.b, aperture_ratio(phi));
  return ci;
}

bool CriticalInterval::contains_open(double kappa) const {
  return kappa > lower() && kappa < upper() && kappa != -1.0;
}

std::pair<double, double> critical_band(double omega_p, double b) {
  require_positive(omega_p, "omega_p");
  if (!(b >= 1.0)) throw DomainError("b must be at least 1");
  return {omega_p / std::sqrt(1.0 + b), omega_p / std::sqrt(1.0 + 1.0 / b)};
}

void MaterialConfig::validate() const {
  if (!(eps_d > 0.0)) throw ConfigError("eps_d must be positive");
  if (!(mu_d > 0.0)) throw ConfigError("mu_d must be positive");
  if (!(mu_m > 0.0)) throw ConfigError("mu_m must be positive");
  if (!(c > 0.0)) throw ConfigError("light speed must be positive");
  if (!eps_m && !drude) throw ConfigError("metal needs eps_m or Drude parameters");
  if (drude) {
    if (!(drude->omega_p > 0.0)) throw ConfigError("omega_p must be positive");
    if (!(drude->gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  }
  if (k0_override) {
    if (!(*k0_override > 0.0)) throw ConfigError("k0 must be positive");
  } else if (!(omega > 0.0)) {
    throw ConfigError("omega must be positive unless k0 is given");
  }
  if (!eps_m && !(omega > 0.0)) throw ConfigError("Drude metal needs omega > 0");
}

cplx MaterialConfig::metal_permittivity() const {
  if (eps_m) return *eps_m;
  if (!drude) throw ConfigError("metal permittivity undefined");
  return drude_lossy(omega, drude->omega_p, drude->gamma);
}

cplx MaterialConfig::contrast() const { return metal_permittivity() / eps_d; }

double MaterialConfig::k0() const { return k0_override ? *k0_override : omega / c; }

double MaterialConfig::k() const { return k0() * std::sqrt(eps_d * mu_d); }

}  // namespace cpml
