#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "cornerpml/corner_modes.hpp"
#include "cornerpml/error.hpp"
#include "cornerpml/materials.hpp"

using namespace cpml;
constexpr double pi = std::numbers::pi;

namespace {

// Illinois regula falsi on a sign-changing bracket.
double oracle_root(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a), fb = f(b);
  int side = 0;
  for (int i = 0; i < 500; ++i) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = f(c);
    if (fc == 0.0 || std::abs(b - a) < 1e-15 * std::abs(c)) return c;
    if ((fc > 0) == (fb > 0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (a + b);
}

double oracle_eta(double phi, double kappa, bool skew) {
  const double b = (2 * pi - phi) / phi;
  const double k = skew ? kappa : 1.0 / kappa;
  auto f = [&](double t) { return k * std::tanh(t) + std::tanh(b * t); };
  double hi = 0.5;
  while ((f(hi) > 0) == (f(1e-9) > 0)) hi *= 1.5;
  return 2.0 * oracle_root(f, 1e-9, hi) / phi;
}

// Direct formulas for Phi, written independently of the library.
double oracle_phi(double eta, double phi, bool skew, double t) {
  const double a = std::abs(t);
  const double h = phi / 2;
  double v;
  if (skew) {
    v = a <= h ? std::sinh(eta * a) / std::sinh(eta * h)
               : std::sinh(eta * (pi - a)) / std::sinh(eta * (pi - h));
    return t < 0 ? -v : v;
  }
  return a <= h ? std::cosh(eta * a) / std::cosh(eta * h)
                : std::cosh(eta * (pi - a)) / std::cosh(eta * (pi - h));
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth > 50 || std::abs(left + right - whole) <= 15 * tol) {
    return left + right + (left + right - whole) / 15;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth + 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth + 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 0);
}

double quadrature_flux(double eta, double phi, double kappa, bool skew, double eps_d) {
  auto sq = [&](double t) {
    const double p = oracle_phi(eta, phi, skew, t);
    return p * p;
  };
  const double metal = adaptive_simpson(sq, 0.0, phi / 2, 1e-14);
  const double diel = adaptive_simpson(sq, phi / 2, pi, 1e-14);
  return 2.0 * (metal / (kappa * eps_d) + diel / eps_d);
}

bool table_skew(double phi, double kappa) { return (phi < pi) == (kappa < -1.0); }

const double kKappa9 = drude_lossless(9.0, 13.3);
const double kKappa11 = drude_lossless(11.0, 13.3);

}  // namespace

TEST(Dispersion, ZeroAtOrigin) {
  for (Parity p : {Parity::sym, Parity::skew}) {
    EXPECT_EQ(dispersion(0.0, cplx(-1.5, 0.2), 11.0, p), cplx(0.0));
  }
}

TEST(Dispersion, Odd) {
  const cplx z(0.3, 0.2);
  for (Parity p : {Parity::sym, Parity::skew}) {
    EXPECT_NEAR(std::abs(dispersion(-z, -1.5, 11.0, p) + dispersion(z, -1.5, 11.0, p)), 0.0,
                1e-15);
  }
}

TEST(Dispersion, SaturatesForLargeArguments) {
  const cplx f = dispersion(cplx(500.0, 1.0), -2.0, 11.0, Parity::skew);
  EXPECT_NEAR(std::abs(f - cplx(-1.0)), 0.0, 1e-15);
}

TEST(Dispersion, ZeroContrastRejectedForSym) {
  EXPECT_THROW(dispersion(0.1, 0.0, 2.0, Parity::sym), DomainError);
}

TEST(Dispersion, EntireFormMatchesMeromorphicForm) {
  const cplx z(0.4, -0.7);
  const double b = 3.8;
  for (Parity p : {Parity::sym, Parity::skew}) {
    const cplx g = dispersion_entire(z, -1.2, b, p);
    const cplx f = dispersion(z, -1.2, b, p) * std::cosh(z) * std::cosh(b * z);
    EXPECT_NEAR(std::abs(g - f), 0.0, 1e-13 * std::abs(g));
    const double h = 1e-5;
    const cplx fd = (dispersion_entire(z + h, -1.2, b, p) - dispersion_entire(z - h, -1.2, b, p)) /
                    (2 * h);
    EXPECT_NEAR(std::abs(dispersion_entire_deriv(z, -1.2, b, p) - fd), 0.0, 1e-7);
  }
}

TEST(Dispersion, TangentFormConsistency) {
  const double phi = 5 * pi / 12;
  const auto roots = complex_exponents(phi, kKappa9);
  int checked = 0;
  for (const auto& r : roots) {
    if (r.parity != Parity::sym || r.pole_point) continue;
    const cplx l = r.lambda;
    const cplx a = std::tan(l * phi / 2.0) / kKappa9;
    const cplx c = std::tan(l * (phi / 2.0 - pi));
    EXPECT_NEAR(std::abs(a - c), 0.0, 1e-8 * std::max(1.0, std::abs(a))) << l;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(ImaginaryExponent, TopCornerAtOmega9) {
  const auto ie = imaginary_exponent(pi / 6, kKappa9);
  ASSERT_TRUE(ie.has_value());
  EXPECT_EQ(ie->parity, Parity::skew);
  const double oracle = oracle_eta(pi / 6, kKappa9, true);
  EXPECT_NEAR(ie->eta, oracle, 1e-11);
  // Frozen oracle value (30-digit root of the real equation).
  EXPECT_NEAR(ie->eta, 4.726592839935213, 1e-11);
}

TEST(ImaginaryExponent, OutsideInterval) {
  EXPECT_FALSE(imaginary_exponent(pi / 6, -20.0).has_value());
  EXPECT_FALSE(imaginary_exponent(pi / 6, -0.05).has_value());
}

TEST(ImaginaryExponent, SymmetricBranch) {
  const auto ie = imaginary_exponent(5 * pi / 12, kKappa11);
  ASSERT_TRUE(ie.has_value());
  EXPECT_EQ(ie->parity, Parity::sym);
  EXPECT_NEAR(ie->eta, oracle_eta(5 * pi / 12, kKappa11, false), 1e-11);
  EXPECT_NEAR(ie->eta, 0.7142969352056976, 1e-11);
}

TEST(ImaginaryExponent, Errors) {
  EXPECT_THROW(imaginary_exponent(pi / 6, -1.0), DomainError);
  EXPECT_THROW(imaginary_exponent(pi, -2.0), DomainError);
  EXPECT_THROW(imaginary_exponent(pi / 6, 2.0), DomainError);
}

TEST(ImaginaryExponent, RandomClassification) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> uphi(0.1, 2 * pi - 0.1);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  int inside = 0, outside = 0;
  while (inside < 200 || outside < 200) {
    const double phi = uphi(rng);
    if (std::abs(phi - pi) < 0.05) continue;
    const double bs = std::max((2 * pi - phi) / phi, phi / (2 * pi - phi));
    // Log-uniform contrast over a range wider than the interval.
    const double kappa = -std::exp((uu(rng) * 2 - 1) * std::log(3 * bs));
    if (std::abs(kappa + 1) < 1e-6) continue;
    const auto ie = imaginary_exponent(phi, kappa);
    const bool in = kappa > -bs && kappa < -1 / bs;
    if (in && inside < 200) {
      ++inside;
      ASSERT_TRUE(ie.has_value());
      const bool skew = table_skew(phi, kappa);
      EXPECT_EQ(ie->parity == Parity::skew, skew);
      const double t = ie->eta * phi / 2;
      const double b = (2 * pi - phi) / phi;
      const Parity p = skew ? Parity::skew : Parity::sym;
      EXPECT_LE(std::abs(dispersion(t, kappa, b, p)), 1e-10);
      const double flo = dispersion(ie->t_lo, kappa, b, p).real();
      const double fhi = dispersion(ie->t_hi, kappa, b, p).real();
      EXPECT_LE(flo * fhi, 0.0);
    } else if (!in && outside < 200) {
      ++outside;
      EXPECT_FALSE(ie.has_value());
    }
  }
}

TEST(ComplexExponents, CountMatchesFineWindingNumber) {
  const RootWindow w;
  for (double phi : {pi / 6, 5 * pi / 12}) {
    for (cplx kappa : {cplx(kKappa9), cplx(kKappa11), cplx(-18.684), cplx(-3.9193, 0.0926)}) {
      const auto roots = complex_exponents(phi, kappa, w);
      for (Parity p : {Parity::sym, Parity::skew}) {
        int n = 0;
        for (const auto& r : roots) n += r.parity == p;
        EXPECT_EQ(n, winding_number(phi, kappa, p, w, 20000)) << phi << " " << kappa;
      }
    }
  }
}

TEST(ComplexExponents, CutsAvoidRootsNearSplitLines) {
  // Contrasts whose roots sit close to the first bisection cuts of the window.
  const RootWindow w;
  for (double phi : {pi / 6, 11 * pi / 6}) {
    for (double kappa : {-9.7058608555, -0.1030305312}) {
      std::vector<Exponent> roots;
      ASSERT_NO_THROW(roots = complex_exponents(phi, kappa, w)) << phi << " " << kappa;
      for (Parity p : {Parity::sym, Parity::skew}) {
        int n = 0;
        for (const auto& r : roots) n += r.parity == p;
        EXPECT_EQ(n, winding_number(phi, kappa, p, w, 20000)) << phi << " " << kappa;
      }
    }
  }
}

TEST(ComplexExponents, ResidualsAndClosure) {
  const double phi = 5 * pi / 12;
  const double b = (2 * pi - phi) / phi;
  const auto roots = complex_exponents(phi, kKappa9);
  ASSERT_FALSE(roots.empty());
  for (const auto& r : roots) {
    EXPECT_GT(r.lambda.real(), 0.0);
    EXPECT_LE(r.residual, 1e-10);
    if (!r.pole_point) {
      EXPECT_LE(std::abs(dispersion(cplx(0, phi / 2) * r.lambda, kKappa9, b, r.parity)), 1e-10);
    }
    bool found = false;
    for (const auto& s : roots) {
      found |= s.parity == r.parity && std::abs(s.lambda - std::conj(r.lambda)) < 1e-9;
    }
    EXPECT_TRUE(found) << r.lambda;
  }
}

TEST(ComplexExponents, ContrastOutsideIntervalHasNoImaginaryRoot) {
  const auto s = singular_exponents(5 * pi / 12, -18.684);
  EXPECT_FALSE(s.imaginary.has_value());
  for (const auto& r : s.roots) EXPECT_GT(r.lambda.real(), 1e-8);
  EXPECT_GT(s.beta0, 0.0);
}

TEST(ComplexExponents, ObtuseCornerInsideIntervalHasImaginaryPair) {
  const auto s = singular_exponents(5 * pi / 12, -1.1871);
  ASSERT_TRUE(s.imaginary.has_value());
  EXPECT_GT(s.imaginary->eta, 0.0);
}

TEST(ComplexExponents, SetInvariants) {
  const auto s = singular_exponents(pi / 6, kKappa9);
  const auto all = s.all();
  EXPECT_EQ(all.front(), cplx(0.0));
  for (const auto& r : s.roots) EXPECT_GE(r.lambda.real(), s.beta0);
  EXPECT_GT(s.beta0, 0.0);
  EXPECT_EQ(all.size(), 1 + 2 + 2 * s.roots.size());
}

TEST(ModeFunction, Normalization) {
  for (Parity p : {Parity::sym, Parity::skew}) {
    const ModeFunction m(1.9, 5 * pi / 12, p);
    EXPECT_NEAR(m(5 * pi / 24), 1.0, 1e-15);
  }
}

TEST(ModeFunction, BoundaryValues) {
  const ModeFunction skew(4.7, pi / 6, Parity::skew);
  EXPECT_NEAR(skew(pi), 0.0, 1e-15);
  const ModeFunction sym(0.71, 5 * pi / 12, Parity::sym);
  const double h = 1e-5;
  EXPECT_LE(std::abs((sym(pi) - sym(pi - h)) / h), 1e-5);
  EXPECT_LE(std::abs((sym(pi + h) - sym(pi - h)) / (2 * h)), 1e-6);
}

TEST(ModeFunction, ParityAndPeriodicity) {
  const ModeFunction skew(4.7, pi / 6, Parity::skew);
  const ModeFunction sym(0.71, 5 * pi / 12, Parity::sym);
  for (double t : {0.1, 0.7, 2.0, 3.0}) {
    EXPECT_NEAR(skew(-t), -skew(t), 1e-15);
    EXPECT_NEAR(sym(-t), sym(t), 1e-15);
    EXPECT_NEAR(sym(t + 2 * pi), sym(t), 1e-13);
  }
}

TEST(ModeFunction, MatchesDirectFormulas) {
  for (bool skew : {true, false}) {
    const ModeFunction m(2.3, 5 * pi / 12, skew ? Parity::skew : Parity::sym);
    for (double t = -pi; t <= pi; t += 0.05) {
      EXPECT_NEAR(m(t), oracle_phi(2.3, 5 * pi / 12, skew, t), 1e-13);
      const double h = 1e-6;
      if (std::abs(std::abs(t) - 5 * pi / 24) > 2 * h && std::abs(t) < pi - 2 * h) {
        EXPECT_NEAR(m.derivative(t), (m(t + h) - m(t - h)) / (2 * h), 1e-6);
      }
    }
  }
}

TEST(ModeFunction, LargeEtaDoesNotOverflow) {
  const ModeFunction m(400.0, pi / 6, Parity::skew);
  EXPECT_TRUE(std::isfinite(m(2.0)));
  EXPECT_TRUE(std::isfinite(m.derivative(0.0)));
  EXPECT_NEAR(m(pi / 12), 1.0, 1e-14);
}

TEST(ModeFunction, TransmissionCondition) {
  struct Case {
    double phi, kappa;
  };
  for (Case c : {Case{pi / 6, kKappa9}, Case{5 * pi / 12, kKappa9}, Case{5 * pi / 12, kKappa11},
                 Case{pi / 6, kKappa11}}) {
    const auto ie = imaginary_exponent(c.phi, c.kappa);
    ASSERT_TRUE(ie.has_value());
    const ModeFunction m(ie->eta, c.phi, ie->parity);
    const double eps_d = 1.0, eps_m = c.kappa;
    const double a = c.phi / 2, h = 1e-3;
    // Fourth-order one-sided differences.
    const double left = (25 * m(a) - 48 * m(a - h) + 36 * m(a - 2 * h) - 16 * m(a - 3 * h) +
                         3 * m(a - 4 * h)) / (12 * h);
    const double right = -(25 * m(a) - 48 * m(a + h) + 36 * m(a + 2 * h) - 16 * m(a + 3 * h) +
                           3 * m(a + 4 * h)) / (12 * h);
    EXPECT_NEAR(left / eps_m, right / eps_d, 1e-8 * std::max(1.0, std::abs(right)));
  }
}

TEST(FluxIntegral, Signs) {
  const auto top = imaginary_exponent(pi / 6, kKappa9);
  EXPECT_GT(flux_integral(top->eta, pi / 6, kKappa9, top->parity, 1.0), 0.0);
  const auto obt = imaginary_exponent(5 * pi / 12, kKappa11);
  EXPECT_LT(flux_integral(obt->eta, 5 * pi / 12, kKappa11, obt->parity, 1.0), 0.0);
}

TEST(FluxIntegral, ClosedFormMatchesQuadratureOnGrid) {
  int n = 0;
  for (double phi : {pi / 6, 5 * pi / 12, 2 * pi / 3, 4 * pi / 3, 11 * pi / 6}) {
    const double bs = std::max((2 * pi - phi) / phi, phi / (2 * pi - phi));
    for (int i = 1; i <= 10; ++i) {
      // Ten contrasts spread log-uniformly across (-bs, -1/bs).
      const double s = -1.0 + 2.0 * (i - 0.5) / 10.0;
      const double kappa = -std::exp(s * std::log(bs) * 0.98);
      if (std::abs(kappa + 1) < 1e-3) continue;
      const auto ie = imaginary_exponent(phi, kappa);
      ASSERT_TRUE(ie.has_value());
      const bool skew = ie->parity == Parity::skew;
      for (double eps_d : {1.0, 2.25}) {
        const double closed = flux_integral(ie->eta, phi, kappa, ie->parity, eps_d);
        const double quad = quadrature_flux(ie->eta, phi, kappa, skew, eps_d);
        EXPECT_NEAR(closed, quad, 1e-10) << phi << " " << kappa;
        EXPECT_EQ(closed > 0, kappa < -1.0) << phi << " " << kappa;
      }
      ++n;
    }
  }
  EXPECT_EQ(n, 50);
}

TEST(FluxIntegral, SmallArgumentBranch) {
  // eta phi below the series switch; compare against quadrature.
  const double phi = 0.3, eta = 0.5, kappa = -2.0;
  EXPECT_NEAR(flux_integral(eta, phi, kappa, Parity::skew, 1.0),
              quadrature_flux(eta, phi, kappa, true, 1.0), 1e-11);
}

TEST(SelectOutgoing, TableRows) {
  const auto a = select_outgoing(pi / 6, kKappa9);
  EXPECT_EQ(a.parity, Parity::skew);
  EXPECT_EQ(a.lambda.real(), 0.0);
  EXPECT_LT(a.lambda.imag(), 0.0);
  const auto b = select_outgoing(5 * pi / 12, kKappa11);
  EXPECT_EQ(b.parity, Parity::sym);
  EXPECT_GT(b.lambda.imag(), 0.0);
  EXPECT_THROW(select_outgoing(pi / 6, -20.0), DomainError);
}

TEST(SelectOutgoing, SignRelationWithFlux) {
  for (double phi : {pi / 6, 5 * pi / 12, 5 * pi / 3}) {
    for (double kappa : {-3.0, -1.5, -0.9, -0.5}) {
      const auto ie = imaginary_exponent(phi, kappa);
      if (!ie) continue;
      const auto out = select_outgoing(phi, kappa);
      const double flux = flux_integral(ie->eta, phi, kappa, ie->parity, 1.0);
      EXPECT_EQ(std::signbit(out.lambda.imag()), !std::signbit(flux));
    }
  }
}

TEST(TrackDissipative, LimitingAbsorption) {
  std::vector<cplx> path;
  std::vector<double> gammas;
  for (int j = 0; j <= 40; ++j) {
    const double g = 0.5 * std::pow(1.0 - j / 40.0, 2);
    gammas.push_back(g);
    path.push_back(drude_lossy(9.0, 13.3, g));
  }
  const auto lam = track_dissipative(pi / 6, path);
  ASSERT_EQ(lam.size(), path.size());
  for (std::size_t i = 0; i + 1 < lam.size(); ++i) EXPECT_GT(lam[i].real(), 0.0) << gammas[i];
  const auto out = select_outgoing(pi / 6, kKappa9);
  EXPECT_LE(std::abs(lam.back() - out.lambda), 1e-8);
  // Re lambda grows linearly with gamma near zero.
  const std::size_t n = lam.size();
  const double slope = (lam[n - 2].real() - lam[n - 1].real()) / gammas[n - 2];
  EXPECT_GT(slope, 0.0);
}

TEST(SingularityField, ModulusAndConjugation) {
  const ModeFunction m(4.7, pi / 6, Parity::skew);
  for (double r : {1e-4, 0.01, 0.3}) {
    for (double t : {0.1, 1.0, -2.5}) {
      const auto sp = singularity_field_polar({0, 4.7}, m, r, t);
      const auto sm = singularity_field_polar({0, -4.7}, m, r, t);
      EXPECT_NEAR(std::abs(sp.value), std::abs(m(t)), 1e-14);
      EXPECT_NEAR(std::abs(std::conj(sp.value) - sm.value), 0.0, 1e-14);
    }
  }
  EXPECT_THROW(singularity_field_polar({0, 1}, m, 0.0, 0.1), DomainError);
}

TEST(SingularityField, PhaseAlongRadius) {
  const double eta = 4.7;
  const ModeFunction m(eta, pi / 6, Parity::skew);
  const double r1 = 0.01, r2 = 0.0137;
  const auto a = singularity_field_polar({0, -eta}, m, r1, 0.2);
  const auto b = singularity_field_polar({0, -eta}, m, r2, 0.2);
  const double dphase = std::arg(b.value / a.value);
  EXPECT_NEAR(dphase, -eta * std::log(r2 / r1), 1e-12);
}

TEST(SingularityField, StripAndDiskFormsAgree) {
  const ModeFunction m(1.9, 5 * pi / 12, Parity::sym);
  const cplx l(0.0, 1.9);
  const double r = 0.02, t = 0.4;
  const auto d = singularity_field_polar(l, m, r, t);
  const auto s = singularity_field_strip(l, m, std::log(r), t);
  EXPECT_NEAR(std::abs(d.value - s.value), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(d.d_radial * r - s.d_radial), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(d.d_angular * r - s.d_angular), 0.0, 1e-12);
}
