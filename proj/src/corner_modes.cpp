#include "cornerpml/corner_modes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "cornerpml/error.hpp"
#include "cornerpml/materials.hpp"
#include "cornerpml/specfun.hpp"

namespace cpml {
namespace {

constexpr double kPi = std::numbers::pi;

double b_of(double phi) {
  if (!(phi > 0.0 && phi < 2.0 * kPi) || phi == kPi) {
    throw DomainError("aperture must lie in (0, 2pi) without pi, got " + std::to_string(phi));
  }
  return (2.0 * kPi - phi) / phi;
}

cplx kappa_power(cplx kappa, Parity parity) {
  if (kappa == 0.0) throw DomainError("contrast must be nonzero");
  return parity == Parity::skew ? kappa : 1.0 / kappa;
}

// sinh(x)/sinh(y), cosh(x)/cosh(y) and mixed ratios for 0 <= x <= y, y > 0,
// without overflow.
double sinh_ratio(double x, double y) {
  return std::exp(x - y) * std::expm1(-2.0 * x) / std::expm1(-2.0 * y);
}
double cosh_ratio(double x, double y) {
  return std::exp(x - y) * (1.0 + std::exp(-2.0 * x)) / (1.0 + std::exp(-2.0 * y));
}
double cosh_over_sinh(double x, double y) {
  return -std::exp(x - y) * (1.0 + std::exp(-2.0 * x)) / std::expm1(-2.0 * y);
}
double sinh_over_cosh(double x, double y) {
  return -std::exp(x - y) * std::expm1(-2.0 * x) / (1.0 + std::exp(-2.0 * y));
}

// eta * integral of Phi^2 over one side of width x / eta, doubled (both sides
// of the bisector): (sinh x -+ x)/(cosh x -+ 1).
double aleph_scaled(double x, Parity parity) {
  if (parity == Parity::sym) {
    const double e = std::exp(-x);
    return (1.0 - e * e + 2.0 * x * e) / ((1.0 + e) * (1.0 + e));
  }
  if (x < 0.5) {
    double term = x * x * x / 6.0;
    double num = 0.0;
    for (int k = 1; k < 30 && std::abs(term) > 1e-20 * std::abs(num); ++k) {
      num += term;
      term *= x * x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    const double s = std::sinh(0.5 * x);
    return num / (2.0 * s * s);
  }
  const double e = std::exp(-x);
  return (1.0 - e * e - 2.0 * x * e) / ((1.0 - e) * (1.0 - e));
}

// G(lambda) = g(i lambda phi / 2) and its lambda-derivative.
struct LambdaFunction {
  double phi;
  double b;
  cplx kappa;
  Parity parity;

  cplx z(cplx lambda) const { return cplx(0.0, 0.5 * phi) * lambda; }
  cplx operator()(cplx lambda) const { return dispersion_entire(z(lambda), kappa, b, parity); }
  cplx deriv(cplx lambda) const {
    return dispersion_entire_deriv(z(lambda), kappa, b, parity) * cplx(0.0, 0.5 * phi);
  }
};

struct BoundaryRoot {};

class ArgumentPrinciple {
 public:
  explicit ArgumentPrinciple(const LambdaFunction& f) : f_(f) {}

  // Winding number of f on the counterclockwise boundary of the rectangle.
  int count(double x0, double x1, double y0, double y1) const {
    const cplx c[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    double total = 0.0;
    for (int e = 0; e < 4; ++e) {
      const cplx a = c[e];
      const cplx b = c[(e + 1) % 4];
      constexpr int kPieces = 16;
      cplx prev_pt = a;
      cplx prev_val = eval(a);
      for (int k = 1; k <= kPieces; ++k) {
        const cplx pt = a + (b - a) * (static_cast<double>(k) / kPieces);
        const cplx val = eval(pt);
        total += segment(prev_pt, pt, prev_val, val, 0);
        prev_pt = pt;
        prev_val = val;
      }
    }
    const double w = total / (2.0 * kPi);
    const double r = std::round(w);
    if (std::abs(w - r) > 0.1) throw BoundaryRoot{};
    return static_cast<int>(r);
  }

 private:
  cplx eval(cplx p) const {
    const cplx v = f_(p);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericalError("dispersion function overflow in root window");
    }
    if (std::abs(v) < 1e-12) throw BoundaryRoot{};
    return v;
  }

  double segment(cplx a, cplx b, cplx fa, cplx fb, int depth) const {
    const cplx m = 0.5 * (a + b);
    const cplx fm = eval(m);
    const double d1 = std::arg(fm / fa);
    const double d2 = std::arg(fb / fm);
    if (std::abs(d1) < 0.25 && std::abs(d2) < 0.25) return d1 + d2;
    if (depth > 45) throw BoundaryRoot{};
    return segment(a, m, fa, fm, depth + 1) + segment(m, b, fm, fb, depth + 1);
  }

  const LambdaFunction& f_;
};

std::optional<cplx> newton(const LambdaFunction& f, cplx guess, int max_iter, int* iterations) {
  cplx x = guess;
  for (int it = 0; it < max_iter; ++it) {
    const cplx fx = f(x);
    const cplx dfx = f.deriv(x);
    if (dfx == 0.0) return std::nullopt;
    const cplx step = fx / dfx;
    x -= step;
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return std::nullopt;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(x))) {
      // One polishing step.
      x -= f(x) / f.deriv(x);
      if (iterations) *iterations = it + 1;
      return x;
    }
  }
  return std::nullopt;
}

double residual_of(const LambdaFunction& f, cplx lambda) {
  const cplx z = f.z(lambda);
  const double scale = std::abs(std::cosh(z) * std::cosh(f.b * z));
  return std::abs(f(lambda)) / std::max(1.0, scale);
}

bool is_pole_point(const LambdaFunction& f, cplx lambda) {
  const cplx z = f.z(lambda);
  const cplx bz = f.b * z;
  return std::abs(std::cosh(z)) < 1e-7 * std::max(1.0, std::abs(std::sinh(z))) &&
         std::abs(std::cosh(bz)) < 1e-7 * std::max(1.0, std::abs(std::sinh(bz)));
}

class RootSearch {
 public:
  RootSearch(const LambdaFunction& f) : f_(f), ap_(f) {}

  void run(double x0, double x1, double y0, double y1, int n, int depth) {
    if (n == 0) return;
    const double size = std::max(x1 - x0, y1 - y0);
    if (n == 1) {
      int iters = 0;
      const cplx centre(0.5 * (x0 + x1), 0.5 * (y0 + y1));
      if (auto r = newton(f_, centre, 60, &iters)) {
        const double slack = 1e-10 * (1.0 + size);
        if (r->real() >= x0 - slack && r->real() <= x1 + slack && r->imag() >= y0 - slack &&
            r->imag() <= y1 + slack) {
          roots_.push_back(*r);
          return;
        }
      }
    }
    if (size < 1e-9 || depth > 80) {
      throw NumericalError("root search failed to isolate " + std::to_string(n) +
                           " root(s) near " + std::to_string(x0) + "+" + std::to_string(y0) +
                           "i; multiple root suspected");
    }
    // Split across the longer side; retry other cut positions when a cut
    // passes too close to a root.
    const bool vertical = x1 - x0 >= y1 - y0;
    for (int attempt = 0; attempt < 24; ++attempt) {
      const double frac = 0.5 + 0.2 * (2.0 * std::fmod(0.2713 + attempt * 0.6180339887498949, 1.0) - 1.0);
      double cut = 0.0;
      int na = 0, nb = 0;
      try {
        if (vertical) {
          cut = x0 + frac * (x1 - x0);
          na = ap_.count(x0, cut, y0, y1);
          nb = ap_.count(cut, x1, y0, y1);
        } else {
          cut = y0 + frac * (y1 - y0);
          na = ap_.count(x0, x1, y0, cut);
          nb = ap_.count(x0, x1, cut, y1);
        }
      } catch (const BoundaryRoot&) {
        continue;
      }
      if (na + nb != n) continue;
      if (vertical) {
        run(x0, cut, y0, y1, na, depth + 1);
        run(cut, x1, y0, y1, nb, depth + 1);
      } else {
        run(x0, x1, y0, cut, na, depth + 1);
        run(x0, x1, cut, y1, nb, depth + 1);
      }
      return;
    }
    throw NumericalError("root search could not split a rectangle without a boundary root");
  }

  const std::vector<cplx>& roots() const { return roots_; }
  const ArgumentPrinciple& counter() const { return ap_; }

 private:
  const LambdaFunction& f_;
  ArgumentPrinciple ap_;
  std::vector<cplx> roots_;
};

bool lambda_less(const Exponent& a, const Exponent& b) {
  const double ra = std::round(a.lambda.real() * 1e9);
  const double rb = std::round(b.lambda.real() * 1e9);
  if (ra != rb) return ra < rb;
  if (a.lambda.imag() != b.lambda.imag()) return a.lambda.imag() < b.lambda.imag();
  return a.parity == Parity::sym && b.parity == Parity::skew;
}

}  // namespace

std::string to_string(Parity p) { return p == Parity::sym ? "sym" : "skew"; }

double CornerSpec::b() const { return b_of(aperture); }

std::pair<double, double> CornerSpec::local_polar(Vec2 p) const {
  const Vec2 d = p - position;
  return {norm(d), wrap_angle(std::atan2(d.y, d.x) - bisector)};
}

Vec2 CornerSpec::from_local(double r, double theta) const {
  return position + polar(r, theta + bisector);
}

cplx dispersion(cplx z, cplx kappa, double b, Parity parity) {
  if (!(b > 0.0)) throw DomainError("b must be positive");
  return kappa_power(kappa, parity) * specfun::tanh_safe(z) + specfun::tanh_safe(b * z);
}

cplx dispersion_entire(cplx z, cplx kappa, double b, Parity parity) {
  const cplx bz = b * z;
  return kappa_power(kappa, parity) * std::sinh(z) * std::cosh(bz) + std::sinh(bz) * std::cosh(z);
}

cplx dispersion_entire_deriv(cplx z, cplx kappa, double b, Parity parity) {
  const cplx bz = b * z;
  const cplx sz = std::sinh(z), cz = std::cosh(z), sb = std::sinh(bz), cb = std::cosh(bz);
  return kappa_power(kappa, parity) * (cz * cb + b * sz * sb) + b * cb * cz + sb * sz;
}

std::optional<ImaginaryExponent> imaginary_exponent(double phi, double kappa) {
  const double b = b_of(phi);
  if (!(kappa < 0.0)) throw DomainError("imaginary exponents need a negative contrast");
  if (kappa == -1.0) throw DomainError("contrast -1 is degenerate: every exponent is singular");
  const double bs = std::max(b, 1.0 / b);
  if (!(kappa > -bs && kappa < -1.0 / bs)) return std::nullopt;

  ImaginaryExponent out;
  out.parity = ((phi < kPi) == (kappa < -1.0)) ? Parity::skew : Parity::sym;
  const double kp = out.parity == Parity::skew ? kappa : 1.0 / kappa;
  auto f = [&](double t) { return kp * std::tanh(t) + std::tanh(b * t); };

  double lo = 1e-8;
  double hi = 1.0;
  const double flo = f(lo);
  while (std::signbit(f(hi)) == std::signbit(flo)) {
    hi *= 2.0;
    if (hi > 1e8) throw NumericalError("no sign change found for the imaginary exponent");
  }
  while (hi - lo > 1e-13 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (std::signbit(f(mid)) == std::signbit(flo)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.t_lo = lo;
  out.t_hi = hi;
  out.eta = (lo + hi) / phi;
  return out;
}

std::vector<Exponent> complex_exponents(double phi, cplx kappa, const RootWindow& window) {
  const double b = b_of(phi);
  if (kappa == 0.0 || kappa == -1.0) throw DomainError("contrast must differ from 0 and -1");
  if (!(window.re_max > window.re_min && window.re_min > 0.0 && window.im_max > 0.0)) {
    throw DomainError("invalid root window");
  }
  std::vector<Exponent> out;
  for (Parity parity : {Parity::sym, Parity::skew}) {
    const LambdaFunction f{phi, b, kappa, parity};
    bool done = false;
    for (int attempt = 0; attempt < 6 && !done; ++attempt) {
      const double jitter = 1.0 + 1.37e-7 * attempt;
      const double x0 = window.re_min * jitter;
      const double x1 = window.re_max * jitter;
      const double y1 = window.im_max * jitter;
      RootSearch search(f);
      try {
        const int n = search.counter().count(x0, x1, -y1, y1);
        search.run(x0, x1, -y1, y1, n, 0);
        if (static_cast<int>(search.roots().size()) != n) continue;
      } catch (const BoundaryRoot&) {
        continue;
      }
      for (cplx r : search.roots()) {
        out.push_back({r, parity, is_pole_point(f, r), residual_of(f, r)});
      }
      done = true;
    }
    if (!done) throw NumericalError("root on the window boundary persists after jitter");
  }
  std::sort(out.begin(), out.end(), lambda_less);
  return out;
}

int winding_number(double phi, cplx kappa, Parity parity, const RootWindow& window,
                   int samples_per_edge) {
  const LambdaFunction f{phi, b_of(phi), kappa, parity};
  const double x0 = window.re_min, x1 = window.re_max, y0 = -window.im_max, y1 = window.im_max;
  const cplx c[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  double total = 0.0;
  cplx prev = f(c[0]);
  for (int e = 0; e < 4; ++e) {
    for (int k = 1; k <= samples_per_edge; ++k) {
      const cplx p = c[e] + (c[(e + 1) % 4] - c[e]) * (static_cast<double>(k) / samples_per_edge);
      const cplx v = f(p);
      total += std::arg(v / prev);
      prev = v;
    }
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

SingularExponentSet singular_exponents(double phi, cplx kappa, const RootWindow& window) {
  SingularExponentSet s;
  s.phi = phi;
  s.kappa = kappa;
  s.b = b_of(phi);
  if (kappa.imag() == 0.0 && kappa.real() < 0.0) {
    s.imaginary = imaginary_exponent(phi, kappa.real());
  }
  s.roots = complex_exponents(phi, kappa, window);
  s.beta0 = std::numeric_limits<double>::infinity();
  for (const auto& r : s.roots) s.beta0 = std::min(s.beta0, r.lambda.real());
  return s;
}

std::vector<cplx> SingularExponentSet::all() const {
  std::vector<cplx> v{0.0};
  if (imaginary) {
    v.emplace_back(0.0, imaginary->eta);
    v.emplace_back(0.0, -imaginary->eta);
  }
  for (const auto& r : roots) {
    v.push_back(r.lambda);
    v.push_back(-r.lambda);
  }
  return v;
}

ModeFunction::ModeFunction(double eta, double phi, Parity parity)
    : eta_(eta), phi_(phi), parity_(parity) {
  b_of(phi);
  if (!(eta > 0.0)) throw DomainError("mode needs eta > 0");
}

double ModeFunction::operator()(double theta) const {
  const double t = wrap_angle(theta);
  const double a = std::abs(t);
  const double half = 0.5 * phi_;
  double v;
  if (parity_ == Parity::skew) {
    v = a <= half ? sinh_ratio(eta_ * a, eta_ * half)
                  : sinh_ratio(eta_ * (kPi - a), eta_ * (kPi - half));
    return t < 0.0 ? -v : v;
  }
  return a <= half ? cosh_ratio(eta_ * a, eta_ * half)
                   : cosh_ratio(eta_ * (kPi - a), eta_ * (kPi - half));
}

double ModeFunction::derivative(double theta) const {
  const double t = wrap_angle(theta);
  const double a = std::abs(t);
  const double half = 0.5 * phi_;
  if (parity_ == Parity::skew) {
    // Odd function: the derivative is even.
    return a <= half ? eta_ * cosh_over_sinh(eta_ * a, eta_ * half)
                     : -eta_ * cosh_over_sinh(eta_ * (kPi - a), eta_ * (kPi - half));
  }
  const double d = a <= half ? eta_ * sinh_over_cosh(eta_ * a, eta_ * half)
                             : -eta_ * sinh_over_cosh(eta_ * (kPi - a), eta_ * (kPi - half));
  return t < 0.0 ? -d : d;
}

double flux_integral(double eta, double phi, double kappa, Parity parity, double eps_d) {
  b_of(phi);
  if (!(eta > 0.0) || !(eps_d > 0.0) || kappa == 0.0) {
    throw DomainError("flux_integral needs eta > 0, eps_d > 0 and nonzero contrast");
  }
  const double aleph_m = aleph_scaled(eta * phi, parity) / eta;
  const double aleph_d = aleph_scaled(eta * (2.0 * kPi - phi), parity) / eta;
  return aleph_m / (kappa * eps_d) + aleph_d / eps_d;
}

OutgoingMode select_outgoing(double phi, double kappa, const ImaginaryExponent& ie) {
  OutgoingMode m;
  m.eta = ie.eta;
  m.parity = ie.parity;
  m.lambda = kappa < -1.0 ? cplx(0.0, -ie.eta) : cplx(0.0, ie.eta);
  (void)phi;
  return m;
}

OutgoingMode select_outgoing(double phi, double kappa) {
  const auto ie = imaginary_exponent(phi, kappa);
  if (!ie) {
    throw DomainError("contrast " + std::to_string(kappa) +
                      " lies outside the open critical interval: no black-hole wave");
  }
  return select_outgoing(phi, kappa, *ie);
}

std::vector<cplx> track_dissipative(double phi, const std::vector<cplx>& kappa_path) {
  if (kappa_path.empty()) return {};
  const cplx k_end = kappa_path.back();
  if (std::abs(k_end.imag()) > 1e-14 * std::abs(k_end)) {
    throw DomainError("dissipative path must end at a real contrast");
  }
  const OutgoingMode out = select_outgoing(phi, k_end.real());
  const double b = b_of(phi);
  const double jump_limit = 0.3 * std::max(1.0, out.eta);

  // Continue backwards from the exact lossless root, then reverse.
  auto solve_at = [&](cplx kappa, cplx guess) -> std::optional<cplx> {
    const LambdaFunction f{phi, b, kappa, out.parity};
    int iters = 0;
    auto r = newton(f, guess, 20, &iters);
    if (!r || iters > 12 || std::abs(*r - guess) > jump_limit) return std::nullopt;
    return r;
  };
  std::function<cplx(cplx, cplx, cplx, int)> advance = [&](cplx k_from, cplx k_to, cplx lam,
                                                           int depth) -> cplx {
    if (auto r = solve_at(k_to, lam)) return *r;
    if (depth > 30) throw NumericalError("dissipative continuation failed to converge");
    const cplx k_mid = 0.5 * (k_from + k_to);
    const cplx lam_mid = advance(k_from, k_mid, lam, depth + 1);
    return advance(k_mid, k_to, lam_mid, depth + 1);
  };

  std::vector<cplx> lambdas(kappa_path.size());
  cplx lam = solve_at(cplx(k_end.real(), 0.0), out.lambda).value_or(out.lambda);
  lambdas.back() = lam;
  for (std::size_t i = kappa_path.size() - 1; i-- > 0;) {
    lam = advance(kappa_path[i + 1], kappa_path[i], lam, 0);
    lambdas[i] = lam;
  }
  return lambdas;
}

FieldValue singularity_field_polar(cplx lambda, const ModeFunction& mode, double r, double theta) {
  if (!(r > 0.0)) throw DomainError("singularity field needs r > 0");
  const cplx e = std::exp(lambda * std::log(r));
  const double p = mode(theta);
  return {e * p, lambda * e * p / r, e * mode.derivative(theta) / r};
}

FieldValue singularity_field_strip(cplx lambda, const ModeFunction& mode, double z, double theta) {
  const cplx e = std::exp(lambda * z);
  const double p = mode(theta);
  return {e * p, lambda * e * p, e * mode.derivative(theta)};
}

}  // namespace cpml
