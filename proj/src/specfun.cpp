#include "cornerpml/specfun.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cornerpml/error.hpp"

namespace cpml::specfun {
namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

void check_domain(int n, double x) {
  if (!(x > 0.0) || x > kMaxArgument) {
    throw DomainError("bessel: argument x=" + std::to_string(x) + " outside (0, " +
                      std::to_string(kMaxArgument) + "]");
  }
  if (n < -kMaxOrder || n > kMaxOrder) {
    throw DomainError("bessel: order " + std::to_string(n) + " exceeds " +
                      std::to_string(kMaxOrder));
  }
}

// J_0..J_top by Miller's algorithm. top is at least `need`, and large enough
// that the tail sums used for Y_0 and Y_1 are converged.
std::vector<double> miller_table(int need, double x) {
  const int top = std::max(need, static_cast<int>(x) + 40);
  std::vector<double> j(static_cast<std::size_t>(top) + 1, 0.0);

  if (x < 1e-8) {
    // Two-term power series; the recurrence would overflow.
    const double h = 0.5 * x;
    double lead = 1.0;
    for (int n = 0; n <= top; ++n) {
      if (n > 0) lead *= h / n;
      j[static_cast<std::size_t>(n)] = lead * (1.0 - h * h / (n + 1));
    }
    return j;
  }

  const int base = std::max(top, static_cast<int>(x));
  int start = base + 30 + static_cast<int>(std::sqrt(60.0 * base));
  start += start % 2;

  double jkp1 = 0.0;
  double jk = 1e-30;
  double even_sum = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jkm1 = (2.0 * k / x) * jk - jkp1;
    jkp1 = jk;
    jk = jkm1;
    const int idx = k - 1;
    if (idx <= top) j[static_cast<std::size_t>(idx)] = jk;
    if (idx > 0 && idx % 2 == 0) even_sum += 2.0 * jk;
    if (std::abs(jk) > 1e200) {
      jk *= 1e-200;
      jkp1 *= 1e-200;
      even_sum *= 1e-200;
      for (int m = idx; m <= top; ++m) j[static_cast<std::size_t>(m)] *= 1e-200;
    }
  }
  const double norm = even_sum + jk;
  for (double& v : j) v /= norm;
  return j;
}

// Y_0 and Y_1 from the Neumann-type expansions in J_n.
std::pair<double, double> y0_y1(const std::vector<double>& j, double x) {
  const double log_term = std::log(0.5 * x) + kEulerGamma;
  const std::size_t top = j.size() - 1;

  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t k = 1; 2 * k + 1 <= top; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s0 += sign * j[2 * k] / static_cast<double>(k);
    s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / static_cast<double>(k);
  }
  const double c = 2.0 / std::numbers::pi;
  const double y0 = c * (log_term * j[0] - 2.0 * s0);
  const double y1 = c * (log_term * j[1] - j[0] / x) + c * s1;
  return {y0, y1};
}

double parity_sign(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

std::vector<double> bessel_j_sequence(int nmax, double x) {
  check_domain(nmax, x);
  auto j = miller_table(nmax, x);
  j.resize(static_cast<std::size_t>(nmax) + 1);
  return j;
}

std::vector<double> bessel_y_sequence(int nmax, double x) {
  check_domain(nmax, x);
  const auto j = miller_table(std::max(nmax, 1), x);
  const auto [y0, y1] = y0_y1(j, x);
  std::vector<double> y(static_cast<std::size_t>(std::max(nmax, 1)) + 1);
  y[0] = y0;
  y[1] = y1;
  for (int n = 1; n < nmax; ++n) {
    y[static_cast<std::size_t>(n + 1)] =
        (2.0 * n / x) * y[static_cast<std::size_t>(n)] - y[static_cast<std::size_t>(n - 1)];
  }
  y.resize(static_cast<std::size_t>(nmax) + 1);
  return y;
}

double bessel_j(int n, double x) {
  check_domain(n, x);
  const int m = std::abs(n);
  const double v = miller_table(m, x)[static_cast<std::size_t>(m)];
  return n < 0 ? parity_sign(m) * v : v;
}

double bessel_y(int n, double x) {
  check_domain(n, x);
  const int m = std::abs(n);
  const double v = bessel_y_sequence(m, x)[static_cast<std::size_t>(m)];
  if (!std::isfinite(v)) {
    throw DomainError("bessel_y: Y_" + std::to_string(n) + "(" + std::to_string(x) +
                      ") overflows");
  }
  return n < 0 ? parity_sign(m) * v : v;
}

std::pair<cplx, cplx> hankel1_and_deriv(int n, double x) {
  check_domain(n, x);
  const HankelRatioTable table(std::abs(n), x);
  return {table.h(n), table.dh(n)};
}

HankelRatioTable::HankelRatioTable(int nmax, double x) : nmax_(nmax), x_(x) {
  check_domain(nmax, x);
  const auto j = miller_table(nmax + 1, x);
  const auto [y0, y1] = y0_y1(j, x);
  std::vector<double> y(static_cast<std::size_t>(nmax) + 2);
  y[0] = y0;
  y[1] = y1;
  for (int n = 1; n <= nmax; ++n) {
    y[static_cast<std::size_t>(n + 1)] =
        (2.0 * n / x) * y[static_cast<std::size_t>(n)] - y[static_cast<std::size_t>(n - 1)];
  }
  h_.resize(static_cast<std::size_t>(2 * nmax + 1));
  dh_.resize(h_.size());
  for (int n = 0; n <= nmax; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const cplx h(j[un], y[un]);
    // H_n' = (n/x) H_n - H_{n+1}; the same as H_{n-1} - (n/x) H_n.
    const cplx dh = (n / x) * h - cplx(j[un + 1], y[un + 1]);
    if (!std::isfinite(std::abs(h)) || !std::isfinite(std::abs(dh))) {
      throw DomainError("HankelRatioTable: order " + std::to_string(n) + " overflows at x=" +
                        std::to_string(x));
    }
    h_[static_cast<std::size_t>(nmax + n)] = h;
    dh_[static_cast<std::size_t>(nmax + n)] = dh;
    h_[static_cast<std::size_t>(nmax - n)] = parity_sign(n) * h;
    dh_[static_cast<std::size_t>(nmax - n)] = parity_sign(n) * dh;
  }
}

double HankelRatioTable::wronskian_defect() const {
  const double w = 2.0 / (std::numbers::pi * x_);
  double worst = 0.0;
  for (int n = -nmax_; n < nmax_; ++n) {
    const cplx a = h(n);
    const cplx b = h(n + 1);
    const double wr = b.real() * a.imag() - a.real() * b.imag();
    worst = std::max(worst, std::abs(wr - w) / w);
  }
  return worst;
}

cplx tanh_safe(cplx z) {
  if (z.real() > 30.0) return {1.0, 0.0};
  if (z.real() < -30.0) return {-1.0, 0.0};
  if (z.real() < 0.0) return -tanh_safe(-z);
  const cplx e = std::exp(-2.0 * z);
  return (1.0 - e) / (1.0 + e);
}

}  // namespace cpml::specfun
