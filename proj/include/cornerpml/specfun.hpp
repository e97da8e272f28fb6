#pragma once

// Real-argument Bessel and Hankel functions of integer order, plus
// overflow-safe complex hyperbolic helpers.

#include <complex>
#include <utility>
#include <vector>

namespace cpml::specfun {

using cplx = std::complex<double>;

/// Largest supported |order|.
inline constexpr int kMaxOrder = 80;
/// Largest supported argument.
inline constexpr double kMaxArgument = 100.0;

/// J_n(x) by Miller backward recurrence, normalized with J_0 + 2 sum J_2m = 1.
/// Throws DomainError for x <= 0, x > kMaxArgument or |n| > kMaxOrder.
double bessel_j(int n, double x);

/// Y_n(x): Neumann-series Y_0 and Y_1, forward recurrence above.
/// Relative accuracy degrades near zeros of Y_n.
double bessel_y(int n, double x);

/// J_0..J_nmax(x) in one backward sweep.
std::vector<double> bessel_j_sequence(int nmax, double x);
/// Y_0..Y_nmax(x) by forward recurrence.
std::vector<double> bessel_y_sequence(int nmax, double x);

/// (H1_n(x), H1_n'(x)) with H1_n' = H1_{n-1} - (n/x) H1_n.
std::pair<cplx, cplx> hankel1_and_deriv(int n, double x);

/// H1_n and H1_n' for n in [-nmax, nmax] at a fixed argument.
class HankelRatioTable {
 public:
  HankelRatioTable(int nmax, double x);

  int max_order() const { return nmax_; }
  double argument() const { return x_; }
  cplx h(int n) const { return h_[static_cast<std::size_t>(n + nmax_)]; }
  cplx dh(int n) const { return dh_[static_cast<std::size_t>(n + nmax_)]; }
  /// H1_n'(x) / H1_n(x).
  cplx ratio(int n) const { return dh(n) / h(n); }

  /// max over stored n of |J_{n+1}Y_n - J_nY_{n+1} - 2/(pi x)| / (2/(pi x)).
  double wronskian_defect() const;

 private:
  int nmax_;
  double x_;
  std::vector<cplx> h_;
  std::vector<cplx> dh_;
};

/// tanh(z) saturating to +-1 for |Re z| > 30.
cplx tanh_safe(cplx z);

}  // namespace cpml::specfun
