#include "cornerpml/assembly.hpp"

#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cornerpml/error.hpp"
#include "cornerpml/specfun.hpp"
#include "fem.hpp"

namespace cpml {
namespace {

using detail::corners_of;
using detail::kQuad;
using detail::P2Element;
using detail::QuadPoint;

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

using Triplets = std::vector<Eigen::Triplet<cplx, int>>;

// Emits the symmetric element matrix so that A(i,j) and A(j,i) receive the
// same contributions in the same order.
void scatter(Triplets& trip, const int* dof, int n, const cplx* K) {
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(dof[i], dof[i], K[i * n + i]);
    for (int j = i + 1; j < n; ++j) {
      trip.emplace_back(dof[i], dof[j], K[i * n + j]);
      trip.emplace_back(dof[j], dof[i], K[i * n + j]);
    }
  }
}

struct Coefficients {
  cplx inv_eps[2];
  double mu[2];
  double k0 = 0.0;

  explicit Coefficients(const MaterialConfig& m) {
    inv_eps[0] = 1.0 / cplx(m.eps_d);
    inv_eps[1] = 1.0 / m.metal_permittivity();
    mu[0] = m.mu_d;
    mu[1] = m.mu_m;
    k0 = m.k0();
  }
};

// i^n for any integer n, exactly.
cplx ipow(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

void check_equispaced(const std::vector<double>& th) {
  const std::size_t n = th.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double expect = th[0] + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    if (std::abs(wrap_angle(th[i] - expect)) > 1e-9) {
      throw MeshError("DtN boundary needs nodes equispaced in angle");
    }
  }
}

}  // namespace

int Problem::fourier_order() const {
  if (n_fourier > 0) return n_fourier;
  return static_cast<int>(std::ceil(material.k() * R)) + 25;
}

DofMap build_dofmap(const Mesh& disk, const std::vector<Mesh>& strips) {
  if (disk.hole_nodes.size() != strips.size()) throw MeshError("strip count does not match the holes");
  DofMap d;
  d.disk.resize(disk.nodes.size());
  for (std::size_t i = 0; i < disk.nodes.size(); ++i) d.disk[i] = static_cast<int>(i);
  int next = static_cast<int>(disk.nodes.size());
  for (std::size_t n = 0; n < strips.size(); ++n) {
    const Mesh& s = strips[n];
    std::vector<int> map(s.nodes.size(), -1);
    if (s.interface_nodes.size() != disk.hole_nodes[n].size()) {
      throw MeshError("strip interface does not match its hole");
    }
    for (std::size_t k = 0; k < s.interface_nodes.size(); ++k) {
      map[static_cast<std::size_t>(s.interface_nodes[k])] = d.disk[static_cast<std::size_t>(disk.hole_nodes[n][k])];
    }
    // theta = pi column takes the dof of its theta = -pi partner.
    std::vector<int> partner(s.nodes.size(), -1);
    for (auto [a, b] : s.periodic) partner[static_cast<std::size_t>(b)] = a;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      if (partner[i] < 0 && map[i] < 0) map[i] = next++;
    }
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      if (partner[i] >= 0) {
        const int p = map[static_cast<std::size_t>(partner[i])];
        if (map[i] >= 0 && map[i] != p) throw MeshError("periodic node already coupled");
        map[i] = p;
      }
    }
    d.strip.push_back(std::move(map));
  }
  d.num_field = next;

  std::vector<std::pair<double, int>> outer;
  std::vector<char> kind(disk.nodes.size(), 0);  // 1 vertex, 2 midpoint
  std::size_t edges = 0;
  for (const BoundaryEdge& e : disk.boundary) {
    if (e.tag != kTagOuter) continue;
    ++edges;
    for (int k = 0; k < 3; ++k) {
      const int id = e.nodes[static_cast<std::size_t>(k)];
      if (kind[static_cast<std::size_t>(id)]) continue;
      kind[static_cast<std::size_t>(id)] = k < 2 ? 1 : 2;
      const Vec2 p = disk.nodes[static_cast<std::size_t>(id)];
      outer.push_back({std::atan2(p.y, p.x), id});
    }
  }
  std::sort(outer.begin(), outer.end());
  const double dth = edges ? 2.0 * kPi / static_cast<double>(edges) : 0.0;
  for (const auto& [t, id] : outer) {
    d.outer_theta.push_back(t);
    d.outer_nodes.push_back(id);
    d.outer_weight.push_back(kind[static_cast<std::size_t>(id)] == 1 ? dth / 3.0 : 2.0 * dth / 3.0);
  }
  return d;
}

IncidentTrace incident_trace(double alpha_inc, double k, double R, int order) {
  if (order < 0 || order + 1 > specfun::kMaxOrder) throw DomainError("Fourier order out of range");
  const double x = k * R;
  const std::vector<double> J = specfun::bessel_j_sequence(order + 1, x);
  IncidentTrace t;
  t.order = order;
  for (int n = -order; n <= order; ++n) {
    const int m = std::abs(n);
    // J_{-m} = (-1)^m J_m and likewise for the derivative.
    const double sgn = (n < 0 && (m % 2)) ? -1.0 : 1.0;
    const double jm = J[static_cast<std::size_t>(m)];
    const double djm = m == 0 ? -J[1] : 0.5 * (J[static_cast<std::size_t>(m - 1)] - J[static_cast<std::size_t>(m + 1)]);
    const cplx phase = ipow(n) * std::polar(1.0, -n * alpha_inc);
    t.u.push_back(phase * sgn * jm);
    t.du.push_back(phase * sgn * k * djm);
  }
  return t;
}

DtnData dtn_data(double k, double R, int order) {
  if (order > specfun::kMaxOrder) {
    throw DomainError("Fourier order " + std::to_string(order) + " exceeds the Bessel table limit " +
                      std::to_string(specfun::kMaxOrder));
  }
  const specfun::HankelRatioTable tab(order, k * R);
  DtnData d;
  d.order = order;
  d.k = k;
  d.R = R;
  for (int n = -order; n <= order; ++n) d.S.push_back(k * tab.ratio(n));
  return d;
}

std::vector<cplx> dtn_boundary_datum(const DtnData& d, double alpha_inc) {
  const specfun::HankelRatioTable tab(d.order, d.k * d.R);
  std::vector<cplx> g;
  for (int n = -d.order; n <= d.order; ++n) {
    g.push_back(ipow(n) * std::polar(1.0, -n * alpha_inc) * (-2.0 * kI) / (kPi * d.R * tab.h(n)));
  }
  return g;
}

LinearSystem assemble(const Problem& pb) {
  if (pb.strips.size() != pb.corners.size()) throw ConfigError("one PML setup per strip is required");
  pb.material.validate();
  for (std::size_t n = 0; n < pb.corners.size(); ++n) {
    const CornerSetup& c = pb.corners[n];
    c.pml.validate();
    if (c.lambda_out && !stretch_is_admissible(c.pml.theta, c.roots, *c.lambda_out)) {
      std::ostringstream msg;
      msg << "corner " << n + 1 << ": stretch angle " << c.pml.theta
          << " maps an exponent out of the right half-plane";
      try {
        const ThetaInterval iv = admissible_theta(c.roots, *c.lambda_out);
        msg << "; admissible interval (" << iv.lo << ", " << iv.hi << ")";
      } catch (const NumericalError&) {
        msg << "; no admissible angle exists";
      }
      throw ConfigError(msg.str());
    }
  }
  LinearSystem sys;
  sys.dofs = build_dofmap(pb.disk, pb.strips);
  const Coefficients co(pb.material);
  const double k0sq = co.k0 * co.k0;
  Triplets trip;
  trip.reserve(36 * (pb.disk.tris.size() + 2 * pb.strips.size() * 1000));

  double N[6];
  Vec2 dN[6];
  cplx K[36];
  int dof[6];

  for (std::size_t t = 0; t < pb.disk.tris.size(); ++t) {
    const auto& tri = pb.disk.tris[t];
    const P2Element el(corners_of(pb.disk, tri));
    const int r = static_cast<int>(pb.disk.region[t]);
    std::fill(K, K + 36, cplx(0.0));
    for (const QuadPoint& q : kQuad) {
      el.eval(q.l, N, dN);
      const double w = q.w * el.area;
      for (int i = 0; i < 6; ++i) {
        for (int j = i; j < 6; ++j) {
          K[i * 6 + j] += w * (co.inv_eps[r] * dot(dN[i], dN[j]) - k0sq * co.mu[r] * N[i] * N[j]);
        }
      }
    }
    for (int i = 0; i < 6; ++i) dof[i] = sys.dofs.disk[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    scatter(trip, dof, 6, K);
  }

  for (std::size_t n = 0; n < pb.strips.size(); ++n) {
    const Mesh& s = pb.strips[n];
    const PmlSpec& pml = pb.corners[n].pml;
    for (std::size_t t = 0; t < s.tris.size(); ++t) {
      const auto& tri = s.tris[t];
      const P2Element el(corners_of(s, tri));
      const int r = static_cast<int>(s.region[t]);
      std::fill(K, K + 36, cplx(0.0));
      for (const QuadPoint& q : kQuad) {
        el.eval(q.l, N, dN);
        const double z = el.point(q).x;
        const StretchedCoeffs sc = stretched_coeffs(z, pml);
        const double w = q.w * el.area;
        for (int i = 0; i < 6; ++i) {
          for (int j = i; j < 6; ++j) {
            K[i * 6 + j] += w * (co.inv_eps[r] * (sc.a_z * dN[i].x * dN[j].x + sc.a_theta * dN[i].y * dN[j].y) -
                                 k0sq * co.mu[r] * sc.m * N[i] * N[j]);
          }
        }
      }
      for (int i = 0; i < 6; ++i) dof[i] = sys.dofs.strip[n][static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
      scatter(trip, dof, 6, K);
    }
  }

  const double k = pb.material.k();
  const cplx inv_eps_d = 1.0 / cplx(pb.material.eps_d);
  if (pb.boundary == BoundaryMode::dtn) {
    const int nf = pb.fourier_order();
    const auto& nodes = sys.dofs.outer_nodes;
    const auto& th = sys.dofs.outer_theta;
    if (nodes.empty()) throw MeshError("mesh has no outer boundary");
    check_equispaced(th);
    if (2 * nf + 1 > static_cast<int>(nodes.size())) {
      throw ConfigError("Fourier order too high for the number of boundary nodes");
    }
    sys.dtn = dtn_data(k, pb.R, nf);
    // Real Fourier columns W_i (1, cos n theta_i, sin n theta_i) with
    // boundary quadrature weights W_i = R w_i.
    int aux = sys.dofs.num_field;
    auto add_column = [&](cplx sigma, auto&& column) {
      const double t = std::sqrt(std::abs(sigma));
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int di = sys.dofs.disk[static_cast<std::size_t>(nodes[i])];
        const double q = pb.R * sys.dofs.outer_weight[i] * column(th[i]);
        trip.emplace_back(di, aux, t * q);
        trip.emplace_back(aux, di, t * q);
      }
      trip.emplace_back(aux, aux, -t * t / sigma);
      ++aux;
    };
    const double base = 1.0 / (2.0 * kPi * pb.R);
    add_column(-inv_eps_d * base * sys.dtn.symbol(0), [](double) { return 1.0; });
    for (int n = 1; n <= nf; ++n) {
      const cplx sigma = -inv_eps_d * base * 2.0 * sys.dtn.symbol(n);
      add_column(sigma, [n](double t) { return std::cos(n * t); });
      add_column(sigma, [n](double t) { return std::sin(n * t); });
    }
    sys.dofs.num_aux = aux - sys.dofs.num_field;
  } else {
    // -(ik - 1/(2R)) eps_d^-1 int u v on the outer chords, 3-point Gauss.
    const cplx beta = -(kI * k - 1.0 / (2.0 * pb.R)) * inv_eps_d;
    const double gs[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (const BoundaryEdge& e : pb.disk.boundary) {
      if (e.tag != kTagOuter) continue;
      const double len = norm(pb.disk.nodes[static_cast<std::size_t>(e.nodes[1])] -
                              pb.disk.nodes[static_cast<std::size_t>(e.nodes[0])]);
      cplx M[9] = {};
      for (int g = 0; g < 3; ++g) {
        const double s = gs[g];
        const double phi[3] = {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
        for (int i = 0; i < 3; ++i) {
          for (int j = i; j < 3; ++j) M[i * 3 + j] += gw[g] * len * beta * phi[i] * phi[j];
        }
      }
      int d3[3];
      for (int i = 0; i < 3; ++i) d3[i] = sys.dofs.disk[static_cast<std::size_t>(e.nodes[static_cast<std::size_t>(i)])];
      scatter(trip, d3, 3, M);
    }
  }

  sys.A.resize(sys.dofs.size(), sys.dofs.size());
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

VectorC assemble_rhs(const Problem& pb, const LinearSystem& sys, double alpha_inc) {
  VectorC b = VectorC::Zero(sys.dofs.size());
  const double k = pb.material.k();
  const cplx inv_eps_d = 1.0 / cplx(pb.material.eps_d);
  if (pb.boundary == BoundaryMode::dtn) {
    const std::vector<cplx> g = dtn_boundary_datum(sys.dtn, alpha_inc);
    const auto& nodes = sys.dofs.outer_nodes;
    const auto& th = sys.dofs.outer_theta;
    const int nf = sys.dtn.order;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      cplx gi = g[static_cast<std::size_t>(nf)];
      for (int n = 1; n <= nf; ++n) {
        gi += g[static_cast<std::size_t>(nf + n)] * std::polar(1.0, n * th[i]) +
              g[static_cast<std::size_t>(nf - n)] * std::polar(1.0, -n * th[i]);
      }
      b[sys.dofs.disk[static_cast<std::size_t>(nodes[i])]] += inv_eps_d * pb.R * sys.dofs.outer_weight[i] * gi;
    }
  } else {
    const cplx beta = kI * k - 1.0 / (2.0 * pb.R);
    const Vec2 dir{std::cos(alpha_inc), std::sin(alpha_inc)};
    const double gs[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (const BoundaryEdge& e : pb.disk.boundary) {
      if (e.tag != kTagOuter) continue;
      const Vec2 a = pb.disk.nodes[static_cast<std::size_t>(e.nodes[0])];
      const Vec2 c = pb.disk.nodes[static_cast<std::size_t>(e.nodes[1])];
      const double len = norm(c - a);
      for (int gq = 0; gq < 3; ++gq) {
        const double s = gs[gq];
        const Vec2 x = a + s * (c - a);
        const cplx u = std::exp(kI * k * dot(dir, x));
        const cplx dr = kI * k * dot(dir, (1.0 / norm(x)) * x) * u;
        const cplx g = dr - beta * u;
        const double phi[3] = {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
        for (int i = 0; i < 3; ++i) {
          b[sys.dofs.disk[static_cast<std::size_t>(e.nodes[static_cast<std::size_t>(i)])]] +=
              gw[gq] * len * inv_eps_d * g * phi[i];
        }
      }
    }
  }
  return b;
}

double Cutoff::value(double r) const {
  if (r <= r0) return 1.0;
  if (r >= r1) return 0.0;
  const double t = (r - r0) / (r1 - r0);
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double Cutoff::dz(double r) const {
  if (r <= r0 || r >= r1) return 0.0;
  const double h = r1 - r0;
  const double t = (r - r0) / h;
  const double zr = -30.0 * t * t * (1.0 - t) * (1.0 - t) / h;
  return r * zr;
}

double Cutoff::dzz(double r) const {
  if (r <= r0 || r >= r1) return 0.0;
  const double h = r1 - r0;
  const double t = (r - r0) / h;
  const double zr = -30.0 * t * t * (1.0 - t) * (1.0 - t) / h;
  const double zrr = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (h * h);
  return r * zr + r * r * zrr;
}

VectorC assemble_dual_source(const Problem& pb, const LinearSystem& sys, std::size_t corner, cplx lambda_in,
                             const ModeFunction& mode, const Cutoff& cutoff) {
  if (corner >= pb.strips.size()) throw ConfigError("corner index out of range");
  const CornerSetup& c = pb.corners[corner];
  const double onset_r = std::exp(c.pml.z_onset());
  if (!(cutoff.r0 > onset_r && cutoff.r0 < cutoff.r1 && cutoff.r1 <= c.spec.rho)) {
    std::ostringstream msg;
    msg << "cutoff transition (" << cutoff.r0 << ", " << cutoff.r1 << ") must lie inside the unstretched strip ("
        << onset_r << ", " << c.spec.rho << ")";
    throw ConfigError(msg.str());
  }
  const Coefficients co(pb.material);
  const double k0sq = co.k0 * co.k0;
  const Mesh& s = pb.strips[corner];
  const double z_onset = c.pml.z_onset();
  VectorC G = VectorC::Zero(sys.dofs.size());
  double N[6];
  Vec2 dN[6];
  for (std::size_t t = 0; t < s.tris.size(); ++t) {
    const auto& tri = s.tris[t];
    const P2Element el(corners_of(s, tri));
    const double zmin = std::min({el.p[0].x, el.p[1].x, el.p[2].x});
    if (zmin < z_onset - 1e-12) continue;
    if (zmin >= std::log(cutoff.r1)) continue;
    const int r = static_cast<int>(s.region[t]);
    cplx Fe[6] = {};
    for (const QuadPoint& q : kQuad) {
      el.eval(q.l, N, dN);
      const Vec2 p = el.point(q);
      const double rr = std::exp(p.x);
      const cplx coef = co.inv_eps[r] * (cutoff.dzz(rr) + 2.0 * lambda_in * cutoff.dz(rr)) +
                        k0sq * co.mu[r] * rr * rr * cutoff.value(rr);
      const cplx f = coef * std::exp(lambda_in * p.x) * mode(p.y);
      for (int i = 0; i < 6; ++i) Fe[i] += q.w * el.area * f * N[i];
    }
    for (int i = 0; i < 6; ++i) G[sys.dofs.strip[corner][static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])]] += Fe[i];
  }
  return G;
}

struct Solver::Impl {
  SparseMatrixC A;
  Eigen::UmfPackLU<SparseMatrixC> lu;
};

Solver::Solver(const SparseMatrixC& A) : impl_(std::make_unique<Impl>()) {
  impl_->A = A;
  impl_->A.makeCompressed();
  impl_->lu.compute(impl_->A);
  if (impl_->lu.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "sparse LU failed (UMFPACK status " << impl_->lu.umfpackFactorizeReturncode()
        << "); the matrix is singular or numerically singular";
    throw NumericalError(msg.str());
  }
}

Solver::~Solver() = default;

VectorC Solver::solve(const VectorC& b, double* residual) const {
  const double nb = b.norm();
  if (nb == 0.0) {
    if (residual) *residual = 0.0;
    return VectorC::Zero(b.size());
  }
  VectorC x = impl_->lu.solve(b);
  VectorC r = b - impl_->A * x;
  double rel = r.norm() / nb;
  for (int it = 0; it < 3 && rel > 1e-14; ++it) {
    const VectorC dx = impl_->lu.solve(r);
    const VectorC x2 = x + dx;
    const VectorC r2 = b - impl_->A * x2;
    const double rel2 = r2.norm() / nb;
    if (!(rel2 < rel)) break;
    x = x2;
    r = r2;
    rel = rel2;
  }
  if (!std::isfinite(rel)) throw NumericalError("solve produced non-finite values");
  if (residual) *residual = rel;
  return x;
}

std::vector<cplx> disk_values(const LinearSystem& sys, const VectorC& x) {
  std::vector<cplx> v(sys.dofs.disk.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[sys.dofs.disk[i]];
  return v;
}

std::vector<cplx> strip_values(const LinearSystem& sys, const VectorC& x, std::size_t corner) {
  const auto& map = sys.dofs.strip.at(corner);
  std::vector<cplx> v(map.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[map[i]];
  return v;
}

}  // namespace cpml
