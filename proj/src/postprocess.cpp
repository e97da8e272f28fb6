#include "cornerpml/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cornerpml/error.hpp"
#include "fem.hpp"

namespace cpml {
namespace {

constexpr double kPi = std::numbers::pi;

using detail::barycentric;
using detail::corners_of;
using detail::kQuad;
using detail::P2Element;

// Column/row layout of a structured strip: node = row * cols + col.
struct StripLayout {
  int cols = 0;
  int rows = 0;

  explicit StripLayout(const Mesh& s) {
    cols = static_cast<int>(s.interface_nodes.size()) + 1;
    if (cols < 3 || s.nodes.size() % static_cast<std::size_t>(cols) != 0) {
      throw MeshError("strip mesh does not have the structured layout");
    }
    rows = static_cast<int>(s.nodes.size()) / cols;
  }

  double z(const Mesh& s, int row) const { return s.nodes[static_cast<std::size_t>(row * cols)].x; }
  double theta(const Mesh& s, int col) const { return s.nodes[static_cast<std::size_t>(col)].y; }
};

// Uniform bucket grid over the triangles of a mesh.
class Locator {
 public:
  Locator() = default;

  explicit Locator(const Mesh& m) : mesh_(&m) {
    if (m.nodes.empty()) return;
    double x1 = m.nodes[0].x, y1 = m.nodes[0].y;
    x0_ = x1;
    y0_ = y1;
    for (const Vec2& p : m.nodes) {
      x0_ = std::min(x0_, p.x);
      y0_ = std::min(y0_, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    const double area = std::max((x1 - x0_) * (y1 - y0_), 1e-300);
    cell_ = std::sqrt(area / static_cast<double>(std::max<std::size_t>(m.tris.size(), 1)));
    nx_ = std::max(1, static_cast<int>(std::ceil((x1 - x0_) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((y1 - y0_) / cell_)));
    buckets_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), {});
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
      const auto v = corners_of(m, m.tris[t]);
      const double ax = std::min({v[0].x, v[1].x, v[2].x}), bx = std::max({v[0].x, v[1].x, v[2].x});
      const double ay = std::min({v[0].y, v[1].y, v[2].y}), by = std::max({v[0].y, v[1].y, v[2].y});
      for (int i = cx(ax); i <= cx(bx); ++i) {
        for (int j = cy(ay); j <= cy(by); ++j) buckets_[index(i, j)].push_back(static_cast<int>(t));
      }
    }
  }

  // Containing triangle and barycentric coordinates, or -1.
  int find(Vec2 p, std::array<double, 3>& l) const {
    if (!mesh_ || buckets_.empty()) return -1;
    const double fx = (p.x - x0_) / cell_, fy = (p.y - y0_) / cell_;
    if (fx < -1e-9 || fy < -1e-9 || fx > nx_ + 1e-9 || fy > ny_ + 1e-9) return -1;
    const double tol = 1e-10;
    int best = -1;
    double best_min = -1e300;
    for (int t : buckets_[index(cx(p.x), cy(p.y))]) {
      const P2Element el(corners_of(*mesh_, mesh_->tris[static_cast<std::size_t>(t)]));
      const auto b = barycentric(el, p);
      const double mn = std::min({b[0], b[1], b[2]});
      if (mn > best_min) {
        best_min = mn;
        best = t;
        l = b;
      }
    }
    return best_min >= -tol ? best : -1;
  }

 private:
  int cx(double x) const { return std::clamp(static_cast<int>((x - x0_) / cell_), 0, nx_ - 1); }
  int cy(double y) const { return std::clamp(static_cast<int>((y - y0_) / cell_), 0, ny_ - 1); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }

  const Mesh* mesh_ = nullptr;
  double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> buckets_;
};

const double kGaussS[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
const double kGaussW[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace

CornerMode corner_mode(double phi, double kappa, double eps_d) {
  const OutgoingMode out = select_outgoing(phi, kappa);
  CornerMode m;
  m.kappa = kappa;
  m.lambda_out = out.lambda;
  m.eta = out.eta;
  m.parity = out.parity;
  m.flux_integral = flux_integral(out.eta, phi, kappa, out.parity, eps_d);
  m.mode = ModeFunction(out.eta, phi, out.parity);
  return m;
}

double exterior_flux(const Problem& pb, const LinearSystem& sys, const VectorC& x, double alpha_inc) {
  if (x.size() != sys.dofs.size()) throw ConfigError("solution size does not match the system");
  const double inv_eps_d = 1.0 / pb.material.eps_d;
  if (pb.boundary == BoundaryMode::dtn) {
    const int nf = sys.dtn.order;
    if (nf <= 0 || sys.dofs.outer_nodes.empty()) throw ConfigError("solution carries no boundary Fourier data");
    const std::vector<cplx> g = dtn_boundary_datum(sys.dtn, alpha_inc);
    const auto& th = sys.dofs.outer_theta;
    const auto& w = sys.dofs.outer_weight;
    cplx sum = 0.0;
    for (int n = -nf; n <= nf; ++n) {
      cplx un = 0.0;
      for (std::size_t i = 0; i < th.size(); ++i) {
        un += w[i] * x[sys.dofs.disk[static_cast<std::size_t>(sys.dofs.outer_nodes[i])]] * std::polar(1.0, -n * th[i]);
      }
      un /= 2.0 * kPi;
      sum += (sys.dtn.symbol(n) * un + g[static_cast<std::size_t>(n + nf)]) * std::conj(un);
    }
    return inv_eps_d * std::imag(2.0 * kPi * pb.R * sum);
  }
  // First-order surrogate: d_r u = (ik - 1/(2R)) u + (d_r u_inc - (ik - 1/(2R)) u_inc).
  const double k = pb.material.k();
  const cplx beta{-1.0 / (2.0 * pb.R), k};
  const Vec2 dir{std::cos(alpha_inc), std::sin(alpha_inc)};
  double J = 0.0;
  bool any = false;
  for (const BoundaryEdge& e : pb.disk.boundary) {
    if (e.tag != kTagOuter) continue;
    any = true;
    const Vec2 a = pb.disk.nodes[static_cast<std::size_t>(e.nodes[0])];
    const Vec2 c = pb.disk.nodes[static_cast<std::size_t>(e.nodes[1])];
    const double len = norm(c - a);
    cplx ue[3];
    for (int i = 0; i < 3; ++i) ue[i] = x[sys.dofs.disk[static_cast<std::size_t>(e.nodes[static_cast<std::size_t>(i)])]];
    for (int q = 0; q < 3; ++q) {
      const double s = kGaussS[q];
      const double phi[3] = {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
      const cplx u = phi[0] * ue[0] + phi[1] * ue[1] + phi[2] * ue[2];
      const Vec2 p = a + s * (c - a);
      const cplx ui = std::exp(cplx(0.0, k * dot(dir, p)));
      const cplx dri = cplx(0.0, k * dot(dir, (1.0 / norm(p)) * p)) * ui;
      J += kGaussW[q] * len * inv_eps_d * std::imag((beta * u + dri - beta * ui) * std::conj(u));
    }
  }
  if (!any) throw ConfigError("mesh has no outer boundary trace");
  return J;
}

double default_overlap_depth(const PmlSpec& pml) { return std::log(pml.rho) - 0.5 * pml.L0; }

cplx extract_coefficient_overlap(const Problem& pb, const LinearSystem& sys, const VectorC& x, std::size_t corner,
                                 const CornerMode& mode, double z_eval) {
  if (corner >= pb.strips.size()) throw ConfigError("corner index out of range");
  const PmlSpec& pml = pb.corners[corner].pml;
  if (!(z_eval > pml.z_onset() && z_eval <= pml.z_right())) {
    std::ostringstream msg;
    msg << "overlap depth z = " << z_eval << " is outside the unstretched strip (" << pml.z_onset() << ", "
        << pml.z_right() << "]";
    throw ConfigError(msg.str());
  }
  const Mesh& s = pb.strips[corner];
  const StripLayout lay(s);
  int row = 0;
  double best = 1e300;
  for (int r = 0; r < lay.rows; ++r) {
    const double z = lay.z(s, r);
    if (z < pml.z_onset() - 1e-12) continue;
    if (std::abs(z - z_eval) < best) {
      best = std::abs(z - z_eval);
      row = r;
    }
  }
  const double z = lay.z(s, row);
  const std::vector<cplx> u = strip_values(sys, x, corner);
  const double phi = mode.mode.phi();
  const double eps_d = pb.material.eps_d;
  // Simpson on each theta interval (exact for the P2 trace); the same rule
  // normalizes Phi so a pure mode is recovered to rounding.
  cplx num = 0.0;
  double den = 0.0;
  for (int c = 0; c + 2 < lay.cols; c += 2) {
    const double t0 = lay.theta(s, c), t2 = lay.theta(s, c + 2);
    const double inv_eps = std::abs(0.5 * (t0 + t2)) < 0.5 * phi ? 1.0 / (mode.kappa * eps_d) : 1.0 / eps_d;
    const double w[3] = {(t2 - t0) / 6.0, 4.0 * (t2 - t0) / 6.0, (t2 - t0) / 6.0};
    for (int j = 0; j < 3; ++j) {
      const int col = c + j;
      const double ph = mode.mode(lay.theta(s, col));
      num += w[j] * inv_eps * u[static_cast<std::size_t>(row * lay.cols + col)] * ph;
      den += w[j] * inv_eps * ph * ph;
    }
  }
  if (den == 0.0) throw NumericalError("vanishing mode normalization");
  return std::exp(-mode.lambda_out * z) * num / den;
}

Cutoff default_cutoff(double rho) { return {0.6 * rho, 0.9 * rho}; }

cplx dual_coefficient(const VectorC& w, const VectorC& rhs, const CornerMode& mode) {
  if (w.size() != rhs.size()) throw ConfigError("dual solution and load vector differ in size");
  return rhs.cwiseProduct(w).sum() / (2.0 * mode.lambda_out * mode.flux_integral);
}

DualResult extract_coefficient_dual(const Problem& pb, const LinearSystem& sys, const Solver& solver,
                                    const VectorC& rhs, const VectorC& forward, std::size_t corner,
                                    const CornerMode& mode, const Cutoff& cutoff) {
  const VectorC G = assemble_dual_source(pb, sys, corner, -mode.lambda_out, mode.mode, cutoff);
  DualResult r;
  r.w = solver.solve(G);
  r.b = dual_coefficient(r.w, rhs, mode);
  if (forward.size() == G.size()) r.b_forward = dual_coefficient(forward, G, mode);
  return r;
}

double corner_flux(cplx b, double eta, double flux_integral) {
  return -eta * std::norm(b) * std::abs(flux_integral);
}

double EnergyReport::sum_J() const {
  double s = 0.0;
  for (const CornerReport& c : corners) s += c.J;
  return s;
}

EnergyReport make_energy_report(double J_ext, std::vector<CornerReport> corners, double floor) {
  EnergyReport r;
  r.J_ext = J_ext;
  r.corners = std::move(corners);
  r.mismatch = std::abs(J_ext - r.sum_J()) / std::max(std::abs(J_ext), floor);
  return r;
}

double energy_floor(double k0, double R) { return 1e-14 * k0 * 2.0 * kPi * R; }

cplx p2_interpolate(const std::array<int, 6>& tri, const std::vector<cplx>& values, const double l[3]) {
  cplx v = 0.0;
  for (int k = 0; k < 3; ++k) {
    v += l[k] * (2.0 * l[k] - 1.0) * values[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
    v += 4.0 * l[k] * l[(k + 1) % 3] * values[static_cast<std::size_t>(tri[static_cast<std::size_t>(3 + k)])];
  }
  return v;
}

struct FieldSampler::Impl {
  const Problem* pb = nullptr;
  std::vector<cplx> disk;
  std::vector<std::vector<cplx>> strips;
  Locator disk_loc;
  std::vector<Locator> strip_loc;
};

FieldSampler::FieldSampler(const Problem& pb, const LinearSystem& sys, const VectorC& x) {
  auto impl = std::make_shared<Impl>();
  impl->pb = &pb;
  impl->disk = disk_values(sys, x);
  impl->disk_loc = Locator(pb.disk);
  for (std::size_t n = 0; n < pb.strips.size(); ++n) {
    impl->strips.push_back(strip_values(sys, x, n));
    impl->strip_loc.emplace_back(pb.strips[n]);
  }
  impl_ = std::move(impl);
}

FieldSample FieldSampler::operator()(Vec2 p) const {
  const Impl& m = *impl_;
  std::array<double, 3> l{};
  for (std::size_t n = 0; n < m.pb->corners.size(); ++n) {
    const CornerSetup& c = m.pb->corners[n];
    const auto [r, theta] = c.spec.local_polar(p);
    if (r >= c.spec.rho) continue;
    if (r <= 0.0) return {};
    return strip_sample(n, std::log(r), theta);
  }
  const int t = m.disk_loc.find(p, l);
  if (t < 0) return {};
  return {p2_interpolate(m.pb->disk.tris[static_cast<std::size_t>(t)], m.disk, l.data()), SampleMask::physical};
}

FieldSample FieldSampler::strip_sample(std::size_t n, double z, double theta) const {
  const Impl& m = *impl_;
  if (n >= m.strips.size()) throw ConfigError("corner index out of range");
  const PmlSpec& pml = m.pb->corners[n].pml;
  if (z < pml.z_left() || z > pml.z_right()) return {};
  std::array<double, 3> l{};
  const int t = m.strip_loc[n].find({z, theta}, l);
  if (t < 0) return {};
  const cplx v = p2_interpolate(m.pb->strips[n].tris[static_cast<std::size_t>(t)], m.strips[n], l.data());
  return {v, z < pml.z_onset() ? SampleMask::layer : SampleMask::physical};
}

std::vector<FieldSample> FieldSampler::sample(const std::vector<Vec2>& points) const {
  std::vector<FieldSample> out;
  out.reserve(points.size());
  for (const Vec2& p : points) out.push_back((*this)(p));
  return out;
}

std::pair<double, double> l2_error(const Mesh& mesh, const std::vector<cplx>& values,
                                   const std::function<cplx(Vec2)>& exact) {
  double err = 0.0, ref = 0.0;
  for (const auto& tri : mesh.tris) {
    const P2Element el(corners_of(mesh, tri));
    for (const auto& q : kQuad) {
      const cplx uh = p2_interpolate(tri, values, q.l);
      const cplx ue = exact(el.point(q));
      err += q.w * el.area * std::norm(uh - ue);
      ref += q.w * el.area * std::norm(ue);
    }
  }
  return {std::sqrt(err), std::sqrt(ref)};
}

nlohmann::json to_json(const EnergyReport& report) {
  auto complex_json = [](cplx z) { return nlohmann::json{{"re", z.real()}, {"im", z.imag()}}; };
  nlohmann::json corners = nlohmann::json::array();
  for (std::size_t n = 0; n < report.corners.size(); ++n) {
    const CornerReport& c = report.corners[n];
    nlohmann::json j{{"index", n + 1},
                     {"b", complex_json(c.b)},
                     {"eta", c.eta},
                     {"flux_integral", c.flux_integral},
                     {"J", c.J}};
    if (c.b_dual) j["b_dual"] = complex_json(*c.b_dual);
    corners.push_back(std::move(j));
  }
  return {{"J_ext", report.J_ext}, {"sum_J", report.sum_J()}, {"mismatch", report.mismatch}, {"corners", corners}};
}

}  // namespace cpml
