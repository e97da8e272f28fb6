#pragma once

// P2 finite element assembly of the coupled disk/strip problem and the sparse
// direct solve.
//
// Forms are bilinear (no conjugation) so the matrix is complex-symmetric.
// Field unknowns come first; the DtN boundary adds 2 N_F + 1 auxiliary
// unknowns at the end (one per real Fourier column), which eliminate to the
// usual low-rank DtN block.

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <vector>

#include "cornerpml/corner_modes.hpp"
#include "cornerpml/materials.hpp"
#include "cornerpml/mesh.hpp"
#include "cornerpml/pml.hpp"

namespace cpml {

using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
using VectorC = Eigen::VectorXcd;

enum class BoundaryMode { dtn, abc };

struct CornerSetup {
  CornerSpec spec;
  PmlSpec pml;
  /// When set, assemble() refuses stretch angles that map one of `roots` or
  /// the outgoing exponent out of the right half-plane.
  std::optional<cplx> lambda_out;
  std::vector<cplx> roots;
};

/// Everything the assembly needs. Strips and corners share the order of
/// disk.hole_nodes.
struct Problem {
  double R = 0.0;
  Mesh disk;
  std::vector<Mesh> strips;
  std::vector<CornerSetup> corners;
  MaterialConfig material;
  BoundaryMode boundary = BoundaryMode::dtn;
  /// Fourier truncation; 0 selects ceil(kR) + 25.
  int n_fourier = 0;

  int fourier_order() const;
};

struct DofMap {
  std::vector<int> disk;
  std::vector<std::vector<int>> strip;
  int num_field = 0;
  int num_aux = 0;
  /// Disk nodes on the outer boundary ordered by polar angle.
  std::vector<int> outer_nodes;
  std::vector<double> outer_theta;
  /// Quadrature weight of each outer node for unit radius (composite
  /// Simpson: dtheta/3 at vertices, 2 dtheta/3 at edge midpoints).
  std::vector<double> outer_weight;

  int size() const { return num_field + num_aux; }
};

/// Merges periodic strip columns and the hole/strip interface nodes.
DofMap build_dofmap(const Mesh& disk, const std::vector<Mesh>& strips);

/// Fourier data of the plane wave e^{ik x.(cos a, sin a)} on r = R:
/// u_inc(R, theta) = sum_n u[n] e^{in theta}, index n + N.
struct IncidentTrace {
  int order = 0;
  std::vector<cplx> u;
  std::vector<cplx> du;

  cplx value(int n) const { return u[static_cast<std::size_t>(n + order)]; }
  cplx radial(int n) const { return du[static_cast<std::size_t>(n + order)]; }
};

IncidentTrace incident_trace(double alpha_inc, double k, double R, int order);

/// DtN symbols S_n = k H1_n'(kR) / H1_n(kR) and the boundary datum
/// g_n = du_n - S_n u_n = i^n e^{-in alpha} (-2i) / (pi R H1_n(kR)).
struct DtnData {
  int order = 0;
  double k = 0.0;
  double R = 0.0;
  std::vector<cplx> S;

  cplx symbol(int n) const { return S[static_cast<std::size_t>(n + order)]; }
};

DtnData dtn_data(double k, double R, int order);
std::vector<cplx> dtn_boundary_datum(const DtnData& d, double alpha_inc);

struct LinearSystem {
  SparseMatrixC A;
  DofMap dofs;
  DtnData dtn;
};

/// Assembles the matrix. Throws ConfigError when a PML angle is not
/// admissible for its corner, and DomainError when N_F exceeds the Bessel
/// table.
LinearSystem assemble(const Problem& problem);

/// Load vector of the incident wave for the boundary mode of `problem`.
VectorC assemble_rhs(const Problem& problem, const LinearSystem& sys, double alpha_inc);

/// Radial cutoff zeta(r): 1 for r <= r0, 0 for r >= r1, C2 in between.
struct Cutoff {
  double r0 = 0.0;
  double r1 = 0.0;

  double value(double r) const;
  /// d zeta / dz and d2 zeta / dz2 with z = ln r.
  double dz(double r) const;
  double dzz(double r) const;
};

/// Load vector of the dual problem of corner n: the strip integral of
/// [eps^-1 (zeta'' + 2 lambda_in zeta') + k0^2 mu e^{2z} zeta] e^{lambda_in z} Phi
/// against each test function, restricted to the unstretched part.
VectorC assemble_dual_source(const Problem& problem, const LinearSystem& sys, std::size_t corner,
                             cplx lambda_in, const ModeFunction& mode, const Cutoff& cutoff);

/// Sparse LU (UMFPACK) with a residual check and iterative refinement.
class Solver {
 public:
  explicit Solver(const SparseMatrixC& A);
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  /// Solves A x = b; `residual` receives ||Ax - b|| / ||b||.
  VectorC solve(const VectorC& b, double* residual = nullptr) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Solution {
  VectorC x;
  double residual = 0.0;
};

/// Values of the global vector at mesh nodes.
std::vector<cplx> disk_values(const LinearSystem& sys, const VectorC& x);
std::vector<cplx> strip_values(const LinearSystem& sys, const VectorC& x, std::size_t corner);

}  // namespace cpml
