#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "heisengap/geometry.hpp"
#include "heisengap/special.hpp"
#include "json.hpp"

namespace heisengap {

using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;

enum class BoundaryKind { dirichlet, neumann, robin };
enum class OperatorKind { landau2d, landau3d, heisenberg, heisenberg_fiber };

std::string_view to_string(BoundaryKind kind);
std::string_view to_string(OperatorKind kind);
BoundaryKind parse_boundary(std::string_view name);
OperatorKind parse_operator_kind(std::string_view name);

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::neumann;
  std::vector<double> sigma;  // robin only: one value per boundary segment

  static BoundaryCondition dirichlet() { return {BoundaryKind::dirichlet, {}}; }
  static BoundaryCondition neumann() { return {BoundaryKind::neumann, {}}; }
  static BoundaryCondition robin(std::vector<double> sigma) { return {BoundaryKind::robin, std::move(sigma)}; }
};

/// Matrix of a quadratic form with respect to the volume-weighted inner
/// product: Q(u) = vol * u^H M u, so Rayleigh quotients are u^H M u / u^H u.
/// Rows are indexed by the dof nodes (inside nodes for Neumann and Robin,
/// Dirichlet nodes for Dirichlet), listed in increasing grid node id.
struct HermitianOperator {
  SparseMatrixC matrix;
  BoundaryKind bc = BoundaryKind::neumann;
  std::vector<double> sigma;
  OperatorKind kind = OperatorKind::landau2d;
  double B = 0.0;    // field strength (landau*), or 4*tau for fibers
  double tau = 0.0;  // fiber parameter (heisenberg_fiber)
  std::uint64_t domain_hash = 0;
  std::vector<std::size_t> dof_nodes;
  std::vector<Point3> dof_positions;  // t = 0 for planar operators

  Eigen::Index dim() const { return matrix.rows(); }
  /// Maximum absolute row sum.
  double gershgorin() const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const { return matrix * u; }
};

struct LandauOptions {
  /// Constant added to the symmetric gauge, A -> A + shift.
  std::array<double, 2> gauge_shift{0.0, 0.0};
};

/// Peierls-phase discretization of |(D - B A) u|^2 on a planar raster.
HermitianOperator assemble_landau2d(double B, const GridDomain2D& d, const BoundaryCondition& bc,
                                    const LandauOptions& options = {});

/// As assemble_landau2d in every layer, plus unphased t-links.
HermitianOperator assemble_landau3d(double B, const GridDomain3D& d, const BoundaryCondition& bc);

/// One-sided difference form sum vol (|Dx u + 2y Dt u|^2 + |Dy u - 2x Dt u|^2),
/// averaged over the four forward/backward orientations of (Dx, Dt) and
/// (Dy, Dt). Neumann drops every term whose stencil leaves the mask.
HermitianOperator assemble_heisenberg(const GridDomain3D& d, const BoundaryCondition& bc);

/// Heisenberg form restricted to u = exp(i tau t) U(x, y) on a periodic
/// cylinder with layer spacing h_t: the forward t-difference becomes the
/// symbol (e^{i tau h_t} - 1)/h_t and the backward one (1 - e^{-i tau h_t})/h_t.
HermitianOperator assemble_heisenberg_fiber(const GridDomain2D& base, double h_t, double tau, BoundaryKind bc);

struct Fiber {
  int mode = 0;
  double tau = 0.0;
  cplx symbol;
  HermitianOperator op;
};

struct FiberFamily {
  GridDomain2D base;
  double T = 0.0;
  std::vector<Fiber> fibers;
};

/// One fiber per discrete Fourier mode of a t-periodic cylinder, modes
/// ordered 0, 1, ..., with signed frequencies tau_m = 2 pi m / T.
FiberFamily fiber_reduce(const GridDomain3D& cylinder, BoundaryKind bc);
FiberFamily fiber_reduce(const GridDomain2D& base, double T, int nt, BoundaryKind bc);

/// Re <u, A u> / <u, u>.
double rayleigh(const HermitianOperator& op, const Eigen::VectorXcd& u);
/// <u, A v> in the unweighted dof inner product.
cplx form(const HermitianOperator& op, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v);

/// Principal sub-operator on the given rows (must be a subset of dof_nodes).
HermitianOperator restrict_to(const HermitianOperator& op, const std::vector<std::size_t>& nodes, BoundaryKind bc);

/// Matrix-market style text plus a JSON sidecar at `<prefix>.mtx` and
/// `<prefix>.json`. Values are written with 17 significant digits.
void write_operator(const HermitianOperator& op, const std::string& prefix);
HermitianOperator read_operator(const std::string& prefix);

nlohmann::json operator_meta(const HermitianOperator& op);

}  // namespace heisengap
