#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "heisengap/averaging.hpp"
#include "heisengap/eigensolver.hpp"
#include "heisengap/error.hpp"
#include "heisengap/operators.hpp"

using namespace heisengap;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> v(std::initializer_list<double> x) { return x; }

GridDomain2D shape(Shape s, double h) {
  switch (s) {
    case Shape::rectangle: return make_shape(s, v({2.0, 1.0}), h);
    case Shape::annulus: return make_shape(s, v({0.4, 1.0}), h);
    case Shape::lshape: return make_shape(s, v({2.0}), h);
    default: return make_shape(s, v({1.0}), h);
  }
}

bool bitwise_equal(const SparseMatrixC& a, const SparseMatrixC& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  for (Eigen::Index i = 0; i < a.nonZeros(); ++i) {
    if (a.innerIndexPtr()[i] != b.innerIndexPtr()[i]) return false;
    const cplx x = a.valuePtr()[i], y = b.valuePtr()[i];
    if (std::bit_cast<std::uint64_t>(x.real()) != std::bit_cast<std::uint64_t>(y.real()) ||
        std::bit_cast<std::uint64_t>(x.imag()) != std::bit_cast<std::uint64_t>(y.imag()))
      return false;
  }
  for (Eigen::Index i = 0; i <= a.outerSize(); ++i)
    if (a.outerIndexPtr()[i] != b.outerIndexPtr()[i]) return false;
  return true;
}

bool exactly_hermitian(const SparseMatrixC& m) {
  const Eigen::MatrixXcd d = Eigen::MatrixXcd(m);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (d(i, j) != std::conj(d(j, i))) return false;
  return true;
}

Eigen::VectorXcd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = cplx(g(rng), g(rng));
  return u;
}

}  // namespace

TEST(Landau2D, ExactlyHermitian) {
  for (Shape s : {Shape::disk, Shape::lshape, Shape::annulus}) {
    const GridDomain2D d = shape(s, 0.25);
    EXPECT_TRUE(exactly_hermitian(assemble_landau2d(1.3, d, BoundaryCondition::neumann()).matrix));
    EXPECT_TRUE(exactly_hermitian(assemble_landau2d(1.3, d, BoundaryCondition::dirichlet()).matrix));
    const auto sigma = sample_on_boundary(d, [](Point2 p) { return p.x - 0.3; });
    EXPECT_TRUE(exactly_hermitian(assemble_landau2d(0.7, d, BoundaryCondition::robin(sigma)).matrix));
  }
}

TEST(Landau2D, UnitSquareDirichletGroundState) {
  // second-order convergence to 2 pi^2; 0.999197 of the limit at h = 1/32
  const Spectrum s = lowest(assemble_landau2d(0.0, shape(Shape::square, 1.0 / 32), BoundaryCondition::dirichlet()), 1,
                            1e-10, 1);
  EXPECT_NEAR(s.eigenvalues[0] / (2 * kPi * kPi), 1.0, 1e-3);
  EXPECT_LT(s.eigenvalues[0], 2 * kPi * kPi);
}

TEST(Landau2D, NeumannZeroFieldKernelIsConstants) {
  for (Shape s : {Shape::disk, Shape::annulus, Shape::lshape}) {
    const HermitianOperator op = assemble_landau2d(0.0, shape(s, 0.125), BoundaryCondition::neumann());
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(op.dim());
    EXPECT_NEAR((op.matrix * ones).norm(), 0.0, 1e-10);
  }
}

TEST(Landau2D, LargeSquareApproachesLowestLevel) {
  // side 12, B = 1: lattice values 0.992208, 0.998048, 0.999512 at
  // h = 1/4, 1/8, 1/16 (order 2.0, extrapolated 1.0000001). The lattice
  // Landau level sits O(B^2 h^2) below B, so discrete values approach 1 from
  // below; the extrapolated limit lies in (1, 1.05) up to the fit error.
  const GridDomain2D coarse = make_shape(Shape::square, v({12.0}), 0.25);
  const GridDomain2D fine = make_shape(Shape::square, v({12.0}), 0.125);
  const double a = lowest(assemble_landau2d(1.0, coarse, BoundaryCondition::dirichlet()), 1, 1e-10, 1).eigenvalues[0];
  const double b = lowest(assemble_landau2d(1.0, fine, BoundaryCondition::dirichlet()), 1, 1e-10, 1).eigenvalues[0];
  EXPECT_NEAR(a, 0.992208, 2e-6);
  EXPECT_NEAR(b, 0.998048, 2e-6);
  const double limit = b + (b - a) / 3.0;
  EXPECT_GT(limit, 1.0 - 1e-4);
  EXPECT_LT(limit, 1.05);
}

TEST(Landau2D, GaugeShiftLeavesSpectrumUnchanged) {
  const GridDomain2D d = shape(Shape::lshape, 0.25);
  LandauOptions shifted;
  shifted.gauge_shift = {0.37, -1.2};
  for (const BoundaryCondition& bc : {BoundaryCondition::dirichlet(), BoundaryCondition::neumann()}) {
    const Spectrum a = dense_spectrum(assemble_landau2d(1.5, d, bc));
    const Spectrum b = dense_spectrum(assemble_landau2d(1.5, d, bc, shifted));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-12 * std::max(1.0, a.eigenvalues.back()));
  }
}

TEST(Landau2D, NeumannBelowDirichlet) {
  for (Shape s : {Shape::disk, Shape::square, Shape::rectangle, Shape::annulus, Shape::lshape}) {
    const GridDomain2D d = shape(s, s == Shape::square || s == Shape::disk ? 0.125 : 0.25);
    const Spectrum dn = dense_spectrum(assemble_landau2d(1.0, d, BoundaryCondition::neumann()));
    const Spectrum dd = dense_spectrum(assemble_landau2d(1.0, d, BoundaryCondition::dirichlet()));
    for (std::size_t j = 0; j < dd.size(); ++j) EXPECT_LE(dn.eigenvalues[j], dd.eigenvalues[j]) << j;
  }
}

TEST(Landau2D, DirichletIsPrincipalSubmatrix) {
  const GridDomain2D d = shape(Shape::disk, 0.125);
  const HermitianOperator n = assemble_landau2d(2.0, d, BoundaryCondition::neumann());
  const HermitianOperator dd = assemble_landau2d(2.0, d, BoundaryCondition::dirichlet());
  const Eigen::VectorXcd u = random_vector(dd.dim(), 5);
  Eigen::VectorXcd ext = Eigen::VectorXcd::Zero(n.dim());
  for (Eigen::Index r = 0; r < dd.dim(); ++r) ext(d.inside_rank(dd.dof_nodes[static_cast<std::size_t>(r)])) = u(r);
  // Q_D(u) >= Q_N(u) on shared vectors, here with equality
  EXPECT_NEAR(rayleigh(dd, u), rayleigh(n, ext), 1e-12 * rayleigh(n, ext));
}

TEST(Landau2D, Diamagnetic) {
  for (Shape s : {Shape::disk, Shape::square, Shape::lshape}) {
    const GridDomain2D d = shape(s, 0.125);
    const double free = dense_spectrum(assemble_landau2d(0.0, d, BoundaryCondition::dirichlet()), 1).eigenvalues[0];
    for (double B : {0.5, 1.0, 2.0})
      EXPECT_GE(dense_spectrum(assemble_landau2d(B, d, BoundaryCondition::dirichlet()), 1).eigenvalues[0], free);
  }
}

TEST(Landau2D, RobinZeroEqualsNeumannBitwise) {
  for (Shape s : {Shape::square, Shape::annulus}) {
    const GridDomain2D d = shape(s, 0.125);
    const auto zero = sample_on_boundary(d, [](Point2) { return 0.0; });
    EXPECT_TRUE(bitwise_equal(assemble_landau2d(1.0, d, BoundaryCondition::robin(zero)).matrix,
                              assemble_landau2d(1.0, d, BoundaryCondition::neumann()).matrix));
  }
}

TEST(Landau2D, RobinAddsBoundaryTerm) {
  const GridDomain2D d = shape(Shape::square, 0.25);
  const auto minus = sample_on_boundary(d, [](Point2) { return -1.0; });
  const HermitianOperator r = assemble_landau2d(1.0, d, BoundaryCondition::robin(minus));
  const HermitianOperator n = assemble_landau2d(1.0, d, BoundaryCondition::neumann());
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(n.dim());
  // Q_sigma(1) - Q_N(1) = sum_s sigma_s h / (h^2 |nodes|)
  const double expected = -boundary_quadrature(d, [](Point2) { return 1.0; }) / (d.h() * d.h() * n.dim());
  EXPECT_NEAR(rayleigh(r, ones) - rayleigh(n, ones), expected, 1e-12);
  EXPECT_THROW(assemble_landau2d(1.0, d, BoundaryCondition::robin({1.0})), Error);
}

TEST(Landau3D, UnitCubeDirichlet) {
  // cell-centred t-layers: the t-Dirichlet interval is one layer short, so
  // convergence is first order (32.1628, 30.8643 at h = 1/8, 1/16)
  std::vector<double> vals;
  for (double h : {0.125, 0.0625}) {
    const GridDomain3D c = extrude(shape(Shape::square, h), 1.0, h, Topology::bounded);
    vals.push_back(lowest(assemble_landau3d(0.0, c, BoundaryCondition::dirichlet()), 1, 1e-10, 1).eigenvalues[0]);
  }
  EXPECT_NEAR(vals[0], 32.1628, 1e-3);
  EXPECT_NEAR(vals[1], 30.8643, 1e-3);
  EXPECT_NEAR((2 * vals[1] - vals[0]) / (3 * kPi * kPi), 1.0, 5e-3);
}

TEST(Landau3D, SeparableDirichlet) {
  const GridDomain2D base = shape(Shape::disk, 0.125);
  const double ht = 0.1;
  const GridDomain3D c = extrude(base, 1.0, ht, Topology::bounded);
  const double l2 = dense_spectrum(assemble_landau2d(1.0, base, BoundaryCondition::dirichlet()), 1).eigenvalues[0];
  const double s = std::sin(kPi / (2.0 * (c.nt() - 1)));
  const double l1 = 4.0 / (ht * ht) * s * s;
  const double l3 = lowest(assemble_landau3d(1.0, c, BoundaryCondition::dirichlet()), 1, 1e-11, 1).eigenvalues[0];
  EXPECT_NEAR(l3, l2 + l1, 1e-9 * (l2 + l1));
}

TEST(Landau3D, NeumannPositiveWithField) {
  const GridDomain3D c = extrude(shape(Shape::square, 0.25), 1.0, 0.25, Topology::bounded);
  EXPECT_GT(dense_spectrum(assemble_landau3d(1.0, c, BoundaryCondition::neumann()), 1).eigenvalues[0], 0.0);
}

TEST(Heisenberg, ConstantsInNeumannKernel) {
  const GridDomain3D c = extrude(shape(Shape::lshape, 0.25), 1.0, 0.25, Topology::bounded);
  const HermitianOperator op = assemble_heisenberg(c, BoundaryCondition::neumann());
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(op.dim());
  EXPECT_NEAR(rayleigh(op, ones), 0.0, 1e-12 * op.gershgorin());
  EXPECT_TRUE(exactly_hermitian(op.matrix));
  // constants are the whole kernel
  const Spectrum s = dense_spectrum(op, 2);
  EXPECT_GT(s.eigenvalues[1], 1e-3);
}

TEST(Heisenberg, DirichletPositiveDefinite) {
  const GridDomain3D c = extrude(shape(Shape::square, 0.125), 1.0, 0.25, Topology::bounded);
  const HermitianOperator op = assemble_heisenberg(c, BoundaryCondition::dirichlet());
  EXPECT_TRUE(exactly_hermitian(op.matrix));
  EXPECT_GT(dense_spectrum(op, 1).eigenvalues[0], 1.0);
}

TEST(Heisenberg, TIndependentReducesToPlanarForm) {
  const GridDomain2D base = shape(Shape::annulus, 0.125);
  const GridDomain3D c = extrude(base, 1.0, 0.125, Topology::periodic);
  const HermitianOperator h3 = assemble_heisenberg(c, BoundaryCondition::neumann());
  const HermitianOperator h2 = assemble_landau2d(0.0, base, BoundaryCondition::neumann());
  const Eigen::VectorXcd U = random_vector(h2.dim(), 9);
  Eigen::VectorXcd u(h3.dim());
  for (Eigen::Index r = 0; r < h3.dim(); ++r) {
    int i = 0, j = 0, l = 0;
    c.node_ijl(h3.dof_nodes[static_cast<std::size_t>(r)], i, j, l);
    u(r) = U(base.inside_rank(base.node_id(i, j)));
  }
  EXPECT_NEAR(rayleigh(h3, u), rayleigh(h2, U), 1e-12 * rayleigh(h2, U));
}

TEST(Fiber, ZeroModeIsPlanarZeroField) {
  const GridDomain2D base = shape(Shape::disk, 0.25);
  const FiberFamily f = fiber_reduce(base, 1.0, 6, BoundaryKind::neumann);
  ASSERT_EQ(f.fibers.size(), 6u);
  EXPECT_EQ(f.fibers[0].tau, 0.0);
  EXPECT_EQ(f.fibers[0].symbol, cplx(0.0, 0.0));
  const HermitianOperator planar = assemble_landau2d(0.0, base, BoundaryCondition::neumann());
  const Eigen::MatrixXcd diff = Eigen::MatrixXcd(f.fibers[0].op.matrix) - Eigen::MatrixXcd(planar.matrix);
  EXPECT_LE(diff.norm(), 1e-12 * Eigen::MatrixXcd(planar.matrix).norm());
}

TEST(Fiber, DimensionsAndSymbols) {
  const GridDomain2D base = shape(Shape::square, 0.25);
  const double T = 2.0;
  const int nt = 5;
  const FiberFamily f = fiber_reduce(base, T, nt, BoundaryKind::dirichlet);
  Eigen::Index total = 0;
  for (const Fiber& fb : f.fibers) {
    total += fb.op.dim();
    EXPECT_TRUE(exactly_hermitian(fb.op.matrix));
    const double ht = T / nt;
    const cplx expected = (std::polar(1.0, fb.tau * ht) - 1.0) / ht;
    EXPECT_NEAR(std::abs(fb.symbol - expected), 0.0, 1e-14);
  }
  const GridDomain3D c = extrude(base, T, T / nt, Topology::periodic);
  EXPECT_EQ(total, assemble_heisenberg(c, BoundaryCondition::dirichlet()).dim());
  EXPECT_EQ(total, static_cast<Eigen::Index>(nt * base.dirichlet_nodes().size()));
}

TEST(Fiber, SpectrumUnionMatchesCylinder) {
  const GridDomain2D base = shape(Shape::lshape, 0.25);
  const GridDomain3D c = extrude(base, 1.0, 0.25, Topology::periodic);
  for (BoundaryKind bk : {BoundaryKind::neumann, BoundaryKind::dirichlet}) {
    const HermitianOperator op = assemble_heisenberg(c, {bk, {}});
    std::vector<double> uni;
    for (const Fiber& f : fiber_reduce(c, bk).fibers) {
      const Spectrum s = dense_spectrum(f.op);
      uni.insert(uni.end(), s.eigenvalues.begin(), s.eigenvalues.end());
    }
    std::sort(uni.begin(), uni.end());
    const Spectrum full = dense_spectrum(op);
    ASSERT_EQ(uni.size(), full.size());
    for (std::size_t i = 0; i < uni.size(); ++i)
      EXPECT_NEAR(uni[i], full.eigenvalues[i], 1e-10 * op.gershgorin());
  }
}

TEST(Fiber, BoundedCylinderRejected) {
  const GridDomain3D c = extrude(shape(Shape::square, 0.25), 1.0, 0.25, Topology::bounded);
  try {
    fiber_reduce(c, BoundaryKind::neumann);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::topology_mismatch);
  }
}

TEST(Rayleigh, EigenvectorAndZeroVector) {
  const HermitianOperator op = assemble_landau2d(1.0, shape(Shape::disk, 0.25), BoundaryCondition::dirichlet());
  const Spectrum s = dense_spectrum(op, 3);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(rayleigh(op, s.eigenvectors.col(j)), s.eigenvalues[j], 1e-10);
  try {
    rayleigh(op, Eigen::VectorXcd::Zero(op.dim()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_vector);
  }
}

TEST(OperatorIo, RoundTripsBitExactly) {
  const GridDomain2D d = shape(Shape::annulus, 0.25);
  const auto sigma = sample_on_boundary(d, [](Point2 p) { return std::sin(p.x); });
  const HermitianOperator op = assemble_landau2d(1.7, d, BoundaryCondition::robin(sigma));
  const std::string prefix = (std::filesystem::path(testing::TempDir()) / "annulus_op").string();
  write_operator(op, prefix);
  const HermitianOperator back = read_operator(prefix);
  EXPECT_TRUE(bitwise_equal(op.matrix, back.matrix));
  EXPECT_EQ(back.bc, op.bc);
  EXPECT_EQ(back.kind, op.kind);
  EXPECT_EQ(back.B, op.B);
  EXPECT_EQ(back.domain_hash, op.domain_hash);
  EXPECT_EQ(back.dof_nodes, op.dof_nodes);
  EXPECT_EQ(back.sigma, op.sigma);
}
