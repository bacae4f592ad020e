#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "heisengap/eigensolver.hpp"
#include "heisengap/error.hpp"
#include "heisengap/operators.hpp"

using namespace heisengap;

namespace {

constexpr double kPi = std::numbers::pi;

GridDomain2D square(double h) { return make_shape(Shape::square, std::vector<double>{1.0}, h); }

const Spectrum& square_b0_h64() {
  static const Spectrum s =
      lowest(assemble_landau2d(0.0, square(1.0 / 64), BoundaryCondition::dirichlet()), 5, 1e-10, 1);
  return s;
}

}  // namespace

TEST(Lowest, UnitSquareAnalyticSpectrum) {
  const double ref[] = {2, 5, 5, 8, 10};
  const Spectrum& s = square_b0_h64();
  ASSERT_EQ(s.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(s.eigenvalues[i] / (ref[i] * kPi * kPi), 1.0, 0.01) << i;
  EXPECT_TRUE(s.meta.converged);
  EXPECT_EQ(s.meta.seed, 1u);
}

TEST(Lowest, ResidualCertificateAndOrthonormality) {
  const HermitianOperator op = assemble_landau2d(1.0, make_shape(Shape::lshape, std::vector<double>{2.0}, 0.0625),
                                                 BoundaryCondition::neumann());
  const double tol = 1e-10;
  const Spectrum s = lowest(op, 8, tol, 3);
  const auto r = residual_norms(op, s);
  for (std::size_t j = 0; j < s.size(); ++j) {
    EXPECT_LE(r[j], tol * op.gershgorin());
    if (j > 0) EXPECT_LE(s.eigenvalues[j - 1], s.eigenvalues[j]);
    EXPECT_GE(s.eigenvalues[j], 0.0);
  }
  const Eigen::MatrixXcd G = s.eigenvectors.adjoint() * s.eigenvectors;
  EXPECT_LE((G - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lowest, NeumannZeroFieldGround) {
  const HermitianOperator op = assemble_landau2d(0.0, make_shape(Shape::disk, std::vector<double>{1.0}, 0.0625),
                                                 BoundaryCondition::neumann());
  const Spectrum s = lowest(op, 3, 1e-10, 1);
  EXPECT_NEAR(s.eigenvalues[0], 0.0, 1e-10 * op.gershgorin());
  // eigenvector is constant up to a phase
  const Eigen::VectorXcd v = s.eigenvectors.col(0);
  const cplx phase = v(0) / std::abs(v(0));
  const double c = 1.0 / std::sqrt(static_cast<double>(op.dim()));
  for (Eigen::Index i = 0; i < v.size(); ++i) EXPECT_NEAR(std::abs(v(i) / phase - c), 0.0, 1e-8);
}

TEST(Lowest, MatchesDenseOracle) {
  struct Case {
    Shape shape;
    std::vector<double> params;
    double h;
  };
  const std::vector<Case> cases{{Shape::square, {1.0}, 1.0 / 16},
                                {Shape::rectangle, {2.0, 1.0}, 0.125},
                                {Shape::disk, {1.0}, 0.125},
                                {Shape::annulus, {0.4, 1.0}, 0.125},
                                {Shape::lshape, {2.0}, 0.125}};
  for (const Case& c : cases) {
    const GridDomain2D d = make_shape(c.shape, c.params, c.h);
    for (double B : {0.0, 1.0})
      for (const BoundaryCondition& bc : {BoundaryCondition::dirichlet(), BoundaryCondition::neumann()}) {
        const HermitianOperator op = assemble_landau2d(B, d, bc);
        ASSERT_LE(op.dim(), 400);
        const int m = std::min<int>(10, static_cast<int>(op.dim() / 4));
        const Spectrum it = lowest(op, m, 1e-10, 1);
        const Spectrum dn = dense_spectrum(op, m);
        for (int j = 0; j < m; ++j) {
          const double mu = dn.eigenvalues[static_cast<std::size_t>(j)];
          EXPECT_LE(std::abs(it.eigenvalues[static_cast<std::size_t>(j)] - mu), 1e-9 * std::max(std::abs(mu), 1.0))
              << to_string(c.shape) << " B=" << B << " j=" << j;
        }
      }
  }
}

TEST(Lowest, CgInnerSolverAgrees) {
  const HermitianOperator op = assemble_landau2d(1.0, make_shape(Shape::disk, std::vector<double>{1.0}, 0.0625),
                                                 BoundaryCondition::dirichlet());
  SolverOptions cg;
  cg.inner = InnerSolver::cg;
  const Spectrum a = lowest(op, 4, 1e-10, 1);
  const Spectrum b = lowest(op, 4, 1e-10, 1, cg);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(a.eigenvalues[j], b.eigenvalues[j], 1e-8 * a.eigenvalues[j]);
}

TEST(Lowest, Deterministic) {
  const HermitianOperator op = assemble_landau2d(2.0, make_shape(Shape::annulus, std::vector<double>{0.4, 1.0}, 0.0625),
                                                 BoundaryCondition::neumann());
  const Spectrum a = lowest(op, 5, 1e-10, 42), b = lowest(op, 5, 1e-10, 42);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_TRUE(a.eigenvectors == b.eigenvectors);
}

TEST(Lowest, Preconditions) {
  const HermitianOperator op = assemble_landau2d(1.0, square(0.25), BoundaryCondition::dirichlet());  // dim 9
  try {
    lowest(op, 3, 1e-10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_too_small);
  }
  const HermitianOperator big = assemble_landau2d(1.0, square(0.125), BoundaryCondition::dirichlet());
  EXPECT_THROW(lowest(big, 0, 1e-10, 1), Error);
  EXPECT_THROW(lowest(big, 2, 1e-13, 1), Error);
  EXPECT_THROW(lowest(big, 2, 1e-3, 1), Error);
}

TEST(Lowest, IterationCapRaisesWithPartialResults) {
  const HermitianOperator op = assemble_landau2d(1.0, square(0.0625), BoundaryCondition::neumann());
  SolverOptions capped;
  capped.max_iterations = 1;
  try {
    lowest(op, 4, 1e-12, 1, capped);
    FAIL();
  } catch (const NoConvergence& e) {
    EXPECT_EQ(e.code(), Errc::no_convergence);
    EXPECT_EQ(e.partial().size(), 4u);
    EXPECT_FALSE(e.partial().meta.converged);
  }
}

TEST(Lowest, DirichletMonotoneUnderInclusion) {
  // side 1 and side 1.25 squares share the node lattice at h = 1/16
  const double h = 1.0 / 16;
  const Spectrum small =
      lowest(assemble_landau2d(1.0, square(h), BoundaryCondition::dirichlet()), 6, 1e-10, 1);
  const Spectrum large = lowest(
      assemble_landau2d(1.0, make_shape(Shape::square, std::vector<double>{1.25}, h), BoundaryCondition::dirichlet()),
      6, 1e-10, 1);
  for (int j = 0; j < 6; ++j) EXPECT_LE(large.eigenvalues[j], small.eigenvalues[j]);
}

TEST(Cluster, SingletonsAndDoubles) {
  const std::vector<double> separated{1.0, 2.0, 3.5};
  EXPECT_EQ(multiplicity_cluster(separated, 1e-9).size(), 3u);

  // 5 pi^2 is double on the square
  const Spectrum& s = square_b0_h64();
  const auto c = multiplicity_cluster(s, 1e-9);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[1].first, 1u);
  EXPECT_EQ(c[1].size, 2u);
  EXPECT_EQ(multiplicity_cluster(s, 0.0).size(), 5u);
}

TEST(Cluster, Counting) {
  const std::vector<double> ev{1.0, 2.0, 2.0 + 1e-12, 4.0};
  const auto c = multiplicity_cluster(ev, 1e-9);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(count_at_most(c, 2.0, 1e-9), 3u);
  EXPECT_EQ(count_below(c, 2.0, 1e-9), 1u);
  EXPECT_EQ(count_at_most(c, 1.5, 1e-9), 1u);
  EXPECT_EQ(count_below(c, 5.0, 1e-9), 4u);
  EXPECT_EQ(count_at_most(c, 0.5, 1e-9), 0u);
}

TEST(SpectrumIo, JsonAndEigenvectorSidecar) {
  const Spectrum& s = square_b0_h64();
  const nlohmann::json j = to_json(s);
  EXPECT_EQ(j["eigenvalues"].size(), 5u);
  EXPECT_EQ(j["residuals"].size(), 5u);
  EXPECT_EQ(j["meta"]["seed"].get<std::uint64_t>(), 1u);

  const std::string path = (std::filesystem::path(testing::TempDir()) / "vecs.bin").string();
  write_eigenvectors(s, path);
  const Eigen::MatrixXcd back = read_eigenvectors(path);
  EXPECT_TRUE(back == s.eigenvectors);
  EXPECT_EQ(std::filesystem::file_size(path),
            16u + 8u + static_cast<std::uintmax_t>(s.eigenvectors.size()) * 16u);
}
