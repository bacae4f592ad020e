#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "heisengap/error.hpp"
#include "heisengap/operators.hpp"
#include "json.hpp"

namespace heisengap {

enum class InnerSolver {
  cholesky,  // sparse LDL^T factorization of A - shift I, reused every sweep
  cg,        // conjugate gradients on A - shift I
};

struct SolverOptions {
  InnerSolver inner = InnerSolver::cholesky;
  int max_iterations = 2000;
  /// Extra block vectors beyond m; 0 selects max(m, 10).
  int guard = 0;
};

struct SpectrumMeta {
  std::string method;
  int iterations = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
  double shift = 0.0;
  double norm = 0.0;  // Gershgorin bound used for the residual certificate
};

/// Lowest eigenpairs in ascending order, eigenvectors as orthonormal columns.
struct Spectrum {
  std::vector<double> eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  std::vector<double> residuals;  // ||A v - lambda v|| / ||v||
  SpectrumMeta meta;

  std::size_t size() const { return eigenvalues.size(); }
};

/// Thrown when the iteration cap is hit; carries the unconverged pairs.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, Spectrum partial)
      : Error(Errc::no_convergence, what), partial_(std::move(partial)) {}
  const Spectrum& partial() const { return partial_; }

 private:
  Spectrum partial_;
};

/// m smallest eigenpairs by block shift-invert subspace iteration with
/// Rayleigh-Ritz and full reorthogonalization. Converged when every
/// residual is at most tol * gershgorin(A). Deterministic given the seed.
/// Requires 1 <= m <= dim/4 and tol in [1e-12, 1e-4].
Spectrum lowest(const HermitianOperator& op, int m, double tol, std::uint64_t seed,
                const SolverOptions& options = {});

/// Full dense diagonalization (Householder tridiagonalization + QR); the
/// reference path for small operators. Returns the m lowest pairs, or all
/// when m < 0.
Spectrum dense_spectrum(const HermitianOperator& op, int m = -1);

/// ||A v - lambda v|| / ||v|| for each pair, recomputed from scratch.
std::vector<double> residual_norms(const HermitianOperator& op, const Spectrum& s);

struct Cluster {
  std::size_t first = 0;
  std::size_t size = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Consecutive eigenvalues share a cluster when their gap is at most
/// gap_tol * max(1, |lambda_i|, |lambda_{i+1}|); gap_tol = 0 gives singletons.
std::vector<Cluster> multiplicity_cluster(std::span<const double> eigenvalues, double gap_tol);
inline std::vector<Cluster> multiplicity_cluster(const Spectrum& s, double gap_tol) {
  return multiplicity_cluster(std::span<const double>(s.eigenvalues), gap_tol);
}

/// Number of eigenvalues <= level, counting whole clusters; a cluster whose
/// range touches [level - tol, level + tol] counts as <= level.
std::size_t count_at_most(const std::vector<Cluster>& clusters, double level, double gap_tol);
/// Number of eigenvalues strictly below level, counting whole clusters;
/// clusters touching the level band are excluded.
std::size_t count_below(const std::vector<Cluster>& clusters, double level, double gap_tol);

nlohmann::json to_json(const Spectrum& s);

/// Eigenvector sidecar: 8-byte magic "HGEVECS1", uint64 rows, uint64 cols,
/// then column-major interleaved (re, im) little-endian doubles.
void write_eigenvectors(const Spectrum& s, const std::string& path);
Eigen::MatrixXcd read_eigenvectors(const std::string& path);

}  // namespace heisengap
