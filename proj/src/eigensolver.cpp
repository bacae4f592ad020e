#include "heisengap/eigensolver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>

namespace heisengap {

namespace {

SparseMatrixC shifted(const SparseMatrixC& a, double shift) {
  SparseMatrixC id(a.rows(), a.cols());
  id.setIdentity();
  return a - cplx(shift, 0.0) * id;
}

/// Solves (A - shift I) x = b for a block of right-hand sides.
class ShiftedSolver {
 public:
  ShiftedSolver(const SparseMatrixC& a, double shift, InnerSolver kind, double cg_tol)
      : kind_(kind), k_(shifted(a, shift)), cg_tol_(cg_tol) {
    if (kind_ == InnerSolver::cholesky) {
      ldlt_.compute(k_);
      require(ldlt_.info() == Eigen::Success, Errc::no_convergence, "LDL^T factorization failed");
    }
  }

  /// Number of negative pivots of the LDL^T factorization (Sylvester inertia).
  long negative_pivots() const {
    const auto d = ldlt_.vectorD();
    long n = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) n += std::real(d(i)) < 0.0;
    return n;
  }

  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& b) const {
    if (kind_ == InnerSolver::cholesky) return ldlt_.solve(b);
    Eigen::MatrixXcd x(b.rows(), b.cols());
    for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = cg(b.col(c));
    return x;
  }

 private:
  Eigen::VectorXcd cg(const Eigen::VectorXcd& b) const {
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(b.size());
    Eigen::VectorXcd r = b;
    Eigen::VectorXcd p = r;
    double rr = r.squaredNorm();
    const double stop = cg_tol_ * cg_tol_ * b.squaredNorm();
    const Eigen::Index cap = 20 * b.size() + 100;
    for (Eigen::Index it = 0; it < cap && rr > stop; ++it) {
      const Eigen::VectorXcd kp = k_ * p;
      const double alpha = rr / p.dot(kp).real();
      x += alpha * p;
      r -= alpha * kp;
      const double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
    }
    require(rr <= stop, Errc::no_convergence, "inner conjugate-gradient solve did not converge");
    return x;
  }

  InnerSolver kind_;
  SparseMatrixC k_;
  double cg_tol_;
  Eigen::SimplicialLDLT<SparseMatrixC, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

Eigen::MatrixXcd orthonormalize(const Eigen::MatrixXcd& y) {
  // Two Householder passes keep the basis orthonormal to working precision.
  Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(y).householderQ() *
                       Eigen::MatrixXcd::Identity(y.rows(), y.cols());
  return Eigen::HouseholderQR<Eigen::MatrixXcd>(q).householderQ() * Eigen::MatrixXcd::Identity(y.rows(), y.cols());
}

/// Shift strictly below the spectrum, found from LDL^T inertia.
double find_lower_shift(const SparseMatrixC& a, double norm) {
  const double base = -1e-8 * std::max(norm, 1e-300);
  {
    ShiftedSolver probe(a, base, InnerSolver::cholesky, 0.0);
    if (probe.negative_pivots() == 0) return base;
  }
  double lo = -1.01 * norm - 1.0;  // below every eigenvalue
  double hi = base;
  for (int it = 0; it < 60 && hi - lo > 0.02 * std::max(std::abs(hi), 1e-6 * norm); ++it) {
    const double mid = 0.5 * (lo + hi);
    ShiftedSolver probe(a, mid, InnerSolver::cholesky, 0.0);
    (probe.negative_pivots() > 0 ? hi : lo) = mid;
  }
  return lo - 0.05 * (hi - lo) - 1e-8 * norm;
}

}  // namespace

std::vector<double> residual_norms(const HermitianOperator& op, const Spectrum& s) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto v = s.eigenvectors.col(static_cast<Eigen::Index>(i));
    out[i] = (op.matrix * v - s.eigenvalues[i] * v).norm() / v.norm();
  }
  return out;
}

Spectrum lowest(const HermitianOperator& op, int m, double tol, std::uint64_t seed, const SolverOptions& options) {
  const Eigen::Index n = op.dim();
  if (m < 1 || 4 * static_cast<Eigen::Index>(m) > n)
    throw Error(Errc::dimension_too_small,
                "need 1 <= m <= dim/4 (m = " + std::to_string(m) + ", dim = " + std::to_string(n) + ")");
  require(tol >= 1e-12 && tol <= 1e-4, Errc::precondition, "tol must lie in [1e-12, 1e-4]");

  const double norm = op.gershgorin();
  const double shift = find_lower_shift(op.matrix, norm);
  const ShiftedSolver solver(op.matrix, shift, options.inner, 1e-2 * tol);
  const int guard = options.guard > 0 ? options.guard : std::max(m, 10);
  const Eigen::Index p = std::min<Eigen::Index>(n, m + guard);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd x(n, p);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index r = 0; r < n; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      x(r, c) = cplx(re, im);
    }
  x = orthonormalize(x);

  Spectrum s;
  s.meta = {options.inner == InnerSolver::cholesky ? "shift-invert-subspace/ldlt" : "shift-invert-subspace/cg",
            0, tol, seed, false, shift, norm};
  const double target = tol * norm;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::MatrixXcd y = orthonormalize(solver.solve(x));
    const Eigen::MatrixXcd ay = op.matrix * y;
    Eigen::MatrixXcd h = y.adjoint() * ay;
    h = 0.5 * (h + h.adjoint()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rr(h);
    x = y * rr.eigenvectors();
    const Eigen::MatrixXcd ax = ay * rr.eigenvectors();

    s.eigenvalues.assign(static_cast<std::size_t>(m), 0.0);
    s.residuals.assign(static_cast<std::size_t>(m), 0.0);
    bool done = true;
    for (int i = 0; i < m; ++i) {
      const double lambda = rr.eigenvalues()(i);
      s.eigenvalues[static_cast<std::size_t>(i)] = lambda;
      const double res = (ax.col(i) - lambda * x.col(i)).norm();
      s.residuals[static_cast<std::size_t>(i)] = res;
      done = done && res <= target;
    }
    s.meta.iterations = it;
    if (done) {
      s.meta.converged = true;
      s.eigenvectors = x.leftCols(m);
      return s;
    }
  }
  s.eigenvectors = x.leftCols(m);
  throw NoConvergence("subspace iteration hit " + std::to_string(options.max_iterations) + " sweeps", std::move(s));
}

Spectrum dense_spectrum(const HermitianOperator& op, int m) {
  const Eigen::MatrixXcd a = Eigen::MatrixXcd(op.matrix);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  require(es.info() == Eigen::Success, Errc::no_convergence, "dense eigensolver failed");
  const Eigen::Index count = m < 0 ? a.rows() : std::min<Eigen::Index>(m, a.rows());
  Spectrum s;
  s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + count);
  s.eigenvectors = es.eigenvectors().leftCols(count);
  s.meta = {"dense-householder-qr", 0, 0.0, 0, true, 0.0, op.gershgorin()};
  s.residuals = residual_norms(op, s);
  return s;
}

std::vector<Cluster> multiplicity_cluster(std::span<const double> ev, double gap_tol) {
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    bool join = false;
    if (i > 0 && gap_tol > 0.0) {
      const double scale = std::max({1.0, std::abs(ev[i - 1]), std::abs(ev[i])});
      join = ev[i] - ev[i - 1] <= gap_tol * scale;
    }
    if (join) {
      out.back().size += 1;
      out.back().hi = ev[i];
    } else {
      out.push_back({i, 1, ev[i], ev[i]});
    }
  }
  return out;
}

namespace {
double band(double level, double gap_tol) { return gap_tol * std::max(1.0, std::abs(level)); }
}  // namespace

std::size_t count_at_most(const std::vector<Cluster>& clusters, double level, double gap_tol) {
  std::size_t n = 0;
  for (const Cluster& c : clusters)
    if (c.lo <= level + band(level, gap_tol)) n += c.size;
  return n;
}

std::size_t count_below(const std::vector<Cluster>& clusters, double level, double gap_tol) {
  std::size_t n = 0;
  for (const Cluster& c : clusters)
    if (c.hi < level - band(level, gap_tol)) n += c.size;
  return n;
}

nlohmann::json to_json(const Spectrum& s) {
  return {{"eigenvalues", s.eigenvalues},
          {"residuals", s.residuals},
          {"meta",
           {{"method", s.meta.method},
            {"iterations", s.meta.iterations},
            {"tol", s.meta.tol},
            {"seed", s.meta.seed},
            {"converged", s.meta.converged},
            {"shift", s.meta.shift},
            {"norm", s.meta.norm}}}};
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  require(static_cast<bool>(is), Errc::parse, "truncated eigenvector file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_eigenvectors(const Spectrum& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), Errc::io, "cannot open " + path);
  os.write("HGEVECS1", 8);
  put_u64(os, static_cast<std::uint64_t>(s.eigenvectors.rows()));
  put_u64(os, static_cast<std::uint64_t>(s.eigenvectors.cols()));
  for (Eigen::Index c = 0; c < s.eigenvectors.cols(); ++c)
    for (Eigen::Index r = 0; r < s.eigenvectors.rows(); ++r) {
      put_u64(os, std::bit_cast<std::uint64_t>(s.eigenvectors(r, c).real()));
      put_u64(os, std::bit_cast<std::uint64_t>(s.eigenvectors(r, c).imag()));
    }
  require(static_cast<bool>(os), Errc::io, "failed writing " + path);
}

Eigen::MatrixXcd read_eigenvectors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), Errc::io, "cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  require(static_cast<bool>(is) && std::memcmp(magic, "HGEVECS1", 8) == 0, Errc::parse, "bad eigenvector magic");
  const auto rows = static_cast<Eigen::Index>(get_u64(is));
  const auto cols = static_cast<Eigen::Index>(get_u64(is));
  Eigen::MatrixXcd v(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = std::bit_cast<double>(get_u64(is));
      const double im = std::bit_cast<double>(get_u64(is));
      v(r, c) = cplx(re, im);
    }
  return v;
}

}  // namespace heisengap
