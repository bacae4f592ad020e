#include "heisengap/operators.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "heisengap/error.hpp"

namespace heisengap {

namespace {

/// Accumulates w |sum_i c_i u_i|^2 terms into the upper triangle only; the
/// lower triangle is written as the exact conjugate when the matrix is built.
class FormBuilder {
 public:
  explicit FormBuilder(std::size_t n) : rows_(n) {}

  struct Coeff {
    long dof;
    cplx c;
  };

  void add_term(std::initializer_list<Coeff> coeffs, double w) {
    for (const Coeff& a : coeffs) {
      for (const Coeff& b : coeffs) {
        if (a.dof > b.dof) continue;
        if (a.dof == b.dof) {
          rows_[static_cast<std::size_t>(a.dof)][a.dof] += cplx(w * std::norm(a.c), 0.0);
        } else {
          rows_[static_cast<std::size_t>(a.dof)][b.dof] += w * std::conj(a.c) * b.c;
        }
      }
    }
  }

  void add_diagonal(long dof, double v) { rows_[static_cast<std::size_t>(dof)][dof] += cplx(v, 0.0); }

  SparseMatrixC build() const {
    std::vector<Eigen::Triplet<cplx, int>> trips;
    for (std::size_t p = 0; p < rows_.size(); ++p) {
      for (const auto& [q, v] : rows_[p]) {
        const int pi = static_cast<int>(p), qi = static_cast<int>(q);
        if (pi == qi) {
          trips.emplace_back(pi, pi, cplx(v.real(), 0.0));
        } else {
          trips.emplace_back(pi, qi, v);
          trips.emplace_back(qi, pi, std::conj(v));
        }
      }
    }
    const auto n = static_cast<int>(rows_.size());
    SparseMatrixC m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
  }

 private:
  std::vector<std::map<long, cplx>> rows_;
};

std::vector<Point3> positions_of(const GridDomain2D& d, const std::vector<std::size_t>& nodes) {
  std::vector<Point3> out;
  out.reserve(nodes.size());
  for (std::size_t id : nodes) {
    const Point2 p = d.position(id);
    out.push_back({p.x, p.y, 0.0});
  }
  return out;
}

std::vector<Point3> positions_of(const GridDomain3D& d, const std::vector<std::size_t>& nodes) {
  std::vector<Point3> out;
  out.reserve(nodes.size());
  for (std::size_t id : nodes) out.push_back(d.position(id));
  return out;
}

HermitianOperator finish(HermitianOperator op, const std::vector<std::size_t>& dirichlet_nodes,
                         const BoundaryCondition& bc) {
  if (bc.kind != BoundaryKind::dirichlet) return op;
  require(!dirichlet_nodes.empty(), Errc::empty_domain, "domain has no Dirichlet (non-boundary) node");
  return restrict_to(op, dirichlet_nodes, BoundaryKind::dirichlet);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::neumann: return "neumann";
    case BoundaryKind::robin: return "robin";
  }
  return "unknown";
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::landau2d: return "landau2d";
    case OperatorKind::landau3d: return "landau3d";
    case OperatorKind::heisenberg: return "heisenberg";
    case OperatorKind::heisenberg_fiber: return "heisenberg_fiber";
  }
  return "unknown";
}

BoundaryKind parse_boundary(std::string_view name) {
  if (name == "dirichlet") return BoundaryKind::dirichlet;
  if (name == "neumann") return BoundaryKind::neumann;
  if (name == "robin") return BoundaryKind::robin;
  throw Error(Errc::parse, "unknown boundary condition '" + std::string(name) + "'");
}

OperatorKind parse_operator_kind(std::string_view name) {
  if (name == "landau2d") return OperatorKind::landau2d;
  if (name == "landau3d") return OperatorKind::landau3d;
  if (name == "heisenberg") return OperatorKind::heisenberg;
  if (name == "heisenberg_fiber") return OperatorKind::heisenberg_fiber;
  throw Error(Errc::parse, "unknown operator kind '" + std::string(name) + "'");
}

double HermitianOperator::gershgorin() const {
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(matrix.rows());
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrixC::InnerIterator it(matrix, k); it; ++it) row_sum(it.row()) += std::abs(it.value());
  return row_sum.size() ? row_sum.maxCoeff() : 0.0;
}

HermitianOperator assemble_landau2d(double B, const GridDomain2D& d, const BoundaryCondition& bc,
                                    const LandauOptions& options) {
  require(B >= 0.0 && std::isfinite(B), Errc::precondition, "B must be non-negative");
  if (bc.kind == BoundaryKind::robin)
    require(bc.sigma.size() == d.boundary_segments().size(), Errc::length_mismatch,
            "robin sigma needs one value per boundary segment");

  const auto inside = d.inside_nodes();
  const double h = d.h();
  FormBuilder form(inside.size());
  const double inv_h = 1.0 / h;
  for (std::size_t a_rank = 0; a_rank < inside.size(); ++a_rank) {
    const std::size_t a = inside[a_rank];
    const int i = d.node_i(a), j = d.node_j(a);
    const Point2 pa = d.position(i, j);
    // x-link: theta = B (A_x(mid) + shift_x) h, A_x = -y/2
    if (d.inside(i + 1, j)) {
      const double theta = B * h * (-0.5 * pa.y + options.gauge_shift[0]);
      const long b = d.inside_rank(d.node_id(i + 1, j));
      form.add_term({{static_cast<long>(a_rank), inv_h}, {b, -std::polar(inv_h, -theta)}}, 1.0);
    }
    // y-link: A_y = x/2 at the midpoint, which shares the node's x
    if (d.inside(i, j + 1)) {
      const double theta = B * h * (0.5 * pa.x + options.gauge_shift[1]);
      const long b = d.inside_rank(d.node_id(i, j + 1));
      form.add_term({{static_cast<long>(a_rank), inv_h}, {b, -std::polar(inv_h, -theta)}}, 1.0);
    }
  }
  if (bc.kind == BoundaryKind::robin) {
    const auto& segs = d.boundary_segments();
    for (std::size_t s = 0; s < segs.size(); ++s)
      form.add_diagonal(d.inside_rank(segs[s].inside_node), bc.sigma[s] * segs[s].length / (h * h));
  }

  HermitianOperator op;
  op.matrix = form.build();
  op.bc = bc.kind == BoundaryKind::robin ? BoundaryKind::robin : BoundaryKind::neumann;
  op.sigma = bc.sigma;
  op.kind = OperatorKind::landau2d;
  op.B = B;
  op.domain_hash = domain_hash(d);
  op.dof_nodes.assign(inside.begin(), inside.end());
  op.dof_positions = positions_of(d, op.dof_nodes);
  return finish(std::move(op), std::vector<std::size_t>(d.dirichlet_nodes().begin(), d.dirichlet_nodes().end()),
                bc);
}

HermitianOperator assemble_landau3d(double B, const GridDomain3D& d, const BoundaryCondition& bc) {
  require(B >= 0.0 && std::isfinite(B), Errc::precondition, "B must be non-negative");
  require(bc.kind != BoundaryKind::robin, Errc::precondition, "robin is only supported for planar operators");
  const auto inside = d.inside_nodes();
  const double h = d.h_xy(), ht = d.h_t();
  FormBuilder form(inside.size());
  const double inv_h = 1.0 / h, inv_ht = 1.0 / ht;
  for (std::size_t a_rank = 0; a_rank < inside.size(); ++a_rank) {
    int i, j, l;
    d.node_ijl(inside[a_rank], i, j, l);
    const Point3 pa = d.position(i, j, l);
    const long a = static_cast<long>(a_rank);
    if (d.inside(i + 1, j, l)) {
      const double theta = -0.5 * B * h * pa.y;
      form.add_term({{a, inv_h}, {d.inside_rank(d.node_id(i + 1, j, l)), -std::polar(inv_h, -theta)}}, 1.0);
    }
    if (d.inside(i, j + 1, l)) {
      const double theta = 0.5 * B * h * pa.x;
      form.add_term({{a, inv_h}, {d.inside_rank(d.node_id(i, j + 1, l)), -std::polar(inv_h, -theta)}}, 1.0);
    }
    if (d.inside(i, j, l + 1)) {
      const long b = d.inside_rank(d.node_id(i, j, d.wrap_layer(l + 1)));
      form.add_term({{a, inv_ht}, {b, -inv_ht}}, 1.0);
    }
  }
  HermitianOperator op;
  op.matrix = form.build();
  op.bc = BoundaryKind::neumann;
  op.kind = OperatorKind::landau3d;
  op.B = B;
  op.domain_hash = domain_hash(d);
  op.dof_nodes.assign(inside.begin(), inside.end());
  op.dof_positions = positions_of(d, op.dof_nodes);
  return finish(std::move(op), std::vector<std::size_t>(d.dirichlet_nodes().begin(), d.dirichlet_nodes().end()),
                bc);
}

HermitianOperator assemble_heisenberg(const GridDomain3D& d, const BoundaryCondition& bc) {
  require(bc.kind != BoundaryKind::robin, Errc::precondition, "robin is only supported for planar operators");
  const auto inside = d.inside_nodes();
  const double h = d.h_xy(), ht = d.h_t();
  FormBuilder form(inside.size());
  for (std::size_t a_rank = 0; a_rank < inside.size(); ++a_rank) {
    int i, j, l;
    d.node_ijl(inside[a_rank], i, j, l);
    const Point3 pa = d.position(i, j, l);
    const long a = static_cast<long>(a_rank);
    // Each one-sided orientation (sx, st) of X u = Dx u + 2y Dt u and
    // Y u = Dy u - 2x Dt u enters with weight 1/4.
    for (int st : {1, -1}) {
      if (!d.inside(i, j, l + st)) continue;
      const long tn = d.inside_rank(d.node_id(i, j, d.wrap_layer(l + st)));
      const double cy = st * 2.0 * pa.y / ht;
      const double cx = st * 2.0 * pa.x / ht;
      for (int sx : {1, -1}) {
        if (d.inside(i + sx, j, l)) {
          const long xn = d.inside_rank(d.node_id(i + sx, j, l));
          form.add_term({{a, -sx / h - cy}, {xn, sx / h}, {tn, cy}}, 0.25);
        }
        if (d.inside(i, j + sx, l)) {
          const long yn = d.inside_rank(d.node_id(i, j + sx, l));
          form.add_term({{a, -sx / h + cx}, {yn, sx / h}, {tn, -cx}}, 0.25);
        }
      }
    }
  }
  HermitianOperator op;
  op.matrix = form.build();
  op.bc = BoundaryKind::neumann;
  op.kind = OperatorKind::heisenberg;
  op.domain_hash = domain_hash(d);
  op.dof_nodes.assign(inside.begin(), inside.end());
  op.dof_positions = positions_of(d, op.dof_nodes);
  return finish(std::move(op), std::vector<std::size_t>(d.dirichlet_nodes().begin(), d.dirichlet_nodes().end()),
                bc);
}

HermitianOperator assemble_heisenberg_fiber(const GridDomain2D& base, double h_t, double tau, BoundaryKind bc) {
  require(h_t > 0.0, Errc::precondition, "h_t must be positive");
  require(bc != BoundaryKind::robin, Errc::precondition, "robin fibers are not supported");
  const auto inside = base.inside_nodes();
  const double h = base.h();
  FormBuilder form(inside.size());
  for (std::size_t a_rank = 0; a_rank < inside.size(); ++a_rank) {
    const int i = base.node_i(inside[a_rank]), j = base.node_j(inside[a_rank]);
    const Point2 pa = base.position(i, j);
    const long a = static_cast<long>(a_rank);
    for (int st : {1, -1}) {
      const cplx symbol = double(st) * (std::polar(1.0, st * tau * h_t) - 1.0) / h_t;
      for (int sx : {1, -1}) {
        if (base.inside(i + sx, j)) {
          const long xn = base.inside_rank(base.node_id(i + sx, j));
          form.add_term({{a, -sx / h + 2.0 * pa.y * symbol}, {xn, sx / h}}, 0.25);
        }
        if (base.inside(i, j + sx)) {
          const long yn = base.inside_rank(base.node_id(i, j + sx));
          form.add_term({{a, -sx / h - 2.0 * pa.x * symbol}, {yn, sx / h}}, 0.25);
        }
      }
    }
  }
    HermitianOperator op;
  op.matrix = form.build();
  op.bc = BoundaryKind::neumann;
  op.kind = OperatorKind::heisenberg_fiber;
  op.tau = tau;
  op.B = 4.0 * tau;
  op.domain_hash = domain_hash(base);
  op.dof_nodes.assign(inside.begin(), inside.end());
  op.dof_positions = positions_of(base, op.dof_nodes);
  return finish(std::move(op),
                std::vector<std::size_t>(base.dirichlet_nodes().begin(), base.dirichlet_nodes().end()),
                BoundaryCondition{bc, {}});
}

FiberFamily fiber_reduce(const GridDomain2D& base, double T, int nt, BoundaryKind bc) {
  require(nt >= 3 && T > 0.0, Errc::precondition, "fiber reduction needs nt >= 3 and T > 0");
  const double h_t = T / nt;
  FiberFamily family{base, T, {}};
  for (int m = 0; m < nt; ++m) {
    const int signed_mode = (2 * m <= nt) ? m : m - nt;
    const double tau = 2.0 * std::numbers::pi * signed_mode / T;
    HermitianOperator op = assemble_heisenberg_fiber(base, h_t, tau, bc);
    family.fibers.push_back({signed_mode, tau, (std::polar(1.0, tau * h_t) - 1.0) / h_t, std::move(op)});
  }
  return family;
}

FiberFamily fiber_reduce(const GridDomain3D& cylinder, BoundaryKind bc) {
  require(cylinder.topology() == Topology::periodic, Errc::topology_mismatch,
          "fiber reduction requires a t-periodic cylinder");
  return fiber_reduce(cylinder.base(), cylinder.period(), cylinder.nt(), bc);
}

double rayleigh(const HermitianOperator& op, const Eigen::VectorXcd& u) {
  require(u.size() == op.dim(), Errc::length_mismatch, "vector length does not match operator dimension");
  const double nrm = u.squaredNorm();
  require(nrm > 0.0, Errc::zero_vector, "Rayleigh quotient of the zero vector");
  return u.dot(op.matrix * u).real() / nrm;
}

cplx form(const HermitianOperator& op, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  require(u.size() == op.dim() && v.size() == op.dim(), Errc::length_mismatch,
          "vector length does not match operator dimension");
  return u.dot(op.matrix * v);
}

HermitianOperator restrict_to(const HermitianOperator& op, const std::vector<std::size_t>& nodes, BoundaryKind bc) {
  std::unordered_map<std::size_t, int> row_of;
  for (std::size_t r = 0; r < op.dof_nodes.size(); ++r) row_of.emplace(op.dof_nodes[r], static_cast<int>(r));
  std::vector<int> new_index(op.dof_nodes.size(), -1);
  HermitianOperator out;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto it = row_of.find(nodes[n]);
    require(it != row_of.end(), Errc::precondition, "restriction node is not a dof of the operator");
    new_index[static_cast<std::size_t>(it->second)] = static_cast<int>(n);
    out.dof_positions.push_back(op.dof_positions[static_cast<std::size_t>(it->second)]);
  }
  std::vector<Eigen::Triplet<cplx, int>> trips;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SparseMatrixC::InnerIterator it(op.matrix, k); it; ++it) {
      const int r = new_index[static_cast<std::size_t>(it.row())];
      const int c = new_index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  const auto n = static_cast<int>(nodes.size());
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.matrix.makeCompressed();
  out.bc = bc;
  out.sigma = bc == BoundaryKind::dirichlet ? std::vector<double>{} : op.sigma;
  out.kind = op.kind;
  out.B = op.B;
  out.tau = op.tau;
  out.domain_hash = op.domain_hash;
  out.dof_nodes = nodes;
  return out;
}

nlohmann::json operator_meta(const HermitianOperator& op) {
  nlohmann::json positions = nlohmann::json::array();
  for (const Point3& p : op.dof_positions) positions.push_back({p.x, p.y, p.t});
  return {{"kind", std::string(to_string(op.kind))},
          {"bc", std::string(to_string(op.bc))},
          {"B", op.B},
          {"tau", op.tau},
          {"sigma", op.sigma},
          {"domain_hash", op.domain_hash},
          {"dim", op.dim()},
          {"dof_nodes", op.dof_nodes},
          {"dof_positions", std::move(positions)}};
}

void write_operator(const HermitianOperator& op, const std::string& prefix) {
  std::ofstream mtx(prefix + ".mtx");
  require(static_cast<bool>(mtx), Errc::io, "cannot open " + prefix + ".mtx");
  mtx << "%%MatrixMarket matrix coordinate complex general\n";
  mtx << "% heisengap operator, metadata in " << prefix << ".json\n";
  mtx << op.matrix.rows() << " " << op.matrix.cols() << " " << op.matrix.nonZeros() << "\n";
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SparseMatrixC::InnerIterator it(op.matrix, k); it; ++it)
      mtx << it.row() + 1 << " " << it.col() + 1 << " " << fmt17(it.value().real()) << " "
          << fmt17(it.value().imag()) << "\n";
  require(static_cast<bool>(mtx), Errc::io, "failed writing " + prefix + ".mtx");

  std::ofstream meta(prefix + ".json");
  require(static_cast<bool>(meta), Errc::io, "cannot open " + prefix + ".json");
  meta << operator_meta(op).dump(2) << "\n";
}

HermitianOperator read_operator(const std::string& prefix) {
  std::ifstream mtx(prefix + ".mtx");
  require(static_cast<bool>(mtx), Errc::io, "cannot open " + prefix + ".mtx");
  std::string line;
  std::getline(mtx, line);
  require(line.rfind("%%MatrixMarket matrix coordinate complex", 0) == 0, Errc::parse, "not a complex coordinate file");
  while (std::getline(mtx, line) && !line.empty() && line[0] == '%') {
  }
  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream hdr(line);
    hdr >> rows >> cols >> nnz;
    require(static_cast<bool>(hdr) && rows == cols && rows >= 0, Errc::parse, "bad size line");
  }
  std::vector<Eigen::Triplet<cplx, int>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  for (long e = 0; e < nnz; ++e) {
    long r, c;
    std::string re, im;
    require(static_cast<bool>(mtx >> r >> c >> re >> im), Errc::parse, "truncated entry list");
    trips.emplace_back(static_cast<int>(r - 1), static_cast<int>(c - 1), cplx(std::stod(re), std::stod(im)));
  }
  HermitianOperator op;
  op.matrix.resize(static_cast<int>(rows), static_cast<int>(cols));
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.matrix.makeCompressed();

  std::ifstream meta_in(prefix + ".json");
  require(static_cast<bool>(meta_in), Errc::io, "cannot open " + prefix + ".json");
  try {
    const nlohmann::json meta = nlohmann::json::parse(meta_in);
    op.kind = parse_operator_kind(meta.at("kind").get<std::string>());
    op.bc = parse_boundary(meta.at("bc").get<std::string>());
    op.B = meta.at("B").get<double>();
    op.tau = meta.at("tau").get<double>();
    op.sigma = meta.at("sigma").get<std::vector<double>>();
    op.domain_hash = meta.at("domain_hash").get<std::uint64_t>();
    op.dof_nodes = meta.at("dof_nodes").get<std::vector<std::size_t>>();
    for (const auto& p : meta.at("dof_positions"))
      op.dof_positions.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    require(meta.at("dim").get<long>() == rows, Errc::parse, "sidecar dimension mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("operator sidecar: ") + e.what());
  }
  return op;
}

}  // namespace heisengap
