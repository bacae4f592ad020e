#include "heisengap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "heisengap/error.hpp"

namespace heisengap {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <class Neighbours>
bool connected(const std::vector<std::size_t>& inside, const std::vector<long>& rank, Neighbours&& neighbours) {
  if (inside.empty()) return false;
  std::vector<std::uint8_t> seen(inside.size(), 0);
  std::deque<std::size_t> queue{inside.front()};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const std::size_t id = queue.front();
    queue.pop_front();
    neighbours(id, [&](std::size_t nb) {
      const long r = rank[nb];
      if (r >= 0 && !seen[static_cast<std::size_t>(r)]) {
        seen[static_cast<std::size_t>(r)] = 1;
        ++reached;
        queue.push_back(nb);
      }
    });
  }
  return reached == inside.size();
}

}  // namespace

Shape parse_shape(std::string_view name) {
  if (name == "disk") return Shape::disk;
  if (name == "square") return Shape::square;
  if (name == "rectangle") return Shape::rectangle;
  if (name == "annulus") return Shape::annulus;
  if (name == "lshape") return Shape::lshape;
  throw Error(Errc::parse, "unknown shape '" + std::string(name) + "'");
}

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::disk: return "disk";
    case Shape::square: return "square";
    case Shape::rectangle: return "rectangle";
    case Shape::annulus: return "annulus";
    case Shape::lshape: return "lshape";
  }
  return "unknown";
}

Topology parse_topology(std::string_view name) {
  if (name == "bounded") return Topology::bounded;
  if (name == "periodic") return Topology::periodic;
  throw Error(Errc::parse, "unknown t topology '" + std::string(name) + "'");
}

std::string_view to_string(Topology topology) {
  return topology == Topology::bounded ? "bounded" : "periodic";
}

// ---------------------------------------------------------------------------
// GridDomain2D

GridDomain2D::GridDomain2D(Point2 origin, double h, int nx, int ny, std::vector<std::uint8_t> mask)
    : origin_(origin), h_(h), nx_(nx), ny_(ny), mask_(std::move(mask)) {
  require(h > 0.0 && std::isfinite(h), Errc::precondition, "grid spacing must be positive");
  require(nx >= 0 && ny >= 0, Errc::precondition, "cell counts must be non-negative");
  require(mask_.size() == static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y()),
          Errc::precondition, "mask size does not match grid dimensions");

  rank_.assign(mask_.size(), -1);
  for (std::size_t id = 0; id < mask_.size(); ++id) {
    if (mask_[id]) {
      rank_[id] = static_cast<long>(inside_.size());
      inside_.push_back(id);
    }
  }
  require(!inside_.empty(), Errc::empty_domain, "mask has no inside node");

  const bool ok = connected(inside_, rank_, [&](std::size_t id, auto&& visit) {
    const int i = node_i(id), j = node_j(id);
    for (int d = 0; d < 4; ++d)
      if (inside(i + kDx[d], j + kDy[d])) visit(node_id(i + kDx[d], j + kDy[d]));
  });
  require(ok, Errc::disconnected_domain, "inside nodes are not 4-connected");

  for (std::size_t id : inside_) {
    const int i = node_i(id), j = node_j(id);
    if (is_dirichlet_node(i, j)) dirichlet_.push_back(id);
    const Point2 p = position(i, j);
    for (int d = 0; d < 4; ++d) {
      if (!inside(i + kDx[d], j + kDy[d])) {
        segments_.push_back({id, kDx[d], kDy[d], {p.x + 0.5 * kDx[d] * h_, p.y + 0.5 * kDy[d] * h_}, h_});
      }
    }
  }
}

bool GridDomain2D::inside(int i, int j) const {
  if (i < 0 || j < 0 || i > nx_ || j > ny_) return false;
  return mask_[node_id(i, j)] != 0;
}

bool GridDomain2D::is_dirichlet_node(int i, int j) const {
  if (!inside(i, j)) return false;
  for (int d = 0; d < 4; ++d)
    if (!inside(i + kDx[d], j + kDy[d])) return false;
  return true;
}

Box2 GridDomain2D::bounding_box() const {
  Box2 box{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
           {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
  for (std::size_t id : inside_) {
    const Point2 p = position(id);
    box.lo.x = std::min(box.lo.x, p.x);
    box.lo.y = std::min(box.lo.y, p.y);
    box.hi.x = std::max(box.hi.x, p.x);
    box.hi.y = std::max(box.hi.y, p.y);
  }
  return box;
}

double GridDomain2D::diameter() const {
  const Box2 b = bounding_box();
  return std::hypot(b.width(), b.height());
}

// ---------------------------------------------------------------------------
// GridDomain3D

GridDomain3D::GridDomain3D(Point3 origin, double h_xy, double h_t, int nx, int ny, int nt,
                           std::vector<std::uint8_t> mask, Topology topology)
    : origin_(origin), h_xy_(h_xy), h_t_(h_t), nx_(nx), ny_(ny), nt_(nt), mask_(std::move(mask)), topology_(topology) {
  require(h_xy > 0.0 && h_t > 0.0, Errc::precondition, "grid spacings must be positive");
  require(nx >= 0 && ny >= 0 && nt >= 1, Errc::precondition, "invalid grid dimensions");
  require(mask_.size() == static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y()) *
                              static_cast<std::size_t>(nt_),
          Errc::precondition, "mask size does not match grid dimensions");
  if (topology_ == Topology::periodic) {
    require(nt_ >= 3, Errc::precondition, "periodic topology needs at least 3 layers");
    require(t_independent(), Errc::topology_mismatch, "periodic topology requires a t-independent mask");
  }

  rank_.assign(mask_.size(), -1);
  for (std::size_t id = 0; id < mask_.size(); ++id) {
    if (mask_[id]) {
      rank_[id] = static_cast<long>(inside_.size());
      inside_.push_back(id);
    }
  }
  require(!inside_.empty(), Errc::empty_domain, "mask has no inside node");

  const bool ok = connected(inside_, rank_, [&](std::size_t id, auto&& visit) {
    int i, j, l;
    node_ijl(id, i, j, l);
    for (int d = 0; d < 4; ++d)
      if (inside(i + kDx[d], j + kDy[d], l)) visit(node_id(i + kDx[d], j + kDy[d], l));
    for (int dl : {-1, 1})
      if (inside(i, j, l + dl)) visit(node_id(i, j, wrap_layer(l + dl)));
  });
  require(ok, Errc::disconnected_domain, "inside nodes are not 6-connected");

  for (std::size_t id : inside_) {
    int i, j, l;
    node_ijl(id, i, j, l);
    if (is_dirichlet_node(i, j, l)) dirichlet_.push_back(id);
  }
}

void GridDomain3D::node_ijl(std::size_t id, int& i, int& j, int& l) const {
  const auto nxp = static_cast<std::size_t>(nodes_x());
  const auto nyp = static_cast<std::size_t>(nodes_y());
  i = static_cast<int>(id % nxp);
  j = static_cast<int>((id / nxp) % nyp);
  l = static_cast<int>(id / (nxp * nyp));
}

Point3 GridDomain3D::position(std::size_t id) const {
  int i, j, l;
  node_ijl(id, i, j, l);
  return position(i, j, l);
}

int GridDomain3D::wrap_layer(int l) const {
  if (topology_ == Topology::bounded) return l;
  return ((l % nt_) + nt_) % nt_;
}

bool GridDomain3D::inside(int i, int j, int l) const {
  if (i < 0 || j < 0 || i > nx_ || j > ny_) return false;
  l = wrap_layer(l);
  if (l < 0 || l >= nt_) return false;
  return mask_[node_id(i, j, l)] != 0;
}

bool GridDomain3D::is_dirichlet_node(int i, int j, int l) const {
  if (!inside(i, j, l)) return false;
  for (int d = 0; d < 4; ++d)
    if (!inside(i + kDx[d], j + kDy[d], l)) return false;
  return inside(i, j, l - 1) && inside(i, j, l + 1);
}

bool GridDomain3D::t_independent() const {
  const std::size_t layer = static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y());
  for (int l = 1; l < nt_; ++l)
    if (!std::equal(mask_.begin(), mask_.begin() + static_cast<long>(layer),
                    mask_.begin() + static_cast<long>(l * layer)))
      return false;
  return true;
}

GridDomain2D GridDomain3D::base() const {
  require(t_independent(), Errc::topology_mismatch, "base() requires a t-independent mask");
  const std::size_t layer = static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y());
  return GridDomain2D({origin_.x, origin_.y}, h_xy_, nx_, ny_,
                      std::vector<std::uint8_t>(mask_.begin(), mask_.begin() + static_cast<long>(layer)));
}

// ---------------------------------------------------------------------------
// Construction

GridDomain2D make_shape(Shape shape, std::span<const double> params, double h) {
  require(h > 0.0 && std::isfinite(h), Errc::precondition, "h must be positive");
  const auto need = [&](std::size_t n) {
    require(params.size() == n, Errc::precondition,
            std::string(to_string(shape)) + " expects " + std::to_string(n) + " parameter(s)");
    for (double p : params) require(p > 0.0 && std::isfinite(p), Errc::precondition, "lengths must be positive");
  };

  double half_w = 0.0, half_h = 0.0;
  std::function<bool(double, double)> contains;
  const double eps = 1e-9 * h;
  switch (shape) {
    case Shape::disk: {
      need(1);
      const double r = params[0];
      half_w = half_h = r;
      contains = [r, eps](double x, double y) { return std::hypot(x, y) <= r + eps; };
      break;
    }
    case Shape::square: {
      need(1);
      const double a = 0.5 * params[0];
      half_w = half_h = a;
      contains = [a, eps](double x, double y) { return std::abs(x) <= a + eps && std::abs(y) <= a + eps; };
      break;
    }
    case Shape::rectangle: {
      need(2);
      const double a = 0.5 * params[0], b = 0.5 * params[1];
      half_w = a;
      half_h = b;
      contains = [a, b, eps](double x, double y) { return std::abs(x) <= a + eps && std::abs(y) <= b + eps; };
      break;
    }
    case Shape::annulus: {
      need(2);
      const double r_in = params[0], r_out = params[1];
      if (r_in >= r_out) throw Error(Errc::empty_domain, "annulus with r_in >= r_out is empty");
      half_w = half_h = r_out;
      contains = [r_in, r_out, eps](double x, double y) {
        const double r = std::hypot(x, y);
        return r > r_in + eps && r <= r_out + eps;
      };
      break;
    }
    case Shape::lshape: {
      need(1);
      const double a = 0.5 * params[0];
      half_w = half_h = a;
      contains = [a, eps](double x, double y) {
        const bool in_square = std::abs(x) <= a + eps && std::abs(y) <= a + eps;
        return in_square && !(x > eps && y > eps);
      };
      break;
    }
  }

  const int mx = static_cast<int>(std::floor(half_w / h + 1e-9));
  const int my = static_cast<int>(std::floor(half_h / h + 1e-9));
  const int nx = 2 * mx, ny = 2 * my;
  const Point2 origin{-mx * h, -my * h};
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1), 0);
  std::size_t count = 0;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const bool in = contains(origin.x + i * h, origin.y + j * h);
      mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx + 1) + static_cast<std::size_t>(i)] = in;
      count += in;
    }
  require(count > 0, Errc::empty_domain, "rasterization has no inside node");
  require(count >= 4, Errc::precondition, "h too coarse: fewer than 4 inside nodes");
  return GridDomain2D(origin, h, nx, ny, std::move(mask));
}

GridDomain3D extrude(const GridDomain2D& base, double T, double h_t, Topology topology) {
  require(h_t > 0.0 && T >= h_t, Errc::precondition, "extrusion needs T >= h_t > 0");
  const int nt = static_cast<int>(std::lround(T / h_t));
  const std::size_t layer = base.node_count();
  std::vector<std::uint8_t> mask;
  mask.reserve(layer * static_cast<std::size_t>(nt));
  for (int l = 0; l < nt; ++l) mask.insert(mask.end(), base.mask().begin(), base.mask().end());
  const double t0 = topology == Topology::bounded ? 0.5 * h_t : 0.0;
  return GridDomain3D({base.origin().x, base.origin().y, t0}, base.h(), h_t, base.nx(), base.ny(), nt,
                      std::move(mask), topology);
}

double boundary_quadrature(const GridDomain2D& d, const std::function<double(Point2)>& f) {
  double sum = 0.0;
  for (const auto& s : d.boundary_segments()) sum += f(s.midpoint) * s.length;
  return sum;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json mask_rows(const std::vector<std::uint8_t>& mask, int nxp, int nyp, std::size_t offset) {
  nlohmann::json rows = nlohmann::json::array();
  for (int j = 0; j < nyp; ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < nxp; ++i)
      row.push_back(static_cast<int>(mask[offset + static_cast<std::size_t>(j * nxp + i)]));
    rows.push_back(std::move(row));
  }
  return rows;
}

void read_rows(const nlohmann::json& rows, int nxp, int nyp, std::vector<std::uint8_t>& out) {
  require(rows.is_array() && rows.size() == static_cast<std::size_t>(nyp), Errc::parse, "mask row count mismatch");
  for (const auto& row : rows) {
    require(row.is_array() && row.size() == static_cast<std::size_t>(nxp), Errc::parse, "mask row length mismatch");
    for (const auto& v : row) {
      const int b = v.get<int>();
      require(b == 0 || b == 1, Errc::parse, "mask entries must be 0 or 1");
      out.push_back(static_cast<std::uint8_t>(b));
    }
  }
}

}  // namespace

nlohmann::json to_json(const GridDomain2D& d) {
  return {{"origin", {d.origin().x, d.origin().y}},
          {"h", d.h()},
          {"dims", {d.nx(), d.ny()}},
          {"mask", mask_rows(d.mask(), d.nodes_x(), d.nodes_y(), 0)}};
}

nlohmann::json to_json(const GridDomain3D& d) {
  nlohmann::json layers = nlohmann::json::array();
  const std::size_t layer = static_cast<std::size_t>(d.nodes_x()) * static_cast<std::size_t>(d.nodes_y());
  for (int l = 0; l < d.nt(); ++l)
    layers.push_back(mask_rows(d.mask(), d.nodes_x(), d.nodes_y(), static_cast<std::size_t>(l) * layer));
  return {{"origin", {d.origin().x, d.origin().y, d.origin().t}},
          {"h_xy", d.h_xy()},
          {"h_t", d.h_t()},
          {"dims", {d.nx(), d.ny(), d.nt()}},
          {"mask", std::move(layers)},
          {"t_topology", std::string(to_string(d.topology()))}};
}

GridDomain2D domain2d_from_json(const nlohmann::json& j) {
  try {
    const auto& o = j.at("origin");
    const int nx = j.at("dims").at(0).get<int>(), ny = j.at("dims").at(1).get<int>();
    std::vector<std::uint8_t> mask;
    read_rows(j.at("mask"), nx + 1, ny + 1, mask);
    return GridDomain2D({o.at(0).get<double>(), o.at(1).get<double>()}, j.at("h").get<double>(), nx, ny,
                        std::move(mask));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("domain JSON: ") + e.what());
  }
}

GridDomain3D domain3d_from_json(const nlohmann::json& j) {
  try {
    const auto& o = j.at("origin");
    const auto& dims = j.at("dims");
    const int nx = dims.at(0).get<int>(), ny = dims.at(1).get<int>(), nt = dims.at(2).get<int>();
    const auto& layers = j.at("mask");
    require(layers.is_array() && layers.size() == static_cast<std::size_t>(nt), Errc::parse,
            "mask layer count mismatch");
    std::vector<std::uint8_t> mask;
    for (const auto& rows : layers) read_rows(rows, nx + 1, ny + 1, mask);
    return GridDomain3D({o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()},
                        j.at("h_xy").get<double>(), j.at("h_t").get<double>(), nx, ny, nt, std::move(mask),
                        parse_topology(j.at("t_topology").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("domain JSON: ") + e.what());
  }
}

std::uint64_t domain_hash(const GridDomain2D& d) { return fnv1a(to_json(d).dump()); }
std::uint64_t domain_hash(const GridDomain3D& d) { return fnv1a(to_json(d).dump()); }

}  // namespace heisengap
