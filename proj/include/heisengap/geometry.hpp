#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace heisengap {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

struct Box2 {
  Point2 lo;
  Point2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  bool contains(const Box2& other) const {
    return lo.x <= other.lo.x && lo.y <= other.lo.y && hi.x >= other.hi.x && hi.y >= other.hi.y;
  }
  Box2 inflated(double margin) const {
    return {{lo.x - margin, lo.y - margin}, {hi.x + margin, hi.y + margin}};
  }
};

enum class Shape { disk, square, rectangle, annulus, lshape };
enum class Topology { bounded, periodic };

Shape parse_shape(std::string_view name);
std::string_view to_string(Shape shape);
Topology parse_topology(std::string_view name);
std::string_view to_string(Topology topology);

/// Edge between an inside node and an outside (or off-grid) 4-neighbour.
struct BoundarySegment {
  std::size_t inside_node = 0;  // grid node id
  int dx = 0;                   // outward direction, one of (+-1,0), (0,+-1)
  int dy = 0;
  Point2 midpoint;
  double length = 0.0;
};

/// Node-centred raster of a planar domain. Nodes sit at origin + (i*h, j*h)
/// for i in [0, nx], j in [0, ny]; `mask` is row-major over those nodes.
///
/// Two node classes matter downstream: *inside* nodes (the mask) carry the
/// free (Neumann) form, and *Dirichlet* nodes are inside nodes whose four
/// neighbours are all inside. The Dirichlet realization pins the raster's
/// boundary layer to zero.
class GridDomain2D {
 public:
  GridDomain2D(Point2 origin, double h, int nx, int ny, std::vector<std::uint8_t> mask);

  const Point2& origin() const { return origin_; }
  double h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nodes_x() const { return nx_ + 1; }
  int nodes_y() const { return ny_ + 1; }
  std::size_t node_count() const { return mask_.size(); }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  std::size_t node_id(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x()) + static_cast<std::size_t>(i);
  }
  int node_i(std::size_t id) const { return static_cast<int>(id % static_cast<std::size_t>(nodes_x())); }
  int node_j(std::size_t id) const { return static_cast<int>(id / static_cast<std::size_t>(nodes_x())); }

  /// False for off-grid indices.
  bool inside(int i, int j) const;
  bool is_dirichlet_node(int i, int j) const;

  Point2 position(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
  Point2 position(std::size_t id) const { return position(node_i(id), node_j(id)); }

  /// Inside node ids in row-major order; their rank is the Neumann dof index.
  std::span<const std::size_t> inside_nodes() const { return inside_; }
  /// Dirichlet node ids in row-major order.
  std::span<const std::size_t> dirichlet_nodes() const { return dirichlet_; }
  /// Rank of node `id` among inside nodes, or -1.
  long inside_rank(std::size_t id) const { return rank_[id]; }

  double measure() const { return static_cast<double>(inside_.size()) * h_ * h_; }
  const std::vector<BoundarySegment>& boundary_segments() const { return segments_; }
  /// Bounding box of inside node positions.
  Box2 bounding_box() const;
  double diameter() const;

  friend bool operator==(const GridDomain2D& a, const GridDomain2D& b) {
    return a.origin_.x == b.origin_.x && a.origin_.y == b.origin_.y && a.h_ == b.h_ && a.nx_ == b.nx_ &&
           a.ny_ == b.ny_ && a.mask_ == b.mask_;
  }

 private:
  Point2 origin_;
  double h_;
  int nx_;
  int ny_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> inside_;
  std::vector<std::size_t> dirichlet_;
  std::vector<long> rank_;
  std::vector<BoundarySegment> segments_;
};

/// Raster of a domain in (x, y, t). `nt` counts node layers, each carrying
/// volume h_xy^2 * h_t. Bounded layers are cell-centred in t; periodic
/// layers start at the origin and wrap with period nt * h_t.
class GridDomain3D {
 public:
  GridDomain3D(Point3 origin, double h_xy, double h_t, int nx, int ny, int nt, std::vector<std::uint8_t> mask,
               Topology topology);

  const Point3& origin() const { return origin_; }
  double h_xy() const { return h_xy_; }
  double h_t() const { return h_t_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nt() const { return nt_; }
  int nodes_x() const { return nx_ + 1; }
  int nodes_y() const { return ny_ + 1; }
  Topology topology() const { return topology_; }
  double period() const { return nt_ * h_t_; }
  std::size_t node_count() const { return mask_.size(); }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  std::size_t node_id(int i, int j, int l) const {
    return (static_cast<std::size_t>(l) * static_cast<std::size_t>(nodes_y()) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(nodes_x()) +
           static_cast<std::size_t>(i);
  }
  void node_ijl(std::size_t id, int& i, int& j, int& l) const;

  /// Wraps l for periodic topology; false for off-grid indices otherwise.
  bool inside(int i, int j, int l) const;
  bool is_dirichlet_node(int i, int j, int l) const;
  int wrap_layer(int l) const;

  Point3 position(int i, int j, int l) const {
    return {origin_.x + i * h_xy_, origin_.y + j * h_xy_, origin_.t + l * h_t_};
  }
  Point3 position(std::size_t id) const;

  std::span<const std::size_t> inside_nodes() const { return inside_; }
  std::span<const std::size_t> dirichlet_nodes() const { return dirichlet_; }
  long inside_rank(std::size_t id) const { return rank_[id]; }

  double volume_per_node() const { return h_xy_ * h_xy_ * h_t_; }
  double measure() const { return static_cast<double>(inside_.size()) * volume_per_node(); }
  bool t_independent() const;
  /// Planar (x, y) cross-section of a cylinder; requires a t-independent mask.
  GridDomain2D base() const;

  friend bool operator==(const GridDomain3D& a, const GridDomain3D& b) {
    return a.origin_.x == b.origin_.x && a.origin_.y == b.origin_.y && a.origin_.t == b.origin_.t &&
           a.h_xy_ == b.h_xy_ && a.h_t_ == b.h_t_ && a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.nt_ == b.nt_ &&
           a.topology_ == b.topology_ && a.mask_ == b.mask_;
  }

 private:
  Point3 origin_;
  double h_xy_;
  double h_t_;
  int nx_;
  int ny_;
  int nt_;
  std::vector<std::uint8_t> mask_;
  Topology topology_;
  std::vector<std::size_t> inside_;
  std::vector<std::size_t> dirichlet_;
  std::vector<long> rank_;
};

/// Rasterizes a shape centred at the origin. Parameters:
/// disk {r}, square {side}, rectangle {width, height}, annulus {r_in, r_out},
/// lshape {side} (square minus its open upper-right quadrant).
GridDomain2D make_shape(Shape shape, std::span<const double> params, double h);

GridDomain3D extrude(const GridDomain2D& base, double T, double h_t, Topology topology);

/// Sum over boundary segments of f(midpoint) * length.
double boundary_quadrature(const GridDomain2D& d, const std::function<double(Point2)>& f);

nlohmann::json to_json(const GridDomain2D& d);
nlohmann::json to_json(const GridDomain3D& d);
GridDomain2D domain2d_from_json(const nlohmann::json& j);
GridDomain3D domain3d_from_json(const nlohmann::json& j);

/// FNV-1a hash of the canonical JSON encoding.
std::uint64_t domain_hash(const GridDomain2D& d);
std::uint64_t domain_hash(const GridDomain3D& d);

}  // namespace heisengap
