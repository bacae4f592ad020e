#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "heisengap/geometry.hpp"
#include "heisengap/parallel.hpp"
#include "json.hpp"

namespace heisengap {

using cplx = std::complex<double>;

inline constexpr int kMaxLaguerreIndex = 64;

/// Field strength B > 0 and Landau index k >= 1.
struct LandauParams {
  double B = 1.0;
  int k = 1;

  LandauParams() = default;
  LandauParams(double field, int index);

  /// Landau level B(2k-1).
  double energy() const { return B * (2 * k - 1); }
};

/// L_n(x) by the three-term recurrence, L_n(0) = 1. Valid for 0 <= n <= 64.
double laguerre(int n, double x);

/// Generalized Laguerre L_n^(alpha)(x).
double laguerre_generalized(int n, double alpha, double x);

/// g(s) = exp(-s/2) L_n(s) and g'(s), evaluated jointly so the exponential
/// never separates from the polynomial.
struct ScaledLaguerre {
  double value;
  double derivative;
};
ScaledLaguerre scaled_laguerre(int n, double s);

/// Symmetric gauge A(x, y) = (-y/2, x/2).
std::array<double, 2> gauge(Point2 z);

/// Landau projector kernel P_k^B(z, z') and its covariant gradient
/// (D_z - B A(z)) P_k^B(z, z'), with D = -i grad.
struct KernelValue {
  cplx value;
  std::array<cplx, 2> magnetic_gradient;

  double gradient_norm2() const { return std::norm(magnetic_gradient[0]) + std::norm(magnetic_gradient[1]); }
};

KernelValue kernel(const LandauParams& p, Point2 z, Point2 zp);
cplx kernel_value(const LandauParams& p, Point2 z, Point2 zp);

/// Product kernel over independent planar blocks, with its Landau energy
/// sum_j B_j (2 k_j - 1).
struct KernelProduct {
  cplx value;
  double total_energy;
};
KernelProduct kernel_product(std::span<const LandauParams> params, std::span<const Point2> z,
                             std::span<const Point2> zp);

/// Pointwise envelope exp(-B r^2/4) (1 + B r^2/2)^k bounding |P|/(B/2pi) and
/// |(D - BA)P|/(B^2/2pi).
double kernel_envelope(const LandauParams& p, double r);

/// Smallest radius beyond which kernel_envelope stays below tail_tol.
double cutoff_radius(const LandauParams& p, double tail_tol);

inline constexpr std::size_t kDefaultNodeBudget = std::size_t{1} << 24;

/// Uniform tensor trapezoid rule on an axis-aligned box.
struct QuadRule {
  Box2 box;
  double spacing = 0.0;
  int nx = 0;  // cells
  int ny = 0;
  double r_cut = 0.0;
  double tail_tol = 0.0;
  int refinements = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1); }
  Point2 node(std::size_t id) const {
    const auto i = static_cast<int>(id % static_cast<std::size_t>(nx + 1));
    const auto j = static_cast<int>(id / static_cast<std::size_t>(nx + 1));
    return {box.lo.x + i * spacing, box.lo.y + j * spacing};
  }
  double weight(std::size_t id) const {
    const auto i = static_cast<int>(id % static_cast<std::size_t>(nx + 1));
    const auto j = static_cast<int>(id / static_cast<std::size_t>(nx + 1));
    const double wi = (i == 0 || i == nx) ? 0.5 : 1.0;
    const double wj = (j == 0 || j == ny) ? 0.5 : 1.0;
    return wi * wj * spacing * spacing;
  }
};

/// Uniform rule covering `box` with cells of (at most) `spacing`.
QuadRule uniform_rule(Box2 box, double spacing);

/// Rule for integrals over z' of kernel products whose first argument ranges
/// over `support`: the box is inflated by cutoff_radius, and the spacing is
/// halved until reference integrals change by less than tail_tol (relative).
QuadRule quad_grid(const LandauParams& p, Box2 support, double tail_tol,
                   std::size_t budget = kDefaultNodeBudget);

nlohmann::json to_json(const QuadRule& rule);

/// Sum over the rule of weight * f(node), reduced pairwise in node order.
template <class T, class Fn>
T integrate(const QuadRule& rule, Fn&& f) {
  std::vector<T> terms(rule.size());
  parallel_for(terms.size(), [&](std::size_t id) { terms[id] = rule.weight(id) * f(rule.node(id)); });
  return pairwise_sum(terms);
}

}  // namespace heisengap
