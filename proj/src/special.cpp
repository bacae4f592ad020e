#include "heisengap/special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "heisengap/error.hpp"

namespace heisengap {

LandauParams::LandauParams(double field, int index) : B(field), k(index) {
  require(field > 0.0 && std::isfinite(field), Errc::precondition, "field strength B must be positive");
  require(index >= 1, Errc::precondition, "Landau index k must be >= 1");
  require(index - 1 <= kMaxLaguerreIndex, Errc::index_out_of_range, "Landau index exceeds supported range");
}

double laguerre_generalized(int n, double alpha, double x) {
  require(n >= 0 && n <= kMaxLaguerreIndex, Errc::index_out_of_range,
          "Laguerre index " + std::to_string(n) + " outside [0, 64]");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + alpha - x;
  for (int m = 1; m < n; ++m) {
    const double next = ((2 * m + 1 + alpha - x) * cur - (m + alpha) * prev) / (m + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

double laguerre(int n, double x) { return laguerre_generalized(n, 0.0, x); }

ScaledLaguerre scaled_laguerre(int n, double s) {
  require(n >= 0 && n <= kMaxLaguerreIndex, Errc::index_out_of_range,
          "Laguerre index " + std::to_string(n) + " outside [0, 64]");
  const double w = std::exp(-0.5 * s);
  // The recurrence is linear, so seeding it with the weight carries the
  // product exp(-s/2) L_m^(alpha)(s) through every step.
  const auto weighted = [&](int m, double alpha) {
    if (m == 0) return w;
    double prev = w, cur = w * (1.0 + alpha - s);
    for (int i = 1; i < m; ++i) {
      const double next = ((2 * i + 1 + alpha - s) * cur - (i + alpha) * prev) / (i + 1);
      prev = cur;
      cur = next;
    }
    return cur;
  };
  const double g = weighted(n, 0.0);
  // d/ds L_n = -L_{n-1}^(1)
  const double dl = n == 0 ? 0.0 : -weighted(n - 1, 1.0);
  return {g, dl - 0.5 * g};
}

std::array<double, 2> gauge(Point2 z) { return {-0.5 * z.y, 0.5 * z.x}; }

KernelValue kernel(const LandauParams& p, Point2 z, Point2 zp) {
  const double rx = z.x - zp.x, ry = z.y - zp.y;
  const double s = 0.5 * p.B * (rx * rx + ry * ry);
  const ScaledLaguerre g = scaled_laguerre(p.k - 1, s);
  const double c = p.B / (2.0 * std::numbers::pi);
  const double cross = z.x * zp.y - z.y * zp.x;
  const cplx phase = std::polar(1.0, -0.5 * p.B * cross);
  const cplx value = c * g.value * phase;
  const cplx radial = cplx(0.0, -p.B * c * g.derivative) * phase;
  return {value,
          {0.5 * p.B * ry * value + radial * rx, -0.5 * p.B * rx * value + radial * ry}};
}

cplx kernel_value(const LandauParams& p, Point2 z, Point2 zp) {
  const double rx = z.x - zp.x, ry = z.y - zp.y;
  const double s = 0.5 * p.B * (rx * rx + ry * ry);
  const double c = p.B / (2.0 * std::numbers::pi);
  const double cross = z.x * zp.y - z.y * zp.x;
  return c * scaled_laguerre(p.k - 1, s).value * std::polar(1.0, -0.5 * p.B * cross);
}

KernelProduct kernel_product(std::span<const LandauParams> params, std::span<const Point2> z,
                             std::span<const Point2> zp) {
  require(!params.empty() && params.size() == z.size() && params.size() == zp.size(), Errc::length_mismatch,
          "kernel_product needs equally long, non-empty parameter and point lists");
  KernelProduct out{1.0, 0.0};
  for (std::size_t b = 0; b < params.size(); ++b) {
    out.value *= kernel_value(params[b], z[b], zp[b]);
    out.total_energy += params[b].energy();
  }
  return out;
}

double kernel_envelope(const LandauParams& p, double r) {
  const double s = 0.5 * p.B * r * r;
  return std::exp(-0.5 * s) * std::pow(1.0 + s, p.k);
}

double cutoff_radius(const LandauParams& p, double tail_tol) {
  require(tail_tol > 0.0 && tail_tol <= 1e-3, Errc::precondition, "tail_tol must lie in (0, 1e-3]");
  // In s = B r^2/2 the envelope exp(-s/2)(1+s)^k peaks at s = 2k-1 and then
  // decreases, so bisect on the decreasing branch.
  const auto env = [&](double s) { return std::exp(-0.5 * s) * std::pow(1.0 + s, p.k); };
  double lo = std::max(0.0, 2.0 * p.k - 1.0);
  if (env(lo) < tail_tol) return std::sqrt(2.0 * lo / p.B);
  double hi = lo + 1.0;
  while (env(hi) >= tail_tol) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (env(mid) >= tail_tol ? lo : hi) = mid;
  }
  return std::sqrt(2.0 * hi / p.B);
}

QuadRule uniform_rule(Box2 box, double spacing) {
  require(spacing > 0.0, Errc::precondition, "rule spacing must be positive");
  QuadRule rule;
  rule.nx = std::max(1, static_cast<int>(std::ceil(box.width() / spacing - 1e-9)));
  rule.ny = std::max(1, static_cast<int>(std::ceil(box.height() / spacing - 1e-9)));
  rule.spacing = spacing;
  const double cx = 0.5 * (box.lo.x + box.hi.x), cy = 0.5 * (box.lo.y + box.hi.y);
  rule.box = {{cx - 0.5 * rule.nx * spacing, cy - 0.5 * rule.ny * spacing},
              {cx + 0.5 * rule.nx * spacing, cy + 0.5 * rule.ny * spacing}};
  return rule;
}

QuadRule quad_grid(const LandauParams& p, Box2 support, double tail_tol, std::size_t budget) {
  const double r_cut = cutoff_radius(p, tail_tol);
  const Box2 box = support.inflated(r_cut);
  const Point2 centre{0.5 * (support.lo.x + support.hi.x), 0.5 * (support.lo.y + support.hi.y)};
  const double diag = std::hypot(support.width(), support.height());
  const double scale = 1.0 / std::sqrt(p.B);
  // Reproducing-integral endpoints: opposite support corners, so the
  // oscillating phase of the widest kernel product is resolved.
  const Point2 a = support.lo, b = support.hi;

  struct Refs {
    double mass, energy;
    cplx repro;
  };
  const auto refs = [&](const QuadRule& rule) {
    return Refs{integrate<double>(rule, [&](Point2 w) { return std::norm(kernel_value(p, centre, w)); }),
                integrate<double>(rule, [&](Point2 w) { return kernel(p, centre, w).gradient_norm2(); }),
                integrate<cplx>(rule, [&](Point2 w) { return kernel_value(p, a, w) * kernel_value(p, w, b); })};
  };

  double spacing = std::min(scale, 2.0 * std::numbers::pi / (p.B * std::max(diag, scale)));
  QuadRule coarse = uniform_rule(box, spacing);
  require(coarse.size() <= budget, Errc::budget_exceeded, "initial quadrature rule exceeds node budget");
  Refs prev = refs(coarse);
  const double repro_scale = std::abs(kernel_value(p, a, b)) + p.B / (2.0 * std::numbers::pi) * 1e-3;
  for (int level = 1;; ++level) {
    spacing *= 0.5;
    QuadRule fine = uniform_rule(box, spacing);
    if (fine.size() > budget)
      throw Error(Errc::budget_exceeded, "quadrature refinement exceeds " + std::to_string(budget) + " nodes");
    const Refs cur = refs(fine);
    const bool settled = std::abs(cur.mass - prev.mass) <= tail_tol * std::abs(cur.mass) &&
                         std::abs(cur.energy - prev.energy) <= tail_tol * std::abs(cur.energy) &&
                         std::abs(cur.repro - prev.repro) <= tail_tol * repro_scale;
    if (settled) {
      fine.r_cut = r_cut;
      fine.tail_tol = tail_tol;
      fine.refinements = level;
      return fine;
    }
    prev = cur;
  }
}

nlohmann::json to_json(const QuadRule& rule) {
  return {{"box", {rule.box.lo.x, rule.box.lo.y, rule.box.hi.x, rule.box.hi.y}},
          {"spacing", rule.spacing},
          {"dims", {rule.nx, rule.ny}},
          {"r_cut", rule.r_cut},
          {"tail_tol", rule.tail_tol},
          {"refinements", rule.refinements}};
}

}  // namespace heisengap
