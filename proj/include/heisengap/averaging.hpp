#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "heisengap/geometry.hpp"
#include "heisengap/special.hpp"
#include "json.hpp"

namespace heisengap {

/// Largest B * diam(Omega)^2 accepted by the averaging routines.
inline constexpr double kMaxFieldDiameter2 = 200.0;

/// Both sides of the z'-averaged energy identity at a fixed point z.
struct LemmaResidual {
  double energy = 0.0;  // int |(D_z - B A(z)) P(z, z')|^2 dz'
  double mass = 0.0;    // int |P(z, z')|^2 dz'
  double residual = 0.0;

  /// residual / (B^2 (2k-1) / 2pi)
  double normalized(const LandauParams& p) const;
};

LemmaResidual lemma_residual(const LandauParams& p, Point2 z, double tail_tol);

struct DeficitSample {
  Point2 zp;
  double energy = 0.0;  // int_Omega |(D - BA) P(., z')|^2
  double mass = 0.0;    // int_Omega |P(., z')|^2
  double R = 0.0;       // energy - B(2k-1) mass
};

/// R(z') sampled on a scan rule; samples are sorted by R ascending.
struct DeficitMap {
  LandauParams params;
  GridDomain2D domain;
  QuadRule rule;
  std::vector<DeficitSample> samples;
  double integral = 0.0;  // sum of rule weight * R
  double mean = 0.0;      // plain mean of the samples

  /// integral / (B(2k-1) (B/2pi) |Omega|); zero in exact arithmetic.
  double normalized_integral() const;
  std::size_t negative_count() const;
  double negative_fraction() const;
};

/// Scan rule for a domain: quad_grid over the domain's bounding box.
QuadRule default_scan_rule(const LandauParams& p, const GridDomain2D& d, double tail_tol);

DeficitMap deficit_scan(const LandauParams& p, const GridDomain2D& d, const QuadRule& scan);

/// P_k^B(., z') restricted to the inside nodes of d.
std::vector<cplx> restrict_kernel(const LandauParams& p, const GridDomain2D& d, Point2 zp);

struct TrialFunction {
  LandauParams params;
  Point2 zp;
  std::vector<cplx> restriction;  // on inside nodes, in rank order
  double energy_ratio = 0.0;      // Omega-Rayleigh quotient of P(., z')
  double R = 0.0;
};

/// Greedy farthest-point selection of kernel columns with R <= 0 whose
/// Omega-Gram matrix satisfies lambda_min >= gram_tol * lambda_max.
std::vector<TrialFunction> select_trials(const DeficitMap& map, std::size_t count, double gram_tol);

/// Per-segment samples of a boundary density at segment midpoints.
std::vector<double> sample_on_boundary(const GridDomain2D& d, const std::function<double(Point2)>& sigma);

struct RobinAverage {
  double averaged = 0.0;        // int_{R^2} sum_s sigma_s h |P(z_s, z')|^2 dz'
  double expected = 0.0;        // (B/2pi) int sigma
  double sigma_integral = 0.0;  // boundary_quadrature(sigma)

  double relative_error() const;
};

RobinAverage robin_boundary_average(const LandauParams& p, const GridDomain2D& d, std::span<const double> sigma,
                                    const QuadRule& rule);

nlohmann::json to_json(const DeficitMap& map);
/// CSV with header "zp_x,zp_y,R".
std::string deficit_csv(const DeficitMap& map);

}  // namespace heisengap
