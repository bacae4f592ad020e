#include "heisengap/averaging.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "heisengap/error.hpp"
#include "heisengap/parallel.hpp"

namespace heisengap {

namespace {

void check_field_range(const LandauParams& p, const GridDomain2D& d) {
  const double diam = d.diameter();
  require(p.B * diam * diam <= kMaxFieldDiameter2, Errc::out_of_range,
          "B * diam(Omega)^2 = " + std::to_string(p.B * diam * diam) + " exceeds the supported range");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double LemmaResidual::normalized(const LandauParams& p) const {
  return residual / (p.B * p.B * (2 * p.k - 1) / (2.0 * std::numbers::pi));
}

LemmaResidual lemma_residual(const LandauParams& p, Point2 z, double tail_tol) {
  const QuadRule rule = quad_grid(p, Box2{z, z}, tail_tol);
  LemmaResidual out;
  out.energy = integrate<double>(rule, [&](Point2 w) { return kernel(p, z, w).gradient_norm2(); });
  out.mass = integrate<double>(rule, [&](Point2 w) { return std::norm(kernel_value(p, z, w)); });
  out.residual = out.energy - p.energy() * out.mass;
  return out;
}

double DeficitMap::normalized_integral() const {
  return integral / (params.energy() * params.B / (2.0 * std::numbers::pi) * domain.measure());
}

std::size_t DeficitMap::negative_count() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const DeficitSample& s) { return s.R <= 0.0; }));
}

double DeficitMap::negative_fraction() const {
  return samples.empty() ? 0.0 : static_cast<double>(negative_count()) / static_cast<double>(samples.size());
}

QuadRule default_scan_rule(const LandauParams& p, const GridDomain2D& d, double tail_tol) {
  return quad_grid(p, d.bounding_box(), tail_tol);
}

DeficitMap deficit_scan(const LandauParams& p, const GridDomain2D& d, const QuadRule& scan) {
  check_field_range(p, d);
  const double r_cut = scan.r_cut > 0.0 ? scan.r_cut : cutoff_radius(p, 1e-6);
  require(scan.box.contains(d.bounding_box().inflated(r_cut * (1.0 - 1e-12))), Errc::precondition,
          "scan box must cover the domain's bounding box inflated by r_cut");

  const auto nodes = d.inside_nodes();
  std::vector<Point2> pos(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) pos[n] = d.position(nodes[n]);
  const double cell = d.h() * d.h();

  std::vector<DeficitSample> samples(scan.size());
  parallel_for(samples.size(), [&](std::size_t id) {
    const Point2 zp = scan.node(id);
    std::vector<double> e(pos.size()), m(pos.size());
    for (std::size_t n = 0; n < pos.size(); ++n) {
      const KernelValue kv = kernel(p, pos[n], zp);
      e[n] = kv.gradient_norm2();
      m[n] = std::norm(kv.value);
    }
    DeficitSample& s = samples[id];
    s.zp = zp;
    s.energy = cell * pairwise_sum(e);
    s.mass = cell * pairwise_sum(m);
    s.R = s.energy - p.energy() * s.mass;
  });

  std::vector<double> weighted(samples.size()), plain(samples.size());
  for (std::size_t id = 0; id < samples.size(); ++id) {
    weighted[id] = scan.weight(id) * samples[id].R;
    plain[id] = samples[id].R;
  }

  DeficitMap map{p, d, scan, {}, pairwise_sum(weighted), pairwise_sum(plain) / static_cast<double>(samples.size())};
  std::stable_sort(samples.begin(), samples.end(),
                   [](const DeficitSample& a, const DeficitSample& b) { return a.R < b.R; });
  map.samples = std::move(samples);
  return map;
}

std::vector<cplx> restrict_kernel(const LandauParams& p, const GridDomain2D& d, Point2 zp) {
  const auto nodes = d.inside_nodes();
  std::vector<cplx> out(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) out[n] = kernel_value(p, d.position(nodes[n]), zp);
  return out;
}

std::vector<TrialFunction> select_trials(const DeficitMap& map, std::size_t count, double gram_tol) {
  require(count >= 1, Errc::precondition, "select_trials needs count >= 1");
  require(gram_tol > 0.0 && gram_tol < 1.0, Errc::precondition, "gram_tol must lie in (0, 1)");
  check_field_range(map.params, map.domain);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < map.samples.size() && map.samples[i].R <= 0.0; ++i) candidates.push_back(i);
  if (candidates.size() < count)
    throw Error(Errc::not_enough_trials, "only " + std::to_string(candidates.size()) +
                                             " scan nodes satisfy R <= 0, " + std::to_string(count) + " requested");

  const double cell = map.domain.h() * map.domain.h();
  std::map<std::size_t, std::vector<cplx>> cache;
  const auto column = [&](std::size_t sample) -> const std::vector<cplx>& {
    auto it = cache.find(sample);
    if (it == cache.end())
      it = cache.emplace(sample, restrict_kernel(map.params, map.domain, map.samples[sample].zp)).first;
    return it->second;
  };
  const auto gram_ok = [&](const std::vector<std::size_t>& picks) {
    const auto n = static_cast<Eigen::Index>(picks.size());
    Eigen::MatrixXcd G(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b) {
        const auto& u = column(picks[static_cast<std::size_t>(a)]);
        const auto& v = column(picks[static_cast<std::size_t>(b)]);
        cplx s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * v[i];
        G(a, b) = cell * s;
        G(b, a) = std::conj(G(a, b));
      }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return ev(0) >= gram_tol * ev(n - 1) && ev(n - 1) > 0.0;
  };

  std::vector<std::size_t> picks{candidates.front()};
  if (!gram_ok(picks)) throw Error(Errc::not_enough_trials, "scan minimizer vanishes on the domain");
  std::vector<std::uint8_t> used(map.samples.size(), 0);
  used[candidates.front()] = 1;

  while (picks.size() < count) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t c : candidates) {
      if (used[c]) continue;
      double dmin = std::numeric_limits<double>::max();
      for (std::size_t q : picks)
        dmin = std::min(dmin, std::hypot(map.samples[c].zp.x - map.samples[q].zp.x,
                                         map.samples[c].zp.y - map.samples[q].zp.y));
      order.emplace_back(-dmin, c);
    }
    std::stable_sort(order.begin(), order.end());
    bool accepted = false;
    for (const auto& [neg_d, c] : order) {
      picks.push_back(c);
      if (gram_ok(picks)) {
        used[c] = 1;
        accepted = true;
        break;
      }
      picks.pop_back();
      used[c] = 1;
    }
    if (!accepted)
      throw Error(Errc::not_enough_trials, "Gram condition fails for every remaining candidate after " +
                                               std::to_string(picks.size()) + " trials");
  }

  std::vector<TrialFunction> out;
  for (std::size_t q : picks) {
    const DeficitSample& s = map.samples[q];
    out.push_back({map.params, s.zp, column(q), s.energy / s.mass, s.R});
  }
  return out;
}

std::vector<double> sample_on_boundary(const GridDomain2D& d, const std::function<double(Point2)>& sigma) {
  std::vector<double> out;
  out.reserve(d.boundary_segments().size());
  for (const auto& s : d.boundary_segments()) out.push_back(sigma(s.midpoint));
  return out;
}

double RobinAverage::relative_error() const {
  const double scale = std::max(std::abs(expected), 1e-300);
  return std::abs(averaged - expected) / scale;
}

RobinAverage robin_boundary_average(const LandauParams& p, const GridDomain2D& d, std::span<const double> sigma,
                                    const QuadRule& rule) {
  const auto& segs = d.boundary_segments();
  require(sigma.size() == segs.size(), Errc::length_mismatch, "sigma must have one value per boundary segment");
  for (double s : sigma) require(std::isfinite(s), Errc::precondition, "sigma must be finite");

  Box2 mids{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
            {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
  for (const auto& s : segs) {
    mids.lo.x = std::min(mids.lo.x, s.midpoint.x);
    mids.lo.y = std::min(mids.lo.y, s.midpoint.y);
    mids.hi.x = std::max(mids.hi.x, s.midpoint.x);
    mids.hi.y = std::max(mids.hi.y, s.midpoint.y);
  }
  const double r_cut = rule.r_cut > 0.0 ? rule.r_cut : cutoff_radius(p, 1e-6);
  require(rule.box.contains(mids.inflated(r_cut * (1.0 - 1e-12))), Errc::precondition,
          "rule must cover the boundary inflated by r_cut");

  RobinAverage out;
  std::vector<double> ws(segs.size());
  for (std::size_t s = 0; s < segs.size(); ++s) ws[s] = sigma[s] * segs[s].length;
  out.sigma_integral = pairwise_sum(ws);
  out.expected = p.B / (2.0 * std::numbers::pi) * out.sigma_integral;
  out.averaged = integrate<double>(rule, [&](Point2 w) {
    std::vector<double> terms(segs.size());
    for (std::size_t s = 0; s < segs.size(); ++s) terms[s] = ws[s] * std::norm(kernel_value(p, segs[s].midpoint, w));
    return pairwise_sum(terms);
  });
  return out;
}

nlohmann::json to_json(const DeficitMap& map) {
  return {{"B", map.params.B},
          {"k", map.params.k},
          {"domain_hash", domain_hash(map.domain)},
          {"measure", map.domain.measure()},
          {"rule", to_json(map.rule)},
          {"samples", map.samples.size()},
          {"integral", map.integral},
          {"normalized_integral", map.normalized_integral()},
          {"mean", map.mean},
          {"negative_count", map.negative_count()},
          {"negative_fraction", map.negative_fraction()},
          {"min_R", map.samples.empty() ? 0.0 : map.samples.front().R}};
}

std::string deficit_csv(const DeficitMap& map) {
  std::string out = "zp_x,zp_y,R\n";
  for (const auto& s : map.samples) out += fmt(s.zp.x) + "," + fmt(s.zp.y) + "," + fmt(s.R) + "\n";
  return out;
}

}  // namespace heisengap
