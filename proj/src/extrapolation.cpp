#include "heisengap/extrapolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace heisengap {

namespace {

double extrapolate(double coarse, double fine, double order) {
  return fine + (fine - coarse) / (std::exp2(order) - 1.0);
}

}  // namespace

double observed_order(double g1, double g2, double g3) {
  const double d1 = g1 - g2, d2 = g2 - g3;
  if (d2 == 0.0 || d1 / d2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(d1 / d2);
}

Extrapolation richardson(std::span<const double> v, double nominal_order) {
  Extrapolation e;
  e.levels = v.size();
  if (v.empty()) {
    e.limit = std::numeric_limits<double>::quiet_NaN();
    e.error = std::numeric_limits<double>::infinity();
    return e;
  }
  const std::size_t n = v.size();
  if (n == 1) {
    e.limit = v[0];
    e.error = std::numeric_limits<double>::infinity();
    return e;
  }
  const double nominal = extrapolate(v[n - 2], v[n - 1], nominal_order);
  if (n >= 3) {
    const double p = observed_order(v[n - 3], v[n - 2], v[n - 1]);
    if (std::isfinite(p) && p >= 0.5 && p <= 4.0) {
      e.limit = extrapolate(v[n - 2], v[n - 1], p);
      e.order = p;
      e.fitted = true;
      e.error = std::abs(e.limit - v[n - 1]) + std::abs(e.limit - nominal);
      return e;
    }
  }
  e.limit = nominal;
  e.order = nominal_order;
  e.error = std::abs(nominal - v[n - 1]) + std::abs(v[n - 1] - v[n - 2]);
  return e;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::verified_strict: return "verified-strict";
    case Verdict::verified_nonstrict: return "verified-nonstrict";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict classify(const Extrapolation& e, std::span<const double> discrete, double margin) {
  if (std::isfinite(e.limit) && std::isfinite(e.error) && e.limit > 0.0 && e.limit > margin * e.error)
    return Verdict::verified_strict;
  if (!discrete.empty() && std::all_of(discrete.begin(), discrete.end(), [](double g) { return g >= 0.0; }))
    return Verdict::verified_nonstrict;
  return Verdict::inconclusive;
}

nlohmann::json to_json(const Extrapolation& e) {
  return {{"limit", e.limit}, {"error", e.error}, {"order", e.order}, {"fitted", e.fitted}, {"levels", e.levels}};
}

}  // namespace heisengap
