#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace heisengap {

/// Richardson extrapolation of a quantity sampled on an h-ladder with ratio 2,
/// values ordered coarse to fine.
struct Extrapolation {
  double limit = 0.0;
  double error = 0.0;  // error estimate of the limit
  double order = 0.0;  // order used for the limit
  bool fitted = false; // order taken from the data rather than the nominal value
  std::size_t levels = 0;
};

/// Order observed from three consecutive levels, log2((g1 - g2) / (g2 - g3));
/// NaN when the differences do not shrink monotonically.
double observed_order(double g1, double g2, double g3);

/// With three or more levels the order is fitted from the finest three when
/// it lies in [0.5, 4], otherwise the nominal order is used. The error
/// estimate is |limit - finest| plus the spread between fitted and nominal
/// limits (or the last difference when no fit is available).
Extrapolation richardson(std::span<const double> values, double nominal_order);

enum class Verdict { verified_strict, verified_nonstrict, inconclusive };
std::string_view to_string(Verdict v);

/// verified_strict: extrapolated limit exceeds margin * error estimate;
/// verified_nonstrict: every discrete value is >= 0; else inconclusive.
Verdict classify(const Extrapolation& e, std::span<const double> discrete, double margin = 3.0);

nlohmann::json to_json(const Extrapolation& e);

}  // namespace heisengap
