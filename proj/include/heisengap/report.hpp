#pragma once

#include <map>
#include <string>
#include <vector>

#include "heisengap/extrapolation.hpp"
#include "json.hpp"

namespace heisengap {

/// One pass/fail line of an experiment.
struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;  // measured quantity
  double limit = 0.0;  // the bound it is compared against
  std::string note;
};

/// One CSV row: a (case, h, j) entry of an inequality table.
struct GapRow {
  std::string case_id;
  double h = 0.0;
  int j = 0;
  double lambda_d = 0.0;
  double lambda_n = 0.0;  // lambda_{j+1} of the comparison operator
  double gap = 0.0;       // lambda_d - lambda_n
};

struct GapSummary {
  std::string case_id;
  std::string quantity;  // "gap" or a counting margin label
  int j = 0;
  std::vector<double> values;  // coarse to fine
  Extrapolation extrapolation;
  Verdict verdict = Verdict::inconclusive;
  bool strict_required = false;
};

struct Report {
  std::string experiment;
  nlohmann::json config;
  std::vector<Check> checks;
  std::vector<GapRow> rows;
  std::vector<GapSummary> summaries;
  nlohmann::json details = nlohmann::json::object();
  /// Wall-clock seconds per phase; never serialized so reports stay byte-stable.
  std::map<std::string, double> timings;

  void add(Check c) { checks.push_back(std::move(c)); }
  bool passed() const;
  /// Checks whose name starts with `prefix`; all must pass and at least one must exist.
  bool passed(const std::string& prefix) const;
};

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Canonical JSON text (sorted keys, 2-space indent, trailing newline).
std::string report_json_text(const Report& r);
/// Header "case,h,j,lambda_d,lambda_n,gap" and one row per GapRow.
std::string report_csv(const Report& r);
/// Static line plots: gap against j per h, and each gap against h.
std::string report_svg(const Report& r);

/// Writes <dir>/<experiment>.{json,csv,svg} for the requested formats and
/// returns the written paths.
std::vector<std::string> emit_report(const Report& r, const std::string& dir, const std::vector<std::string>& formats);

}  // namespace heisengap
