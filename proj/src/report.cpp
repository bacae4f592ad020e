#include "heisengap/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "heisengap/error.hpp"

namespace heisengap {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Verdict parse_verdict(const std::string& s) {
  if (s == "verified-strict") return Verdict::verified_strict;
  if (s == "verified-nonstrict") return Verdict::verified_nonstrict;
  return Verdict::inconclusive;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// One panel of line plots with a frame, axis extents and a legend.
std::string panel(double x0, double y0, double w, double ht, const std::string& title, const std::string& xlabel,
                  const std::vector<Series>& series) {
  double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
  double ymin = xmin, ymax = xmax;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x), xmax = std::max(xmax, x);
      ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
  if (xmin > xmax) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double left = x0 + 60, right = x0 + w - 110, top = y0 + 30, bottom = y0 + ht - 40;
  const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
  const auto sy = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

  std::string out;
  out += "<g>\n";
  out += "<text x=\"" + px(x0 + 10) + "\" y=\"" + px(y0 + 18) + "\" font-size=\"13\">" + xml_escape(title) +
         "</text>\n";
  out += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(right - left) + "\" height=\"" +
         px(bottom - top) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  out += "<text x=\"" + px(left) + "\" y=\"" + px(bottom + 16) + "\" font-size=\"10\">" + num(xmin) + "</text>\n";
  out += "<text x=\"" + px(right - 40) + "\" y=\"" + px(bottom + 16) + "\" font-size=\"10\">" + num(xmax) +
         "</text>\n";
  out += "<text x=\"" + px((left + right) / 2 - 20) + "\" y=\"" + px(bottom + 32) + "\" font-size=\"11\">" +
         xml_escape(xlabel) + "</text>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", ymax);
  out += "<text x=\"" + px(x0 + 4) + "\" y=\"" + px(top + 4) + "\" font-size=\"10\">" + buf + "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", ymin);
  out += "<text x=\"" + px(x0 + 4) + "\" y=\"" + px(bottom) + "\" font-size=\"10\">" + buf + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
    std::string pts;
    for (const auto& [x, y] : series[s].points)
      if (std::isfinite(x) && std::isfinite(y)) pts += px(sx(x)) + "," + px(sy(y)) + " ";
    if (!pts.empty()) pts.pop_back();
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
           "\"/>\n";
    out += "<text x=\"" + px(right + 8) + "\" y=\"" + px(top + 12 + 14 * static_cast<double>(s)) +
           "\" font-size=\"10\" fill=\"" + color + "\">" + xml_escape(series[s].label) + "</text>\n";
  }
  out += "</g>\n";
  return out;
}

}  // namespace

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

bool Report::passed(const std::string& prefix) const {
  bool any = false;
  for (const Check& c : checks) {
    if (c.name.rfind(prefix, 0) != 0) continue;
    any = true;
    if (!c.passed) return false;
  }
  return any;
}

json to_json(const Report& r) {
  json checks = json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"limit", c.limit},
                      {"note", c.note}});
  json rows = json::array();
  for (const GapRow& g : r.rows)
    rows.push_back({{"case", g.case_id}, {"h", g.h}, {"j", g.j}, {"lambda_d", g.lambda_d},
                    {"lambda_n", g.lambda_n}, {"gap", g.gap}});
  json summaries = json::array();
  for (const GapSummary& s : r.summaries)
    summaries.push_back({{"case", s.case_id},
                         {"quantity", s.quantity},
                         {"j", s.j},
                         {"values", s.values},
                         {"extrapolation", to_json(s.extrapolation)},
                         {"verdict", to_string(s.verdict)},
                         {"strict_required", s.strict_required}});
  return {{"experiment", r.experiment},
          {"config", r.config},
          {"passed", r.passed()},
          {"checks", checks},
          {"rows", rows},
          {"summaries", summaries},
          {"details", r.details},
          {"policy", "strict verdicts use a 3x margin over the extrapolation error estimate; this margin is a "
                     "reporting policy, not a claim about gap magnitudes"}};
}

Report report_from_json(const json& j) {
  Report r;
  try {
    r.experiment = j.at("experiment").get<std::string>();
    r.config = j.at("config");
    for (const json& c : j.at("checks"))
      r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), number_or_nan(c.at("value")),
                          number_or_nan(c.at("limit")), c.at("note").get<std::string>()});
    for (const json& g : j.at("rows"))
      r.rows.push_back({g.at("case").get<std::string>(), number_or_nan(g.at("h")), g.at("j").get<int>(),
                        number_or_nan(g.at("lambda_d")), number_or_nan(g.at("lambda_n")),
                        number_or_nan(g.at("gap"))});
    for (const json& s : j.at("summaries")) {
      GapSummary g;
      g.case_id = s.at("case").get<std::string>();
      g.quantity = s.at("quantity").get<std::string>();
      g.j = s.at("j").get<int>();
      for (const json& v : s.at("values")) g.values.push_back(number_or_nan(v));
      const json& e = s.at("extrapolation");
      g.extrapolation = {number_or_nan(e.at("limit")), number_or_nan(e.at("error")), number_or_nan(e.at("order")),
                         e.at("fitted").get<bool>(), e.at("levels").get<std::size_t>()};
      g.verdict = parse_verdict(s.at("verdict").get<std::string>());
      g.strict_required = s.at("strict_required").get<bool>();
      r.summaries.push_back(std::move(g));
    }
    r.details = j.at("details");
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("report: ") + e.what());
  }
  return r;
}

std::string report_json_text(const Report& r) { return to_json(r).dump(2) + "\n"; }

std::string report_csv(const Report& r) {
  std::string out = "case,h,j,lambda_d,lambda_n,gap\n";
  for (const GapRow& g : r.rows)
    out += g.case_id + "," + num(g.h) + "," + std::to_string(g.j) + "," + num(g.lambda_d) + "," + num(g.lambda_n) +
           "," + num(g.gap) + "\n";
  return out;
}

std::string report_svg(const Report& r) {
  std::vector<std::string> cases;
  for (const GapRow& g : r.rows)
    if (std::find(cases.begin(), cases.end(), g.case_id) == cases.end()) cases.push_back(g.case_id);

  const double w = 420, ht = 240;
  const double height = std::max(1.0, static_cast<double>(cases.size())) * ht + 20;
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(2 * w) + "\" height=\"" + px(height) +
         "\" viewBox=\"0 0 " + px(2 * w) + " " + px(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (cases.empty())
    out += "<text x=\"20\" y=\"30\" font-size=\"13\">" + xml_escape(r.experiment) + ": no gap table</text>\n";

  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::vector<double> hs;
    std::set<int> js;
    for (const GapRow& g : r.rows)
      if (g.case_id == cases[c]) {
        if (std::find(hs.begin(), hs.end(), g.h) == hs.end()) hs.push_back(g.h);
        js.insert(g.j);
      }
    std::vector<Series> by_h, by_j;
    for (double h : hs) {
      Series s{"h=" + num(h), {}};
      for (const GapRow& g : r.rows)
        if (g.case_id == cases[c] && g.h == h) s.points.emplace_back(g.j, g.gap);
      by_h.push_back(std::move(s));
    }
    for (int j : js) {
      Series s{"j=" + std::to_string(j), {}};
      for (const GapRow& g : r.rows)
        if (g.case_id == cases[c] && g.j == j) s.points.emplace_back(-std::log2(g.h), g.gap);
      by_j.push_back(std::move(s));
    }
    const double y0 = 10 + static_cast<double>(c) * ht;
    out += panel(0, y0, w, ht, cases[c] + ": gap vs j", "j", by_h);
    out += panel(w, y0, w, ht, cases[c] + ": gap vs refinement", "log2(1/h)", by_j);
  }
  out += "</svg>\n";
  return out;
}

std::vector<std::string> emit_report(const Report& r, const std::string& dir, const std::vector<std::string>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, Errc::io, "cannot create output directory " + dir);
  std::vector<std::string> written;
  for (const std::string& f : formats) {
    std::string text;
    if (f == "json") {
      text = report_json_text(r);
    } else if (f == "csv") {
      text = report_csv(r);
    } else if (f == "svg") {
      text = report_svg(r);
    } else {
      throw Error(Errc::precondition, "unknown output format '" + f + "'");
    }
    const std::string path = (std::filesystem::path(dir) / (r.experiment + "." + f)).string();
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), Errc::io, "cannot write " + path);
    os << text;
    require(static_cast<bool>(os), Errc::io, "failed writing " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace heisengap
