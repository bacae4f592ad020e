#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "heisengap/config.hpp"
#include "heisengap/error.hpp"
#include "heisengap/experiments.hpp"
#include "heisengap/extrapolation.hpp"
#include "heisengap/report.hpp"

using namespace heisengap;

namespace {

constexpr double kPi = std::numbers::pi;

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return Errc::io;
}

ExperimentConfig small_square() {
  ExperimentConfig c = default_config(ExperimentKind::inequality2d);
  c.shapes = {ShapeSpec{Shape::square, {1.0}}};
  c.h = {1.0 / 8, 1.0 / 16};
  c.B = {0.0};
  c.k = {1};
  c.jmax = 3;
  c.strict_jmax = 0;
  c.emit = {"json", "csv", "svg"};
  return c;
}

const Report& small_square_report() {
  static const Report r = run_inequality_2d(small_square());
  return r;
}

/// Eigenvalues of the path graph Laplacian, Neumann (free ends) and Dirichlet.
double path_neumann(int nodes, int q, double h) { return 4.0 / (h * h) * std::pow(std::sin(kPi * q / (2.0 * nodes)), 2); }
double path_dirichlet(int nodes, int q, double h) {
  return 4.0 / (h * h) * std::pow(std::sin(kPi * q / (2.0 * (nodes + 1))), 2);
}

}  // namespace

TEST(Richardson, SecondOrderSequence) {
  // g(h) = 3 + 2 h^2 on h = 1/4, 1/8, 1/16
  const std::vector<double> g{3 + 2.0 / 16, 3 + 2.0 / 64, 3 + 2.0 / 256};
  EXPECT_NEAR(observed_order(g[0], g[1], g[2]), 2.0, 1e-12);
  const Extrapolation e = richardson(g, 2.0);
  EXPECT_NEAR(e.limit, 3.0, 1e-12);
  EXPECT_TRUE(e.fitted);
  EXPECT_EQ(e.levels, 3u);
  EXPECT_NEAR(e.order, 2.0, 1e-9);
  EXPECT_NEAR(e.error, 2.0 / 256, 1e-9);
}

TEST(Richardson, TwoLevelsUseNominalOrder) {
  const std::vector<double> g{1.0 + 0.25, 1.0 + 0.125};
  const Extrapolation e = richardson(g, 1.0);
  EXPECT_FALSE(e.fitted);
  EXPECT_NEAR(e.limit, 1.0, 1e-15);
  EXPECT_EQ(e.order, 1.0);
}

TEST(Richardson, OscillatingDifferencesHaveNoOrder) {
  EXPECT_TRUE(std::isnan(observed_order(1.0, 2.0, 1.0)));
  const std::vector<double> g{1.0, 2.0, 1.0};
  EXPECT_FALSE(richardson(g, 2.0).fitted);
  EXPECT_TRUE(std::isinf(richardson(std::vector<double>{1.0}, 2.0).error));
}

TEST(Classify, Verdicts) {
  Extrapolation e;
  e.limit = 1.0;
  e.error = 0.1;
  const std::vector<double> pos{0.5, 0.8}, mixed{-0.1, 0.2};
  EXPECT_EQ(classify(e, pos), Verdict::verified_strict);
  e.error = 0.5;
  EXPECT_EQ(classify(e, pos), Verdict::verified_nonstrict);
  EXPECT_EQ(classify(e, mixed), Verdict::inconclusive);
  EXPECT_EQ(to_string(Verdict::verified_strict), "verified-strict");
}

TEST(Config, DefaultsValidate) {
  for (ExperimentKind k : {ExperimentKind::identities, ExperimentKind::inequality2d, ExperimentKind::inequality_heis,
                           ExperimentKind::robin, ExperimentKind::replay, ExperimentKind::fiber_check}) {
    EXPECT_NO_THROW(default_config(k).validate()) << to_string(k);
    EXPECT_EQ(parse_experiment(to_string(k)), k);
  }
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = default_config(ExperimentKind::robin);
  c.sigma = -0.5;
  c.seed = 99;
  const ExperimentConfig back = config_from_json(to_json(c), ExperimentKind::robin);
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_EQ(code_of([] { config_from_json(nlohmann::json{{"hh", 1}}, ExperimentKind::inequality2d); }), Errc::parse);
}

TEST(Config, OverridesAndInvalidLadder) {
  ExperimentConfig c = default_config(ExperimentKind::inequality2d);
  ConfigOverrides o;
  o.B = 1.5;
  o.k = 2;
  o.h = 0.1;
  o.shape = "disk";
  apply_overrides(c, o);
  EXPECT_EQ(c.B, std::vector<double>{1.5});
  EXPECT_EQ(c.k, std::vector<int>{2});
  ASSERT_EQ(c.h.size(), 3u);
  EXPECT_DOUBLE_EQ(c.h[2], 0.025);
  ASSERT_EQ(c.shapes.size(), 1u);
  EXPECT_EQ(c.shapes[0].shape, Shape::disk);
  c.validate();

  c.h = {0.1, 0.04};
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::precondition);
  c.h = {0.1, 0.05};
  c.m = c.jmax + 1;
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::precondition);
}

TEST(Harness, ZeroFieldSquareMatchesClosedForms) {
  const Report& r = small_square_report();
  ASSERT_EQ(r.rows.size(), 2u * 3u);
  for (const GapRow& row : r.rows) {
    const int n = static_cast<int>(std::lround(1.0 / row.h)) + 1;  // nodes per side
    if (row.j != 1) continue;
    // lambda_1^D = 2 mu_1 on the interior path, lambda_2^N = first nonzero free-path mode
    EXPECT_NEAR(row.lambda_d, 2 * path_dirichlet(n - 2, 1, row.h), 1e-8 * row.lambda_d);
    EXPECT_NEAR(row.lambda_n, path_neumann(n, 1, row.h), 1e-8 * row.lambda_n);
    EXPECT_LT(row.lambda_n, row.lambda_d);
  }
  // the limits are pi^2 and 2 pi^2
  EXPECT_NEAR(path_neumann(1025, 1, 1.0 / 1024), kPi * kPi, 0.02 * kPi * kPi);
  EXPECT_TRUE(r.passed("discrete/"));
}

TEST(Report, JsonCsvSvg) {
  const Report& r = small_square_report();
  const std::string text = report_json_text(r);
  EXPECT_EQ(report_json_text(report_from_json(nlohmann::json::parse(text))), text);
  EXPECT_EQ(text.back(), '\n');

  const std::string csv = report_csv(r);
  EXPECT_EQ(csv.rfind("case,h,j,lambda_d,lambda_n,gap\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.rows.size() + 1);

  const std::string svg = report_svg(r);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg "), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '<'), std::count(svg.begin(), svg.end(), '>'));

  const std::string dir = (std::filesystem::path(testing::TempDir()) / "report").string();
  const auto paths = emit_report(r, dir, {"json", "csv", "svg"});
  ASSERT_EQ(paths.size(), 3u);
  for (const auto& p : paths) EXPECT_TRUE(std::filesystem::exists(p));
  std::ifstream is(paths[0]);
  const std::string on_disk((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  EXPECT_EQ(on_disk, text);
}

TEST(Report, PrefixLookup) {
  Report r;
  EXPECT_FALSE(r.passed("a/"));
  r.add({"a/1", true, 0, 0, ""});
  r.add({"b/1", false, 0, 0, ""});
  EXPECT_TRUE(r.passed("a/"));
  EXPECT_FALSE(r.passed("b/"));
  EXPECT_FALSE(r.passed());
}

TEST(Harness, PositiveRobinDensityRejected) {
  ExperimentConfig c = default_config(ExperimentKind::robin);
  c.shapes = {ShapeSpec{Shape::square, {1.0}}};
  c.h = {0.125};
  c.B = {1.0};
  c.k = {1};
  c.sigma = 1.0;
  EXPECT_EQ(code_of([&] { run_robin(c); }), Errc::sigma_mean_positive);
}

TEST(Harness, CoarseLadderTooSmallForM) {
  ExperimentConfig c = small_square();
  c.h = {0.25};  // 9 Dirichlet dofs, m = 5
  EXPECT_EQ(code_of([&] { run_inequality_2d(c); }), Errc::dimension_too_small);
}
