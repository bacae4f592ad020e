#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heisengap/eigensolver.hpp"
#include "heisengap/geometry.hpp"
#include "json.hpp"

namespace heisengap {

enum class ExperimentKind { identities, inequality2d, inequality_heis, robin, replay, fiber_check };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view name);

struct ShapeSpec {
  Shape shape = Shape::square;
  std::vector<double> params;

  /// e.g. "disk(1)" or "rectangle(2;1)"; comma-free so it can sit in CSV cells.
  std::string label() const;
};

/// Every experiment reads the subset of fields it needs. JSON keys match the
/// field names; absent keys keep the per-experiment defaults.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::inequality2d;

  // domain
  std::vector<ShapeSpec> shapes;
  std::string domain_file;  // planar domain JSON; replaces `shapes` at its own h
  std::vector<double> h;    // coarse to fine, ratio exactly 2
  double T = 1.0;           // cylinder height (3D experiments)
  double ht_ratio = 2.0;    // h_t / h_xy
  Topology topology = Topology::bounded;
  int fiber_nodes = 8;      // fiber-check: nodes per side of the square base
  int fiber_layers = 8;     // fiber-check: periodic layers

  // physics
  std::vector<double> B;
  std::vector<int> k;
  int jmax = 8;
  int strict_jmax = 8;  // verdicts at j <= strict_jmax must be verified-strict
  double sigma = -1.0;  // constant Robin density
  std::vector<int> replay_j;

  // solver
  int m = 0;  // 0 selects jmax + 2
  double tol = 1e-10;
  std::uint64_t seed = 1;
  InnerSolver inner = InnerSolver::cholesky;

  // quadrature and scans
  double tail_tol = 1e-8;
  double scan_tail_tol = 1e-6;
  double scan_step = 0.0;  // 0 selects min(0.25/sqrt(B), 4h)
  double gram_tol = 1e-6;
  int lattice = 5;          // identity lattice is lattice x lattice points
  double lattice_half = 1.0;
  int reproducing_pairs = 4;

  // output
  std::string out_dir = "out";
  std::vector<std::string> emit{"json", "csv"};

  int eigen_count() const { return m > 0 ? m : jmax + 2; }
  /// Throws Error(precondition) on an invalid combination.
  void validate() const;
};

ExperimentConfig default_config(ExperimentKind kind);

/// Overlays the keys of `j` onto default_config(kind); unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentKind kind);
ExperimentConfig load_config(const std::string& path, ExperimentKind kind);
nlohmann::json to_json(const ExperimentConfig& c);

/// Command-line overrides; unset members leave the config untouched. A single
/// `h` replaces the ladder with h, h/2, ... of the configured length.
struct ConfigOverrides {
  std::optional<double> B;
  std::optional<int> k;
  std::optional<std::string> shape;
  std::optional<double> h;
  std::optional<int> jmax;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::string>> emit;
};

void apply_overrides(ExperimentConfig& c, const ConfigOverrides& o);

}  // namespace heisengap
