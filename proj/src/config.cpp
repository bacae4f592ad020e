#include "heisengap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "heisengap/error.hpp"

namespace heisengap {

namespace {

using nlohmann::json;

std::vector<double> default_params(Shape s) {
  switch (s) {
    case Shape::disk: return {1.0};
    case Shape::square: return {1.0};
    case Shape::rectangle: return {2.0, 1.0};
    case Shape::annulus: return {0.4, 1.0};
    case Shape::lshape: return {2.0};
  }
  return {1.0};
}

ShapeSpec shape_from_string(const std::string& text) {
  const auto colon = text.find(':');
  ShapeSpec s;
  s.shape = parse_shape(text.substr(0, colon));
  if (colon == std::string::npos) {
    s.params = default_params(s.shape);
    return s;
  }
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      s.params.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(Errc::parse, "bad shape parameter '" + item + "'");
    }
  }
  return s;
}

std::vector<double> ladder(double h0, std::size_t levels) {
  std::vector<double> out;
  for (std::size_t i = 0; i < levels; ++i) out.push_back(h0 / std::exp2(static_cast<double>(i)));
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::identities: return "identities";
    case ExperimentKind::inequality2d: return "inequality2d";
    case ExperimentKind::inequality_heis: return "inequality-heis";
    case ExperimentKind::robin: return "robin";
    case ExperimentKind::replay: return "replay";
    case ExperimentKind::fiber_check: return "fiber-check";
  }
  return "unknown";
}

ExperimentKind parse_experiment(std::string_view name) {
  for (ExperimentKind k : {ExperimentKind::identities, ExperimentKind::inequality2d, ExperimentKind::inequality_heis,
                           ExperimentKind::robin, ExperimentKind::replay, ExperimentKind::fiber_check})
    if (to_string(k) == name) return k;
  throw Error(Errc::parse, "unknown experiment '" + std::string(name) + "'");
}

std::string ShapeSpec::label() const {
  std::ostringstream os;
  os << to_string(shape) << '(';
  for (std::size_t i = 0; i < params.size(); ++i) os << (i ? ";" : "") << params[i];
  os << ')';
  return os.str();
}

void ExperimentConfig::validate() const {
  require(!h.empty(), Errc::precondition, "h ladder is empty");
  for (std::size_t i = 0; i < h.size(); ++i) {
    require(h[i] > 0.0 && std::isfinite(h[i]), Errc::precondition, "h values must be positive");
    if (i > 0)
      require(std::abs(h[i - 1] / h[i] - 2.0) < 1e-12, Errc::precondition,
              "h ladder must decrease with ratio exactly 2");
  }
  require(shapes.size() > 0 || !domain_file.empty() || kind == ExperimentKind::fiber_check, Errc::precondition,
          "no domain configured");
  for (double b : B) require(b >= 0.0 && std::isfinite(b), Errc::precondition, "B values must be >= 0");
  for (int kk : k) require(kk >= 1, Errc::precondition, "k values must be >= 1");
  require(jmax >= 1, Errc::precondition, "jmax must be >= 1");
  require(strict_jmax >= 0 && strict_jmax <= jmax, Errc::precondition, "strict_jmax must lie in [0, jmax]");
  require(tol >= 1e-12 && tol <= 1e-4, Errc::precondition, "solver tol must lie in [1e-12, 1e-4]");
  require(tail_tol > 0.0 && tail_tol <= 1e-3, Errc::precondition, "tail_tol must lie in (0, 1e-3]");
  require(scan_tail_tol > 0.0 && scan_tail_tol <= 1e-3, Errc::precondition, "scan_tail_tol must lie in (0, 1e-3]");
  require(scan_step >= 0.0, Errc::precondition, "scan_step must be >= 0");
  require(gram_tol > 0.0 && gram_tol < 1.0, Errc::precondition, "gram_tol must lie in (0, 1)");
  require(T > 0.0 && ht_ratio > 0.0, Errc::precondition, "T and ht_ratio must be positive");
  require(lattice >= 1 && reproducing_pairs >= 0, Errc::precondition, "lattice must be >= 1");
  require(fiber_nodes >= 2 && fiber_layers >= 3, Errc::precondition, "fiber cylinder too small");
  const bool inequality = kind == ExperimentKind::inequality2d || kind == ExperimentKind::inequality_heis ||
                          kind == ExperimentKind::robin;
  if (inequality) require(eigen_count() >= jmax + 2, Errc::precondition, "m must be >= jmax + 2");
  if (kind == ExperimentKind::robin) require(!B.empty() && !k.empty(), Errc::precondition, "robin needs B and k");
  if (kind == ExperimentKind::replay) {
    require(!replay_j.empty() && !k.empty(), Errc::precondition, "replay needs j and k values");
    for (int j : replay_j) require(j >= 1, Errc::precondition, "replay j must be >= 1");
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  const auto shape = [](Shape s) { return ShapeSpec{s, default_params(s)}; };
  switch (kind) {
    case ExperimentKind::identities:
      c.shapes = {shape(Shape::disk), shape(Shape::square), shape(Shape::rectangle)};
      c.h = {1.0 / 16};
      c.B = {0.5, 1.0, 2.0};
      c.k = {1, 2, 3};
      break;
    case ExperimentKind::inequality2d:
      c.shapes = {shape(Shape::square), shape(Shape::rectangle), shape(Shape::disk), shape(Shape::annulus),
                  shape(Shape::lshape)};
      c.h = ladder(1.0 / 16, 3);
      c.B = {0.5, 1.0, 2.0};
      c.k = {1, 2};
      break;
    case ExperimentKind::inequality_heis:
      c.shapes = {ShapeSpec{Shape::square, {1.0}}, ShapeSpec{Shape::rectangle, {1.0, 0.5}},
                  ShapeSpec{Shape::lshape, {1.0}}};
      c.h = ladder(1.0 / 8, 3);
      c.ht_ratio = 1.0;
      c.jmax = 5;
      c.strict_jmax = 3;
      break;
    case ExperimentKind::robin:
      c.shapes = {shape(Shape::square), shape(Shape::rectangle), shape(Shape::lshape)};
      c.h = ladder(1.0 / 16, 3);
      c.B = {0.5, 1.0, 2.0};
      c.k = {1, 2};
      break;
    case ExperimentKind::replay:
      c.shapes = {shape(Shape::square), ShapeSpec{Shape::lshape, {1.0}}};
      c.h = ladder(1.0 / 8, 3);
      c.k = {1, 2};
      c.replay_j = {1, 2};
      c.jmax = 2;
      c.strict_jmax = 0;
      break;
    case ExperimentKind::fiber_check:
      c.h = {1.0 / 7};
      c.topology = Topology::periodic;
      c.jmax = 1;
      c.strict_jmax = 0;
      break;
  }
  return c;
}

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentKind kind) {
  require(j.is_object(), Errc::parse, "config must be a JSON object");
  static const std::set<std::string> known{
      "experiment", "shapes", "domain_file", "h", "T", "ht_ratio", "topology", "fiber_nodes", "fiber_layers",
      "B", "k", "jmax", "strict_jmax", "sigma", "replay_j", "solver", "quadrature", "output"};
  for (const auto& [key, value] : j.items())
    require(known.count(key) > 0, Errc::parse, "unknown config key '" + key + "'");

  if (j.contains("experiment")) kind = parse_experiment(j.at("experiment").get<std::string>());
  ExperimentConfig c = default_config(kind);
  try {
    if (j.contains("shapes")) {
      c.shapes.clear();
      for (const auto& s : j.at("shapes")) {
        if (s.is_string()) {
          c.shapes.push_back(shape_from_string(s.get<std::string>()));
        } else {
          ShapeSpec spec;
          spec.shape = parse_shape(s.at("shape").get<std::string>());
          spec.params = s.contains("params") ? s.at("params").get<std::vector<double>>() : default_params(spec.shape);
          c.shapes.push_back(std::move(spec));
        }
      }
    }
    read(j, "domain_file", c.domain_file);
    read(j, "h", c.h);
    read(j, "T", c.T);
    read(j, "ht_ratio", c.ht_ratio);
    if (j.contains("topology")) c.topology = parse_topology(j.at("topology").get<std::string>());
    read(j, "fiber_nodes", c.fiber_nodes);
    read(j, "fiber_layers", c.fiber_layers);
    read(j, "B", c.B);
    read(j, "k", c.k);
    read(j, "jmax", c.jmax);
    read(j, "strict_jmax", c.strict_jmax);
    read(j, "sigma", c.sigma);
    read(j, "replay_j", c.replay_j);
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      read(s, "m", c.m);
      read(s, "tol", c.tol);
      read(s, "seed", c.seed);
      if (s.contains("inner")) {
        const auto name = s.at("inner").get<std::string>();
        require(name == "cholesky" || name == "cg", Errc::parse, "solver.inner must be 'cholesky' or 'cg'");
        c.inner = name == "cg" ? InnerSolver::cg : InnerSolver::cholesky;
      }
    }
    if (j.contains("quadrature")) {
      const json& q = j.at("quadrature");
      read(q, "tail_tol", c.tail_tol);
      read(q, "scan_tail_tol", c.scan_tail_tol);
      read(q, "scan_step", c.scan_step);
      read(q, "gram_tol", c.gram_tol);
      read(q, "lattice", c.lattice);
      read(q, "lattice_half", c.lattice_half);
      read(q, "reproducing_pairs", c.reproducing_pairs);
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      read(o, "dir", c.out_dir);
      read(o, "emit", c.emit);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentKind kind) {
  std::ifstream is(path);
  require(static_cast<bool>(is), Errc::io, "cannot open config " + path);
  json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  }
  return config_from_json(j, kind);
}

json to_json(const ExperimentConfig& c) {
  json shapes = json::array();
  for (const auto& s : c.shapes) shapes.push_back({{"shape", to_string(s.shape)}, {"params", s.params}});
  return {{"experiment", to_string(c.kind)},
          {"shapes", shapes},
          {"domain_file", c.domain_file},
          {"h", c.h},
          {"T", c.T},
          {"ht_ratio", c.ht_ratio},
          {"topology", to_string(c.topology)},
          {"fiber_nodes", c.fiber_nodes},
          {"fiber_layers", c.fiber_layers},
          {"B", c.B},
          {"k", c.k},
          {"jmax", c.jmax},
          {"strict_jmax", c.strict_jmax},
          {"sigma", c.sigma},
          {"replay_j", c.replay_j},
          {"solver",
           {{"m", c.eigen_count()},
            {"tol", c.tol},
            {"seed", c.seed},
            {"inner", c.inner == InnerSolver::cg ? "cg" : "cholesky"}}},
          {"quadrature",
           {{"tail_tol", c.tail_tol},
            {"scan_tail_tol", c.scan_tail_tol},
            {"scan_step", c.scan_step},
            {"gram_tol", c.gram_tol},
            {"lattice", c.lattice},
            {"lattice_half", c.lattice_half},
            {"reproducing_pairs", c.reproducing_pairs}}},
          {"output", {{"dir", c.out_dir}, {"emit", c.emit}}}};
}

void apply_overrides(ExperimentConfig& c, const ConfigOverrides& o) {
  if (o.B) c.B = {*o.B};
  if (o.k) c.k = {*o.k};
  if (o.shape) {
    c.shapes = {shape_from_string(*o.shape)};
    c.domain_file.clear();
  }
  if (o.h) c.h = ladder(*o.h, std::max<std::size_t>(1, c.h.size()));
  if (o.jmax) {
    c.jmax = *o.jmax;
    c.strict_jmax = std::min(c.strict_jmax, c.jmax);
    if (c.m > 0 && c.m < c.jmax + 2) c.m = c.jmax + 2;
  }
  if (o.out) c.out_dir = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.emit) c.emit = *o.emit;
  c.validate();
}

}  // namespace heisengap
