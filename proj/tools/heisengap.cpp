#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "heisengap/config.hpp"
#include "heisengap/error.hpp"
#include "heisengap/experiments.hpp"
#include "heisengap/report.hpp"

using namespace heisengap;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_checks(const Report& r) {
  for (const Check& c : r.checks)
    std::printf("%s  %s  value=%.6g limit=%.6g  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.limit,
                c.note.c_str());
  for (const GapSummary& s : r.summaries)
    if (s.strict_required || s.verdict != Verdict::verified_strict)
      std::printf("verdict  %s  %s j=%d  limit=%.6g error=%.3g  %s\n", s.case_id.c_str(), s.quantity.c_str(), s.j,
                  s.extrapolation.limit, s.extrapolation.error, std::string(to_string(s.verdict)).c_str());
  for (const auto& [phase, seconds] : r.timings) std::printf("time  %s  %.1fs\n", phase.c_str(), seconds);
}

const char* describe(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::identities: return "projector kernel identities, deficit scans and kernel oracles";
    case ExperimentKind::inequality2d: return "planar Landau Dirichlet/Neumann comparison and level counting";
    case ExperimentKind::inequality_heis: return "Heisenberg sub-Laplacian Dirichlet/Neumann comparison on cylinders";
    case ExperimentKind::robin: return "level counting with a Robin density in place of Neumann";
    case ExperimentKind::replay: return "Rayleigh-quotient replay of the trial-space argument";
    case ExperimentKind::fiber_check: return "periodic cylinder spectrum against its Fourier fibers";
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet/Neumann eigenvalue comparison on magnetic and Heisenberg domains"};
  app.require_subcommand(1);

  std::string config_path;
  ConfigOverrides o;
  double B = 0.0, h = 0.0;
  int k = 0, jmax = 0;
  std::uint64_t seed = 0;
  std::string shape, out, emit;

  const std::vector<ExperimentKind> kinds{ExperimentKind::identities,      ExperimentKind::inequality2d,
                                          ExperimentKind::inequality_heis, ExperimentKind::robin,
                                          ExperimentKind::replay,          ExperimentKind::fiber_check};
  std::vector<CLI::App*> subs;
  for (ExperimentKind kind : kinds) {
    CLI::App* sub = app.add_subcommand(std::string(to_string(kind)), describe(kind));
    sub->set_help_flag("--help", "print this help and exit");
    sub->add_option("--config", config_path, "JSON config overlaid on the experiment defaults")->check(CLI::ExistingFile);
    sub->add_option("--B", B, "single field strength")->check(CLI::PositiveNumber);
    sub->add_option("--k", k, "single Landau index")->check(CLI::Range(1, 64));
    sub->add_option("--shape", shape, "single shape, e.g. disk or rectangle:2,1");
    sub->add_option("--h", h, "coarsest grid spacing; the ladder keeps its length")->check(CLI::PositiveNumber);
    sub->add_option("--jmax", jmax, "largest eigenvalue index compared")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "eigensolver seed");
    sub->add_option("--emit", emit, "comma list of svg,csv,json");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentKind kind = kinds.front();
    CLI::App* chosen = nullptr;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) kind = kinds[i], chosen = subs[i];

    ExperimentConfig cfg = config_path.empty() ? default_config(kind) : load_config(config_path, kind);
    if (chosen->count("--B")) o.B = B;
    if (chosen->count("--k")) o.k = k;
    if (chosen->count("--shape")) o.shape = shape;
    if (chosen->count("--h")) o.h = h;
    if (chosen->count("--jmax")) o.jmax = jmax;
    if (chosen->count("--out")) o.out = out;
    if (chosen->count("--seed")) o.seed = seed;
    if (chosen->count("--emit")) o.emit = split_commas(emit);
    apply_overrides(cfg, o);
    cfg.validate();

    const Report report = run_experiment(cfg);
    print_checks(report);
    for (const std::string& path : emit_report(report, cfg.out_dir, cfg.emit)) std::printf("wrote %s\n", path.c_str());
    std::printf("%s: %s\n", report.experiment.c_str(), report.passed() ? "PASS" : "FAIL");
    return report.passed() ? 0 : 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
