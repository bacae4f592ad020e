#pragma once

#include "heisengap/config.hpp"
#include "heisengap/report.hpp"

namespace heisengap {

/// Kernel identities: lemma residual lattice, averaged deficit and the set K,
/// reproducing property, analytic gradient, eigen-equation, product kernels
/// and the Robin boundary average.
Report run_identity_suite(const ExperimentConfig& cfg);

/// Planar Dirichlet/Neumann comparison and Landau-level counting.
Report run_inequality_2d(const ExperimentConfig& cfg);

/// Dirichlet/Neumann comparison for the Heisenberg sub-Laplacian.
Report run_inequality_heisenberg(const ExperimentConfig& cfg);

/// Counting check with a Robin density in place of Neumann, plus the
/// zero-density and boundary-average checks. Throws SigmaMeanPositive when
/// the configured density has positive boundary integral.
Report run_robin(const ExperimentConfig& cfg);

/// Numerical replay of the trial-space argument on cylinders.
Report replay_proof(const ExperimentConfig& cfg);

/// Periodic-cylinder spectrum against the union of its Fourier fibers.
Report run_fiber_check(const ExperimentConfig& cfg);

Report run_experiment(const ExperimentConfig& cfg);

}  // namespace heisengap
