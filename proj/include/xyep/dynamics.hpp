#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "xyep/core.hpp"
#include "xyep/energy.hpp"
#include "xyep/random.hpp"

namespace xyep {

struct IntegratorConfig {
  double horizon = 100.0;
  double rel_tol = 1e-6;
  double abs_tol = 1e-8;
  double initial_step = 0.01;
  double max_step = 1.0;
  double min_step = 1e-10;
  double equilibrium_grad_tol = 1e-6;
  // Stop before the horizon once the residual gradient is below
  // equilibrium_grad_tol. Disable to always integrate to the horizon.
  bool stop_at_equilibrium = true;
  double log_clamp = kDefaultLogClamp;

  void validate() const;
};

struct EquilibriumResult {
  PhaseVector phases;
  // Max-norm of dF/dphi over the free units at the final state.
  double residual_norm = 0.0;
  double elapsed_time = 0.0;
  std::size_t step_count = 0;
  std::size_t rejected_steps = 0;
  bool converged = false;
};

// Step size fell below min_step. Carries the state reached so far.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, EquilibriumResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const EquilibriumResult& partial() const noexcept { return partial_; }

 private:
  EquilibriumResult partial_;
};

// Called at t = 0 and after every accepted step with the full phase vector and F.
using TrajectoryObserver = std::function<void(double time, const PhaseVector& phases, double total_energy)>;

/// Integrates dphi/dt = -dF/dphi from `initial` with the inputs clamped to
/// `sample_inputs`.
///
/// Classical RK4 with step doubling: each step is taken once with h and twice
/// with h/2, the difference / 15 is the per-unit error estimate and must stay
/// below abs_tol + rel_tol |phi|. The two-half-step solution is kept.
/// The input entries of `initial` are overwritten by `sample_inputs`.
EquilibriumResult relax(const PhaseVector& initial, const ModelParameters& params,
                        const NetworkTopology& topology, double beta, const Eigen::VectorXd& targets,
                        const IntegratorConfig& config, const PhaseVector& sample_inputs,
                        const TrajectoryObserver& observer = {});

// Inputs clamped, hidden and output phases uniform on [-pi, pi).
PhaseVector random_initial_state(const NetworkTopology& topology, const PhaseVector& inputs, Rng& rng);

// Writes "time phi_0 ... phi_{N-1}" rows (tab separated, with a header line).
TrajectoryObserver make_trajectory_writer(std::ostream& out, int n_units);

struct EquilibriumCluster {
  PhaseVector representative;  // canonicalized
  std::size_t basin_count = 0;
};

struct EquilibriumCensus {
  std::vector<EquilibriumCluster> clusters;
  std::size_t trials = 0;
  std::size_t converged = 0;
  std::size_t not_converged = 0;
  std::size_t failed = 0;
};

inline constexpr double kDefaultClusterTol = 1e-2;

/// Relaxes from n_trials random initial states and groups the converged end
/// states: two states share a cluster when every unit differs by less than
/// cluster_tol in circular distance from the cluster's first member.
EquilibriumCensus enumerate_equilibria(const ModelParameters& params, const NetworkTopology& topology,
                                       const PhaseVector& sample_inputs, std::size_t n_trials,
                                       double cluster_tol, std::uint64_t rng_seed,
                                       const IntegratorConfig& config = {});

}  // namespace xyep
