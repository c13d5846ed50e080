#include "xyep/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace xyep {

void IntegratorConfig::validate() const {
  if (!(horizon > 0.0)) throw ConfigurationError("integration horizon must be positive");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(equilibrium_grad_tol > 0.0)) {
    throw ConfigurationError("integrator tolerances must be positive");
  }
  if (!(min_step > 0.0) || min_step > initial_step || initial_step > max_step) {
    throw ConfigurationError("integrator steps must satisfy 0 < min_step <= initial_step <= max_step");
  }
  if (!(log_clamp > 0.0)) throw ConfigurationError("log clamp must be positive");
}

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;
constexpr std::size_t kMaxSteps = 50'000'000;

class StepDoublingRk4 {
 public:
  StepDoublingRk4(ClampedSystem& system, int n_units)
      : system_(system), n_in_(system.n_inputs()), n_free_(system.n_free()) {
    for (auto* v : {&k2_, &k3_, &k4_, &stage_, &coarse_, &midpoint_, &k1_mid_}) {
      *v = Eigen::VectorXd::Zero(n_units);
    }
  }

  // out = -dF/dphi, zero on the clamped entries.
  void derivative(const PhaseVector& state, Eigen::VectorXd& out) {
    system_.gradient(state.tail(n_free_), out.tail(n_free_));
    out.tail(n_free_) = -out.tail(n_free_);
  }

  void rk4(const PhaseVector& y0, double h, const Eigen::VectorXd& k1, PhaseVector& out) {
    stage_ = y0 + (0.5 * h) * k1;
    derivative(stage_, k2_);
    stage_ = y0 + (0.5 * h) * k2_;
    derivative(stage_, k3_);
    stage_ = y0 + h * k3_;
    derivative(stage_, k4_);
    out = y0 + (h / 6.0) * (k1 + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

  // Returns max_i err_i / (abs_tol + rel_tol |phi_i|) and writes the accepted
  // candidate (two half steps) into `fine`.
  double attempt(const PhaseVector& y, const Eigen::VectorXd& k1, double h, const IntegratorConfig& config,
                 PhaseVector& fine) {
    rk4(y, h, k1, coarse_);
    rk4(y, 0.5 * h, k1, midpoint_);
    derivative(midpoint_, k1_mid_);
    rk4(midpoint_, 0.5 * h, k1_mid_, fine);
    double ratio = 0.0;
    for (int u = n_in_; u < n_in_ + n_free_; ++u) {
      const double err = std::abs(fine[u] - coarse_[u]) / 15.0;
      const double scale = config.abs_tol + config.rel_tol * std::max(std::abs(y[u]), std::abs(fine[u]));
      ratio = std::max(ratio, err / scale);
    }
    if (!std::isfinite(ratio)) ratio = std::numeric_limits<double>::infinity();
    return ratio;
  }

 private:
  ClampedSystem& system_;
  int n_in_;
  int n_free_;
  Eigen::VectorXd k2_, k3_, k4_, stage_, coarse_, midpoint_, k1_mid_;
};

}  // namespace

EquilibriumResult relax(const PhaseVector& initial, const ModelParameters& params,
                        const NetworkTopology& topology, double beta, const Eigen::VectorXd& targets,
                        const IntegratorConfig& config, const PhaseVector& sample_inputs,
                        const TrajectoryObserver& observer) {
  config.validate();
  if (initial.size() != topology.n_units()) {
    throw ContractViolation("initial state length does not match topology");
  }
  ClampedSystem system(topology, params, sample_inputs, beta, targets, config.log_clamp);
  const int n_in = topology.n_inputs();
  const int n_free = topology.n_free();
  const int n = topology.n_units();

  EquilibriumResult result;
  result.phases = initial;
  result.phases.head(n_in) = sample_inputs;
  if (!result.phases.allFinite()) throw NumericalError("initial state is not finite");

  StepDoublingRk4 stepper(system, n);
  Eigen::VectorXd k1 = Eigen::VectorXd::Zero(n);
  PhaseVector candidate = PhaseVector::Zero(n);
  stepper.derivative(result.phases, k1);
  result.residual_norm = k1.tail(n_free).lpNorm<Eigen::Infinity>();

  auto emit = [&]() {
    if (observer) observer(result.elapsed_time, result.phases, system.energy(result.phases.tail(n_free)));
  };
  emit();

  double h = config.initial_step;
  double& t = result.elapsed_time;
  while (t < config.horizon) {
    if (config.stop_at_equilibrium && result.residual_norm < config.equilibrium_grad_tol) break;
    if (result.step_count + result.rejected_steps >= kMaxSteps) {
      throw IntegrationFailure("integration step budget exhausted", result);
    }
    const bool final_step = h >= config.horizon - t;
    const double step = final_step ? config.horizon - t : h;

    const double ratio = stepper.attempt(result.phases, k1, step, config, candidate);
    const double factor =
        ratio == 0.0 ? kMaxFactor : std::clamp(kSafety * std::pow(ratio, -0.2), kMinFactor, kMaxFactor);

    if (ratio <= 1.0) {
      if (!candidate.allFinite()) throw NumericalError("state became non-finite during relaxation");
      result.phases.swap(candidate);
      t = final_step ? config.horizon : t + step;
      ++result.step_count;
      stepper.derivative(result.phases, k1);
      result.residual_norm = k1.tail(n_free).lpNorm<Eigen::Infinity>();
      if (!std::isfinite(result.residual_norm)) throw NumericalError("gradient became non-finite");
      emit();
      h = std::min(config.max_step, std::max(h, step) * (final_step ? 1.0 : factor));
    } else {
      ++result.rejected_steps;
      h = step * factor;
      if (h < config.min_step) {
        result.converged = result.residual_norm < config.equilibrium_grad_tol;
        throw IntegrationFailure("step size fell below min_step", result);
      }
    }
  }
  result.converged = result.residual_norm < config.equilibrium_grad_tol;
  return result;
}

PhaseVector random_initial_state(const NetworkTopology& topology, const PhaseVector& inputs, Rng& rng) {
  if (inputs.size() != topology.n_inputs()) throw ContractViolation("input vector length mismatch");
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  PhaseVector state(topology.n_units());
  state.head(topology.n_inputs()) = inputs;
  for (int u = topology.n_inputs(); u < topology.n_units(); ++u) state[u] = angle(rng);
  return state;
}

TrajectoryObserver make_trajectory_writer(std::ostream& out, int n_units) {
  out << "time";
  for (int u = 0; u < n_units; ++u) out << "\tphi_" << u;
  out << '\n';
  return [&out](double time, const PhaseVector& phases, double) {
    out << std::setprecision(17) << time;
    for (Eigen::Index u = 0; u < phases.size(); ++u) out << '\t' << phases[u];
    out << '\n';
  };
}

EquilibriumCensus enumerate_equilibria(const ModelParameters& params, const NetworkTopology& topology,
                                       const PhaseVector& sample_inputs, std::size_t n_trials,
                                       double cluster_tol, std::uint64_t rng_seed,
                                       const IntegratorConfig& config) {
  if (n_trials < 1) throw ConfigurationError("equilibrium census needs at least one trial");
  if (!(cluster_tol > 0.0)) throw ConfigurationError("cluster tolerance must be positive");

  EquilibriumCensus census;
  census.trials = n_trials;
  Rng rng(rng_seed);
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const auto init = random_initial_state(topology, sample_inputs, rng);
    EquilibriumResult result;
    try {
      result = relax(init, params, topology, 0.0, Eigen::VectorXd(), config, sample_inputs);
    } catch (const IntegrationFailure&) {
      ++census.failed;
      continue;
    } catch (const NumericalError&) {
      ++census.failed;
      continue;
    }
    if (!result.converged) {
      ++census.not_converged;
      continue;
    }
    ++census.converged;
    const auto state = canonicalize(result.phases);
    auto same_basin = [&](const EquilibriumCluster& cluster) {
      for (Eigen::Index u = 0; u < state.size(); ++u) {
        if (circular_distance(state[u], cluster.representative[u]) >= cluster_tol) return false;
      }
      return true;
    };
    auto it = std::find_if(census.clusters.begin(), census.clusters.end(), same_basin);
    if (it == census.clusters.end()) {
      census.clusters.push_back({state, 1});
    } else {
      ++it->basin_count;
    }
  }
  return census;
}

}  // namespace xyep
