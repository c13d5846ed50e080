#pragma once

#include <Eigen/Core>

#include "xyep/core.hpp"

namespace xyep {

// Lower clamp on 1 + cos(delta) inside the log cost. The cost diverges at
// antipodal outputs; the clamp keeps it finite.
inline constexpr double kDefaultLogClamp = 1e-12;

struct EnergyBreakdown {
  double internal = 0.0;
  double cost = 0.0;
  double total = 0.0;
  double beta = 0.0;
};

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// E = -sum_{pairs} W_ij cos(phi_i - phi_j) - sum_{free i} h_i cos(phi_i - psi_i).
double internal_energy(const PhaseVector& phases, const ModelParameters& params,
                       const NetworkTopology& topology);

// D = sum (1 - cos(phi_i - target_i)).
double distance(const VectorRef& outputs, const VectorRef& targets);

// C = -sum ln(max(1 + cos(phi_i - target_i), log_clamp)).
double cost(const VectorRef& outputs, const VectorRef& targets, double log_clamp = kDefaultLogClamp);

// dC/dphi_i = sin(delta) / max(1 + cos(delta), log_clamp).
Eigen::VectorXd cost_gradient(const VectorRef& outputs, const VectorRef& targets,
                              double log_clamp = kDefaultLogClamp);

// F = E + beta C. targets may be empty only when beta == 0.
EnergyBreakdown total_energy(const PhaseVector& phases, const ModelParameters& params,
                             const NetworkTopology& topology, double beta = 0.0,
                             const Eigen::VectorXd& targets = Eigen::VectorXd(),
                             double log_clamp = kDefaultLogClamp);

// dF/dphi over all units; entries of clamped (input) units are zero.
Eigen::VectorXd phase_gradient(const PhaseVector& phases, const ModelParameters& params,
                               const NetworkTopology& topology, double beta = 0.0,
                               const Eigen::VectorXd& targets = Eigen::VectorXd(),
                               double log_clamp = kDefaultLogClamp);

// dE/dtheta for every trainable parameter: -cos(phi_i - phi_j) per pair,
// -cos(phi_i - psi_i) per bias strength, -h_i sin(phi_i - psi_i) per bias angle.
ParameterGradient parameter_gradients(const PhaseVector& phases, const ModelParameters& params,
                                      const NetworkTopology& topology);

// Compares the log cost with the negative log overlap of the product qubit
// states |0> + e^{i phi}|1> built from outputs and targets; returns
// L - (C + n ln 2), which vanishes identically. L is computed from the
// complex amplitudes, not from the cosine form.
double fidelity_identity_check(const VectorRef& outputs, const VectorRef& targets);

/// Energy and gradient of the free units with the inputs held fixed.
///
/// Couplings are rearranged into a dense free-free block plus the constant
/// field from the clamped inputs, so one gradient evaluation costs two dense
/// matrix-vector products over the free units. Uses internal scratch space:
/// one instance per thread.
class ClampedSystem {
 public:
  ClampedSystem(const NetworkTopology& topology, const ModelParameters& params,
                const PhaseVector& input_phases, double beta = 0.0,
                const Eigen::VectorXd& targets = Eigen::VectorXd(),
                double log_clamp = kDefaultLogClamp);

  int n_free() const noexcept { return static_cast<int>(coupling_.rows()); }
  int n_inputs() const noexcept { return static_cast<int>(inputs_.size()); }
  double beta() const noexcept { return beta_; }
  const PhaseVector& inputs() const noexcept { return inputs_; }

  // dF/dphi for the free units (hidden then output order).
  void gradient(const VectorRef& free_phases, Eigen::Ref<Eigen::VectorXd> grad);
  double energy(const VectorRef& free_phases);

 private:
  Eigen::MatrixXd coupling_;
  Eigen::VectorXd input_field_cos_;
  Eigen::VectorXd input_field_sin_;
  Eigen::VectorXd bias_cos_;
  Eigen::VectorXd bias_sin_;
  PhaseVector inputs_;
  Eigen::VectorXd targets_;
  double beta_;
  double log_clamp_;
  int n_out_;

  Eigen::VectorXd cos_;
  Eigen::VectorXd sin_;
  Eigen::VectorXd field_cos_;
  Eigen::VectorXd field_sin_;
};

}  // namespace xyep
