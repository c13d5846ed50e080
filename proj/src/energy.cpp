#include "xyep/energy.hpp"

#include <cmath>
#include <complex>
#include <string>

namespace xyep {

namespace {

void check_phases(const PhaseVector& phases, const ModelParameters& params,
                  const NetworkTopology& topology) {
  if (phases.size() != topology.n_units()) {
    throw ContractViolation("phase vector has length " + std::to_string(phases.size()) +
                            ", topology has " + std::to_string(topology.n_units()) + " units");
  }
  if (!params.matches(topology)) throw ContractViolation("parameters do not match topology");
}

void check_lengths(const VectorRef& outputs, const VectorRef& targets) {
  if (outputs.size() != targets.size()) {
    throw ContractViolation("output and target vectors differ in length");
  }
}

// 1 + cos(delta) in the half-angle form, which keeps full relative precision
// near delta = pi.
inline double one_plus_cos(double delta) {
  const double c = std::cos(0.5 * delta);
  return 2.0 * c * c;
}

void check_nudge(const NetworkTopology& topology, double beta, const Eigen::VectorXd& targets) {
  if (beta != 0.0 && targets.size() == 0) {
    throw ContractViolation("nonzero beta requires target phases");
  }
  if (targets.size() != 0 && targets.size() != topology.n_outputs()) {
    throw ContractViolation("target vector length does not match output count");
  }
}

}  // namespace

double internal_energy(const PhaseVector& phases, const ModelParameters& params,
                       const NetworkTopology& topology) {
  check_phases(phases, params, topology);
  double e = 0.0;
  const auto pairs = topology.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    e -= params.weights[static_cast<Eigen::Index>(k)] * std::cos(phases[pairs[k].i] - phases[pairs[k].j]);
  }
  const int n_in = topology.n_inputs();
  for (int b = 0; b < topology.n_free(); ++b) {
    e -= params.bias_strengths[b] * std::cos(phases[n_in + b] - params.bias_angles[b]);
  }
  return e;
}

double distance(const VectorRef& outputs, const VectorRef& targets) {
  check_lengths(outputs, targets);
  double d = 0.0;
  for (Eigen::Index i = 0; i < outputs.size(); ++i) d += 1.0 - std::cos(outputs[i] - targets[i]);
  return d;
}

double cost(const VectorRef& outputs, const VectorRef& targets, double log_clamp) {
  check_lengths(outputs, targets);
  double c = 0.0;
  for (Eigen::Index i = 0; i < outputs.size(); ++i) {
    c -= std::log(std::max(one_plus_cos(outputs[i] - targets[i]), log_clamp));
  }
  return c;
}

Eigen::VectorXd cost_gradient(const VectorRef& outputs, const VectorRef& targets, double log_clamp) {
  check_lengths(outputs, targets);
  Eigen::VectorXd g(outputs.size());
  for (Eigen::Index i = 0; i < outputs.size(); ++i) {
    const double delta = outputs[i] - targets[i];
    g[i] = std::sin(delta) / std::max(one_plus_cos(delta), log_clamp);
  }
  return g;
}

EnergyBreakdown total_energy(const PhaseVector& phases, const ModelParameters& params,
                             const NetworkTopology& topology, double beta,
                             const Eigen::VectorXd& targets, double log_clamp) {
  check_nudge(topology, beta, targets);
  EnergyBreakdown out;
  out.beta = beta;
  out.internal = internal_energy(phases, params, topology);
  if (targets.size() != 0) out.cost = cost(phases.tail(topology.n_outputs()), targets, log_clamp);
  out.total = out.internal + beta * out.cost;
  return out;
}

Eigen::VectorXd phase_gradient(const PhaseVector& phases, const ModelParameters& params,
                               const NetworkTopology& topology, double beta,
                               const Eigen::VectorXd& targets, double log_clamp) {
  check_phases(phases, params, topology);
  check_nudge(topology, beta, targets);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(topology.n_units());
  const auto pairs = topology.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const double term = params.weights[static_cast<Eigen::Index>(k)] * std::sin(phases[i] - phases[j]);
    g[i] += term;
    g[j] -= term;
  }
  const int n_in = topology.n_inputs();
  for (int b = 0; b < topology.n_free(); ++b) {
    g[n_in + b] += params.bias_strengths[b] * std::sin(phases[n_in + b] - params.bias_angles[b]);
  }
  if (beta != 0.0) {
    g.tail(topology.n_outputs()) +=
        beta * cost_gradient(phases.tail(topology.n_outputs()), targets, log_clamp);
  }
  g.head(n_in).setZero();
  return g;
}

ParameterGradient parameter_gradients(const PhaseVector& phases, const ModelParameters& params,
                                      const NetworkTopology& topology) {
  check_phases(phases, params, topology);
  auto grad = ParameterGradient::zeros(topology);
  const auto pairs = topology.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    grad.weights[static_cast<Eigen::Index>(k)] = -std::cos(phases[pairs[k].i] - phases[pairs[k].j]);
  }
  const int n_in = topology.n_inputs();
  for (int b = 0; b < topology.n_free(); ++b) {
    const double delta = phases[n_in + b] - params.bias_angles[b];
    grad.bias_strengths[b] = -std::cos(delta);
    grad.bias_angles[b] = -params.bias_strengths[b] * std::sin(delta);
  }
  return grad;
}

double fidelity_identity_check(const VectorRef& outputs, const VectorRef& targets) {
  check_lengths(outputs, targets);
  // |<T|S>|^2 factorizes over units: |(1 + e^{i (phi - target)}) / 2|^2.
  double neg_log_fidelity = 0.0;
  for (Eigen::Index i = 0; i < outputs.size(); ++i) {
    const std::complex<double> overlap =
        0.5 * (1.0 + std::polar(1.0, targets[i] - outputs[i]));
    neg_log_fidelity -= std::log(std::norm(overlap));
  }
  const double n = static_cast<double>(outputs.size());
  return neg_log_fidelity - (cost(outputs, targets) + n * std::log(2.0));
}

ClampedSystem::ClampedSystem(const NetworkTopology& topology, const ModelParameters& params,
                             const PhaseVector& input_phases, double beta,
                             const Eigen::VectorXd& targets, double log_clamp)
    : inputs_(input_phases), targets_(targets), beta_(beta), log_clamp_(log_clamp),
      n_out_(topology.n_outputs()) {
  if (!params.matches(topology)) throw ContractViolation("parameters do not match topology");
  if (input_phases.size() != topology.n_inputs()) {
    throw ContractViolation("input vector length does not match input count");
  }
  check_nudge(topology, beta, targets);

  const int n_in = topology.n_inputs();
  const int n_free = topology.n_free();
  coupling_ = Eigen::MatrixXd::Zero(n_free, n_free);
  Eigen::MatrixXd input_coupling = Eigen::MatrixXd::Zero(n_free, n_in);
  const auto pairs = topology.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const double w = params.weights[static_cast<Eigen::Index>(k)];
    // i < j and input-input pairs do not exist, so only i can be an input.
    if (i < n_in) {
      input_coupling(j - n_in, i) = w;
    } else {
      coupling_(i - n_in, j - n_in) = w;
      coupling_(j - n_in, i - n_in) = w;
    }
  }
  input_field_cos_ = input_coupling * input_phases.array().cos().matrix();
  input_field_sin_ = input_coupling * input_phases.array().sin().matrix();
  bias_cos_ = params.bias_strengths.array() * params.bias_angles.array().cos();
  bias_sin_ = params.bias_strengths.array() * params.bias_angles.array().sin();

  cos_.resize(n_free);
  sin_.resize(n_free);
  field_cos_.resize(n_free);
  field_sin_.resize(n_free);
}

void ClampedSystem::gradient(const VectorRef& free_phases, Eigen::Ref<Eigen::VectorXd> grad) {
  cos_ = free_phases.array().cos();
  sin_ = free_phases.array().sin();
  field_cos_ = input_field_cos_;
  field_cos_.noalias() += coupling_ * cos_;
  field_sin_ = input_field_sin_;
  field_sin_.noalias() += coupling_ * sin_;
  // sin(a - b) = sin a cos b - cos a sin b, summed against the local fields.
  grad = sin_.cwiseProduct(field_cos_ + bias_cos_) - cos_.cwiseProduct(field_sin_ + bias_sin_);
  if (beta_ != 0.0) {
    const Eigen::Index first_out = grad.size() - n_out_;
    for (int o = 0; o < n_out_; ++o) {
      const double delta = free_phases[first_out + o] - targets_[o];
      grad[first_out + o] += beta_ * std::sin(delta) / std::max(one_plus_cos(delta), log_clamp_);
    }
  }
}

double ClampedSystem::energy(const VectorRef& free_phases) {
  cos_ = free_phases.array().cos();
  sin_ = free_phases.array().sin();
  field_cos_.noalias() = coupling_ * cos_;
  field_sin_.noalias() = coupling_ * sin_;
  double e = -0.5 * (cos_.dot(field_cos_) + sin_.dot(field_sin_));
  e -= cos_.dot(input_field_cos_ + bias_cos_) + sin_.dot(input_field_sin_ + bias_sin_);
  if (targets_.size() != 0 && beta_ != 0.0) {
    e += beta_ * cost(free_phases.tail(n_out_), targets_, log_clamp_);
  }
  return e;
}

}  // namespace xyep
