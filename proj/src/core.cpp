#include "xyep/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xyep {

std::string to_string(UnitRole role) {
  switch (role) {
    case UnitRole::Input:
      return "input";
    case UnitRole::Hidden:
      return "hidden";
    case UnitRole::Output:
      return "output";
  }
  return "unknown";
}

UnitRole role_from_string(const std::string& name) {
  if (name == "input") return UnitRole::Input;
  if (name == "hidden") return UnitRole::Hidden;
  if (name == "output") return UnitRole::Output;
  throw ValidationError("unknown unit role '" + name + "'");
}

NetworkTopology NetworkTopology::make_all_to_all(int n_in, int n_hidden, int n_out) {
  if (n_in < 1) throw ConfigurationError("all-to-all network needs at least one input unit");
  if (n_out < 1) throw ConfigurationError("all-to-all network needs at least one output unit");
  if (n_hidden < 0) throw ConfigurationError("hidden unit count must be non-negative");

  NetworkTopology t;
  t.kind_ = TopologyKind::AllToAll;
  t.n_in_ = n_in;
  t.n_out_ = n_out;
  t.n_units_ = n_in + n_hidden + n_out;
  t.roles_.assign(static_cast<std::size_t>(t.n_units_), UnitRole::Hidden);
  for (int u = 0; u < n_in; ++u) t.roles_[u] = UnitRole::Input;
  for (int u = t.first_output(); u < t.n_units_; ++u) t.roles_[u] = UnitRole::Output;

  for (int i = 0; i < t.n_units_; ++i) {
    for (int j = std::max(i + 1, n_in); j < t.n_units_; ++j) {
      t.pairs_.push_back({i, j});
    }
  }
  t.build_lookup();
  return t;
}

NetworkTopology NetworkTopology::make_layered(std::vector<int> layer_sizes) {
  if (layer_sizes.size() < 2) throw ConfigurationError("layered network needs at least two layers");
  for (int size : layer_sizes) {
    if (size < 1) throw ConfigurationError("every layer needs at least one unit");
  }

  NetworkTopology t;
  t.kind_ = TopologyKind::Layered;
  t.n_in_ = layer_sizes.front();
  t.n_out_ = layer_sizes.back();
  t.n_units_ = std::accumulate(layer_sizes.begin(), layer_sizes.end(), 0);
  t.roles_.assign(static_cast<std::size_t>(t.n_units_), UnitRole::Hidden);
  for (int u = 0; u < t.n_in_; ++u) t.roles_[u] = UnitRole::Input;
  for (int u = t.first_output(); u < t.n_units_; ++u) t.roles_[u] = UnitRole::Output;

  int offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int next = offset + layer_sizes[l];
    for (int i = offset; i < next; ++i) {
      for (int j = next; j < next + layer_sizes[l + 1]; ++j) {
        t.pairs_.push_back({i, j});
      }
    }
    offset = next;
  }
  t.layer_sizes_ = std::move(layer_sizes);
  t.build_lookup();
  return t;
}

void NetworkTopology::build_lookup() {
  const auto n = static_cast<std::size_t>(n_units_);
  lookup_.assign(n * n, -1);
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto [i, j] = pairs_[k];
    lookup_[static_cast<std::size_t>(i) * n + j] = static_cast<std::int32_t>(k);
    lookup_[static_cast<std::size_t>(j) * n + i] = static_cast<std::int32_t>(k);
  }
}

UnitRole NetworkTopology::role(int unit) const {
  if (unit < 0 || unit >= n_units_) throw ContractViolation("unit index out of range");
  return roles_[static_cast<std::size_t>(unit)];
}

std::optional<std::size_t> NetworkTopology::pair_index(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_units_ || j >= n_units_) return std::nullopt;
  const auto k = lookup_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_units_) + j];
  if (k < 0) return std::nullopt;
  return static_cast<std::size_t>(k);
}

std::size_t parameter_count(const NetworkTopology& topology) {
  return topology.pairs().size() + 2 * static_cast<std::size_t>(topology.n_free());
}

ParameterSet ParameterSet::zeros(const NetworkTopology& topology) {
  ParameterSet p;
  p.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.pairs().size()));
  p.bias_strengths = Eigen::VectorXd::Zero(topology.n_free());
  p.bias_angles = Eigen::VectorXd::Zero(topology.n_free());
  return p;
}

bool ParameterSet::matches(const NetworkTopology& topology) const noexcept {
  return weights.size() == static_cast<Eigen::Index>(topology.pairs().size()) &&
         bias_strengths.size() == topology.n_free() && bias_angles.size() == topology.n_free();
}

ParameterSet& ParameterSet::operator+=(const ParameterSet& other) {
  weights += other.weights;
  bias_strengths += other.bias_strengths;
  bias_angles += other.bias_angles;
  return *this;
}

ParameterSet& ParameterSet::operator-=(const ParameterSet& other) {
  weights -= other.weights;
  bias_strengths -= other.bias_strengths;
  bias_angles -= other.bias_angles;
  return *this;
}

ParameterSet& ParameterSet::operator*=(double factor) {
  weights *= factor;
  bias_strengths *= factor;
  bias_angles *= factor;
  return *this;
}

Eigen::VectorXd ParameterSet::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  flat << weights, bias_strengths, bias_angles;
  return flat;
}

void ParameterSet::assign_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(size())) {
    throw ContractViolation("flat parameter vector has wrong length");
  }
  const auto nw = weights.size();
  const auto nb = bias_strengths.size();
  weights = flat.head(nw);
  bias_strengths = flat.segment(nw, nb);
  bias_angles = flat.tail(nb);
}

namespace {
bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}
}  // namespace

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  return same(a.weights, b.weights) && same(a.bias_strengths, b.bias_strengths) &&
         same(a.bias_angles, b.bias_angles);
}

double coupling(const NetworkTopology& topology, const ModelParameters& params, int i, int j) {
  const auto k = topology.pair_index(i, j);
  return k ? params.weights[static_cast<Eigen::Index>(*k)] : 0.0;
}

void check_sample(const NetworkTopology& topology, const TrainingSample& sample) {
  if (sample.input_phases.size() != topology.n_inputs()) {
    throw ContractViolation("sample has " + std::to_string(sample.input_phases.size()) +
                            " input phases, topology expects " + std::to_string(topology.n_inputs()));
  }
  if (sample.target_phases.size() != topology.n_outputs()) {
    throw ContractViolation("sample has " + std::to_string(sample.target_phases.size()) +
                            " target phases, topology expects " + std::to_string(topology.n_outputs()));
  }
}

double wrap_angle(double angle) {
  double wrapped = angle - kTwoPi * std::floor((angle + kPi) / kTwoPi);
  // Rounding can land exactly on the excluded endpoint.
  if (wrapped >= kPi) wrapped -= kTwoPi;
  if (wrapped < -kPi) wrapped = -kPi;
  return wrapped;
}

PhaseVector canonicalize(const PhaseVector& phases) {
  return phases.unaryExpr([](double a) { return wrap_angle(a); });
}

double circular_distance(double a, double b) {
  return std::abs(wrap_angle(a - b));
}

}  // namespace xyep
