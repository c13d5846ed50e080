#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xyep/errors.hpp"

namespace xyep {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Phases are plain reals; the dynamics is 2*pi periodic so no wrapping is
// applied until readout.
using PhaseVector = Eigen::VectorXd;

enum class UnitRole : std::uint8_t { Input, Hidden, Output };

std::string to_string(UnitRole role);
UnitRole role_from_string(const std::string& name);

enum class TopologyKind : std::uint8_t { AllToAll, Layered };

// Unordered pair of coupled units, stored with i < j.
struct UnitPair {
  int i = 0;
  int j = 0;

  friend bool operator==(const UnitPair&, const UnitPair&) = default;
};

/// Unit layout and trainable couplings of an oscillator network.
///
/// Indexing is fixed: inputs occupy [0, n_inputs), hidden units follow, and
/// the outputs are the last n_outputs indices. For layered networks the
/// hidden layers are laid out in order. Input-input pairs and self pairs are
/// never part of the connectivity.
class NetworkTopology {
 public:
  static NetworkTopology make_all_to_all(int n_in, int n_hidden, int n_out);
  static NetworkTopology make_layered(std::vector<int> layer_sizes);

  TopologyKind kind() const noexcept { return kind_; }
  int n_units() const noexcept { return n_units_; }
  int n_inputs() const noexcept { return n_in_; }
  int n_outputs() const noexcept { return n_out_; }
  int n_hidden() const noexcept { return n_units_ - n_in_ - n_out_; }
  // Hidden and output units; these are the units that carry biases and move.
  int n_free() const noexcept { return n_units_ - n_in_; }
  int first_output() const noexcept { return n_units_ - n_out_; }

  UnitRole role(int unit) const;
  const std::vector<UnitRole>& roles() const noexcept { return roles_; }
  std::span<const UnitPair> pairs() const noexcept { return pairs_; }
  // Empty for all-to-all networks.
  const std::vector<int>& layer_sizes() const noexcept { return layer_sizes_; }

  // Position of {i, j} in pairs(), in either argument order.
  std::optional<std::size_t> pair_index(int i, int j) const;

  friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;

 private:
  NetworkTopology() = default;
  void build_lookup();

  TopologyKind kind_ = TopologyKind::AllToAll;
  int n_units_ = 0;
  int n_in_ = 0;
  int n_out_ = 0;
  std::vector<UnitRole> roles_;
  std::vector<UnitPair> pairs_;
  std::vector<int> layer_sizes_;
  // Dense n_units x n_units map into pairs_, -1 where uncoupled.
  std::vector<std::int32_t> lookup_;
};

// |connectivity| + 2 (N - N_in).
std::size_t parameter_count(const NetworkTopology& topology);

/// Values indexed like the trainable parameters of a topology.
///
/// weights[k] belongs to topology.pairs()[k]; bias entries are indexed by
/// unit - n_inputs. The same layout is used for gradients.
struct ParameterSet {
  Eigen::VectorXd weights;
  Eigen::VectorXd bias_strengths;
  Eigen::VectorXd bias_angles;

  static ParameterSet zeros(const NetworkTopology& topology);

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(weights.size() + bias_strengths.size() + bias_angles.size());
  }
  bool matches(const NetworkTopology& topology) const noexcept;

  ParameterSet& operator+=(const ParameterSet& other);
  ParameterSet& operator-=(const ParameterSet& other);
  ParameterSet& operator*=(double factor);

  // Concatenation [weights, bias_strengths, bias_angles].
  Eigen::VectorXd flatten() const;
  void assign_flat(const Eigen::VectorXd& flat);

  // Exact elementwise equality; false on any size mismatch.
  friend bool operator==(const ParameterSet& a, const ParameterSet& b);
};

using ModelParameters = ParameterSet;
using ParameterGradient = ParameterSet;

// W_ij, zero for uncoupled pairs. Symmetric because each pair is stored once.
double coupling(const NetworkTopology& topology, const ModelParameters& params, int i, int j);

struct TrainingSample {
  PhaseVector input_phases;
  PhaseVector target_phases;
};

void check_sample(const NetworkTopology& topology, const TrainingSample& sample);

// Maps into [-pi, pi).
double wrap_angle(double angle);
PhaseVector canonicalize(const PhaseVector& phases);

// Smallest absolute angle between a and b modulo 2*pi, in [0, pi].
double circular_distance(double a, double b);

}  // namespace xyep
