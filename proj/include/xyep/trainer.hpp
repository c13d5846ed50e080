#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "xyep/core.hpp"
#include "xyep/dynamics.hpp"
#include "xyep/random.hpp"

namespace xyep {

struct TrainConfig {
  double beta = 0.1;
  double eta = 0.1;
  int m_init = 1;
  int m_data = 4;
  int n_iterations = 1000;
  std::uint64_t rng_seed = 0;
  int eval_every = 5;
  // Extra iterations at which to evaluate, on top of every eval_every.
  std::set<int> eval_at;
  IntegratorConfig integrator;
  // Threads used for the relaxations of one iteration. Results do not depend on it.
  int workers = 1;

  void validate() const;
};

struct EpDiagnostics {
  std::size_t relaxations = 0;  // (sample, init) pairs attempted
  std::size_t failed = 0;       // pairs dropped because a relaxation threw
  std::size_t non_converged = 0;  // relaxations that hit the horizon above tolerance
  // Mean distance of the free equilibria over the successful pairs.
  double mean_distance = 0.0;
};

struct EpGradientEstimate {
  ParameterGradient gradient;
  EpDiagnostics diagnostics;
};

struct EpStep {
  EquilibriumResult free;
  EquilibriumResult nudge;
  // (dE/dtheta at nudge - dE/dtheta at free) / beta
  ParameterGradient contribution;
};

// A free or nudge relaxation of one (sample, init) pair failed.
class RelaxationFailed : public std::runtime_error {
 public:
  RelaxationFailed(const std::string& what, bool during_nudge)
      : std::runtime_error(what), during_nudge_(during_nudge) {}
  bool during_nudge() const noexcept { return during_nudge_; }

 private:
  bool during_nudge_;
};

// Every relaxation of an iteration failed; parameters were left unchanged.
class IterationFailure : public std::runtime_error {
 public:
  IterationFailure(const std::string& what, EpDiagnostics diagnostics)
      : std::runtime_error(what), diagnostics_(diagnostics) {}
  const EpDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  EpDiagnostics diagnostics_;
};

/// Free relaxation from `init`, then nudged relaxation started from the free
/// equilibrium, then the EP contribution from the two equilibria.
EpStep ep_step_single(const TrainingSample& sample, const PhaseVector& init, const ModelParameters& params,
                      const NetworkTopology& topology, double beta, const IntegratorConfig& integrator);

// Average EP contribution over initial_states[i][j] (sample i, init j).
// Accumulation runs in (sample, init) order regardless of config.workers.
EpGradientEstimate estimate_gradient(const std::vector<TrainingSample>& batch,
                                     const std::vector<std::vector<PhaseVector>>& initial_states,
                                     const ModelParameters& params, const NetworkTopology& topology,
                                     const TrainConfig& config);

struct UpdateResult {
  ModelParameters params;
  EpGradientEstimate estimate;
};

// theta <- theta - eta * estimate, with bias angles wrapped into [-pi, pi).
UpdateResult apply_update(const std::vector<TrainingSample>& batch,
                          const std::vector<std::vector<PhaseVector>>& initial_states,
                          const ModelParameters& params, const NetworkTopology& topology,
                          const TrainConfig& config);

// One training iteration: draws m_init random initial states per sample
// (sample-major) from `rng` and applies the averaged EP update.
UpdateResult ep_update(const std::vector<TrainingSample>& batch, const ModelParameters& params,
                       const NetworkTopology& topology, const TrainConfig& config, Rng& rng);

enum class InitScheme {
  // W ~ N(0, 1), h ~ U[-0.5, 0.5), psi ~ U[-pi, pi)
  Xor,
  // all-to-all W ~ N(0, 1/sqrt(N)); layered W ~ N(0, 1/sqrt(N_i + N_{i+1}));
  // h = 0, psi ~ U[-pi, pi)
  Digits,
};

ModelParameters init_parameters(const NetworkTopology& topology, InitScheme scheme, Rng& rng);

class TaskSource {
 public:
  virtual ~TaskSource() = default;
  virtual std::vector<TrainingSample> next_batch(Rng& rng) = 0;
};

struct LogRecord {
  int iteration = 0;
  // Absent for the initial record (no update has run yet).
  std::optional<EpDiagnostics> diagnostics;
  bool failed = false;
  nlohmann::json evaluation;  // null when not evaluated at this iteration
  double wall_seconds = 0.0;  // since training start; not serialized
};

// Deterministic serialization: everything except wall time.
nlohmann::json to_json(const LogRecord& record);

struct TrainingLog {
  std::vector<LogRecord> records;
  ModelParameters final_params;
};

struct TrainCallbacks {
  // Returns a JSON object stored in the record. Gets its own RNG stream.
  std::function<nlohmann::json(const ModelParameters&, int iteration, Rng& eval_rng)> evaluate;
  std::function<void(const LogRecord&, const ModelParameters&)> on_record;
};

// More than three consecutive iterations failed.
class TrainingHalted : public std::runtime_error {
 public:
  TrainingHalted(const std::string& what, TrainingLog log)
      : std::runtime_error(what), log_(std::move(log)) {}
  const TrainingLog& log() const noexcept { return log_; }

 private:
  TrainingLog log_;
};

inline constexpr int kMaxConsecutiveFailures = 3;

/// Runs config.n_iterations EP updates. Record 0 holds the initial
/// evaluation; record k the diagnostics of update k and, when scheduled, the
/// evaluation after it.
TrainingLog train(TaskSource& source, const NetworkTopology& topology, ModelParameters initial,
                  const TrainConfig& config, const TrainCallbacks& callbacks = {});

}  // namespace xyep
