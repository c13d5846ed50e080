#include "xyep/trainer.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "xyep/energy.hpp"

namespace xyep {

void TrainConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigurationError("beta must be positive");
  if (!std::isfinite(eta)) throw ConfigurationError("eta must be finite");
  if (m_init < 1) throw ConfigurationError("m_init must be at least 1");
  if (m_data < 1) throw ConfigurationError("m_data must be at least 1");
  if (n_iterations < 0) throw ConfigurationError("n_iterations must be non-negative");
  if (eval_every < 1) throw ConfigurationError("eval_every must be at least 1");
  if (workers < 1) throw ConfigurationError("workers must be at least 1");
  integrator.validate();
}

EpStep ep_step_single(const TrainingSample& sample, const PhaseVector& init, const ModelParameters& params,
                      const NetworkTopology& topology, double beta, const IntegratorConfig& integrator) {
  check_sample(topology, sample);
  if (!(beta > 0.0)) throw ConfigurationError("beta must be positive");

  EpStep step;
  try {
    step.free = relax(init, params, topology, 0.0, Eigen::VectorXd(), integrator, sample.input_phases);
  } catch (const IntegrationFailure& e) {
    throw RelaxationFailed(std::string("free phase: ") + e.what(), false);
  } catch (const NumericalError& e) {
    throw RelaxationFailed(std::string("free phase: ") + e.what(), false);
  }
  try {
    step.nudge = relax(step.free.phases, params, topology, beta, sample.target_phases, integrator,
                       sample.input_phases);
  } catch (const IntegrationFailure& e) {
    throw RelaxationFailed(std::string("nudge phase: ") + e.what(), true);
  } catch (const NumericalError& e) {
    throw RelaxationFailed(std::string("nudge phase: ") + e.what(), true);
  }
  step.contribution = parameter_gradients(step.nudge.phases, params, topology);
  step.contribution -= parameter_gradients(step.free.phases, params, topology);
  step.contribution *= 1.0 / beta;
  return step;
}

namespace {

struct CellOutcome {
  std::optional<EpStep> step;
};

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  std::vector<std::jthread> threads;
  threads.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += n_threads) fn(i);
    });
  }
}

}  // namespace

EpGradientEstimate estimate_gradient(const std::vector<TrainingSample>& batch,
                                     const std::vector<std::vector<PhaseVector>>& initial_states,
                                     const ModelParameters& params, const NetworkTopology& topology,
                                     const TrainConfig& config) {
  if (batch.empty()) throw ContractViolation("empty training batch");
  if (initial_states.size() != batch.size()) {
    throw ContractViolation("need one list of initial states per sample");
  }

  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (initial_states[i].empty()) throw ContractViolation("sample without initial states");
    for (std::size_t j = 0; j < initial_states[i].size(); ++j) cells.emplace_back(i, j);
  }

  std::vector<CellOutcome> outcomes(cells.size());
  parallel_for(cells.size(), config.workers, [&](std::size_t c) {
    const auto [i, j] = cells[c];
    try {
      outcomes[c].step = ep_step_single(batch[i], initial_states[i][j], params, topology, config.beta,
                                        config.integrator);
    } catch (const RelaxationFailed&) {
      outcomes[c].step.reset();
    }
  });

  EpGradientEstimate estimate{ParameterGradient::zeros(topology), {}};
  auto& diag = estimate.diagnostics;
  diag.relaxations = cells.size();
  double distance_sum = 0.0;
  std::size_t successes = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!outcomes[c].step) {
      ++diag.failed;
      continue;
    }
    const auto& step = *outcomes[c].step;
    diag.non_converged += (step.free.converged ? 0 : 1) + (step.nudge.converged ? 0 : 1);
    estimate.gradient += step.contribution;
    distance_sum += distance(step.free.phases.tail(topology.n_outputs()), batch[cells[c].first].target_phases);
    ++successes;
  }
  if (successes == 0) throw IterationFailure("every relaxation in the batch failed", diag);
  estimate.gradient *= 1.0 / static_cast<double>(successes);
  diag.mean_distance = distance_sum / static_cast<double>(successes);
  return estimate;
}

UpdateResult apply_update(const std::vector<TrainingSample>& batch,
                          const std::vector<std::vector<PhaseVector>>& initial_states,
                          const ModelParameters& params, const NetworkTopology& topology,
                          const TrainConfig& config) {
  UpdateResult out{params, estimate_gradient(batch, initial_states, params, topology, config)};
  auto step = out.estimate.gradient;
  step *= config.eta;
  out.params -= step;
  out.params.bias_angles = out.params.bias_angles.unaryExpr([](double a) { return wrap_angle(a); });
  return out;
}

UpdateResult ep_update(const std::vector<TrainingSample>& batch, const ModelParameters& params,
                       const NetworkTopology& topology, const TrainConfig& config, Rng& rng) {
  config.validate();
  if (batch.size() != static_cast<std::size_t>(config.m_data)) {
    throw ContractViolation("batch has " + std::to_string(batch.size()) + " samples, m_data is " +
                            std::to_string(config.m_data));
  }
  std::vector<std::vector<PhaseVector>> states(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_sample(topology, batch[i]);
    for (int j = 0; j < config.m_init; ++j) {
      states[i].push_back(random_initial_state(topology, batch[i].input_phases, rng));
    }
  }
  return apply_update(batch, states, params, topology, config);
}

ModelParameters init_parameters(const NetworkTopology& topology, InitScheme scheme, Rng& rng) {
  auto params = ModelParameters::zeros(topology);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  const auto pairs = topology.pairs();

  if (scheme == InitScheme::Xor) {
    std::normal_distribution<double> weight(0.0, 1.0);
    std::uniform_real_distribution<double> strength(-0.5, 0.5);
    for (Eigen::Index k = 0; k < params.weights.size(); ++k) params.weights[k] = weight(rng);
    for (int b = 0; b < topology.n_free(); ++b) params.bias_strengths[b] = strength(rng);
    for (int b = 0; b < topology.n_free(); ++b) params.bias_angles[b] = angle(rng);
    return params;
  }

  if (topology.kind() == TopologyKind::AllToAll) {
    std::normal_distribution<double> weight(0.0, 1.0 / std::sqrt(static_cast<double>(topology.n_units())));
    for (Eigen::Index k = 0; k < params.weights.size(); ++k) params.weights[k] = weight(rng);
  } else {
    // Pairs are stored layer by layer; the layer of pair.i gives the block.
    const auto& sizes = topology.layer_sizes();
    std::vector<int> layer_of(static_cast<std::size_t>(topology.n_units()));
    for (int l = 0, u = 0; l < static_cast<int>(sizes.size()); ++l) {
      for (int s = 0; s < sizes[l]; ++s) layer_of[u++] = l;
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const int l = layer_of[pairs[k].i];
      const double sd = 1.0 / std::sqrt(static_cast<double>(sizes[l] + sizes[l + 1]));
      params.weights[static_cast<Eigen::Index>(k)] = std::normal_distribution<double>(0.0, sd)(rng);
    }
  }
  for (int b = 0; b < topology.n_free(); ++b) params.bias_angles[b] = angle(rng);
  return params;
}

nlohmann::json to_json(const LogRecord& record) {
  nlohmann::json j;
  j["iteration"] = record.iteration;
  if (record.diagnostics) {
    const auto& d = *record.diagnostics;
    if (record.failed) {
      j["mean_distance"] = nullptr;
    } else {
      j["mean_distance"] = d.mean_distance;
    }
    j["relaxations"] = d.relaxations;
    j["failed_relaxations"] = d.failed;
    j["non_converged"] = d.non_converged;
  }
  if (record.failed) j["iteration_failed"] = true;
  if (!record.evaluation.is_null()) j["evaluation"] = record.evaluation;
  return j;
}

TrainingLog train(TaskSource& source, const NetworkTopology& topology, ModelParameters initial,
                  const TrainConfig& config, const TrainCallbacks& callbacks) {
  config.validate();
  if (!initial.matches(topology)) throw ContractViolation("initial parameters do not match topology");

  auto data_rng = make_rng(config.rng_seed, Stream::Data);
  auto state_rng = make_rng(config.rng_seed, Stream::InitialStates);
  auto eval_rng = make_rng(config.rng_seed, Stream::Evaluation);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  TrainingLog log;
  log.final_params = std::move(initial);

  auto finish = [&](LogRecord record) {
    record.wall_seconds = elapsed();
    if (callbacks.on_record) callbacks.on_record(record, log.final_params);
    log.records.push_back(std::move(record));
  };

  LogRecord first;
  if (callbacks.evaluate) first.evaluation = callbacks.evaluate(log.final_params, 0, eval_rng);
  finish(std::move(first));

  int consecutive_failures = 0;
  for (int k = 1; k <= config.n_iterations; ++k) {
    LogRecord record;
    record.iteration = k;
    const auto batch = source.next_batch(data_rng);
    try {
      auto update = ep_update(batch, log.final_params, topology, config, state_rng);
      log.final_params = std::move(update.params);
      record.diagnostics = update.estimate.diagnostics;
      consecutive_failures = 0;
    } catch (const IterationFailure& e) {
      record.diagnostics = e.diagnostics();
      record.failed = true;
      ++consecutive_failures;
    }

    const bool scheduled = k % config.eval_every == 0 || config.eval_at.contains(k) || k == config.n_iterations;
    if (scheduled && callbacks.evaluate) record.evaluation = callbacks.evaluate(log.final_params, k, eval_rng);
    finish(std::move(record));

    if (consecutive_failures > kMaxConsecutiveFailures) {
      throw TrainingHalted("training halted after " + std::to_string(consecutive_failures) +
                               " consecutive failed iterations",
                           std::move(log));
    }
  }
  return log;
}

}  // namespace xyep
