#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xyep/metrics.hpp"
#include "xyep/tasks.hpp"
#include "xyep/trainer.hpp"

namespace xyep {

enum class TaskKind { Xor, Digits };

/// Everything needed to reproduce a run. Serialized as JSON; see README for
/// the field list. Missing fields take the defaults below.
struct ExperimentConfig {
  TaskKind task = TaskKind::Xor;
  TopologyKind topology = TopologyKind::AllToAll;
  // All-to-all: total unit count (inputs and outputs follow from the task).
  int units = 5;
  // Layered: full layer list including input and output layers.
  std::vector<int> layers;
  // Defaults to the scheme of the task.
  std::optional<InitScheme> init_scheme;
  TrainConfig train;
  int batch_per_digit = 30;
  std::filesystem::path data_path;
  std::filesystem::path output_dir = "runs";
  int replicates = 1;
  // Iterations with a confusion-matrix export (digits only).
  std::set<int> confusion_at = {0, 10, 50, 100, 1000};
  int speed_window = kDefaultSpeedWindow;
  bool write_checkpoints = true;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Accepts either a config object or a manifest holding one under "config".
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

NetworkTopology build_topology(const ExperimentConfig& config);
InitScheme effective_init_scheme(const ExperimentConfig& config);

// Seed of replicate r, derived from the master seed.
std::uint64_t replicate_seed(std::uint64_t master, int replicate);

struct ReplicateSummary {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::filesystem::path directory;
  bool completed = false;
  std::string error;
  double final_mean_distance = 0.0;
  std::optional<double> best_accuracy;
  std::optional<LearningSpeed> speed;
  std::vector<std::pair<int, double>> distance_trace;
};

struct RunSummary {
  std::vector<ReplicateSummary> replicates;
  bool all_completed() const;
};

/// Trains config.replicates independent runs. Layout under output_dir:
///   manifest.json
///   rep_000/train_log.jsonl   one record per iteration, deterministic
///   rep_000/timing.tsv        wall time per record
///   rep_000/curve.tsv         iteration, mean_distance, test_error
///   rep_000/confusion.csv     digits only
///   rep_000/checkpoints/      iter_NNNNNN.json at every evaluation, final.json
///   rep_000/summary.json
/// The dataset is loaded before anything is written.
RunSummary run_experiment(const ExperimentConfig& config);

struct SweepPoint {
  double value = 0.0;
  int runs = 0;
  int failed_runs = 0;
  double mean_final_distance = 0.0;
  // Learning speed of the replicate-averaged distance trace.
  std::optional<LearningSpeed> speed;
  // Raw speed of each completed replicate, for spread estimates.
  std::vector<double> replicate_speeds;
  std::vector<std::pair<int, double>> mean_trace;
};

struct SweepReport {
  std::string axis;
  std::vector<SweepPoint> points;
};

bool is_sweep_axis(const std::string& axis);
ExperimentConfig with_axis_value(ExperimentConfig config, const std::string& axis, double value);

// Runs one experiment per value under output_dir/<axis>_<value>/ and writes
// output_dir/sweep_summary.tsv and sweep_summary.json.
SweepReport sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<double>& values);

}  // namespace xyep
