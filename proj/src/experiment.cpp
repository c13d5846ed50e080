#include "xyep/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "xyep/checkpoint.hpp"

namespace xyep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kXorInputs = 2;
constexpr int kXorOutputs = 1;

std::string task_name(TaskKind task) { return task == TaskKind::Xor ? "xor" : "digits"; }

TaskKind task_from_name(const std::string& name) {
  if (name == "xor") return TaskKind::Xor;
  if (name == "digits") return TaskKind::Digits;
  throw ConfigurationError("unknown task '" + name + "' (expected xor or digits)");
}

std::string scheme_name(InitScheme scheme) { return scheme == InitScheme::Xor ? "xor" : "digits"; }

InitScheme scheme_from_name(const std::string& name) {
  if (name == "xor") return InitScheme::Xor;
  if (name == "digits") return InitScheme::Digits;
  throw ConfigurationError("unknown init scheme '" + name + "'");
}

json integrator_to_json(const IntegratorConfig& c) {
  return {{"horizon", c.horizon},       {"rel_tol", c.rel_tol},
          {"abs_tol", c.abs_tol},       {"initial_step", c.initial_step},
          {"max_step", c.max_step},     {"min_step", c.min_step},
          {"equilibrium_grad_tol", c.equilibrium_grad_tol},
          {"stop_at_equilibrium", c.stop_at_equilibrium},
          {"log_clamp", c.log_clamp}};
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

IntegratorConfig integrator_from_json(const json& j) {
  IntegratorConfig c;
  read_if(j, "horizon", c.horizon);
  read_if(j, "rel_tol", c.rel_tol);
  read_if(j, "abs_tol", c.abs_tol);
  read_if(j, "initial_step", c.initial_step);
  read_if(j, "max_step", c.max_step);
  read_if(j, "min_step", c.min_step);
  read_if(j, "equilibrium_grad_tol", c.equilibrium_grad_tol);
  read_if(j, "stop_at_equilibrium", c.stop_at_equilibrium);
  read_if(j, "log_clamp", c.log_clamp);
  return c;
}

std::string format_value(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (topology == TopologyKind::Layered) {
    if (layers.size() < 2) throw ConfigurationError("layered topology needs a layer list");
    const int want_in = task == TaskKind::Xor ? kXorInputs : kDigitPixels;
    const int want_out = task == TaskKind::Xor ? kXorOutputs : kDigitClasses;
    if (layers.front() != want_in || layers.back() != want_out) {
      throw ConfigurationError("layer list must start with " + std::to_string(want_in) + " inputs and end with " +
                               std::to_string(want_out) + " outputs for task " + task_name(task));
    }
  }
  if (task == TaskKind::Digits) {
    if (data_path.empty()) throw ConfigurationError("digits task needs a dataset path");
    if (batch_per_digit < 1) throw ConfigurationError("batch_per_digit must be at least 1");
  }
  if (replicates < 1) throw ConfigurationError("replicates must be at least 1");
  if (speed_window < 2) throw ConfigurationError("speed_window must be at least 2");
  build_topology(*this);
  auto train_copy = train;
  train_copy.m_data = task == TaskKind::Xor ? 4 : batch_per_digit * kDigitClasses;
  train_copy.validate();
}

json to_json(const ExperimentConfig& c) {
  json topology = c.topology == TopologyKind::Layered
                      ? json{{"kind", "layered"}, {"layers", c.layers}}
                      : json{{"kind", "all_to_all"}, {"units", c.units}};
  json train{{"beta", c.train.beta},
             {"eta", c.train.eta},
             {"m_init", c.train.m_init},
             {"iterations", c.train.n_iterations},
             {"seed", c.train.rng_seed},
             {"eval_every", c.train.eval_every},
             {"eval_at", c.train.eval_at},
             {"workers", c.train.workers},
             {"integrator", integrator_to_json(c.train.integrator)}};
  json out{{"task", task_name(c.task)},
           {"topology", topology},
           {"train", train},
           {"batch_per_digit", c.batch_per_digit},
           {"data", c.data_path.string()},
           {"output_dir", c.output_dir.string()},
           {"replicates", c.replicates},
           {"confusion_at", c.confusion_at},
           {"speed_window", c.speed_window},
           {"write_checkpoints", c.write_checkpoints}};
  if (c.init_scheme) out["init_scheme"] = scheme_name(*c.init_scheme);
  return out;
}

ExperimentConfig experiment_config_from_json(const json& doc) {
  const json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
  if (!j.is_object()) throw ConfigurationError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("task")) c.task = task_from_name(j.at("task").get<std::string>());
    if (c.task == TaskKind::Digits) {
      c.units = kDigitPixels + 11 + kDigitClasses;
      c.train.m_init = 1;
    }
    if (j.contains("topology")) {
      const auto& t = j.at("topology");
      const auto kind = t.value("kind", std::string("all_to_all"));
      if (kind == "layered") {
        c.topology = TopologyKind::Layered;
        c.layers = t.at("layers").get<std::vector<int>>();
      } else if (kind == "all_to_all") {
        c.topology = TopologyKind::AllToAll;
        read_if(t, "units", c.units);
      } else {
        throw ConfigurationError("unknown topology kind '" + kind + "'");
      }
    }
    if (j.contains("init_scheme")) c.init_scheme = scheme_from_name(j.at("init_scheme").get<std::string>());
    if (j.contains("train")) {
      const auto& t = j.at("train");
      read_if(t, "beta", c.train.beta);
      read_if(t, "eta", c.train.eta);
      read_if(t, "m_init", c.train.m_init);
      read_if(t, "iterations", c.train.n_iterations);
      read_if(t, "seed", c.train.rng_seed);
      read_if(t, "eval_every", c.train.eval_every);
      read_if(t, "eval_at", c.train.eval_at);
      read_if(t, "workers", c.train.workers);
      if (t.contains("integrator")) c.train.integrator = integrator_from_json(t.at("integrator"));
    }
    read_if(j, "batch_per_digit", c.batch_per_digit);
    if (j.contains("data")) c.data_path = j.at("data").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read_if(j, "replicates", c.replicates);
    read_if(j, "confusion_at", c.confusion_at);
    read_if(j, "speed_window", c.speed_window);
    read_if(j, "write_checkpoints", c.write_checkpoints);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file " + path.string());
  try {
    return experiment_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

NetworkTopology build_topology(const ExperimentConfig& c) {
  if (c.topology == TopologyKind::Layered) return NetworkTopology::make_layered(c.layers);
  const int n_in = c.task == TaskKind::Xor ? kXorInputs : kDigitPixels;
  const int n_out = c.task == TaskKind::Xor ? kXorOutputs : kDigitClasses;
  if (c.units < n_in + n_out) {
    throw ConfigurationError("an all-to-all " + task_name(c.task) + " network needs at least " +
                             std::to_string(n_in + n_out) + " units");
  }
  return NetworkTopology::make_all_to_all(n_in, c.units - n_in - n_out, n_out);
}

InitScheme effective_init_scheme(const ExperimentConfig& c) {
  if (c.init_scheme) return *c.init_scheme;
  return c.task == TaskKind::Xor ? InitScheme::Xor : InitScheme::Digits;
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return derive_seed(master, 1000 + static_cast<std::uint64_t>(replicate));
}

bool RunSummary::all_completed() const {
  for (const auto& r : replicates) {
    if (!r.completed) return false;
  }
  return true;
}

namespace {

ReplicateSummary run_replicate(const ExperimentConfig& config, const NetworkTopology& topology,
                               const DigitsDataset* dataset, int replicate, const fs::path& dir) {
  ReplicateSummary summary;
  summary.replicate = replicate;
  summary.seed = replicate_seed(config.train.rng_seed, replicate);
  summary.directory = dir;

  TrainConfig train_config = config.train;
  train_config.rng_seed = summary.seed;
  train_config.m_data = config.task == TaskKind::Xor ? 4 : config.batch_per_digit * kDigitClasses;
  if (config.task == TaskKind::Digits) train_config.eval_at.insert(config.confusion_at.begin(), config.confusion_at.end());

  auto param_rng = make_rng(summary.seed, Stream::Parameters);
  const auto initial = init_parameters(topology, effective_init_scheme(config), param_rng);

  fs::create_directories(dir);
  if (config.write_checkpoints) fs::create_directories(dir / "checkpoints");
  std::ofstream log_out(dir / "train_log.jsonl");
  std::ofstream timing_out(dir / "timing.tsv");
  timing_out << "iteration\twall_seconds\n";
  std::ofstream confusion_out;
  if (config.task == TaskKind::Digits) confusion_out.open(dir / "confusion.csv");

  std::unique_ptr<TaskSource> source;
  const auto xor_set = xor_samples();
  if (config.task == TaskKind::Xor) {
    source = std::make_unique<XorTask>();
  } else {
    source = std::make_unique<DigitsTask>(*dataset, config.batch_per_digit);
  }

  TrainCallbacks callbacks;
  callbacks.evaluate = [&](const ModelParameters& params, int iteration, Rng& rng) -> json {
    if (config.task == TaskKind::Xor) {
      const double d = evaluate_mean_distance(params, topology, xor_set, train_config.integrator, rng);
      return {{"mean_distance", d}, {"test_error", d}};
    }
    const auto report = evaluate_accuracy(params, topology, dataset->test, train_config.integrator, rng);
    if (config.confusion_at.contains(iteration) || iteration == train_config.n_iterations) {
      write_confusion_block(confusion_out, iteration, report.confusion);
      confusion_out.flush();
    }
    summary.best_accuracy = std::max(summary.best_accuracy.value_or(0.0), report.accuracy);
    return {{"accuracy", report.accuracy},
            {"test_error", 1.0 - report.accuracy},
            {"failed", report.failed},
            {"non_converged", report.non_converged}};
  };
  callbacks.on_record = [&](const LogRecord& record, const ModelParameters& params) {
    log_out << to_json(record).dump() << '\n';
    log_out.flush();
    timing_out << record.iteration << '\t' << std::setprecision(6) << record.wall_seconds << '\n';
    if (config.write_checkpoints && !record.evaluation.is_null()) {
      std::ostringstream name;
      name << "iter_" << std::setw(6) << std::setfill('0') << record.iteration << ".json";
      save_checkpoint(dir / "checkpoints" / name.str(), topology, params,
                      {{"iteration", record.iteration}, {"seed", summary.seed}});
    }
  };

  TrainingLog log;
  try {
    log = train(*source, topology, initial, train_config, callbacks);
    summary.completed = true;
  } catch (const TrainingHalted& e) {
    log = e.log();
    summary.error = e.what();
  }

  if (config.write_checkpoints) {
    save_checkpoint(dir / "checkpoints" / "final.json", topology, log.final_params,
                    {{"iteration", log.records.back().iteration}, {"seed", summary.seed}});
  }
  {
    std::ofstream curve(dir / "curve.tsv");
    write_training_curve(curve, log);
  }
  summary.distance_trace = distance_trace(log);
  if (!summary.distance_trace.empty()) summary.final_mean_distance = summary.distance_trace.back().second;
  const int window = std::min<int>(config.speed_window, static_cast<int>(summary.distance_trace.size()));
  if (window >= 2) summary.speed = learning_speed(summary.distance_trace, window, train_config.m_init);

  json out{{"replicate", replicate},
           {"seed", summary.seed},
           {"completed", summary.completed},
           {"final_mean_distance", summary.final_mean_distance}};
  if (!summary.error.empty()) out["error"] = summary.error;
  if (summary.best_accuracy) out["best_accuracy"] = *summary.best_accuracy;
  if (summary.speed) {
    out["learning_speed"] = {{"slope", summary.speed->slope},
                             {"normalized_slope", summary.speed->normalized_slope},
                             {"window_begin", summary.speed->window_begin},
                             {"window_end", summary.speed->window_end}};
  }
  std::ofstream(dir / "summary.json") << out.dump(2) << '\n';
  return summary;
}

std::string replicate_dir_name(int r) {
  std::ostringstream s;
  s << "rep_" << std::setw(3) << std::setfill('0') << r;
  return s.str();
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto topology = build_topology(config);
  std::optional<DigitsDataset> dataset;
  if (config.task == TaskKind::Digits) {
    if (!fs::exists(config.data_path)) {
      throw ConfigurationError("dataset file " + config.data_path.string() + " does not exist");
    }
    dataset = load_digits(config.data_path);
  }

  fs::create_directories(config.output_dir);
  json manifest{{"tool", "xyep"},
                {"version", XYEP_VERSION},
                {"config", to_json(config)},
                {"seed", config.train.rng_seed},
                {"parameter_count", parameter_count(topology)}};
  json seeds = json::array();
  for (int r = 0; r < config.replicates; ++r) seeds.push_back(replicate_seed(config.train.rng_seed, r));
  manifest["replicate_seeds"] = seeds;
  if (dataset) {
    manifest["dataset"] = {{"records", dataset->total_records},
                           {"train", dataset->train.size()},
                           {"test", dataset->test.size()},
                           {"warnings", dataset->warnings}};
  }
  std::ofstream(config.output_dir / "manifest.json") << manifest.dump(2) << '\n';

  RunSummary summary;
  for (int r = 0; r < config.replicates; ++r) {
    summary.replicates.push_back(
        run_replicate(config, topology, dataset ? &*dataset : nullptr, r, config.output_dir / replicate_dir_name(r)));
  }
  return summary;
}

bool is_sweep_axis(const std::string& axis) {
  return axis == "n_units" || axis == "m_init" || axis == "beta" || axis == "eta";
}

ExperimentConfig with_axis_value(ExperimentConfig config, const std::string& axis, double value) {
  auto as_count = [&] {
    if (value < 1.0 || std::floor(value) != value) {
      throw ConfigurationError("axis " + axis + " needs positive integer values");
    }
    return static_cast<int>(value);
  };
  if (axis == "n_units") {
    if (config.topology != TopologyKind::AllToAll) throw ConfigurationError("n_units sweeps need all-to-all topology");
    config.units = as_count();
  } else if (axis == "m_init") {
    config.train.m_init = as_count();
  } else if (axis == "beta") {
    config.train.beta = value;
  } else if (axis == "eta") {
    config.train.eta = value;
  } else {
    throw ConfigurationError("unknown sweep axis '" + axis + "' (expected n_units, m_init, beta or eta)");
  }
  return config;
}

SweepReport sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<double>& values) {
  if (!is_sweep_axis(axis)) {
    throw ConfigurationError("unknown sweep axis '" + axis + "' (expected n_units, m_init, beta or eta)");
  }
  if (values.empty()) throw ConfigurationError("sweep needs at least one value");
  // Validate every point before running any of them.
  std::vector<ExperimentConfig> configs;
  for (double v : values) {
    auto c = with_axis_value(base, axis, v);
    c.output_dir = base.output_dir / (axis + "_" + format_value(v));
    c.validate();
    configs.push_back(std::move(c));
  }

  SweepReport report;
  report.axis = axis;
  for (std::size_t p = 0; p < configs.size(); ++p) {
    SweepPoint point;
    point.value = values[p];
    RunSummary runs;
    try {
      runs = run_experiment(configs[p]);
    } catch (const std::exception&) {
      point.failed_runs = configs[p].replicates;
      report.points.push_back(std::move(point));
      continue;
    }
    std::map<int, std::pair<double, int>> accum;
    double final_sum = 0.0;
    for (const auto& r : runs.replicates) {
      if (!r.completed) {
        ++point.failed_runs;
        continue;
      }
      ++point.runs;
      final_sum += r.final_mean_distance;
      if (r.speed) point.replicate_speeds.push_back(r.speed->slope);
      for (const auto& [it, d] : r.distance_trace) {
        accum[it].first += d;
        ++accum[it].second;
      }
    }
    if (point.runs > 0) point.mean_final_distance = final_sum / point.runs;
    for (const auto& [it, sum_count] : accum) {
      point.mean_trace.emplace_back(it, sum_count.first / sum_count.second);
    }
    const int window = std::min<int>(base.speed_window, static_cast<int>(point.mean_trace.size()));
    if (window >= 2) point.speed = learning_speed(point.mean_trace, window, configs[p].train.m_init);
    report.points.push_back(std::move(point));
  }

  fs::create_directories(base.output_dir);
  std::ofstream tsv(base.output_dir / "sweep_summary.tsv");
  tsv << axis << "\truns\tfailed_runs\tmean_final_distance\tspeed\tnormalized_speed\n";
  json points = json::array();
  for (const auto& p : report.points) {
    tsv << p.value << '\t' << p.runs << '\t' << p.failed_runs << '\t' << p.mean_final_distance << '\t'
        << (p.speed ? p.speed->slope : NAN) << '\t' << (p.speed ? p.speed->normalized_slope : NAN) << '\n';
    json jp{{"value", p.value}, {"runs", p.runs}, {"failed_runs", p.failed_runs},
            {"mean_final_distance", p.mean_final_distance}};
    if (p.speed) {
      jp["speed"] = p.speed->slope;
      jp["normalized_speed"] = p.speed->normalized_slope;
    }
    jp["replicate_speeds"] = p.replicate_speeds;
    points.push_back(jp);
  }
  std::ofstream(base.output_dir / "sweep_summary.json")
      << json{{"axis", axis}, {"config", to_json(base)}, {"points", points}}.dump(2) << '\n';
  return report;
}

}  // namespace xyep
