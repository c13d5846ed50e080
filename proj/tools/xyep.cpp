// xyep: train and inspect coupled phase-oscillator networks.
//
//   xyep run --task xor --units 5 --iterations 1000 --seed 7
//   xyep run --task digits --layers 64,20,10 --data data/optdigits.csv
//   xyep sweep --task xor --units 15 --axis m_init --values 1,2,4,8 --replicates 10
//   xyep eval --checkpoint runs/rep_000/checkpoints/final.json --task digits --data data/optdigits.csv
//   xyep inspect-equilibria --checkpoint final.json --task xor --sample 1 --trials 100
//
// Exit status: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xyep/checkpoint.hpp"
#include "xyep/dynamics.hpp"
#include "xyep/experiment.hpp"
#include "xyep/metrics.hpp"
#include "xyep/tasks.hpp"

namespace {

using nlohmann::json;
using namespace xyep;

constexpr const char* kOutputDirEnv = "XYEP_OUTPUT_DIR";

struct ExperimentFlags {
  std::optional<std::string> config_file;
  std::optional<std::string> task;
  std::optional<int> units;
  std::vector<int> layers;
  std::optional<std::string> init_scheme;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<double> eta;
  std::optional<int> m_init;
  std::optional<int> batch_per_digit;
  std::optional<int> eval_every;
  std::optional<int> workers;
  std::optional<double> horizon;
  bool no_early_exit = false;
  bool no_checkpoints = false;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<int> replicates;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "JSON experiment config or manifest");
    app.add_option("--task", task, "xor or digits")->check(CLI::IsMember({"xor", "digits"}));
    app.add_option("--units", units, "all-to-all network size (total units)");
    app.add_option("--layers", layers, "layered network, e.g. 64,20,10")->delimiter(',');
    app.add_option("--init-scheme", init_scheme, "xor or digits")->check(CLI::IsMember({"xor", "digits"}));
    app.add_option("--iterations", iterations, "training iterations");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--beta", beta, "nudge strength");
    app.add_option("--eta", eta, "learning rate");
    app.add_option("--m-init", m_init, "random initial states per sample");
    app.add_option("--batch-per-digit", batch_per_digit, "digits batch images per class");
    app.add_option("--eval-every", eval_every, "evaluation period in iterations");
    app.add_option("--workers", workers, "relaxation threads");
    app.add_option("--horizon", horizon, "relaxation time horizon T");
    app.add_flag("--no-early-exit", no_early_exit, "always integrate to the horizon");
    app.add_flag("--no-checkpoints", no_checkpoints, "skip checkpoint files");
    app.add_option("--data", data, "digits dataset file (optdigits CSV)");
    app.add_option("--out", out, "output directory");
    app.add_option("--replicates", replicates, "independent runs");
  }

  ExperimentConfig resolve() const {
    json doc = json::object();
    if (config_file) {
      std::ifstream in(*config_file);
      if (!in) throw ConfigurationError("cannot open config file " + *config_file);
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigurationError("config file " + *config_file + " is not valid JSON: " + e.what());
      }
      if (doc.contains("config") && doc.at("config").is_object()) doc = doc.at("config");
    }
    if (task) doc["task"] = *task;
    if (!layers.empty()) doc["topology"] = {{"kind", "layered"}, {"layers", layers}};
    if (units) doc["topology"] = {{"kind", "all_to_all"}, {"units", *units}};
    if (init_scheme) doc["init_scheme"] = *init_scheme;
    auto& train = doc["train"];
    if (train.is_null()) train = json::object();
    if (iterations) train["iterations"] = *iterations;
    if (seed) train["seed"] = *seed;
    if (beta) train["beta"] = *beta;
    if (eta) train["eta"] = *eta;
    if (m_init) train["m_init"] = *m_init;
    if (eval_every) train["eval_every"] = *eval_every;
    if (workers) train["workers"] = *workers;
    if (horizon || no_early_exit) {
      auto& integ = train["integrator"];
      if (integ.is_null()) integ = json::object();
      if (horizon) integ["horizon"] = *horizon;
      if (no_early_exit) integ["stop_at_equilibrium"] = false;
    }
    if (batch_per_digit) doc["batch_per_digit"] = *batch_per_digit;
    if (data) doc["data"] = *data;
    if (replicates) doc["replicates"] = *replicates;
    if (no_checkpoints) doc["write_checkpoints"] = false;
    if (out) {
      doc["output_dir"] = *out;
    } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
      doc["output_dir"] = env;
    } else if (!doc.contains("output_dir")) {
      doc["output_dir"] = "runs/" + doc.value("task", std::string("xor"));
    }
    return experiment_config_from_json(doc);
  }
};

int cmd_run(const ExperimentFlags& flags) {
  const auto config = flags.resolve();
  const auto summary = run_experiment(config);
  for (const auto& r : summary.replicates) {
    std::cout << r.directory.string() << ": " << (r.completed ? "completed" : "FAILED " + r.error)
              << ", final mean distance " << r.final_mean_distance;
    if (r.best_accuracy) std::cout << ", best accuracy " << *r.best_accuracy;
    if (r.speed) std::cout << ", learning speed " << r.speed->slope;
    std::cout << '\n';
  }
  return summary.all_completed() ? 0 : 1;
}

int cmd_sweep(const ExperimentFlags& flags, const std::string& axis, const std::vector<double>& values) {
  const auto config = flags.resolve();
  const auto report = sweep(config, axis, values);
  std::cout << axis << "\truns\tfailed\tfinal_D\tspeed\tnormalized_speed\n";
  int failed = 0;
  for (const auto& p : report.points) {
    std::cout << p.value << '\t' << p.runs << '\t' << p.failed_runs << '\t' << p.mean_final_distance << '\t'
              << (p.speed ? p.speed->slope : NAN) << '\t' << (p.speed ? p.speed->normalized_slope : NAN) << '\n';
    failed += p.failed_runs;
  }
  return failed == 0 ? 0 : 1;
}

IntegratorConfig integrator_with(std::optional<double> horizon) {
  IntegratorConfig c;
  if (horizon) c.horizon = *horizon;
  return c;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& task, const std::optional<std::string>& data,
             std::uint64_t seed, std::optional<double> horizon, const std::optional<std::string>& out) {
  const auto ckpt = load_checkpoint(checkpoint_path);
  const auto integrator = integrator_with(horizon);
  auto rng = make_rng(seed, Stream::Evaluation);
  json metrics;
  std::optional<ConfusionMatrix> confusion;
  if (task == "xor") {
    if (ckpt.topology.n_inputs() != 2 || ckpt.topology.n_outputs() != 1) {
      throw ConfigurationError("checkpoint is not an XOR network");
    }
    metrics = {{"task", "xor"},
               {"mean_distance", evaluate_mean_distance(ckpt.params, ckpt.topology, xor_samples(), integrator, rng)}};
  } else {
    if (!data) throw ConfigurationError("digits evaluation needs --data");
    const auto dataset = load_digits(*data);
    const auto report = evaluate_accuracy(ckpt.params, ckpt.topology, dataset.test, integrator, rng);
    metrics = {{"task", "digits"},
               {"accuracy", report.accuracy},
               {"test_samples", dataset.test.size()},
               {"failed", report.failed},
               {"non_converged", report.non_converged}};
    confusion = report.confusion;
  }
  std::cout << metrics.dump(2) << '\n';
  if (out) {
    std::filesystem::create_directories(*out);
    std::ofstream(std::filesystem::path(*out) / "metrics.json") << metrics.dump(2) << '\n';
    if (confusion) {
      std::ofstream cm(std::filesystem::path(*out) / "confusion.csv");
      write_confusion_block(cm, ckpt.metadata.value("iteration", 0), *confusion);
    }
  }
  return 0;
}

struct InspectFlags {
  std::string checkpoint;
  std::optional<std::string> task;
  std::optional<int> sample;
  std::vector<double> input;
  std::optional<std::string> data;
  std::size_t trials = 100;
  double cluster_tol = kDefaultClusterTol;
  std::uint64_t seed = 0;
  std::optional<double> horizon;
  std::optional<std::string> trajectory;
};

int cmd_inspect(const InspectFlags& f) {
  const auto ckpt = load_checkpoint(f.checkpoint);
  PhaseVector inputs;
  if (!f.input.empty()) {
    inputs = Eigen::Map<const Eigen::VectorXd>(f.input.data(), static_cast<Eigen::Index>(f.input.size()));
  } else if (f.task == "xor") {
    const auto samples = xor_samples();
    const int k = f.sample.value_or(0);
    if (k < 0 || k >= static_cast<int>(samples.size())) throw ConfigurationError("XOR sample index must be 0..3");
    inputs = samples[static_cast<std::size_t>(k)].input_phases;
  } else if (f.task == "digits") {
    if (!f.data) throw ConfigurationError("digits inspection needs --data");
    const auto dataset = load_digits(*f.data);
    const int k = f.sample.value_or(0);
    if (k < 0 || k >= static_cast<int>(dataset.test.size())) throw ConfigurationError("test sample index out of range");
    inputs = encode_input(dataset.test[static_cast<std::size_t>(k)].pixels);
  } else {
    throw ConfigurationError("give --input phases or --task with --sample");
  }
  if (inputs.size() != ckpt.topology.n_inputs()) {
    throw ConfigurationError("input has " + std::to_string(inputs.size()) + " phases, network expects " +
                             std::to_string(ckpt.topology.n_inputs()));
  }
  const auto integrator = integrator_with(f.horizon);

  if (f.trajectory) {
    std::ofstream out(*f.trajectory);
    if (!out) throw ConfigurationError("cannot write trajectory file " + *f.trajectory);
    Rng rng(f.seed);
    const auto init = random_initial_state(ckpt.topology, inputs, rng);
    relax(init, ckpt.params, ckpt.topology, 0.0, Eigen::VectorXd(), integrator, inputs,
          make_trajectory_writer(out, ckpt.topology.n_units()));
  }

  const auto census =
      enumerate_equilibria(ckpt.params, ckpt.topology, inputs, f.trials, f.cluster_tol, f.seed, integrator);
  json clusters = json::array();
  for (const auto& c : census.clusters) {
    clusters.push_back({{"basin_count", c.basin_count},
                        {"phases", std::vector<double>(c.representative.begin(), c.representative.end())},
                        {"energy", internal_energy(c.representative, ckpt.params, ckpt.topology)}});
  }
  std::cout << json{{"trials", census.trials},
                    {"converged", census.converged},
                    {"not_converged", census.not_converged},
                    {"failed", census.failed},
                    {"clusters", clusters}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium-propagation training of coupled phase-oscillator networks"};
  app.require_subcommand(1);

  ExperimentFlags run_flags;
  auto* run = app.add_subcommand("run", "train and evaluate");
  run_flags.attach(*run);

  ExperimentFlags sweep_flags;
  std::string axis;
  std::vector<double> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "replicated runs over one hyperparameter");
  sweep_flags.attach(*sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "n_units, m_init, beta or eta")->required();
  sweep_cmd->add_option("--values", values, "comma-separated axis values")->delimiter(',')->required();

  std::string eval_checkpoint;
  std::string eval_task = "digits";
  std::optional<std::string> eval_data;
  std::optional<std::string> eval_out;
  std::optional<double> eval_horizon;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint)->required();
  eval->add_option("--task", eval_task)->check(CLI::IsMember({"xor", "digits"}));
  eval->add_option("--data", eval_data);
  eval->add_option("--seed", eval_seed);
  eval->add_option("--horizon", eval_horizon);
  eval->add_option("--out", eval_out, "directory for metrics.json and confusion.csv");

  InspectFlags inspect_flags;
  auto* inspect = app.add_subcommand("inspect-equilibria", "census of stable fixed points for one input");
  inspect->add_option("--checkpoint", inspect_flags.checkpoint)->required();
  inspect->add_option("--task", inspect_flags.task)->check(CLI::IsMember({"xor", "digits"}));
  inspect->add_option("--sample", inspect_flags.sample, "XOR pair index or digits test index");
  inspect->add_option("--input", inspect_flags.input, "explicit input phases")->delimiter(',');
  inspect->add_option("--data", inspect_flags.data);
  inspect->add_option("--trials", inspect_flags.trials);
  inspect->add_option("--cluster-tol", inspect_flags.cluster_tol);
  inspect->add_option("--seed", inspect_flags.seed);
  inspect->add_option("--horizon", inspect_flags.horizon);
  inspect->add_option("--dump-trajectory", inspect_flags.trajectory, "write the first trial's trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, axis, values);
    if (*eval) return cmd_eval(eval_checkpoint, eval_task, eval_data, eval_seed, eval_horizon, eval_out);
    if (*inspect) return cmd_inspect(inspect_flags);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
