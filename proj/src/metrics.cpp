#include "xyep/metrics.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <string>

#include "xyep/energy.hpp"

namespace xyep {

double mean_distance(const std::vector<std::pair<PhaseVector, PhaseVector>>& results) {
  if (results.empty()) throw ContractViolation("mean distance of an empty list");
  double sum = 0.0;
  for (const auto& [outputs, targets] : results) sum += distance(outputs, targets);
  return sum / static_cast<double>(results.size());
}

ConfusionMatrix::ConfusionMatrix() { counts_.setZero(); }

void ConfusionMatrix::add(int true_label, int predicted_label) {
  if (true_label < 0 || true_label >= kDigitClasses || predicted_label < 0 || predicted_label >= kDigitClasses) {
    throw ContractViolation("confusion matrix label out of range");
  }
  ++counts_(true_label, predicted_label);
}

long ConfusionMatrix::total() const { return counts_.sum(); }
long ConfusionMatrix::trace() const { return counts_.trace(); }

double ConfusionMatrix::accuracy() const {
  const long n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

Eigen::MatrixXd ConfusionMatrix::normalized() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kDigitClasses, kDigitClasses);
  for (int r = 0; r < kDigitClasses; ++r) {
    const long row_sum = counts_.row(r).sum();
    if (row_sum == 0) continue;
    out.row(r) = counts_.row(r).cast<double>() / static_cast<double>(row_sum);
  }
  return out;
}

std::vector<int> ConfusionMatrix::empty_rows() const {
  std::vector<int> rows;
  for (int r = 0; r < kDigitClasses; ++r) {
    if (counts_.row(r).sum() == 0) rows.push_back(r);
  }
  return rows;
}

AccuracyReport evaluate_accuracy(const ModelParameters& params, const NetworkTopology& topology,
                                 const std::vector<DigitRecord>& test_set, const IntegratorConfig& integrator,
                                 Rng& rng) {
  if (topology.n_outputs() != kDigitClasses) {
    throw ContractViolation("digit evaluation needs exactly 10 output units");
  }
  if (test_set.empty()) throw ContractViolation("empty test set");
  AccuracyReport report;
  long correct = 0;
  for (const auto& record : test_set) {
    const auto inputs = encode_input(record.pixels);
    const auto init = random_initial_state(topology, inputs, rng);
    try {
      const auto eq = relax(init, params, topology, 0.0, Eigen::VectorXd(), integrator, inputs);
      if (!eq.converged) ++report.non_converged;
      const int predicted = decode_output(eq.phases.tail(kDigitClasses)).label;
      report.confusion.add(record.label, predicted);
      correct += predicted == record.label ? 1 : 0;
    } catch (const IntegrationFailure&) {
      ++report.failed;
    } catch (const NumericalError&) {
      ++report.failed;
    }
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  return report;
}

double evaluate_mean_distance(const ModelParameters& params, const NetworkTopology& topology,
                              const std::vector<TrainingSample>& samples, const IntegratorConfig& integrator,
                              Rng& rng) {
  std::vector<std::pair<PhaseVector, PhaseVector>> results;
  for (const auto& sample : samples) {
    const auto init = random_initial_state(topology, sample.input_phases, rng);
    try {
      const auto eq = relax(init, params, topology, 0.0, Eigen::VectorXd(), integrator, sample.input_phases);
      results.emplace_back(eq.phases.tail(topology.n_outputs()), sample.target_phases);
    } catch (const IntegrationFailure& e) {
      results.emplace_back(e.partial().phases.tail(topology.n_outputs()), sample.target_phases);
    } catch (const NumericalError&) {
      // Worst case for this sample.
      results.emplace_back(sample.target_phases.array() + kPi, sample.target_phases);
    }
  }
  return mean_distance(results);
}

LearningSpeed learning_speed(const std::vector<std::pair<int, double>>& trace, int window, int m_init) {
  if (window < 2) throw ConfigurationError("learning-speed window needs at least two points");
  if (m_init < 1) throw ConfigurationError("m_init must be at least 1");
  if (trace.size() < static_cast<std::size_t>(window)) {
    throw ContractViolation("distance trace has " + std::to_string(trace.size()) +
                            " points, window needs " + std::to_string(window));
  }
  LearningSpeed speed;
  speed.window_begin = trace.front().first;
  speed.window_end = trace[static_cast<std::size_t>(window) - 1].first;

  double sx = 0.0, sy = 0.0;
  std::vector<double> ys(static_cast<std::size_t>(window));
  for (int k = 0; k < window; ++k) {
    double d = trace[static_cast<std::size_t>(k)].second;
    if (!(d > 0.0)) {
      d = kDefaultLogClamp;
      ++speed.clamped_points;
    }
    ys[static_cast<std::size_t>(k)] = std::log10(d);
    sx += trace[static_cast<std::size_t>(k)].first;
    sy += ys[static_cast<std::size_t>(k)];
  }
  const double mx = sx / window;
  const double my = sy / window;
  double sxy = 0.0, sxx = 0.0;
  for (int k = 0; k < window; ++k) {
    const double dx = trace[static_cast<std::size_t>(k)].first - mx;
    sxy += dx * (ys[static_cast<std::size_t>(k)] - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ContractViolation("learning-speed window has no iteration spread");
  speed.slope = -sxy / sxx;
  speed.normalized_slope = speed.slope / m_init;
  return speed;
}

std::vector<std::pair<int, double>> distance_trace(const TrainingLog& log) {
  std::vector<std::pair<int, double>> trace;
  for (const auto& r : log.records) {
    if (r.diagnostics && !r.failed) trace.emplace_back(r.iteration, r.diagnostics->mean_distance);
  }
  return trace;
}

LearningSpeed learning_speed(const TrainingLog& log, int window, int m_init) {
  return learning_speed(distance_trace(log), window, m_init);
}

void write_confusion_block(std::ostream& out, int iteration, const ConfusionMatrix& matrix) {
  out << "# iteration " << iteration << '\n';
  for (int r = 0; r < kDigitClasses; ++r) {
    for (int c = 0; c < kDigitClasses; ++c) out << (c ? "," : "") << matrix.count(r, c);
    out << '\n';
  }
}

namespace {

std::string shortest(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

}  // namespace

void write_training_curve(std::ostream& out, const TrainingLog& log) {
  out << "iteration\tmean_distance\ttest_error\n";
  for (const auto& r : log.records) {
    out << r.iteration << '\t';
    if (r.diagnostics && !r.failed) {
      out << shortest(r.diagnostics->mean_distance);
    } else {
      out << "nan";
    }
    out << '\t';
    if (r.evaluation.is_object() && r.evaluation.contains("test_error")) {
      out << shortest(r.evaluation.at("test_error").get<double>());
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

}  // namespace xyep
