#pragma once

#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "xyep/dynamics.hpp"
#include "xyep/tasks.hpp"
#include "xyep/trainer.hpp"

namespace xyep {

// Arithmetic mean of distance(output, target) over the list.
double mean_distance(const std::vector<std::pair<PhaseVector, PhaseVector>>& results);

/// Rows are true digits, columns predicted digits.
class ConfusionMatrix {
 public:
  ConfusionMatrix();

  void add(int true_label, int predicted_label);
  long count(int true_label, int predicted_label) const { return counts_(true_label, predicted_label); }
  const Eigen::Matrix<long, kDigitClasses, kDigitClasses>& counts() const noexcept { return counts_; }
  long total() const;
  long trace() const;
  double accuracy() const;
  // Each row divided by its sum; empty rows stay zero and are listed in empty_rows().
  Eigen::MatrixXd normalized() const;
  std::vector<int> empty_rows() const;

 private:
  Eigen::Matrix<long, kDigitClasses, kDigitClasses> counts_;
};

struct AccuracyReport {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t failed = 0;  // counted as incorrect, not entered in the matrix
  std::size_t non_converged = 0;
};

// Inference on every test record: clamp inputs, random hidden/output start,
// free relaxation, decode.
AccuracyReport evaluate_accuracy(const ModelParameters& params, const NetworkTopology& topology,
                                 const std::vector<DigitRecord>& test_set, const IntegratorConfig& integrator,
                                 Rng& rng);

// Mean distance of free equilibria from one random start per sample.
double evaluate_mean_distance(const ModelParameters& params, const NetworkTopology& topology,
                              const std::vector<TrainingSample>& samples, const IntegratorConfig& integrator,
                              Rng& rng);

struct LearningSpeed {
  // Negative OLS slope of log10 <D> against iteration over the window.
  double slope = 0.0;
  double normalized_slope = 0.0;  // slope / m_init
  int window_begin = 0;
  int window_end = 0;  // inclusive
  std::size_t clamped_points = 0;  // non-positive distances replaced by the log clamp
};

inline constexpr int kDefaultSpeedWindow = 300;

// trace[k] = (iteration, mean distance).
LearningSpeed learning_speed(const std::vector<std::pair<int, double>>& trace, int window, int m_init);
LearningSpeed learning_speed(const TrainingLog& log, int window, int m_init);

// (iteration, batch mean distance) for every successful update.
std::vector<std::pair<int, double>> distance_trace(const TrainingLog& log);

// "# iteration k" header followed by 10 comma-separated rows of counts.
void write_confusion_block(std::ostream& out, int iteration, const ConfusionMatrix& matrix);

// Columns: iteration, mean_distance, test_error ("nan" where not measured).
void write_training_curve(std::ostream& out, const TrainingLog& log);

}  // namespace xyep
