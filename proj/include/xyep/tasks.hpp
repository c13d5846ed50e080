#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "xyep/core.hpp"
#include "xyep/energy.hpp"
#include "xyep/trainer.hpp"

namespace xyep {

inline constexpr double kTruePhase = kPi / 2.0;
inline constexpr double kFalsePhase = -kPi / 2.0;

// The four XOR pairs, (F,F), (F,T), (T,F), (T,T), in that order.
std::vector<TrainingSample> xor_samples();

class XorTask final : public TaskSource {
 public:
  std::vector<TrainingSample> next_batch(Rng& rng) override;
};

inline constexpr int kDigitPixels = 64;
inline constexpr int kDigitClasses = 10;
inline constexpr int kMaxPixel = 16;

struct DigitRecord {
  std::array<int, kDigitPixels> pixels{};
  int label = 0;
};

struct DigitsDataset {
  std::vector<DigitRecord> train;
  std::vector<DigitRecord> test;
  std::size_t total_records = 0;
  std::array<std::size_t, kDigitClasses> train_per_digit{};
  std::array<std::size_t, kDigitClasses> test_per_digit{};
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kTrainPerDigit = 100;
inline constexpr std::size_t kTestPerDigit = 70;

/// Reads comma-separated rows of 64 pixel values in [0, 16] followed by the
/// label (UCI optdigits layout). Within each class, the first
/// `train_per_digit` rows in file order go to the training split and the
/// next `test_per_digit` to the test split. Classes with too few rows are
/// truncated and noted in `warnings`.
DigitsDataset parse_digits(std::istream& in, std::size_t train_per_digit = kTrainPerDigit,
                           std::size_t test_per_digit = kTestPerDigit);
DigitsDataset load_digits(const std::filesystem::path& path, std::size_t train_per_digit = kTrainPerDigit,
                          std::size_t test_per_digit = kTestPerDigit);

// pixel p -> pi p / 16 - pi / 2
PhaseVector encode_input(std::span<const int> pixels);
// pi/2 at the label, -pi/2 elsewhere
PhaseVector encode_target(int label);

struct DecodedOutput {
  int label = 0;
  Eigen::VectorXd scores;  // 1 + sin(phi_i), unnormalized
};

// argmax of 1 + sin(phi_i); ties go to the lowest index.
DecodedOutput decode_output(const VectorRef& output_phases);

TrainingSample make_sample(const DigitRecord& record);

// per_digit distinct training images of every class, class by class.
std::vector<TrainingSample> sample_batch(const DigitsDataset& dataset, int per_digit, Rng& rng);

class DigitsTask final : public TaskSource {
 public:
  DigitsTask(const DigitsDataset& dataset, int per_digit);
  std::vector<TrainingSample> next_batch(Rng& rng) override;

 private:
  const DigitsDataset& dataset_;
  int per_digit_;
};

}  // namespace xyep
