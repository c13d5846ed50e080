#include "xyep/tasks.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace xyep {

std::vector<TrainingSample> xor_samples() {
  std::vector<TrainingSample> samples;
  for (bool a : {false, true}) {
    for (bool b : {false, true}) {
      TrainingSample s;
      s.input_phases = PhaseVector(2);
      s.input_phases << (a ? kTruePhase : kFalsePhase), (b ? kTruePhase : kFalsePhase);
      s.target_phases = PhaseVector::Constant(1, a != b ? kTruePhase : kFalsePhase);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

std::vector<TrainingSample> XorTask::next_batch(Rng&) { return xor_samples(); }

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

int parse_int(std::string_view field, std::size_t line_number) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("'" + std::string(field) + "' is not an integer", line_number);
  }
  return value;
}

}  // namespace

DigitsDataset parse_digits(std::istream& in, std::size_t train_per_digit, std::size_t test_per_digit) {
  DigitsDataset data;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != kDigitPixels + 1) {
      throw ParseError("expected " + std::to_string(kDigitPixels + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       line_number);
    }
    DigitRecord record;
    for (int p = 0; p < kDigitPixels; ++p) {
      record.pixels[p] = parse_int(fields[p], line_number);
      if (record.pixels[p] < 0 || record.pixels[p] > kMaxPixel) {
        throw ValidationError("line " + std::to_string(line_number) + ": pixel value " +
                              std::to_string(record.pixels[p]) + " outside [0, 16]");
      }
    }
    record.label = parse_int(fields[kDigitPixels], line_number);
    if (record.label < 0 || record.label >= kDigitClasses) {
      throw ValidationError("line " + std::to_string(line_number) + ": label " +
                            std::to_string(record.label) + " outside [0, 9]");
    }
    ++data.total_records;

    const auto d = static_cast<std::size_t>(record.label);
    if (data.train_per_digit[d] < train_per_digit) {
      ++data.train_per_digit[d];
      data.train.push_back(record);
    } else if (data.test_per_digit[d] < test_per_digit) {
      ++data.test_per_digit[d];
      data.test.push_back(record);
    }
  }
  for (int d = 0; d < kDigitClasses; ++d) {
    if (data.train_per_digit[d] < train_per_digit || data.test_per_digit[d] < test_per_digit) {
      data.warnings.push_back("digit " + std::to_string(d) + " has only " +
                              std::to_string(data.train_per_digit[d] + data.test_per_digit[d]) +
                              " images: " + std::to_string(data.train_per_digit[d]) + " train, " +
                              std::to_string(data.test_per_digit[d]) + " test");
    }
  }
  return data;
}

DigitsDataset load_digits(const std::filesystem::path& path, std::size_t train_per_digit,
                          std::size_t test_per_digit) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open digits file " + path.string());
  return parse_digits(in, train_per_digit, test_per_digit);
}

PhaseVector encode_input(std::span<const int> pixels) {
  if (pixels.size() != static_cast<std::size_t>(kDigitPixels)) {
    throw ContractViolation("expected " + std::to_string(kDigitPixels) + " pixels, got " +
                            std::to_string(pixels.size()));
  }
  PhaseVector phases(static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    if (pixels[k] < 0 || pixels[k] > kMaxPixel) {
      throw ValidationError("pixel value " + std::to_string(pixels[k]) + " outside [0, 16]");
    }
    phases[static_cast<Eigen::Index>(k)] = kPi * (pixels[k] / static_cast<double>(kMaxPixel)) - kPi / 2.0;
  }
  return phases;
}

PhaseVector encode_target(int label) {
  if (label < 0 || label >= kDigitClasses) {
    throw ValidationError("label " + std::to_string(label) + " outside [0, 9]");
  }
  PhaseVector target = PhaseVector::Constant(kDigitClasses, kFalsePhase);
  target[label] = kTruePhase;
  return target;
}

DecodedOutput decode_output(const VectorRef& output_phases) {
  if (output_phases.size() == 0) throw ContractViolation("cannot decode an empty output vector");
  DecodedOutput out;
  out.scores = (1.0 + output_phases.array().sin()).matrix();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < out.scores.size(); ++i) {
    if (out.scores[i] > out.scores[best]) best = i;
  }
  out.label = static_cast<int>(best);
  return out;
}

TrainingSample make_sample(const DigitRecord& record) {
  return {encode_input(record.pixels), encode_target(record.label)};
}

std::vector<TrainingSample> sample_batch(const DigitsDataset& dataset, int per_digit, Rng& rng) {
  if (per_digit < 1) throw ConfigurationError("per-digit batch size must be at least 1");
  std::array<std::vector<std::size_t>, kDigitClasses> by_class;
  for (std::size_t r = 0; r < dataset.train.size(); ++r) {
    by_class[static_cast<std::size_t>(dataset.train[r].label)].push_back(r);
  }
  std::vector<TrainingSample> batch;
  batch.reserve(static_cast<std::size_t>(per_digit * kDigitClasses));
  for (int d = 0; d < kDigitClasses; ++d) {
    auto& pool = by_class[static_cast<std::size_t>(d)];
    if (pool.size() < static_cast<std::size_t>(per_digit)) {
      throw ConfigurationError("digit " + std::to_string(d) + " has " + std::to_string(pool.size()) +
                               " training images, cannot draw " + std::to_string(per_digit));
    }
    // Partial Fisher-Yates.
    for (int k = 0; k < per_digit; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
      batch.push_back(make_sample(dataset.train[pool[static_cast<std::size_t>(k)]]));
    }
  }
  return batch;
}

DigitsTask::DigitsTask(const DigitsDataset& dataset, int per_digit) : dataset_(dataset), per_digit_(per_digit) {}

std::vector<TrainingSample> DigitsTask::next_batch(Rng& rng) { return sample_batch(dataset_, per_digit_, rng); }

}  // namespace xyep
