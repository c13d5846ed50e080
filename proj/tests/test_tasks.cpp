#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "xyep/tasks.hpp"

using namespace xyep;

namespace {

std::string row(int pixel, int label, int fields = kDigitPixels) {
  std::ostringstream s;
  for (int k = 0; k < fields; ++k) s << pixel << ",";
  s << label << "\n";
  return s.str();
}

const DigitsDataset& real_dataset() {
  static const DigitsDataset ds = load_digits(XYEP_DATA_FILE);
  return ds;
}

}  // namespace

TEST(Xor, FourCanonicalSamples) {
  const auto samples = xor_samples();
  ASSERT_EQ(samples.size(), 4u);
  for (const auto& s : samples) {
    ASSERT_EQ(s.input_phases.size(), 2);
    ASSERT_EQ(s.target_phases.size(), 1);
    const bool a = s.input_phases[0] == kTruePhase;
    const bool b = s.input_phases[1] == kTruePhase;
    EXPECT_TRUE(a || s.input_phases[0] == kFalsePhase);
    EXPECT_TRUE(b || s.input_phases[1] == kFalsePhase);
    EXPECT_EQ(s.target_phases[0], (a != b) ? kTruePhase : kFalsePhase);
  }
  EXPECT_EQ(samples[1].input_phases[1], kTruePhase);
  Rng rng(1);
  XorTask task;
  EXPECT_EQ(task.next_batch(rng).size(), 4u);
}

TEST(Digits, LoadsFullFile) {
  const auto& ds = real_dataset();
  EXPECT_EQ(ds.total_records, 1797u);
  EXPECT_EQ(ds.train.size(), 1000u);
  EXPECT_EQ(ds.test.size(), 700u);
  EXPECT_TRUE(ds.warnings.empty());
  for (int d = 0; d < kDigitClasses; ++d) {
    EXPECT_EQ(ds.train_per_digit[d], 100u);
    EXPECT_EQ(ds.test_per_digit[d], 70u);
  }
  for (const auto& r : ds.train) {
    EXPECT_GE(*std::min_element(r.pixels.begin(), r.pixels.end()), 0);
    EXPECT_LE(*std::max_element(r.pixels.begin(), r.pixels.end()), kMaxPixel);
  }
}

TEST(Digits, SplitFollowsFileOrderWithinClass) {
  std::string text;
  for (int k = 0; k < 5; ++k) text += row(k, 4);
  std::istringstream in(text);
  const auto ds = parse_digits(in, 2, 2);
  ASSERT_EQ(ds.train.size(), 2u);
  ASSERT_EQ(ds.test.size(), 2u);
  EXPECT_EQ(ds.train[0].pixels[0], 0);
  EXPECT_EQ(ds.train[1].pixels[0], 1);
  EXPECT_EQ(ds.test[0].pixels[0], 2);
  EXPECT_EQ(ds.test[1].pixels[0], 3);
}

TEST(Digits, MalformedRowNamesLine) {
  std::istringstream in(row(1, 0) + row(1, 1, 63));
  try {
    parse_digits(in);
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  std::istringstream junk(row(1, 0) + "a,b,c\n");
  EXPECT_THROW(parse_digits(junk), ParseError);
}

TEST(Digits, OutOfRangeValuesRejected) {
  std::istringstream pixel(row(17, 0));
  EXPECT_THROW(parse_digits(pixel), ValidationError);
  std::istringstream label(row(3, 10));
  EXPECT_THROW(parse_digits(label), ValidationError);
}

TEST(Digits, ShortClassesTruncateWithWarning) {
  std::string text;
  for (int d = 0; d < kDigitClasses; ++d) {
    for (int k = 0; k < (d == 6 ? 3 : 5); ++k) text += row(d, d);
  }
  std::istringstream in(text);
  const auto ds = parse_digits(in, 2, 2);
  EXPECT_EQ(ds.train_per_digit[6], 2u);
  EXPECT_EQ(ds.test_per_digit[6], 1u);
  EXPECT_EQ(ds.test_per_digit[5], 2u);
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("6"), std::string::npos);
}

TEST(Digits, MissingFileIsConfigurationError) {
  EXPECT_THROW(load_digits("/nonexistent/digits.csv"), ConfigurationError);
}

TEST(Encoding, InputEndpointsAndMonotone) {
  std::array<int, kDigitPixels> px{};
  for (int k = 0; k < kDigitPixels; ++k) px[k] = k % 17;
  const auto phi = encode_input(px);
  for (int k = 0; k < kDigitPixels; ++k) EXPECT_NEAR(phi[k], kPi * px[k] / 16.0 - kPi / 2, 1e-15);
  EXPECT_EQ(phi[0], -kPi / 2);
  EXPECT_EQ(phi[16], kPi / 2);
  EXPECT_EQ(phi[8], 0.0);
  for (int k = 1; k < 17; ++k) EXPECT_GT(phi[k], phi[k - 1]);
  px[5] = 17;
  EXPECT_THROW(encode_input(px), ValidationError);
  std::array<int, 10> short_px{};
  EXPECT_THROW(encode_input(short_px), ContractViolation);
}

TEST(Encoding, TargetOneHot) {
  const auto t = encode_target(3);
  ASSERT_EQ(t.size(), 10);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(t[i], i == 3 ? kPi / 2 : -kPi / 2);
  EXPECT_EQ(encode_target(0)[0], kPi / 2);
  EXPECT_THROW(encode_target(10), ValidationError);
  EXPECT_THROW(encode_target(-1), ValidationError);
}

TEST(Decoding, RoundTripTiesAndDirectScan) {
  for (int label = 0; label < 10; ++label) {
    const auto d = decode_output(encode_target(label));
    EXPECT_EQ(d.label, label);
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(d.scores[i], i == label ? 2.0 : 0.0, 1e-15);
  }
  EXPECT_EQ(decode_output(Eigen::VectorXd::Constant(10, 0.4)).label, 0);

  Eigen::VectorXd phi(10);
  phi << 0.1, 1.2, -0.3, 2.0, 1.5, -2.0, 0.0, 3.0, 1.9, -1.0;
  int best = 0;
  for (int i = 1; i < 10; ++i) {
    if (1 + std::sin(phi[i]) > 1 + std::sin(phi[best])) best = i;
  }
  EXPECT_EQ(decode_output(phi).label, best);
  EXPECT_EQ(best, 4);
}

TEST(Sampling, BalancedDistinctAndDeterministic) {
  const auto& ds = real_dataset();
  Rng a(5), b(5);
  const auto batch = sample_batch(ds, 30, a);
  ASSERT_EQ(batch.size(), 300u);
  std::map<int, int> per_class;
  std::set<std::vector<double>> distinct;
  for (const auto& s : batch) {
    per_class[decode_output(s.target_phases).label]++;
    distinct.insert(std::vector<double>(s.input_phases.data(), s.input_phases.data() + s.input_phases.size()));
  }
  for (int d = 0; d < 10; ++d) EXPECT_EQ(per_class[d], 30);
  EXPECT_GE(distinct.size(), 290u);  // duplicate images exist in the source, indices are distinct

  const auto again = sample_batch(ds, 30, b);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    EXPECT_TRUE(batch[k].input_phases == again[k].input_phases);
    EXPECT_TRUE(batch[k].target_phases == again[k].target_phases);
  }
  EXPECT_EQ(sample_batch(ds, 1, a).size(), 10u);
  EXPECT_THROW(sample_batch(ds, 101, a), ConfigurationError);
}
