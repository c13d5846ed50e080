#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "xyep/dynamics.hpp"

using namespace xyep;

namespace {

double max_circular_gap(const PhaseVector& a, const PhaseVector& b) {
  double gap = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) gap = std::max(gap, circular_distance(a[i], b[i]));
  return gap;
}

}  // namespace

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.min_step = 0.1;
  c.initial_step = 0.01;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = {};
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = {};
  c.horizon = -1.0;
  EXPECT_THROW(c.validate(), ConfigurationError);
}

TEST(Relax, SingleWellMatchesClosedForm) {
  const auto t = NetworkTopology::make_all_to_all(1, 0, 1);
  auto p = ModelParameters::zeros(t);
  p.bias_strengths[0] = 1.0;
  IntegratorConfig c;
  c.stop_at_equilibrium = false;
  PhaseVector init(2);
  init << 0.0, kPi / 2;
  std::vector<std::pair<double, double>> samples;
  const auto r = relax(init, p, t, 0.0, {}, c, PhaseVector::Zero(1),
                       [&](double time, const PhaseVector& phi, double) { samples.emplace_back(time, phi[1]); });
  EXPECT_NEAR(r.phases[1], 0.0, 1e-4);
  EXPECT_DOUBLE_EQ(r.elapsed_time, 100.0);
  // tan(phi/2) = tan(pi/4) e^{-t} along the trajectory.
  for (const auto& [time, phi] : samples) {
    if (time > 20.0) break;
    EXPECT_NEAR(phi, 2.0 * std::atan(std::exp(-time)), 1e-5) << "t = " << time;
  }
}

TEST(Relax, FixedPointIsStationary) {
  const auto t = NetworkTopology::make_all_to_all(2, 2, 1);
  std::mt19937_64 rng(41);
  const auto p = oracle::random_parameters(t, rng);
  const auto inputs = oracle::random_phases(2, rng);
  auto start = oracle::random_phases(t.n_units(), rng);
  const auto eq = relax(start, p, t, 0.0, {}, IntegratorConfig{}, inputs);
  ASSERT_TRUE(eq.converged);
  const auto again = relax(eq.phases, p, t, 0.0, {}, IntegratorConfig{}, inputs);
  EXPECT_TRUE(again.converged);
  EXPECT_LT(again.residual_norm, IntegratorConfig{}.equilibrium_grad_tol);
  EXPECT_LT((again.phases - eq.phases).cwiseAbs().maxCoeff(), IntegratorConfig{}.equilibrium_grad_tol);

  // Same without early exit: a converged state barely moves over the full horizon.
  IntegratorConfig full;
  full.stop_at_equilibrium = false;
  const auto tight = relax(start, p, t, 0.0, {}, oracle::tight_integrator(), inputs);
  const auto held = relax(tight.phases, p, t, 0.0, {}, full, inputs);
  EXPECT_LT((held.phases - tight.phases).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Relax, MatchesFineEulerReference) {
  const auto t = NetworkTopology::make_all_to_all(2, 2, 1);
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const auto p = oracle::random_parameters(t, rng);
    const auto init = oracle::random_phases(t.n_units(), rng);
    const auto r = relax(init, p, t, 0.0, {}, IntegratorConfig{}, init.head(2));
    EXPECT_LT(r.residual_norm, 1e-6);
    EXPECT_LE(internal_energy(r.phases, p, t), internal_energy(init, p, t));
    const auto euler = oracle::euler_relax(t, p, init, 1e-4, 100.0);
    EXPECT_LT(max_circular_gap(r.phases, euler), 1e-3) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 6);
}

TEST(Relax, TrajectoryIsMonotoneAndClamped) {
  const auto t = NetworkTopology::make_all_to_all(2, 4, 2);
  std::mt19937_64 rng(77);
  for (double beta : {0.0, 0.5}) {
    const auto p = oracle::random_parameters(t, rng);
    const auto init = oracle::random_phases(t.n_units(), rng);
    const auto inputs = oracle::random_phases(2, rng);
    const auto targets = oracle::random_phases(2, rng);
    IntegratorConfig c;
    double previous = std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    std::size_t calls = 0;
    const double scale = p.weights.cwiseAbs().sum() + p.bias_strengths.cwiseAbs().sum();
    relax(init, p, t, beta, beta != 0.0 ? targets : Eigen::VectorXd(), c, inputs,
          [&](double, const PhaseVector& phi, double f) {
            ++calls;
            for (int i = 0; i < 2; ++i) {
              if (phi[i] != inputs[i]) ++violations;
            }
            const double slack = 10.0 * (c.abs_tol + c.rel_tol * phi.cwiseAbs().maxCoeff()) * scale;
            EXPECT_LE(f, previous + slack);
            previous = f;
          });
    EXPECT_GT(calls, 1u);
    EXPECT_EQ(violations, 0u);
  }
}

TEST(Relax, ResultInputsAreExact) {
  const auto t = NetworkTopology::make_layered({3, 3, 2});
  std::mt19937_64 rng(1);
  const auto p = oracle::random_parameters(t, rng);
  const auto inputs = oracle::random_phases(3, rng);
  const auto r = relax(oracle::random_phases(t.n_units(), rng), p, t, 0.0, {}, IntegratorConfig{}, inputs);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.phases[i], inputs[i]);
}

TEST(Relax, Deterministic) {
  const auto t = NetworkTopology::make_all_to_all(2, 3, 1);
  std::mt19937_64 rng(3);
  const auto p = oracle::random_parameters(t, rng);
  const auto init = oracle::random_phases(t.n_units(), rng);
  const auto a = relax(init, p, t, 0.0, {}, IntegratorConfig{}, init.head(2));
  const auto b = relax(init, p, t, 0.0, {}, IntegratorConfig{}, init.head(2));
  EXPECT_TRUE(a.phases == b.phases);
  EXPECT_EQ(a.step_count, b.step_count);
  EXPECT_EQ(a.residual_norm, b.residual_norm);
}

TEST(Relax, Errors) {
  const auto t = NetworkTopology::make_all_to_all(2, 2, 1);
  std::mt19937_64 rng(12);
  const auto p = oracle::random_parameters(t, rng, 3.0);
  auto init = oracle::random_phases(t.n_units(), rng);

  IntegratorConfig coarse;
  coarse.min_step = coarse.initial_step = coarse.max_step = 1.0;
  coarse.rel_tol = coarse.abs_tol = 1e-15;
  try {
    relax(init, p, t, 0.0, {}, coarse, init.head(2));
    FAIL() << "expected an integration failure";
  } catch (const IntegrationFailure& e) {
    EXPECT_EQ(e.partial().phases.size(), t.n_units());
  }

  EXPECT_THROW(relax(init, p, t, 0.1, {}, IntegratorConfig{}, init.head(2)), ContractViolation);
  init[3] = std::nan("");
  EXPECT_THROW(relax(init, p, t, 0.0, {}, IntegratorConfig{}, init.head(2)), NumericalError);
}

TEST(Relax, TrajectoryWriterProducesColumns) {
  const auto t = NetworkTopology::make_all_to_all(1, 1, 1);
  std::mt19937_64 rng(8);
  const auto p = oracle::random_parameters(t, rng);
  std::ostringstream out;
  const auto r = relax(oracle::random_phases(3, rng), p, t, 0.0, {}, IntegratorConfig{}, PhaseVector::Zero(1),
                       make_trajectory_writer(out, 3));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time\tphi_0\tphi_1\tphi_2");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 3);
  }
  EXPECT_EQ(rows, r.step_count + 1);
}

TEST(Equilibria, FrustratedTriangleHasTwoChiralStates) {
  // Input 0 clamped at 0; units 1 and 2 free; antiferromagnetic on all pairs.
  const auto t = NetworkTopology::make_all_to_all(1, 1, 1);
  auto p = ModelParameters::zeros(t);
  p.weights.setConstant(-1.0);

  const auto grid = oracle::grid_local_minima(
      [](double a, double b) { return std::cos(a) + std::cos(b) + std::cos(a - b); }, 360);
  ASSERT_EQ(grid.size(), 2u);

  const auto census = enumerate_equilibria(p, t, PhaseVector::Zero(1), 50, kDefaultClusterTol, 99);
  ASSERT_EQ(census.clusters.size(), 2u);
  std::size_t total = 0;
  for (const auto& c : census.clusters) {
    total += c.basin_count;
    double best = 1e9;
    for (const auto& [a, b] : grid) {
      best = std::min(best, std::max(circular_distance(c.representative[1], a),
                                     circular_distance(c.representative[2], b)));
    }
    EXPECT_LT(best, kTwoPi / 360);
    EXPECT_NEAR(std::abs(wrap_angle(c.representative[1] - c.representative[2])), 2 * kPi / 3, 1e-4);
  }
  EXPECT_EQ(total, census.converged);
  EXPECT_EQ(census.trials, 50u);
}

TEST(Equilibria, FerromagnetHasOneCluster) {
  const auto t = NetworkTopology::make_all_to_all(1, 3, 1);
  auto p = ModelParameters::zeros(t);
  p.weights.setConstant(2.0);
  PhaseVector in(1);
  in << 0.4;
  const auto census = enumerate_equilibria(p, t, in, 40, kDefaultClusterTol, 5);
  ASSERT_EQ(census.clusters.size(), 1u);
  EXPECT_EQ(census.clusters[0].basin_count, census.converged);
  EXPECT_EQ(census.converged + census.not_converged + census.failed, 40u);
  for (int i = 1; i < t.n_units(); ++i) EXPECT_NEAR(circular_distance(census.clusters[0].representative[i], 0.4), 0.0, 1e-5);
}

TEST(Equilibria, RejectsBadArguments) {
  const auto t = NetworkTopology::make_all_to_all(1, 1, 1);
  const auto p = ModelParameters::zeros(t);
  EXPECT_THROW(enumerate_equilibria(p, t, PhaseVector::Zero(1), 0, 0.01, 1), ConfigurationError);
  EXPECT_THROW(enumerate_equilibria(p, t, PhaseVector::Zero(1), 3, 0.0, 1), ConfigurationError);
}
