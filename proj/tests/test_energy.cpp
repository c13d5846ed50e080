#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "xyep/energy.hpp"

using namespace xyep;

namespace {

const NetworkTopology kPair = NetworkTopology::make_all_to_all(1, 0, 1);

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

}  // namespace

TEST(InternalEnergy, Examples) {
  auto p = ModelParameters::zeros(kPair);
  p.weights[0] = 1.0;
  EXPECT_NEAR(internal_energy(vec({0.0, kPi / 3}), p, kPair), -0.5, 1e-15);

  p = ModelParameters::zeros(kPair);
  p.bias_strengths[0] = 2.0;
  EXPECT_DOUBLE_EQ(internal_energy(vec({1.3, 0.0}), p, kPair), -2.0);
}

TEST(InternalEnergy, MatchesDoubleSumOracle) {
  std::mt19937_64 rng(21);
  for (const auto& t : {NetworkTopology::make_all_to_all(2, 2, 1), NetworkTopology::make_layered({3, 4, 2})}) {
    for (int k = 0; k < 20; ++k) {
      const auto p = oracle::random_parameters(t, rng);
      const auto phi = oracle::random_phases(t.n_units(), rng);
      EXPECT_NEAR(internal_energy(phi, p, t), oracle::double_sum_energy(t, p, phi), 1e-12);
    }
  }
}

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(distance(vec({0.3, -1.0}), vec({0.3, -1.0})), 0.0);
  EXPECT_NEAR(distance(vec({kPi}), vec({0.0})), 2.0, 1e-15);
  EXPECT_NEAR(distance(vec({kPi / 2}), vec({0.0})), 1.0, 1e-15);
  EXPECT_THROW(distance(vec({0.0}), vec({0.0, 1.0})), ContractViolation);
}

TEST(Cost, Examples) {
  EXPECT_NEAR(cost(vec({0.4}), vec({0.4})), -std::log(2.0), 1e-15);
  EXPECT_NEAR(cost(vec({kPi / 2}), vec({0.0})), 0.0, 1e-15);
  const double antipodal = cost(vec({kPi}), vec({0.0}));
  EXPECT_TRUE(std::isfinite(antipodal));
  EXPECT_NEAR(antipodal, -std::log(kDefaultLogClamp), 1e-9);
  EXPECT_TRUE(std::isfinite(cost_gradient(vec({kPi}), vec({0.0}))[0]));
}

TEST(Cost, LowerBoundAndDistanceConsistency) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 500; ++k) {
    const auto out = oracle::random_phases(10, rng);
    const auto tgt = oracle::random_phases(10, rng);
    EXPECT_GE(cost(out, tgt), -10 * std::log(2.0));
    EXPECT_GT(distance(out, tgt), 0.0);
  }
  const auto tgt = oracle::random_phases(10, rng);
  Eigen::VectorXd shifted = tgt;
  shifted[3] += kTwoPi;
  EXPECT_NEAR(cost(shifted, tgt), -10 * std::log(2.0), 1e-12);
  EXPECT_NEAR(distance(shifted, tgt), 0.0, 1e-12);
}

TEST(TotalEnergy, IsInternalPlusBetaCost) {
  const auto t = NetworkTopology::make_all_to_all(2, 2, 2);
  std::mt19937_64 rng(8);
  const auto p = oracle::random_parameters(t, rng);
  const auto phi = oracle::random_phases(t.n_units(), rng);
  const auto tgt = oracle::random_phases(2, rng);
  const auto e = total_energy(phi, p, t, 0.3, tgt);
  EXPECT_EQ(e.beta, 0.3);
  EXPECT_NEAR(e.total, e.internal + 0.3 * e.cost, 1e-14);
  EXPECT_NEAR(e.internal, internal_energy(phi, p, t), 1e-14);
  EXPECT_NEAR(e.cost, cost(phi.tail(2), tgt), 1e-14);
}

TEST(PhaseGradient, Examples) {
  const auto t = NetworkTopology::make_all_to_all(2, 2, 1);
  std::mt19937_64 rng(2);
  auto p = oracle::random_parameters(t, rng);
  p.bias_strengths.setZero();
  EXPECT_LT(phase_gradient(PhaseVector::Constant(5, 0.7), p, t).cwiseAbs().maxCoeff(), 1e-15);

  auto q = ModelParameters::zeros(kPair);
  q.weights[0] = 1.0;
  const auto g = phase_gradient(vec({0.0, kPi / 2}), q, kPair);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], 1.0, 1e-15);

  EXPECT_THROW(phase_gradient(vec({0.0, 0.0}), q, kPair, 0.1), ContractViolation);
}

TEST(PhaseGradient, MatchesFiniteDifferences) {
  const auto t = NetworkTopology::make_all_to_all(2, 2, 2);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = oracle::random_parameters(t, rng);
    const auto phi = oracle::random_phases(t.n_units(), rng);
    const auto tgt = oracle::random_phases(2, rng);
    const auto g = phase_gradient(phi, p, t, 0.1, tgt);
    for (int i = 0; i < t.n_inputs(); ++i) EXPECT_EQ(g[i], 0.0);
    for (int i = t.n_inputs(); i < t.n_units(); ++i) {
      const double fd = oracle::central_difference(
          [&](double x) {
            auto v = phi;
            v[i] = x;
            return total_energy(v, p, t, 0.1, tgt).total;
          },
          phi[i], 1e-5);
      EXPECT_LT(oracle::relative_error(g[i], fd, 1e-6), 1e-6) << "unit " << i;
    }
  }
}

TEST(ParameterGradients, Examples) {
  auto p = ModelParameters::zeros(kPair);
  const auto g = parameter_gradients(vec({0.5, 0.5}), p, kPair);
  EXPECT_DOUBLE_EQ(g.weights[0], -1.0);
  EXPECT_DOUBLE_EQ(g.bias_angles[0], 0.0);
}

TEST(ParameterGradients, MatchFiniteDifferences) {
  const auto t = NetworkTopology::make_layered({2, 3, 2});
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = oracle::random_parameters(t, rng);
    const auto phi = oracle::random_phases(t.n_units(), rng);
    const auto g = parameter_gradients(phi, p, t).flatten();
    const auto flat = p.flatten();
    for (Eigen::Index a = 0; a < flat.size(); ++a) {
      const double fd = oracle::central_difference(
          [&](double x) {
            auto theta = flat;
            theta[a] = x;
            auto q = p;
            q.assign_flat(theta);
            return internal_energy(phi, q, t);
          },
          flat[a], 1e-5);
      EXPECT_LT(oracle::relative_error(g[a], fd, 1e-6), 1e-6) << "parameter " << a;
    }
  }
}

TEST(EnergyProperties, GlobalShiftSymmetryWithoutBias) {
  // Pure hidden/output network: a single input would pin the reference, so
  // shift every unit including it.
  const auto t = NetworkTopology::make_all_to_all(1, 4, 2);
  std::mt19937_64 rng(6);
  auto p = oracle::random_parameters(t, rng);
  p.bias_strengths.setZero();
  std::uniform_real_distribution<double> shift(-10, 10);
  for (int k = 0; k < 50; ++k) {
    const auto phi = oracle::random_phases(t.n_units(), rng);
    const double c = shift(rng);
    EXPECT_NEAR(internal_energy(phi, p, t), internal_energy((phi.array() + c).matrix(), p, t), 1e-12);
  }
}

TEST(EnergyProperties, Periodicity) {
  const auto t = NetworkTopology::make_all_to_all(2, 3, 2);
  std::mt19937_64 rng(7);
  const auto p = oracle::random_parameters(t, rng);
  const auto tgt = oracle::random_phases(2, rng);
  std::uniform_int_distribution<int> turns(-3, 3);
  for (int k = 0; k < 50; ++k) {
    const auto phi = oracle::random_phases(t.n_units(), rng);
    auto moved = phi;
    for (int i = 0; i < t.n_units(); ++i) moved[i] += kTwoPi * turns(rng);
    EXPECT_NEAR(total_energy(phi, p, t, 0.2, tgt).total, total_energy(moved, p, t, 0.2, tgt).total, 1e-11);
    EXPECT_LT((phase_gradient(phi, p, t, 0.2, tgt) - phase_gradient(moved, p, t, 0.2, tgt)).cwiseAbs().maxCoeff(),
              1e-11);
    EXPECT_LT((parameter_gradients(phi, p, t).flatten() - parameter_gradients(moved, p, t).flatten())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-11);
  }
}

TEST(Fidelity, IdentityHolds) {
  EXPECT_NEAR(fidelity_identity_check(Eigen::VectorXd::Constant(10, 0.2), Eigen::VectorXd::Constant(10, 0.2)),
              0.0, 1e-12);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> offset(-(kPi - 0.1), kPi - 0.1);
  for (int k = 0; k < 200; ++k) {
    const auto tgt = oracle::random_phases(10, rng);
    Eigen::VectorXd out = tgt;
    for (int i = 0; i < 10; ++i) out[i] += offset(rng);
    EXPECT_LT(std::abs(fidelity_identity_check(out, tgt)), 1e-12);
  }
}

TEST(ClampedSystem, AgreesWithReferenceGradient) {
  std::mt19937_64 rng(19);
  for (const auto& t : {NetworkTopology::make_all_to_all(2, 3, 2), NetworkTopology::make_layered({4, 3, 2})}) {
    for (double beta : {0.0, 0.25}) {
      const auto p = oracle::random_parameters(t, rng);
      const auto phi = oracle::random_phases(t.n_units(), rng);
      const auto tgt = oracle::random_phases(t.n_outputs(), rng);
      ClampedSystem sys(t, p, phi.head(t.n_inputs()), beta, tgt);
      Eigen::VectorXd g(t.n_free());
      sys.gradient(phi.tail(t.n_free()), g);
      const auto ref = phase_gradient(phi, p, t, beta, tgt);
      EXPECT_LT((g - ref.tail(t.n_free())).cwiseAbs().maxCoeff(), 1e-12);
      // Energies agree up to the constant input-input part, which is zero here.
      EXPECT_NEAR(sys.energy(phi.tail(t.n_free())), total_energy(phi, p, t, beta, tgt).total, 1e-12);
    }
  }
}
