#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <lepf/errors.hpp>
#include <lepf/hmm.hpp>
#include <lepf/rng.hpp>

namespace {

using lepf::FiniteHmm;

FiniteHmm hand_model() {
  Eigen::VectorXd pi0(2);
  pi0 << 0.5, 0.5;
  Eigen::MatrixXd f(2, 2);
  f << 0.9, 0.1, 0.2, 0.8;
  Eigen::VectorXd g(2);
  g << 1.0, 2.0;
  return FiniteHmm(pi0, f, g);
}

TEST(FiniteHmm, RejectsBadProbabilities) {
  Eigen::VectorXd pi0(2);
  pi0 << 0.5, 0.6;
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd g = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(FiniteHmm(pi0, f, g), lepf::ValidationError);
  pi0 << 0.5, 0.5;
  g << 1.0, 0.0;
  EXPECT_THROW(FiniteHmm(pi0, f, g), lepf::ValidationError);
  g << 1.0, 1.0;
  f(0, 1) = 0.2;
  EXPECT_THROW(FiniteHmm(pi0, f, g), lepf::ValidationError);
}

TEST(FiniteHmm, TimeVaryingHorizon) {
  Eigen::VectorXd pi0 = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::MatrixXd f = Eigen::MatrixXd::Constant(2, 2, 0.5);
  std::vector<Eigen::VectorXd> g(3, Eigen::VectorXd::Ones(2));
  FiniteHmm model(pi0, f, g);
  EXPECT_EQ(model.horizon(), 2);
  EXPECT_NO_THROW(model.potential(2));
  EXPECT_THROW(model.potential(3), lepf::ValidationError);
  EXPECT_FALSE(hand_model().horizon().has_value());
  EXPECT_NO_THROW(hand_model().potential(1000));
}

TEST(PredictionFilter, OneStepByHand) {
  // (0.5 * 1, 0.5 * 2) F = (0.65, 0.85), normalized by 1.5.
  const auto pi = lepf::exact_prediction_filter(hand_model(), 1);
  ASSERT_EQ(pi.size(), 2u);
  EXPECT_NEAR(pi[1][0], 13.0 / 30.0, 1e-15);
  EXPECT_NEAR(pi[1][1], 17.0 / 30.0, 1e-15);
}

TEST(PredictionFilter, IidModelIsStationary) {
  Eigen::VectorXd pi0(3);
  pi0 << 0.2, 0.3, 0.5;
  Eigen::VectorXd g(3);
  g << 3.0, 0.1, 1.0;
  const auto pi = lepf::exact_prediction_filter(lepf::iid_toy(pi0, g), 25);
  for (const auto& p : pi) EXPECT_LT((p - pi0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PredictionFilter, ConstantPotentialPropagatesPrior) {
  Eigen::VectorXd pi0(2);
  pi0 << 0.3, 0.7;
  Eigen::MatrixXd f(2, 2);
  f << 0.6, 0.4, 0.1, 0.9;
  FiniteHmm model(pi0, f, Eigen::VectorXd::Constant(2, 4.0));
  const auto pi = lepf::exact_prediction_filter(model, 6);
  Eigen::RowVectorXd expected = pi0.transpose();
  for (int n = 0; n <= 6; ++n) {
    EXPECT_LT((pi[n].transpose() - expected).cwiseAbs().maxCoeff(), 1e-14) << n;
    expected = expected * f;
  }
}

TEST(PredictionFilter, OutputsAreProbabilityVectors) {
  lepf::SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int s = 2 + trial % 4;
    Eigen::VectorXd pi0(s);
    Eigen::MatrixXd f(s, s);
    std::vector<Eigen::VectorXd> g(8, Eigen::VectorXd(s));
    for (int i = 0; i < s; ++i) {
      pi0[i] = 0.1 + lepf::uniform01(rng);
      for (int j = 0; j < s; ++j) f(i, j) = lepf::uniform01(rng);
      f.row(i) /= f.row(i).sum();
      for (auto& gn : g) gn[i] = 0.01 + 5 * lepf::uniform01(rng);
    }
    pi0 /= pi0.sum();
    const auto pi = lepf::exact_prediction_filter(FiniteHmm(pi0, f, g), 7);
    for (const auto& p : pi) {
      EXPECT_NEAR(p.sum(), 1.0, 1e-12);
      EXPECT_GE(p.minCoeff(), 0.0);
    }
  }
}

TEST(GammaNormalizer, Values) {
  EXPECT_EQ(lepf::gamma_normalizer(hand_model(), 0), 1.0);
  // sum_x pi0(x) g(x) F(x, y) g(y) = (0.65, 0.85) . (1, 2)
  EXPECT_NEAR(lepf::gamma_normalizer(hand_model(), 2), 2.35, 1e-14);

  Eigen::VectorXd pi0(2);
  pi0 << 0.25, 0.75;
  Eigen::VectorXd g(2);
  g << 0.99, 0.01;
  EXPECT_NEAR(lepf::gamma_normalizer(lepf::iid_toy(pi0, g), 9), std::pow(pi0.dot(g), 9), 1e-14);
}

TEST(GammaNormalizer, MatchesNaiveProducts) {
  Eigen::VectorXd pi0(3);
  pi0 << 0.2, 0.5, 0.3;
  Eigen::MatrixXd f(3, 3);
  f << 0.5, 0.3, 0.2, 0.1, 0.8, 0.1, 0.3, 0.3, 0.4;
  std::vector<Eigen::VectorXd> g(5, Eigen::VectorXd(3));
  for (int n = 0; n < 5; ++n) g[n] << 1.0 + n, 0.5, 2.0 / (n + 1);
  FiniteHmm model(pi0, f, g);
  Eigen::RowVectorXd mass = pi0.transpose();
  for (int n = 1; n <= 4; ++n) {
    mass = mass * g[n - 1].asDiagonal() * f;
    EXPECT_NEAR(lepf::gamma_normalizer(model, n) / mass.sum(), 1.0, 1e-10);
  }
}

TEST(UpdatedFilter, Values) {
  const Eigen::VectorXd u = lepf::updated_filter(hand_model(), 0);
  EXPECT_NEAR(u[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(u[1], 2.0 / 3.0, 1e-15);

  Eigen::VectorXd pi0(2);
  pi0 << 0.4, 0.6;
  Eigen::MatrixXd f(2, 2);
  f << 0.7, 0.3, 0.5, 0.5;
  FiniteHmm flat(pi0, f, Eigen::VectorXd::Ones(2));
  EXPECT_LT((lepf::updated_filter(flat, 3) - lepf::exact_prediction_filter(flat, 3)[3]).norm(), 1e-15);

  Eigen::VectorXd g(2);
  g << 2.0, 0.5;
  const auto iid = lepf::iid_toy(pi0, g);
  EXPECT_LT((lepf::updated_filter(iid, 0) - lepf::updated_filter(iid, 7)).norm(), 1e-14);
}

TEST(CConstant, ConstantPotentialGivesZero) {
  Eigen::VectorXd pi0(3);
  pi0 << 0.2, 0.3, 0.5;
  EXPECT_NEAR(lepf::c_constant(pi0, Eigen::VectorXd::Constant(3, 7.0)), 0.0, 1e-15);
}

TEST(CConstant, NonnegativeAndZeroOnlyForConstant) {
  lepf::SplitMix64 rng(11);
  Eigen::VectorXd pi0(4);
  pi0 << 0.1, 0.2, 0.3, 0.4;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd g(4);
    for (int i = 0; i < 4; ++i) g[i] = 0.05 + lepf::uniform01(rng);
    EXPECT_GT(lepf::c_constant(pi0, g), 0.0);
  }
}

TEST(CConstant, BinaryToy) {
  const double p = 0.25;
  const double delta = 0.01;
  const double mean = p * (1 - delta) + (1 - p) * delta;
  const double square = p * (1 - delta) * (1 - delta) + (1 - p) * delta * delta;
  EXPECT_NEAR(lepf::c_constant(lepf::binary_toy(p, delta)), square / (mean * mean) - 1.0, 1e-13);
  EXPECT_NEAR(lepf::c_constant(lepf::binary_toy(p, 1e-9)) + 1.0, 1.0 / p, 1e-6);
}

TEST(CConstant, RequiresIidStructure) { EXPECT_THROW(lepf::c_constant(hand_model()), lepf::ValidationError); }

TEST(CConstant, GaussianToy) {
  EXPECT_NEAR(lepf::gaussian_toy_t0(), 0.1855077, 1e-6);
  EXPECT_NEAR(lepf::gaussian_toy_t0(), std::log(2.0 / std::sqrt(3.0)) + 1.0 / 24.0, 1e-15);
  EXPECT_NEAR(std::exp(lepf::gaussian_toy_c()), 1.2260890539826275, 1e-12);
}

TEST(CheckMixing, Cases) {
  Eigen::VectorXd pi0 = Eigen::VectorXd::Constant(2, 0.5);
  auto flat = lepf::check_mixing(lepf::iid_toy(pi0, Eigen::VectorXd::Ones(2)));
  EXPECT_DOUBLE_EQ(flat.delta_ratio, 1.0);
  EXPECT_DOUBLE_EQ(flat.epsilon_ratio, 1.0);
  EXPECT_TRUE(flat.satisfied);

  auto binary = lepf::check_mixing(lepf::binary_toy(0.25, 0.01));
  EXPECT_NEAR(binary.delta_ratio, 0.99 / 0.01, 1e-9);
  EXPECT_TRUE(binary.satisfied);

  Eigen::MatrixXd f(2, 2);
  f << 1.0, 0.0, 0.5, 0.5;
  auto zero = lepf::check_mixing(FiniteHmm(pi0, f, Eigen::VectorXd::Ones(2)));
  EXPECT_FALSE(zero.satisfied);
  EXPECT_TRUE(std::isinf(zero.epsilon_ratio));
  ASSERT_TRUE(zero.violating_pair.has_value());
}

TEST(SimulateHmm, DegenerateNoiseGivesConstantPath) {
  const auto model = lepf::stoch_vol(1.0, 0.1, 0.0, 0.7, 0.0);
  lepf::SplitMix64 rng(5);
  const auto path = lepf::simulate_hmm(model, 100, rng);
  ASSERT_EQ(path.states.size(), 100u);
  for (double x : path.states) EXPECT_EQ(x, 0.7);
}

TEST(SimulateHmm, DeterministicGivenSeed) {
  const auto model = lepf::stoch_vol(0.9, 0.1, 0.5);
  lepf::SplitMix64 a(42);
  lepf::SplitMix64 b(42);
  const auto p = lepf::simulate_hmm(model, 500, a);
  const auto q = lepf::simulate_hmm(model, 500, b);
  EXPECT_EQ(p.states, q.states);
  EXPECT_EQ(p.observations, q.observations);
}

TEST(SimulateHmm, StationaryVariance) {
  const double a = 0.9;
  const double sigma = 0.5;
  const double stationary = sigma * sigma / (1 - a * a);
  const auto model = lepf::stoch_vol(a, 0.1, sigma);
  lepf::SplitMix64 rng(1);
  const auto path = lepf::simulate_hmm(model, 10000, rng);
  double mean = 0.0;
  for (double x : path.states) mean += x;
  mean /= static_cast<double>(path.states.size());
  double var = 0.0;
  for (double x : path.states) var += (x - mean) * (x - mean);
  var /= static_cast<double>(path.states.size() - 1);
  EXPECT_NEAR(var / stationary, 1.0, 0.05);
}

TEST(ModelFile, ParsesAndRejects) {
  std::istringstream good(
      "# two states\n"
      "S=2\n"
      "pi0=0.5,0.5\n"
      "F.row0=0.9,0.1\n"
      "F.row1=0.2,0.8\n"
      "g=1,2\n");
  const FiniteHmm model = lepf::parse_finite_hmm(good);
  EXPECT_NEAR(lepf::gamma_normalizer(model, 2), 2.35, 1e-14);

  std::istringstream varying("S=1\npi0=1\nF.row0=1\ng0=2\ng1=3\n");
  EXPECT_EQ(lepf::parse_finite_hmm(varying).horizon(), 1);

  std::istringstream missing_row("S=2\npi0=0.5,0.5\nF.row0=1,0\ng=1,1\n");
  EXPECT_THROW(lepf::parse_finite_hmm(missing_row), lepf::ValidationError);
  std::istringstream bad_key("S=1\npi0=1\nF.row0=1\nh=1\n");
  EXPECT_THROW(lepf::parse_finite_hmm(bad_key), lepf::ValidationError);
  std::istringstream bad_number("S=1\npi0=x\nF.row0=1\ng=1\n");
  EXPECT_THROW(lepf::parse_finite_hmm(bad_number), lepf::ValidationError);
}

}  // namespace
