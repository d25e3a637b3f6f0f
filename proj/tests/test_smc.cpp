#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include <lepf/errors.hpp>
#include <lepf/hmm.hpp>
#include <lepf/smc.hpp>

namespace {

using lepf::FiniteFilterModel;
using lepf::FiniteHmm;
using lepf::InteractionScheme;
using lepf::RngStream;

FiniteHmm three_state() {
  Eigen::VectorXd pi0(3);
  pi0 << 0.2, 0.5, 0.3;
  Eigen::MatrixXd f(3, 3);
  f << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.4, 0.5;
  Eigen::VectorXd g(3);
  g << 0.4, 1.0, 2.2;
  return FiniteHmm(pi0, f, g);
}

Eigen::VectorXd index_phi(int s) { return Eigen::VectorXd::LinSpaced(s, 0, s - 1); }

lepf::ParticleEnsemble run_steps(const lepf::FilterModel& model, const InteractionScheme& scheme, int groups,
                                 int steps, const RngStream& stream, std::uint64_t rep = 0) {
  const auto alpha = lepf::build_alpha(scheme, groups);
  auto e = lepf::init_ensemble(model, scheme, groups, stream, rep);
  for (int n = 0; n < steps; ++n) e = lepf::advance(e, model, alpha, stream, rep);
  return e;
}

TEST(InitEnsemble, FreshState) {
  const FiniteFilterModel model(three_state());
  const auto e = lepf::init_ensemble(model, InteractionScheme::lepf(4, 1), 5, RngStream(1));
  EXPECT_EQ(e.size(), 20);
  EXPECT_EQ(e.step(), 0);
  EXPECT_DOUBLE_EQ(lepf::diagnostics(e).ess_fraction, 1.0);
  EXPECT_DOUBLE_EQ(lepf::estimate_normalizer(e), 1.0);
}

TEST(InitEnsemble, PointMassPrior) {
  Eigen::VectorXd pi0(3);
  pi0 << 0.0, 0.0, 1.0;
  const FiniteFilterModel model(FiniteHmm(pi0, Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(3)));
  const auto e = lepf::init_ensemble(model, InteractionScheme::ibpf(3), 4, RngStream(2));
  for (double x : e.positions()) EXPECT_EQ(x, 2.0);
}

TEST(InitEnsemble, EmpiricalLawMatchesPrior) {
  const FiniteHmm hmm = three_state();
  const FiniteFilterModel model(hmm);
  const auto e = lepf::init_ensemble(model, InteractionScheme::ibpf(100), 1000, RngStream(3));
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
  for (double x : e.positions()) freq[static_cast<int>(x)] += 1.0 / e.size();
  EXPECT_LT(0.5 * (freq - hmm.initial()).cwiseAbs().sum(), 0.01);
}

TEST(Advance, SingleGroupIbpfIsBootstrapStep) {
  const FiniteHmm hmm = three_state();
  const FiniteFilterModel model(hmm);
  const auto scheme = InteractionScheme::ibpf(50);
  const RngStream stream(4);
  const auto e0 = lepf::init_ensemble(model, scheme, 1, stream);
  const auto e1 = lepf::advance(e0, model, lepf::build_alpha(scheme, 1), stream);
  double mean_g = 0.0;
  for (double x : e0.positions()) mean_g += hmm.potential(0)[static_cast<int>(x)] / 50.0;
  for (double w : e1.weights()) EXPECT_NEAR(w * std::exp(e1.log_offset()), mean_g, 1e-13);
  EXPECT_NEAR(lepf::estimate_normalizer(e1), mean_g, 1e-13);
}

TEST(Advance, ConstantPotentialOnIidModel) {
  Eigen::VectorXd pi0(3);
  pi0 << 0.2, 0.5, 0.3;
  const FiniteFilterModel model(lepf::iid_toy(pi0, Eigen::VectorXd::Constant(3, 0.5)));
  const auto e = run_steps(model, InteractionScheme::lepf(5, 2), 6, 4, RngStream(5));
  for (double w : e.weights()) EXPECT_EQ(w, e.weights().front());
  EXPECT_NEAR(lepf::estimate_normalizer(e), std::pow(0.5, 4), 1e-15);
  double mean = 0.0;
  for (double x : e.positions()) mean += x / e.size();
  EXPECT_NEAR(lepf::estimate_prediction(e, lepf::finite_test_function(index_phi(3))), mean, 1e-14);
}

TEST(Advance, WeightsAreGroupConstant) {
  const FiniteFilterModel model(three_state());
  const int m_size = 3;
  const auto e = run_steps(model, InteractionScheme::lepf(m_size, 1), 7, 12, RngStream(6));
  for (int i = 0; i < e.size(); ++i) EXPECT_EQ(e.weights()[i], e.group_weight(i / m_size));
}

TEST(Advance, DonorMixtureMatchesEnumeration) {
  // LEPF M=2, theta=1, m=2: particle 1 draws from particles 2 and 3.
  const FiniteHmm hmm = three_state();
  const FiniteFilterModel model(hmm);
  const auto scheme = InteractionScheme::lepf(2, 1);
  const auto alpha = lepf::build_alpha(scheme, 2);
  ASSERT_EQ(alpha.row(1).size(), 2u);
  ASSERT_EQ(alpha.row(1)[0].column, 2);
  ASSERT_EQ(alpha.row(1)[1].column, 3);

  const auto& p = hmm.initial();
  const auto& g = hmm.potential(0);
  const auto& f = hmm.transition();
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(3);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double pick_a = g[a] / (g[a] + g[b]);
      expected += p[a] * p[b] * (pick_a * f.row(a) + (1 - pick_a) * f.row(b)).transpose();
    }
  }

  const int reps = 100000;
  const RngStream stream(7);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
  for (int r = 0; r < reps; ++r) {
    const auto e0 = lepf::init_ensemble(model, scheme, 2, stream, r);
    const auto e1 = lepf::advance(e0, model, alpha, stream, r);
    freq[static_cast<int>(e1.positions()[0])] += 1.0 / reps;
  }
  for (int y = 0; y < 3; ++y) {
    EXPECT_NEAR(freq[y], expected[y], 3.0 * std::sqrt(expected[y] * (1 - expected[y]) / reps)) << y;
  }
}

TEST(Advance, RejectsMismatchedAlpha) {
  const FiniteFilterModel model(three_state());
  const auto scheme = InteractionScheme::lepf(3, 1);
  const auto e = lepf::init_ensemble(model, scheme, 3, RngStream(8));
  EXPECT_THROW(lepf::advance(e, model, lepf::build_alpha(scheme, 4), RngStream(8)), lepf::ValidationError);
  Eigen::MatrixXd mixed = lepf::build_alpha(scheme, 3).dense();
  mixed.row(1) = lepf::build_alpha(InteractionScheme::ibpf(3), 3).dense().row(1);
  EXPECT_THROW(lepf::check_alpha_grouping(lepf::AlphaMatrix::from_dense(mixed), scheme, 3), lepf::ValidationError);
}

TEST(Estimates, TrivialTestFunctions) {
  const FiniteFilterModel model(three_state());
  const auto e = run_steps(model, InteractionScheme::lepf(3, 2), 4, 5, RngStream(9));
  const auto one = [](double) { return 1.0; };
  EXPECT_NEAR(lepf::estimate_prediction(e, one), 1.0, 1e-15);
  EXPECT_NEAR(lepf::estimate_updated(e, model, one), 1.0, 1e-15);
  const auto inside = [](double x) { return x <= 2.0 ? 1.0 : 0.0; };
  EXPECT_NEAR(lepf::estimate_prediction(e, inside), 1.0, 1e-15);
}

TEST(Estimates, UpdatedEqualsPredictionForConstantPotential) {
  Eigen::VectorXd pi0(2);
  pi0 << 0.3, 0.7;
  Eigen::MatrixXd f(2, 2);
  f << 0.5, 0.5, 0.1, 0.9;
  const FiniteFilterModel model(FiniteHmm(pi0, f, Eigen::VectorXd::Constant(2, 3.0)));
  const auto e = run_steps(model, InteractionScheme::lepf(2, 1), 5, 3, RngStream(10));
  const auto phi = lepf::finite_test_function(index_phi(2));
  EXPECT_NEAR(lepf::estimate_updated(e, model, phi), lepf::estimate_prediction(e, phi), 1e-14);
}

TEST(Estimates, GaussianToyInitialMean) {
  const lepf::ObservedModel model(lepf::gaussian_toy(), {});
  const auto e = lepf::init_ensemble(model, InteractionScheme::ibpf(100), 1000, RngStream(11));
  EXPECT_NEAR(lepf::estimate_prediction(e, [](double x) { return x; }), 0.0, 3.0 / std::sqrt(1e5));
}

TEST(Estimates, NormalizerIsUnbiased) {
  const FiniteHmm hmm = three_state();
  lepf::RunConfig config;
  config.model = std::make_shared<FiniteFilterModel>(hmm);
  config.scheme = InteractionScheme::lepf(2, 1);
  config.groups = 3;
  config.steps = 3;
  config.replicates = 100000;
  config.seed = 12;
  config.final_only = true;
  const auto records = lepf::run_replicates(config);
  double mean = 0.0;
  double square = 0.0;
  for (const auto& r : records) {
    const double v = std::exp(r.normalizer_log);
    mean += v;
    square += v * v;
  }
  const double reps = static_cast<double>(records.size());
  mean /= reps;
  const double se = std::sqrt((square / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, lepf::gamma_normalizer(hmm, 3), 3.0 * se);
}

TEST(Estimates, UpdatedFilterConsistent) {
  // Ratio estimator: bias is O(1/N), kept well under the standard error by N = 2000.
  const FiniteHmm hmm = three_state();
  const Eigen::VectorXd phi = index_phi(3);
  lepf::RunConfig config;
  config.model = std::make_shared<FiniteFilterModel>(hmm);
  config.scheme = InteractionScheme::lepf(20, 1);
  config.groups = 100;
  config.steps = 3;
  config.replicates = 200;
  config.seed = 13;
  config.phi = lepf::finite_test_function(phi);
  config.updated = true;
  config.final_only = true;
  const auto records = lepf::run_replicates(config);
  double mean = 0.0;
  double square = 0.0;
  for (const auto& r : records) {
    mean += r.estimate;
    square += r.estimate * r.estimate;
  }
  const double reps = static_cast<double>(records.size());
  mean /= reps;
  const double se = std::sqrt((square / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, lepf::updated_filter(hmm, 3).dot(phi), 3.0 * se);
}

TEST(Diagnostics, Values) {
  EXPECT_DOUBLE_EQ(lepf::diagnostics_from_group_weights({1.0, 1.0, 1.0}, 4).ess_fraction, 1.0);
  const auto dominant = lepf::diagnostics_from_group_weights({0.0, 5.0, 0.0, 0.0, 0.0}, 2);
  EXPECT_DOUBLE_EQ(dominant.ess_fraction, 0.2);
  EXPECT_DOUBLE_EQ(dominant.n_eff, 2.0);
  EXPECT_NEAR(lepf::diagnostics_from_group_weights({2.0, 1.0}, 3).ess_fraction, 0.9, 1e-15);
  EXPECT_THROW(lepf::diagnostics_from_group_weights({}, 3), lepf::ValidationError);
}

TEST(RunReplicates, Deterministic) {
  lepf::RunConfig config;
  config.model = std::make_shared<FiniteFilterModel>(three_state());
  config.scheme = InteractionScheme::lepf(3, 1);
  config.groups = 4;
  config.steps = 6;
  config.replicates = 40;
  config.seed = 14;
  config.threads = 1;
  std::ostringstream serial;
  lepf::write_records_csv(lepf::run_replicates(config), serial);
  std::ostringstream again;
  lepf::write_records_csv(lepf::run_replicates(config), again);
  config.threads = 4;
  std::ostringstream parallel;
  lepf::write_records_csv(lepf::run_replicates(config), parallel);
  EXPECT_EQ(serial.str(), again.str());
  EXPECT_EQ(serial.str(), parallel.str());
  config.seed = 15;
  std::ostringstream other;
  lepf::write_records_csv(lepf::run_replicates(config), other);
  EXPECT_NE(serial.str(), other.str());
}

TEST(RunReplicates, OrderAndEssBound) {
  lepf::RunConfig config;
  config.model = std::make_shared<FiniteFilterModel>(lepf::binary_toy(0.25, 0.01));
  config.scheme = InteractionScheme::lepf(4, 2);
  config.groups = 5;
  config.steps = 30;
  config.replicates = 20;
  config.seed = 16;
  const auto records = lepf::run_replicates(config);
  ASSERT_EQ(records.size(), 20u * 31u);
  for (std::size_t k = 0; k < records.size(); ++k) {
    EXPECT_EQ(records[k].replicate, k / 31);
    EXPECT_EQ(records[k].n, static_cast<int>(k % 31));
    EXPECT_GE(records[k].ess * config.groups, 1.0 - 1e-12);
  }
}

TEST(RunReplicates, GaussianToyMeanAtZero) {
  lepf::RunConfig config;
  config.model = std::make_shared<lepf::ObservedModel>(lepf::gaussian_toy(), std::vector<double>{});
  config.scheme = InteractionScheme::lepf(5, 1);
  config.groups = 4;
  config.steps = 0;
  config.replicates = 10000;
  config.seed = 17;
  double mean = 0.0;
  for (const auto& r : lepf::run_replicates(config)) mean += r.estimate / 10000.0;
  EXPECT_NEAR(mean, 0.0, 3.0 / std::sqrt(20.0 * 10000.0));
}

TEST(RunReplicates, RejectsBadConfig) {
  Eigen::VectorXd pi0 = Eigen::VectorXd::Constant(2, 0.5);
  std::vector<Eigen::VectorXd> g(3, Eigen::VectorXd::Ones(2));
  lepf::RunConfig config;
  config.model = std::make_shared<FiniteFilterModel>(FiniteHmm(pi0, Eigen::MatrixXd::Identity(2, 2), g));
  config.scheme = InteractionScheme::ibpf(2);
  config.groups = 2;
  config.steps = 5;
  EXPECT_THROW(lepf::run_replicates(config), lepf::ValidationError);
  config.steps = 2;
  config.replicates = 0;
  EXPECT_THROW(lepf::run_replicates(config), lepf::ValidationError);
  config.replicates = 1;
  config.model = nullptr;
  EXPECT_THROW(lepf::run_replicates(config), lepf::ValidationError);
}

TEST(SeedSurgery, IbpfGroupsUseOnlyTheirOwnStreams) {
  const FiniteFilterModel model(three_state());
  const int m_size = 4;
  const int groups = 3;
  std::vector<std::uint64_t> salts(static_cast<std::size_t>(m_size * groups), 0);
  for (int i = 2 * m_size; i < 3 * m_size; ++i) salts[static_cast<std::size_t>(i)] = 99;
  const auto scheme = InteractionScheme::ibpf(m_size);
  const auto base = run_steps(model, scheme, groups, 8, RngStream(18));
  const auto salted = run_steps(model, scheme, groups, 8, RngStream(18, salts));
  bool last_changed = false;
  for (int i = 0; i < m_size * groups; ++i) {
    if (i < 2 * m_size) {
      EXPECT_EQ(base.positions()[i], salted.positions()[i]);
      const double a = std::log(base.weights()[i]) + base.log_offset();
      const double b = std::log(salted.weights()[i]) + salted.log_offset();
      EXPECT_NEAR(a, b, 1e-12);
    } else if (base.positions()[i] != salted.positions()[i]) {
      last_changed = true;
    }
  }
  EXPECT_TRUE(last_changed);
}

TEST(SeedSurgery, LepfGroupsInteract) {
  // Group 1 draws from particles of group 2, so its weight feels group 2's randomness.
  const FiniteFilterModel model(three_state());
  std::vector<std::uint64_t> salts(12, 0);
  for (int i = 8; i < 12; ++i) salts[static_cast<std::size_t>(i)] = 99;
  const auto scheme = InteractionScheme::lepf(4, 1);
  const auto base = run_steps(model, scheme, 3, 8, RngStream(18));
  const auto salted = run_steps(model, scheme, 3, 8, RngStream(18, salts));
  const double a = std::log(base.group_weight(1)) + base.log_offset();
  const double b = std::log(salted.group_weight(1)) + salted.log_offset();
  EXPECT_GT(std::abs(a - b), 1e-6);
}

}  // namespace
