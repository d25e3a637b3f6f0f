#include <gtest/gtest.h>

#include <sstream>

#include <lepf/errors.hpp>
#include <lepf/interaction.hpp>

namespace {

using lepf::InteractionScheme;
using lepf::Label;

TEST(Cmod, MatchesDefinition) {
  EXPECT_EQ(lepf::cmod(1, 9), 1);
  EXPECT_EQ(lepf::cmod(9, 9), 9);
  EXPECT_EQ(lepf::cmod(10, 9), 1);
  EXPECT_EQ(lepf::cmod(0, 9), 9);
  EXPECT_EQ(lepf::cmod(-8, 9), 1);
  EXPECT_EQ(lepf::cmod(-9, 9), 9);
  for (Label y = -40; y <= 40; ++y) {
    for (Label x = 1; x <= 7; ++x) {
      Label floor = 0;
      while (floor * x > y - 1) --floor;
      while ((floor + 1) * x <= y - 1) ++floor;
      EXPECT_EQ(lepf::cmod(y, x), y - floor * x) << y << " " << x;
    }
  }
}

TEST(Scheme, Validation) {
  EXPECT_THROW(InteractionScheme::lepf(1, 1), lepf::ValidationError);
  EXPECT_THROW(InteractionScheme::lepf(3, 0), lepf::ValidationError);
  EXPECT_THROW(InteractionScheme::lepf(3, 3), lepf::ValidationError);
  EXPECT_THROW(InteractionScheme::ibpf(0), lepf::ValidationError);
  EXPECT_EQ(InteractionScheme::lepf(3, 2).band(), 4);
  EXPECT_EQ(InteractionScheme::ibpf(3).band(), 2);
}

TEST(BuildAlpha, LepfNineByNine) {
  const double w = 1.0 / 3.0;
  Eigen::MatrixXd expected(9, 9);
  expected << 0, w, w, w, 0, 0, 0, 0, 0,  //
      0, w, w, w, 0, 0, 0, 0, 0,          //
      0, w, w, w, 0, 0, 0, 0, 0,          //
      0, 0, 0, 0, w, w, w, 0, 0,          //
      0, 0, 0, 0, w, w, w, 0, 0,          //
      0, 0, 0, 0, w, w, w, 0, 0,          //
      w, 0, 0, 0, 0, 0, 0, w, w,          //
      w, 0, 0, 0, 0, 0, 0, w, w,          //
      w, 0, 0, 0, 0, 0, 0, w, w;
  const auto alpha = lepf::build_alpha(InteractionScheme::lepf(3, 1), 3);
  EXPECT_EQ((alpha.dense() - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildAlpha, IbpfBlockDiagonal) {
  const auto dense = lepf::build_alpha(InteractionScheme::ibpf(3), 3).dense();
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) EXPECT_EQ(dense(i, j), i / 3 == j / 3 ? 1.0 / 3.0 : 0.0);
  }
  EXPECT_EQ(lepf::build_alpha(InteractionScheme::ibpf(1), 2).dense(), Eigen::MatrixXd::Identity(2, 2));
}

TEST(BuildAlpha, MatchesIndicatorFormula) {
  for (int m_size = 1; m_size <= 5; ++m_size) {
    for (int theta = 0; theta < m_size; ++theta) {
      const auto scheme = theta == 0 ? InteractionScheme::ibpf(m_size) : InteractionScheme::lepf(m_size, theta);
      for (int groups = 1; groups <= 6; ++groups) {
        const auto alpha = lepf::build_alpha(scheme, groups);
        const Label n = alpha.size();
        for (Label i = 1; i <= n; ++i) {
          for (Label j = 1; j <= n; ++j) EXPECT_EQ(alpha.weight(i, j), lepf::alpha_formula(scheme, n, i, j));
        }
      }
    }
  }
}

TEST(BuildAlpha, RowsAndColumnsHaveMEntries) {
  for (int m_size = 1; m_size <= 5; ++m_size) {
    for (int theta = 0; theta < m_size; ++theta) {
      const auto scheme = theta == 0 ? InteractionScheme::ibpf(m_size) : InteractionScheme::lepf(m_size, theta);
      for (int groups = 1; groups <= 8; ++groups) {
        const Eigen::MatrixXd d = lepf::build_alpha(scheme, groups).dense();
        const Eigen::MatrixXd expected = Eigen::MatrixXd::Constant(1, d.cols(), m_size);
        EXPECT_EQ((d.array() > 0).cast<double>().colwise().sum().matrix(), expected);
        EXPECT_EQ((d.array() > 0).cast<double>().rowwise().sum().transpose().matrix(), expected);
        EXPECT_TRUE(((d.array() == 0) || (d.array() == 1.0 / m_size)).all());
      }
    }
  }
}

TEST(DeltaMetric, Values) {
  EXPECT_EQ(lepf::delta_metric(4, 4, 8), 0);
  EXPECT_EQ(lepf::delta_metric(1, 8, 8), 1);
  EXPECT_EQ(lepf::delta_metric(2, 5, 8), 3);
  EXPECT_EQ(lepf::delta_metric(5, 2, 8), 3);
}

TEST(AlphaInfinity, Windows) {
  auto w = lepf::alpha_infinity_row(InteractionScheme::lepf(3, 1), 1);
  EXPECT_EQ(w.first, 2);
  EXPECT_EQ(w.size, 3);
  EXPECT_DOUBLE_EQ(w.weight, 1.0 / 3.0);
  EXPECT_EQ(lepf::alpha_infinity_row(InteractionScheme::ibpf(3), 1).first, 1);
  for (const auto& scheme : {InteractionScheme::lepf(4, 3), InteractionScheme::ibpf(2)}) {
    for (Label i = -20; i <= 20; ++i) {
      const Label m = scheme.group_size();
      EXPECT_EQ(lepf::alpha_infinity_row(scheme, i + m).first, lepf::alpha_infinity_row(scheme, i).first + m);
    }
  }
}

TEST(AlphaInfinity, InteriorRowsReproduceFiniteMatrix) {
  const auto scheme = InteractionScheme::lepf(3, 2);
  const auto alpha = lepf::build_alpha(scheme, 6);
  const Label n = alpha.size();
  const Label beta = scheme.band();
  for (Label i = beta + 1; i <= n - beta; ++i) {
    for (Label j = 1; j <= n; ++j) EXPECT_EQ(lepf::alpha_infinity(scheme, i, j), alpha.weight(i, j)) << i << "," << j;
  }
}

TEST(VerifyAssumptions, PassForBothSchemes) {
  for (int m_size = 1; m_size <= 5; ++m_size) {
    for (int theta = 0; theta < m_size; ++theta) {
      const auto scheme = theta == 0 ? InteractionScheme::ibpf(m_size) : InteractionScheme::lepf(m_size, theta);
      for (int groups = 1; groups <= 8; ++groups) {
        const auto report = lepf::verify_assumptions(lepf::build_alpha(scheme, groups), scheme);
        EXPECT_EQ(report.checks.size(), 4u);
        EXPECT_TRUE(report.all_passed()) << scheme.describe() << " m=" << groups;
      }
    }
  }
}

TEST(VerifyAssumptions, FigureInstancesApplyFully) {
  for (const auto& [scheme, groups] : {std::pair{InteractionScheme::lepf(3, 1), 3},
                                       std::pair{InteractionScheme::ibpf(2), 4}}) {
    const auto report = lepf::verify_assumptions(lepf::build_alpha(scheme, groups), scheme);
    for (const auto& c : report.checks) {
      EXPECT_TRUE(c.applicable) << c.name;
      EXPECT_TRUE(c.passed) << c.name;
    }
  }
}

TEST(VerifyAssumptions, PerturbedMatrixFailsWithWitness) {
  const auto scheme = InteractionScheme::lepf(3, 1);
  Eigen::MatrixXd d = lepf::build_alpha(scheme, 3).dense();
  d(0, 1) = 0.0;
  d(0, 0) = 1.0 / 3.0;
  const auto report = lepf::verify_assumptions(lepf::AlphaMatrix::from_dense(d), scheme);
  EXPECT_FALSE(report.all_passed());
  ASSERT_EQ(report.checks[0].name, "doubly_stochastic");
  EXPECT_FALSE(report.checks[0].passed);
  EXPECT_NE(report.checks[0].witness.find("column"), std::string::npos);
}

TEST(ParseAlpha, RoundTripAndErrors) {
  std::istringstream in("# ibpf M=2 m=1\n0.5,0.5\n0.5,0.5\n");
  const auto alpha = lepf::parse_alpha_matrix(in);
  EXPECT_EQ(alpha.size(), 2);
  EXPECT_EQ(alpha.weight(2, 1), 0.5);
  std::istringstream ragged("1,0\n1\n");
  EXPECT_THROW(lepf::parse_alpha_matrix(ragged), lepf::ValidationError);
  std::istringstream negative("-1,2\n2,-1\n");
  EXPECT_THROW(lepf::parse_alpha_matrix(negative), lepf::ValidationError);
  EXPECT_THROW(lepf::load_alpha_matrix("/nonexistent/alpha.csv"), lepf::ValidationError);
}

TEST(AlphaMatrix, RowRangeChecked) {
  const auto alpha = lepf::build_alpha(InteractionScheme::ibpf(2), 2);
  EXPECT_THROW(alpha.row(0), lepf::ValidationError);
  EXPECT_THROW(alpha.row(5), lepf::ValidationError);
}

}  // namespace
