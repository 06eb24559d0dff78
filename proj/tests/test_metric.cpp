#include <gtest/gtest.h>

#include "oracles.hpp"
#include "socm/errors.hpp"
#include "socm/metric.hpp"
#include "socm/stats.hpp"

using namespace socm;

namespace {

Eigen::VectorXd e(Eigen::Index d, Eigen::Index i) { return Eigen::VectorXd::Unit(d, i); }

GaussianSummary from_factor(const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor) {
  GaussianSummary g;
  g.mean = mean;
  g.factor = factor;
  g.trace = factor.squaredNorm();
  return g;
}

Eigen::MatrixXd random_list(std::mt19937_64& rng, Eigen::Index d, Eigen::Index n, double offset) {
  Eigen::MatrixXd x = oracle::gaussian(rng, d, n);
  x.colwise() += Eigen::VectorXd::Constant(d, offset);
  return x;
}

}  // namespace

TEST(DMu, Examples) {
  EXPECT_EQ(d_mu(e(3, 0), e(3, 0)), 0.0);
  EXPECT_EQ(d_mu(e(3, 0), -e(3, 0)), 1.0);
  EXPECT_DOUBLE_EQ(d_mu(e(3, 0), e(3, 1)), 0.5);
}

TEST(DMu, RequiresUnitNorm) {
  EXPECT_THROW((void)d_mu(2.0 * e(3, 0), e(3, 0)), PreconditionError);
  EXPECT_THROW((void)d_mu(e(3, 0), e(2, 0)), ShapeError);
  EXPECT_NO_THROW((void)d_mu((1.0 + 5e-7) * e(3, 0), e(3, 0)));
}

TEST(BuresWasserstein, Examples) {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd a(2, 2);
  a << 2, 0, 0, 0;
  Eigen::MatrixXd b(2, 2);
  b << 0, 0, 0, 2;
  Eigen::MatrixXd s(2, 2);
  s << 1.5, 0.3, 0.3, 0.5;
  EXPECT_NEAR(bures_wasserstein_dense(s, s), 0.0, 1e-14);
  EXPECT_NEAR(bures_wasserstein_dense(zero, Eigen::MatrixXd::Identity(2, 2)), 2.0, 1e-15);
  EXPECT_NEAR(bures_wasserstein_dense(a, b), 4.0, 1e-15);

  const auto ga = from_factor(e(2, 0), Eigen::Vector2d(std::sqrt(2.0), 0.0));
  const auto gb = from_factor(e(2, 0), Eigen::Vector2d(0.0, std::sqrt(2.0)));
  EXPECT_NEAR(bures_wasserstein_factored(ga, gb), 4.0, 1e-14);
}

TEST(BuresWasserstein, DenseMatchesEigenOracleFullRank) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index d = 1 + rep % 6;
    const Eigen::MatrixXd b1 = oracle::gaussian(rng, d, d + 3);
    const Eigen::MatrixXd b2 = oracle::gaussian(rng, d, d + 2);
    const Eigen::MatrixXd s1 = b1 * b1.transpose() / 7.0;
    const Eigen::MatrixXd s2 = b2 * b2.transpose() / 5.0;
    const double want = oracle::bures_eigs(s1, s2);
    EXPECT_NEAR(bures_wasserstein_dense(s1, s2), want, 1e-9 * (1.0 + want));
  }
}

TEST(BuresWasserstein, FactoredMatchesDense) {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index d = 2 + rep % 15;
    const auto g1 = summarize(random_list(rng, d, 1 + rep % 5, 0.2));
    const auto g2 = summarize(random_list(rng, d, 1 + (rep / 5) % 5, -0.1));
    EXPECT_NEAR(bures_wasserstein_factored(g1, g2),
                bures_wasserstein_dense(g1.covariance(), g2.covariance()), 1e-8);
  }
}

TEST(BuresWasserstein, SymmetricAndNonnegative) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g1 = summarize(random_list(rng, 8, 4, 0.0));
    const auto g2 = summarize(random_list(rng, 8, 6, 0.0));
    const double ab = bures_wasserstein_factored(g1, g2);
    EXPECT_NEAR(ab, bures_wasserstein_factored(g2, g1), 1e-12);
    EXPECT_GT(ab, -1e-12);
    EXPECT_NEAR(bures_wasserstein_factored(g1, g1), 0.0, 1e-12);
  }
}

TEST(BuresWasserstein, RejectsBadInput) {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW((void)bures_wasserstein_dense(asym, Eigen::MatrixXd::Identity(2, 2)), PreconditionError);
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW((void)bures_wasserstein_dense(neg, Eigen::MatrixXd::Identity(2, 2)), NumericError);
  EXPECT_THROW((void)bures_wasserstein_dense(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)),
               ShapeError);
}

TEST(DSigma, Examples) {
  const auto g = summarize(Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3) + Eigen::MatrixXd::Ones(3, 3)));
  const auto same = d_sigma(g, g);
  EXPECT_NEAR(same.value, 0.0, 1e-12);
  EXPECT_FALSE(same.clamped);

  const auto point = from_factor(e(2, 0), Eigen::MatrixXd::Zero(2, 1));
  const auto spread2 = from_factor(e(2, 0), Eigen::Vector2d(0.0, std::sqrt(2.0)));
  const auto ds = d_sigma(point, spread2);
  EXPECT_NEAR(ds.value, 0.5, 1e-15);
  EXPECT_FALSE(ds.clamped);
}

TEST(DSigma, ClampsAndFlags) {
  // traces 3 and 3 on orthogonal axes: raw = 6 / 4
  const auto g1 = from_factor(e(3, 0), Eigen::Vector3d(0.0, std::sqrt(3.0), 0.0));
  const auto g2 = from_factor(e(3, 0), Eigen::Vector3d(0.0, 0.0, std::sqrt(3.0)));
  const auto ds = d_sigma(g1, g2);
  EXPECT_TRUE(ds.clamped);
  EXPECT_DOUBLE_EQ(ds.raw, 1.5);
  EXPECT_EQ(ds.value, 1.0);
  const PairStats p = pair_stats(g1, g2);
  EXPECT_TRUE(p.clamped);
  EXPECT_EQ(p.socm, 1.0);
  EXPECT_DOUBLE_EQ(p.trace_sum, 6.0);
}

TEST(Socm, Examples) {
  EXPECT_EQ(socm::socm(0.0, 1.0), 1.0);
  EXPECT_EQ(socm::socm(1.0, 0.7), 0.0);
  EXPECT_EQ(socm::socm(0.5, 0.5), 0.25);
  EXPECT_THROW((void)socm::socm(-0.1, 0.5), PreconditionError);
  EXPECT_THROW((void)socm::socm(0.5, 1.1), PreconditionError);
  EXPECT_THROW((void)socm::socm(std::nan(""), 0.5), PreconditionError);
}

TEST(SocmPair, IdenticalIsZero) {
  std::mt19937_64 rng(24);
  const TokenMatrix x{0, random_list(rng, 6, 5, 0.5)};
  const PairStats p = socm_pair(x, x);
  EXPECT_NEAR(p.socm, 0.0, 1e-12);
  EXPECT_NEAR(p.d_mu, 0.0, 1e-15);
}

TEST(SocmPair, ScaleInvariant) {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 20; ++rep) {
    const TokenMatrix x1{0, random_list(rng, 6, 3 + rep % 4, 0.8)};
    const TokenMatrix x2{1, random_list(rng, 6, 2 + rep % 5, 0.8)};
    const PairStats a = socm_pair(x1, x2);
    const PairStats b = socm_pair(TokenMatrix{0, 3.0 * x1.values}, TokenMatrix{1, 0.2 * x2.values});
    EXPECT_NEAR(a.socm, b.socm, 1e-12);
    EXPECT_NEAR(a.d_mu, b.d_mu, 1e-12);
  }
}

TEST(SocmPair, ConcentratedListsStaySmall) {
  // both lists: mean e1 plus a small symmetric perturbation, concentration < 0.01
  Eigen::MatrixXd x1(3, 2);
  x1.col(0) = e(3, 0) + 0.09 * e(3, 1);
  x1.col(1) = e(3, 0) - 0.09 * e(3, 1);
  Eigen::MatrixXd x2(3, 2);
  x2.col(0) = e(3, 0) + 0.09 * e(3, 2);
  x2.col(1) = e(3, 0) - 0.09 * e(3, 2);
  ASSERT_LT(concentration(x1), 0.01);
  ASSERT_LT(concentration(x2), 0.01);
  EXPECT_LT(socm_pair(TokenMatrix{0, x1}, TokenMatrix{1, x2}).socm, 0.005);
}

TEST(SocmPair, DimensionMismatch) {
  EXPECT_THROW((void)socm_pair(TokenMatrix{0, Eigen::MatrixXd::Ones(2, 2)}, TokenMatrix{1, Eigen::MatrixXd::Ones(3, 2)}),
               ShapeError);
}

TEST(W2, Examples) {
  std::mt19937_64 rng(26);
  const auto g = summarize(normalize_list(random_list(rng, 5, 4, 1.0)));
  EXPECT_NEAR(w2_gaussian_squared(g, g), 0.0, 1e-12);
  const auto a = from_factor(e(3, 0), Eigen::MatrixXd::Zero(3, 1));
  const auto b = from_factor(-e(3, 0), Eigen::MatrixXd::Zero(3, 1));
  EXPECT_EQ(w2_gaussian_squared(a, b), 4.0);
}

TEST(W2, DecomposesIntoDistances) {
  std::mt19937_64 rng(27);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index d = 2 + rep % 20;
    const auto g1 = summarize(normalize_list(random_list(rng, d, 1 + rep % 8, 0.4)));
    const auto g2 = summarize(normalize_list(random_list(rng, d, 1 + (rep / 8) % 8, 0.4)));
    const PairStats p = pair_stats(g1, g2);
    EXPECT_NEAR(w2_gaussian_squared(g1, g2) / 4.0, p.d_mu + p.d_sigma_raw, 1e-8);
  }
}
