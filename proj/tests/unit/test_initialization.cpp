#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "core/initialization.hpp"
#include "core/linalg.hpp"
#include "core/spectral.hpp"
#include "support/oracles.hpp"

namespace smmsep {
namespace {

using testing::Rng;

TEST(Oracle, ActivityRowsExamples) {
  ActivityMatrix a;
  a.active.resize(3, 2);
  a.active << false, true, false, false, true, true;
  const auto g = init::Oracle(a, 4);
  ASSERT_EQ(g.classes(), 3);
  const Eigen::Matrix3d expected =
      (Eigen::Matrix3d() << 0, 0.5, 0.5, 0, 0, 1, 1.0 / 3, 1.0 / 3, 1.0 / 3).finished();
  for (Index f = 0; f < 4; ++f) EXPECT_LT((g.bin(f) - Eigen::MatrixXd(expected)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dirichlet, RowsAreDistributionsAndTiedDrawsAreShared) {
  const std::vector<double> alpha(4, 1.0);
  const auto untied = init::Dirichlet(30, 5, alpha, false, 7);
  const auto tied = init::Dirichlet(30, 5, alpha, true, 7);
  for (Index f = 0; f < 5; ++f) {
    for (Index t = 0; t < 30; ++t) {
      EXPECT_NEAR(untied.bin(f).row(t).sum(), 1.0, 1e-9);
      EXPECT_GE(untied.bin(f).row(t).minCoeff(), 0.0);
      EXPECT_EQ(tied.bin(f).row(t), tied.bin(0).row(t));
    }
  }
  EXPECT_NE(untied.bin(1), untied.bin(0));
  EXPECT_EQ(init::Dirichlet(30, 5, alpha, false, 7).raw(), untied.raw());
  EXPECT_NE(init::Dirichlet(30, 5, alpha, false, 8).raw(), untied.raw());
}

TEST(Dirichlet, EmpiricalMeanIsUniform) {
  const auto g = init::Dirichlet(100000, 1, std::vector<double>(4, 1.0), false, 11);
  const Eigen::RowVectorXd mean = g.bin(0).colwise().mean();
  for (Index k = 0; k < 4; ++k) EXPECT_NEAR(mean(k), 0.25, 0.01 * 0.25);
}

TEST(Dirichlet, RejectsNonPositiveAlpha) {
  EXPECT_THROW(init::Dirichlet(3, 1, {1.0, 0.0}, false, 1), Error);
  EXPECT_THROW(init::Dirichlet(3, 1, {}, false, 1), Error);
}

DirectionalObservations FromVectors(const std::vector<Eigen::VectorXcd>& z) {
  DirectionalObservations obs;
  obs.data = ComplexTensor(static_cast<Index>(z.size()), 1, z.front().size());
  obs.zero_norm.assign(z.size(), 0);
  for (size_t t = 0; t < z.size(); ++t) obs.data.bin(0).col(static_cast<Index>(t)) = z[t];
  return obs;
}

TEST(SingleCacg, IdenticalVectorsGiveRankOneDirection) {
  Rng rng(1);
  const auto v = testing::RandomUnitVector(3, rng);
  const auto obs = FromVectors(std::vector<Eigen::VectorXcd>(20, v));
  const cacgmm::ObservationModel model(obs);
  const auto b = init::FitSingleCacg(model, {0, 20});
  const auto u = linalg::PrincipalEigenvector(b[0]);
  EXPECT_NEAR(std::abs(u.dot(v)), 1.0, 1e-12);  // 1 - cos^2 of the angle
  EXPECT_NEAR(b[0].trace().real(), 3.0, 1e-9);
}

TEST(SingleCacg, BasisVectorsGiveIdentity) {
  std::vector<Eigen::VectorXcd> z;
  for (int t = 0; t < 12; ++t) z.push_back(Eigen::VectorXcd::Unit(4, t % 4));
  const cacgmm::ObservationModel model(FromVectors(z));
  const auto b = init::FitSingleCacg(model, {0, 12});
  EXPECT_LT((b[0] - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-12);
}

TEST(SingleCacg, MatchesFixedPointOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = testing::RandomProblem(60, 3, 3, 1, 50 + seed);
    const cacgmm::ObservationModel model(p.z);
    const FrameRange seg{10, 40};
    const auto b = init::FitSingleCacg(model, seg);
    for (Index f = 0; f < 3; ++f) {
      std::vector<Eigen::VectorXcd> z;
      for (Index t = seg.begin; t < seg.end; ++t) z.push_back(p.z.data.bin(f).col(t));
      EXPECT_LT((b[f] - testing::NaiveSingleCacg(z, 100, 1e-6)).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(SingleCacg, ShortSegmentIsRegularized) {
  const auto p = testing::RandomProblem(10, 2, 4, 1, 3);
  const cacgmm::ObservationModel model(p.z);
  const auto b = init::FitSingleCacg(model, {0, 2});
  for (const auto& m : b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR(m.trace().real(), 4.0, 1e-9);
  }
  EXPECT_THROW(init::FitSingleCacg(model, {5, 12}), Error);
}

double DirectCmd(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  cdouble tr = 0.0;
  double na = 0.0, nb = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      tr += a(i, j) * b(j, i);
      na += std::norm(a(i, j));
      nb += std::norm(b(i, j));
    }
  }
  return 1.0 - tr.real() / std::sqrt(na * nb);
}

TEST(CorrelationMatrixDistance, ExamplesAndRange) {
  Rng rng(4);
  const auto b = testing::RandomHermitianPd(3, rng);
  EXPECT_NEAR(init::CorrelationMatrixDistance(b, b), 0.0, 1e-15);
  const Eigen::MatrixXcd e1 = Eigen::VectorXcd::Unit(2, 0) * Eigen::VectorXcd::Unit(2, 0).adjoint();
  const Eigen::MatrixXcd e2 = Eigen::VectorXcd::Unit(2, 1) * Eigen::VectorXcd::Unit(2, 1).adjoint();
  EXPECT_DOUBLE_EQ(init::CorrelationMatrixDistance(e1, e2), 1.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::MatrixXcd x = testing::RandomHermitianPd(4, rng), y = testing::RandomHermitianPd(4, rng);
    if (i % 3 == 0) {
      const auto v = testing::RandomUnitVector(4, rng);
      x = v * v.adjoint();
    }
    const double d = init::CorrelationMatrixDistance(x, y);
    EXPECT_NEAR(d, DirectCmd(x, y), 1e-12);
    EXPECT_GE(d, -1e-12);
    EXPECT_LE(d, 1.0 + 1e-12);
  }
  EXPECT_THROW(init::CorrelationMatrixDistance(Eigen::MatrixXcd::Zero(2, 2), e1), Error);
}

TEST(PairwiseDistances, MatchesDoubleLoop) {
  Rng rng(5);
  std::vector<std::vector<Eigen::MatrixXcd>> params(3, std::vector<Eigen::MatrixXcd>(6));
  for (auto& seg : params)
    for (auto& b : seg) b = testing::RandomHermitianPd(3, rng);
  const auto d = init::PairwiseDistances(params);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(d(i, i), 0.0);
    for (Index j = 0; j < 3; ++j) {
      EXPECT_EQ(d(i, j), d(j, i));
      if (i == j) continue;
      double sum = 0.0;
      for (size_t f = 0; f < 6; ++f) sum += DirectCmd(params[i][f], params[j][f]);
      EXPECT_NEAR(d(i, j), sum / 6.0, 1e-12);
    }
  }
}

TEST(PairwiseDistances, IdenticalAndOrthogonalSegments) {
  Rng rng(6);
  std::vector<Eigen::MatrixXcd> seg(4);
  for (auto& b : seg) b = testing::RandomHermitianPd(2, rng);
  EXPECT_TRUE(init::PairwiseDistances({seg, seg, seg}).isZero(1e-12));
  const Eigen::MatrixXcd e1 = Eigen::VectorXcd::Unit(2, 0) * Eigen::VectorXcd::Unit(2, 0).adjoint();
  const Eigen::MatrixXcd e2 = Eigen::VectorXcd::Unit(2, 1) * Eigen::VectorXcd::Unit(2, 1).adjoint();
  const auto d = init::PairwiseDistances({std::vector<Eigen::MatrixXcd>(4, e1), std::vector<Eigen::MatrixXcd>(4, e2)});
  EXPECT_NEAR(d(0, 1), 1.0, 1e-15);
}

TEST(CompleteLinkage, Examples) {
  Rng rng(7);
  const auto d = testing::RandomDistances(6, rng, false);
  const auto own = init::CompleteLinkage(d, 6);
  EXPECT_EQ(own, (std::vector<int>{0, 1, 2, 3, 4, 5}));

  Eigen::MatrixXd two = Eigen::MatrixXd::Zero(6, 6);
  const std::vector<int> group = {0, 1, 0, 1, 1, 0};
  std::uniform_real_distribution<double> intra(0.0, 0.1), inter(0.9, 1.0);
  for (Index i = 0; i < 6; ++i)
    for (Index j = i + 1; j < 6; ++j) two(i, j) = two(j, i) = group[i] == group[j] ? intra(rng) : inter(rng);
  EXPECT_EQ(init::CompleteLinkage(two, 2), group);

  EXPECT_THROW(init::CompleteLinkage(d, 7), Error);
  EXPECT_THROW(init::CompleteLinkage(d, 0), Error);
}

TEST(CompleteLinkage, MatchesNaiveReferenceIncludingTies) {
  Rng rng(8);
  std::uniform_int_distribution<Index> size(2, 12);
  for (int rep = 0; rep < 400; ++rep) {
    const Index n = size(rng);
    const auto d = testing::RandomDistances(n, rng, rep % 2 == 1);
    std::uniform_int_distribution<Index> clusters(1, n);
    const Index c = clusters(rng);
    const auto got = init::CompleteLinkage(d, c);
    EXPECT_EQ(got, testing::NaiveCompleteLinkage(d, c)) << "rep " << rep;
  }
}

TEST(CompleteLinkage, PermutationEquivariant) {
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 10;
    const auto d = testing::RandomDistances(n, rng, false);
    std::vector<Index> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    Eigen::MatrixXd dp(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) dp(i, j) = d(p[i], p[j]);
    const auto a = init::CompleteLinkage(d, 3);
    const auto b = init::CompleteLinkage(dp, 3);
    std::vector<int> a_perm(n);
    for (Index i = 0; i < n; ++i) a_perm[i] = a[p[i]];
    EXPECT_TRUE(testing::SamePartition(a_perm, b));
  }
}

TEST(SplitSegments, TilesTheFrames) {
  const auto s = init::SplitSegments(95, 30);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0], (FrameRange{0, 30}));
  EXPECT_EQ(s[3], (FrameRange{90, 95}));
  EXPECT_EQ(init::SplitSegments(90, 30).size(), 3u);
}

TEST(PriorsFromLabels, AssignedClassGetsPointEight) {
  init::SegmentLabeling lab{init::SplitSegments(70, 30), {2, 0, 1}};
  const auto pi = init::PriorsFromLabels(lab, 70, 3);
  for (Index t = 0; t < 70; ++t) {
    EXPECT_NEAR(pi.values.row(t).sum(), 1.0, 1e-15);
    EXPECT_EQ((pi.values.row(t).array() == 0.8).count(), 1);
  }
  EXPECT_EQ(pi.values(0, 2), 0.8);
  EXPECT_DOUBLE_EQ(pi.values(0, 0), 0.1);
  EXPECT_EQ(pi.values(69, 1), 0.8);
  // With K + 1 = 4 classes the remaining mass is 0.2 / K per class.
  const auto pi4 = init::PriorsFromLabels({init::SplitSegments(30, 30), {3}}, 30, 4);
  EXPECT_NEAR(pi4.values(0, 0), 0.2 / 3.0, 1e-15);
  EXPECT_NEAR(pi4.values.row(0).sum(), 1.0, 1e-15);
}

TEST(ClusterInitialization, SingleSourceSeparatesSpeechFromNoise) {
  // One directional source in the first half, diffuse noise in the second.
  Rng rng(10);
  const Index frames = 300, bins = 16, m = 3;
  ComplexTensor y(frames, bins, m);
  std::vector<Eigen::VectorXcd> steering;
  for (Index f = 0; f < bins; ++f) steering.push_back(testing::RandomUnitVector(m, rng));
  for (Index f = 0; f < bins; ++f) {
    for (Index t = 0; t < frames; ++t) {
      const auto noise = testing::RandomComplexGaussian(m, rng);
      y.bin(f).col(t) = t < 150 ? Eigen::VectorXcd(steering[f] * testing::RandomComplexGaussian(1, rng)(0) * 10.0 + 0.1 * noise)
                                : noise;
    }
  }
  const cacgmm::ObservationModel obs(spectral::NormalizeObservations(y));
  const auto ci = init::ClusterInitialization(obs, 30, 2);
  ASSERT_EQ(ci.labeling.labels.size(), 10u);
  for (int s = 1; s < 5; ++s) EXPECT_EQ(ci.labeling.labels[s], ci.labeling.labels[0]);
  for (int s = 6; s < 10; ++s) EXPECT_EQ(ci.labeling.labels[s], ci.labeling.labels[5]);
  EXPECT_NE(ci.labeling.labels[0], ci.labeling.labels[5]);
  for (Index t = 0; t < frames; ++t) {
    const double a = ci.priors.values(t, 0);
    EXPECT_TRUE(a == 0.8 || std::abs(a - 0.2) < 1e-15) << a;
    EXPECT_DOUBLE_EQ(ci.priors.values.row(t).sum(), 1.0);
  }
}

TEST(ClusterInitialization, TooFewSegmentsIsAnError) {
  const auto p = testing::RandomProblem(60, 2, 2, 1, 11);
  const cacgmm::ObservationModel obs(p.z);
  EXPECT_THROW(init::ClusterInitialization(obs, 30, 3), Error);
  EXPECT_THROW(init::ClusterInitialization(obs, 100, 2), Error);
  EXPECT_NO_THROW(init::ClusterInitialization(obs, 20, 3));
}

}  // namespace
}  // namespace smmsep
