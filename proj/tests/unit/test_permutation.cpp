#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "core/permutation.hpp"
#include "support/oracles.hpp"

namespace smmsep {
namespace {

using testing::Rng;

// Block activity profiles shared by all bins, with per-bin noise.
Posteriors StructuredPosteriors(Index frames, Index bins, Index classes, Rng& rng, double noise = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, classes - 1);
  Eigen::MatrixXd base = Eigen::MatrixXd::Constant(frames, classes, 0.05);
  for (Index t = 0; t < frames; t += 10) {
    const Index k = pick(rng);
    base.block(t, k, std::min<Index>(10, frames - t), 1).array() += 1.0;
  }
  Posteriors g(frames, bins, classes);
  for (Index f = 0; f < bins; ++f) {
    for (Index t = 0; t < frames; ++t) {
      double s = 0.0;
      for (Index k = 0; k < classes; ++k) s += (g(t, f, k) = base(t, k) + noise * u(rng));
      for (Index k = 0; k < classes; ++k) g(t, f, k) /= s;
    }
  }
  return g;
}

permutation::PermutationMap RandomMap(Index bins, int classes, Rng& rng) {
  permutation::PermutationMap map;
  std::vector<int> p(static_cast<size_t>(classes));
  for (Index f = 0; f < bins; ++f) {
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    map.perm.push_back(p);
  }
  return map;
}

TEST(Align, AlignedInputGivesIdentity) {
  Rng rng(1);
  const auto g = StructuredPosteriors(200, 12, 4, rng, 0.0);
  const auto r = permutation::AlignFrequencies(g);
  for (Index f = 0; f < 12; ++f) EXPECT_TRUE(r.map.IsIdentity(f));
}

TEST(Align, SingleBinGivesIdentity) {
  Rng rng(2);
  const auto g = testing::RandomPosteriors(50, 1, 3, rng);
  const auto r = permutation::AlignFrequencies(g);
  ASSERT_EQ(r.map.perm.size(), 1u);
  EXPECT_TRUE(r.map.IsIdentity(0));
}

TEST(Align, RecoversKnownPermutations) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Index bins = 30;
    const int classes = 5;
    const auto g = StructuredPosteriors(300, bins, classes, rng);
    const auto scramble = RandomMap(bins, classes, rng);
    const auto scrambled = permutation::ApplyPermutation(g, scramble);
    const auto r = permutation::AlignFrequencies(scrambled);
    const auto restored = permutation::ApplyPermutation(scrambled, r.map);
    // Up to one relabeling common to all bins, the original is recovered.
    std::vector<int> global(classes);
    for (int k = 0; k < classes; ++k) global[k] = scramble.perm[0][r.map.perm[0][k]];
    for (Index f = 0; f < bins; ++f)
      for (int k = 0; k < classes; ++k)
        EXPECT_EQ(scramble.perm[f][r.map.perm[f][k]], global[k]) << "seed " << seed << " bin " << f;
    for (Index f = 0; f < bins; ++f)
      for (int k = 0; k < classes; ++k)
        EXPECT_EQ(restored.bin(f).col(k), g.bin(f).col(global[k]));
  }
}

TEST(Align, IsPureReindexingIdempotentAndMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    const auto g = permutation::ApplyPermutation(StructuredPosteriors(150, 20, 4, rng, 1.0),
                                                 RandomMap(20, 4, rng));
    const auto r = permutation::AlignFrequencies(g);
    for (size_t i = 1; i < r.objective_trace.size(); ++i)
      EXPECT_GE(r.objective_trace[i], r.objective_trace[i - 1] - 1e-9);
    const auto once = permutation::ApplyPermutation(g, r.map);
    for (Index f = 0; f < 20; ++f) {
      for (Index t = 0; t < 150; ++t) {
        std::vector<double> a(4), b(4);
        for (Index k = 0; k < 4; ++k) {
          a[k] = g(t, f, k);
          b[k] = once(t, f, k);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
      }
    }
    if (r.rounds < permutation::kMaxRounds) {
      const auto again = permutation::AlignFrequencies(once);
      for (Index f = 0; f < 20; ++f) EXPECT_TRUE(again.map.IsIdentity(f)) << "seed " << seed;
    }
  }
}

std::vector<int> FirstMaximiser(const Eigen::MatrixXd& s) {
  const auto perms = testing::AllPermutations(static_cast<int>(s.rows()));
  std::vector<int> best;
  double best_v = 0.0;
  for (const auto& p : perms) {
    double v = 0.0;
    for (size_t k = 0; k < p.size(); ++k) v += s(static_cast<Index>(k), p[k]);
    if (best.empty() || v > best_v + 1e-12) {
      best = p;
      best_v = v;
    }
  }
  return best;
}

TEST(BestPermutation, TiesGoToTheLexicographicallyFirst) {
  EXPECT_EQ(permutation::BestPermutation(Eigen::MatrixXd::Zero(4, 4)), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(permutation::BestPermutation(Eigen::MatrixXd::Ones(3, 3)), (std::vector<int>{0, 1, 2}));
  Eigen::Matrix3d s;
  s << 0, 1, 1, 1, 0, 1, 1, 1, 0;  // [1,2,0] and [2,0,1] tie
  EXPECT_EQ(permutation::BestPermutation(s), (std::vector<int>{1, 2, 0}));
  Rng rng(3);
  std::uniform_int_distribution<int> level(0, 2);
  for (int n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::MatrixXd m(n, n);
      for (Index i = 0; i < m.size(); ++i) m(i) = 0.5 * level(rng);
      EXPECT_EQ(permutation::BestPermutation(m), FirstMaximiser(m));
    }
  }
}

TEST(BestPermutation, LargeProblemsReachTheOptimum) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 9;
  const auto perms = testing::AllPermutations(n);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::MatrixXd m(n, n);
    for (Index i = 0; i < m.size(); ++i) m(i) = u(rng);
    double best = -1e300;
    for (const auto& p : perms) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += m(k, p[k]);
      best = std::max(best, v);
    }
    const auto got = permutation::BestPermutation(m);
    double v = 0.0;
    for (int k = 0; k < n; ++k) v += m(k, got[k]);
    EXPECT_NEAR(v, best, 1e-12);
  }
}

}  // namespace
}  // namespace smmsep
