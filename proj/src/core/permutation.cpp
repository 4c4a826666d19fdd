#include "core/permutation.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "core/linalg.hpp"

namespace smmsep::permutation {
namespace {

constexpr double kTieTolerance = 1e-12;

// Depth-first search over permutations in lexicographic order with an upper
// bound on the remaining rows. Only a strictly better score replaces the
// incumbent, so the lexicographically first maximiser is returned. `optimum`
// (the score of any maximiser) prunes subtrees that cannot reach it.
class LexicographicSearch {
 public:
  LexicographicSearch(const Eigen::MatrixXd& score, double optimum)
      : score_(score), n_(static_cast<int>(score.rows())), used_(static_cast<size_t>(n_), 0),
        current_(static_cast<size_t>(n_), 0), optimum_(optimum) {}

  std::vector<int> Run() {
    Recurse(0, 0.0);
    return best_;
  }

 private:
  double Bound(int row) const {
    double bound = 0.0;
    for (int r = row; r < n_; ++r) {
      double m = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < n_; ++c)
        if (!used_[static_cast<size_t>(c)]) m = std::max(m, score_(r, c));
      bound += m;
    }
    return bound;
  }

  void Recurse(int row, double partial) {
    if (row == n_) {
      if (best_.empty() || partial > best_score_ + kTieTolerance) {
        best_score_ = partial;
        best_ = current_;
      }
      return;
    }
    const double bound = partial + Bound(row);
    if (bound < optimum_ - kTieTolerance) return;
    if (!best_.empty() && bound <= best_score_ + kTieTolerance) return;
    for (int c = 0; c < n_; ++c) {
      if (used_[static_cast<size_t>(c)]) continue;
      used_[static_cast<size_t>(c)] = 1;
      current_[static_cast<size_t>(row)] = c;
      Recurse(row + 1, partial + score_(row, c));
      used_[static_cast<size_t>(c)] = 0;
    }
  }

  const Eigen::MatrixXd& score_;
  int n_;
  std::vector<char> used_;
  std::vector<int> current_;
  std::vector<int> best_;
  double optimum_;
  double best_score_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

bool PermutationMap::IsIdentity(Index f) const {
  const auto& p = perm[static_cast<size_t>(f)];
  for (size_t k = 0; k < p.size(); ++k)
    if (p[k] != static_cast<int>(k)) return false;
  return true;
}

PermutationMap Identity(Index bins, Index classes) {
  PermutationMap map;
  std::vector<int> id(static_cast<size_t>(classes));
  std::iota(id.begin(), id.end(), 0);
  map.perm.assign(static_cast<size_t>(bins), id);
  return map;
}

std::vector<int> BestPermutation(const Eigen::MatrixXd& score) {
  if (score.rows() != score.cols()) ThrowInvalid("BestPermutation: score must be square");
  auto assignment = linalg::MaxAssignment(score);
  if (score.rows() > kExhaustiveLimit) return assignment;
  double optimum = 0.0;
  for (Index r = 0; r < score.rows(); ++r) optimum += score(r, assignment[static_cast<size_t>(r)]);
  auto lexicographic = LexicographicSearch(score, optimum).Run();
  return lexicographic.empty() ? assignment : lexicographic;
}

AlignResult AlignFrequencies(const Posteriors& gamma, int max_rounds) {
  const Index frames = gamma.frames(), bins = gamma.bins(), classes = gamma.classes();
  AlignResult result;
  result.map = Identity(bins, classes);
  if (bins <= 1 || classes <= 1 || frames < 2) return result;

  // Profiles are the posterior columns standardised to zero mean and unit
  // norm. They are applied implicitly through per-column means and inverse
  // norms instead of being copied.
  Eigen::MatrixXd mean(classes, bins), inv_norm(classes, bins);
  for (Index f = 0; f < bins; ++f) {
    const auto g = gamma.bin(f);
    for (Index k = 0; k < classes; ++k) {
      const double m = g.col(k).mean();
      const double n = (g.col(k).array() - m).matrix().norm();
      mean(k, f) = m;
      inv_norm(k, f) = n > 1e-12 ? 1.0 / n : 0.0;
    }
  }

  auto normalize = [&](Eigen::MatrixXd& c) {
    for (Index k = 0; k < classes; ++k) {
      const double n = c.col(k).norm();
      if (n > 0.0) c.col(k) /= n;
    }
  };

  Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(frames, classes);
  for (Index f = 0; f < bins; ++f) {
    const auto g = gamma.bin(f);
    for (Index k = 0; k < classes; ++k) centroid.col(k) += (g.col(k).array() - mean(k, f)).matrix() * inv_norm(k, f);
  }
  normalize(centroid);

  // Each round scores every bin against the current centroids and accumulates
  // the next centroids from the new assignment in the same pass.
  Eigen::MatrixXd next(frames, classes);
  Eigen::VectorXd offset(classes);
  for (int round = 0; round < max_rounds; ++round) {
    bool changed = false;
    double objective = 0.0;
    next.setZero();
    offset.setZero();
    const Eigen::VectorXd centroid_sum = centroid.colwise().sum().transpose();
    for (Index f = 0; f < bins; ++f) {
      const auto g = gamma.bin(f);
      Eigen::MatrixXd score = centroid.transpose() * g;
      score -= centroid_sum * mean.col(f).transpose();
      score *= inv_norm.col(f).asDiagonal();
      auto best = BestPermutation(score);
      for (Index k = 0; k < classes; ++k) {
        const Index src = best[static_cast<size_t>(k)];
        objective += score(k, src);
        next.col(k) += g.col(src) * inv_norm(src, f);
        offset(k) += mean(src, f) * inv_norm(src, f);
      }
      if (best != result.map.perm[static_cast<size_t>(f)]) {
        result.map.perm[static_cast<size_t>(f)] = std::move(best);
        changed = true;
      }
    }
    for (Index k = 0; k < classes; ++k) next.col(k).array() -= offset(k);
    result.objective_trace.push_back(objective);
    result.rounds = round + 1;
    if (!changed) break;
    centroid.swap(next);
    normalize(centroid);
  }
  return result;
}

Posteriors ApplyPermutation(const Posteriors& gamma, const PermutationMap& map) {
  Posteriors out(gamma.frames(), gamma.bins(), gamma.classes());
  for (Index f = 0; f < gamma.bins(); ++f) {
    const auto& p = map.perm[static_cast<size_t>(f)];
    const auto in = gamma.bin(f);
    auto dst = out.bin(f);
    for (Index k = 0; k < gamma.classes(); ++k) dst.col(k) = in.col(p[static_cast<size_t>(k)]);
  }
  return out;
}

}  // namespace smmsep::permutation
