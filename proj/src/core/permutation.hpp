// Frequency permutation alignment of class posteriors.
//
// Each class of each frequency is summarised by its standardised time
// profile (zero mean, unit norm). Per class a centroid is the normalised sum
// of the aligned profiles over frequencies. Rounds alternate between choosing,
// for every frequency, the permutation with the largest summed correlation to
// the centroids, and recomputing the centroids. Both steps increase the total
// correlation, so the objective trace is non-decreasing.
#pragma once

#include <vector>

#include "core/types.hpp"

namespace smmsep::permutation {

inline constexpr int kMaxRounds = 20;
// Up to this many classes the best permutation is found by enumeration in
// lexicographic order (first maximum wins); above it by the Hungarian method.
inline constexpr Index kExhaustiveLimit = 8;

// perm[f][k] is the input class that becomes class k at frequency f.
struct PermutationMap {
  std::vector<std::vector<int>> perm;

  bool IsIdentity(Index f) const;
};

struct AlignResult {
  PermutationMap map;
  std::vector<double> objective_trace;  // after every assignment step
  int rounds = 0;
};

AlignResult AlignFrequencies(const Posteriors& gamma, int max_rounds = kMaxRounds);

// aligned(t, f, k) = gamma(t, f, perm[f][k]).
Posteriors ApplyPermutation(const Posteriors& gamma, const PermutationMap& map);

// Best permutation for a score matrix: result[k] = j maximising
// sum_k score(k, result[k]).
std::vector<int> BestPermutation(const Eigen::MatrixXd& score);

PermutationMap Identity(Index bins, Index classes);

}  // namespace smmsep::permutation
