// Initial posteriors/priors for the mixture model: oracle activities,
// Dirichlet draws (per bin or tied over frequency) and segment clustering.
#pragma once

#include <cstdint>
#include <vector>

#include "core/cacgmm.hpp"
#include "core/types.hpp"

namespace smmsep::init {

inline constexpr Index kDefaultSegmentLength = 30;
inline constexpr double kAssignedPrior = 0.8;
inline constexpr int kSingleCacgMaxIterations = 100;
inline constexpr double kSingleCacgTolerance = 1e-6;

// gamma(t, f, k) = a_tk / sum_kappa a_t,kappa with an always-active noise
// class appended as the last class.
Posteriors Oracle(const ActivityMatrix& activity, Index bins);

// Posteriors drawn from Dirichlet(alpha). With tied = true one draw per frame
// is shared by all frequencies.
Posteriors Dirichlet(Index frames, Index bins, const std::vector<double>& alpha, bool tied,
                     std::uint64_t seed);

// Single cACG per frequency fitted to the frames of `segment` by iterating
// the fixed-point update with unit responsibilities from B = I.
std::vector<Eigen::MatrixXcd> FitSingleCacg(const cacgmm::ObservationModel& obs, FrameRange segment,
                                            int max_iterations = kSingleCacgMaxIterations,
                                            double tolerance = kSingleCacgTolerance);

// 1 - Re tr(B1 B2) / (|B1|_F |B2|_F).
double CorrelationMatrixDistance(const Eigen::MatrixXcd& b1, const Eigen::MatrixXcd& b2);

// params[l][f] is the parameter of segment l at frequency f. Returns the
// frequency-averaged distance matrix.
Eigen::MatrixXd PairwiseDistances(const std::vector<std::vector<Eigen::MatrixXcd>>& params);

// Agglomerative complete-linkage clustering down to num_clusters clusters.
// Ties go to the lexicographically smallest pair of cluster representatives
// (lowest member index). Labels are 0-based and numbered by lowest member.
std::vector<int> CompleteLinkage(const Eigen::MatrixXd& distances, Index num_clusters);

struct SegmentLabeling {
  std::vector<FrameRange> segments;
  std::vector<int> labels;
};

struct ClusterInit {
  Priors priors;
  SegmentLabeling labeling;
  Eigen::MatrixXd distances;
};

// Contiguous non-overlapping segments of segment_length frames (the last one
// may be shorter).
std::vector<FrameRange> SplitSegments(Index frames, Index segment_length);

// Prior of 0.8 for the class of the frame's segment, 0.2 / (C - 1) elsewhere.
Priors PriorsFromLabels(const SegmentLabeling& labeling, Index frames, Index classes);

ClusterInit ClusterInitialization(const cacgmm::ObservationModel& obs, Index segment_length,
                                  Index num_classes);

}  // namespace smmsep::init
