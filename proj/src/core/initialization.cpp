#include "core/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "core/linalg.hpp"

namespace smmsep::init {

Posteriors Oracle(const ActivityMatrix& activity, Index bins) {
  const Index frames = activity.frames(), speakers = activity.speakers();
  Posteriors gamma(frames, bins, speakers + 1);
  Eigen::MatrixXd row(frames, speakers + 1);
  for (Index t = 0; t < frames; ++t) {
    double active = 1.0;  // noise
    for (Index k = 0; k < speakers; ++k) active += activity.active(t, k) ? 1.0 : 0.0;
    for (Index k = 0; k < speakers; ++k) row(t, k) = activity.active(t, k) ? 1.0 / active : 0.0;
    row(t, speakers) = 1.0 / active;
  }
  for (Index f = 0; f < bins; ++f) gamma.bin(f) = row;
  return gamma;
}

Posteriors Dirichlet(Index frames, Index bins, const std::vector<double>& alpha, bool tied,
                     std::uint64_t seed) {
  const Index classes = static_cast<Index>(alpha.size());
  if (classes < 1) ThrowInvalid("dirichlet: alpha must not be empty");
  for (double a : alpha)
    if (!(a > 0.0)) ThrowInvalid("dirichlet: alpha entries must be positive");

  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> dists;
  for (double a : alpha) dists.emplace_back(a, 1.0);
  auto draw = [&](auto row) {
    double sum = 0.0;
    for (Index k = 0; k < classes; ++k) {
      row(k) = dists[static_cast<size_t>(k)](rng);
      sum += row(k);
    }
    if (!(sum > 0.0)) {
      row.setConstant(1.0 / static_cast<double>(classes));
      return;
    }
    row /= sum;
  };

  Posteriors gamma(frames, bins, classes);
  if (tied) {
    Eigen::MatrixXd pi(frames, classes);
    for (Index t = 0; t < frames; ++t) draw(pi.row(t));
    for (Index f = 0; f < bins; ++f) gamma.bin(f) = pi;
  } else {
    for (Index f = 0; f < bins; ++f) {
      auto g = gamma.bin(f);
      for (Index t = 0; t < frames; ++t) draw(g.row(t));
    }
  }
  return gamma;
}

std::vector<Eigen::MatrixXcd> FitSingleCacg(const cacgmm::ObservationModel& obs, FrameRange segment,
                                            int max_iterations, double tolerance) {
  if (segment.begin < 0 || segment.end > obs.frames() || segment.length() <= 0)
    ThrowInvalid("fit_single_cacg: segment [" + std::to_string(segment.begin) + ", " +
                 std::to_string(segment.end) + ") outside the observation");
  const Index m = obs.channels();
  const double dm = static_cast<double>(m);
  std::vector<Eigen::MatrixXcd> out(static_cast<size_t>(obs.bins()));
  for (Index f = 0; f < obs.bins(); ++f) {
    const auto phi = obs.features(f).middleRows(segment.begin, segment.length());
    const Eigen::VectorXd valid = obs.valid(f).segment(segment.begin, segment.length());
    const double mass = valid.sum();
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(m, m);
    if (mass > 0.0) {
      for (int it = 0; it < max_iterations; ++it) {
        const Eigen::LLT<Eigen::MatrixXcd> llt(b);
        const Eigen::MatrixXcd b_inv = llt.solve(Eigen::MatrixXcd::Identity(m, m));
        Eigen::VectorXd q = linalg::ConditionBound(b, b_inv) > linalg::kFeatureConditionLimit
                                ? linalg::QuadraticFormsByFactor(phi, llt.matrixL())
                                : Eigen::VectorXd(phi * linalg::QuadraticCoefficients(b_inv));
        q = q.cwiseMax(1e-300);
        const Eigen::VectorXd s = phi.transpose() * valid.cwiseQuotient(q);
        Eigen::MatrixXcd next = linalg::FeaturesToHermitian(s, m) * (dm / mass);
        linalg::RegularizeHermitian(next);
        const double change = (next - b).norm() / b.norm();
        b = std::move(next);
        if (change < tolerance) break;
      }
    }
    out[static_cast<size_t>(f)] = std::move(b);
  }
  return out;
}

double CorrelationMatrixDistance(const Eigen::MatrixXcd& b1, const Eigen::MatrixXcd& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    ThrowInvalid("correlation_matrix_distance: shape mismatch");
  const double n1 = b1.norm(), n2 = b2.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) ThrowInvalid("correlation_matrix_distance: zero matrix");
  const double tr = (b1 * b2).trace().real();
  return 1.0 - tr / (n1 * n2);
}

Eigen::MatrixXd PairwiseDistances(const std::vector<std::vector<Eigen::MatrixXcd>>& params) {
  const Index segments = static_cast<Index>(params.size());
  if (segments < 2) ThrowInvalid("pairwise_distances: need at least two segments");
  const Index bins = static_cast<Index>(params.front().size());
  if (bins < 1) ThrowInvalid("pairwise_distances: no frequencies");
  for (const auto& p : params)
    if (static_cast<Index>(p.size()) != bins)
      ThrowInvalid("pairwise_distances: segments have differing numbers of frequencies");

  // For Hermitian matrices tr(B1 B2) = sum_ij B1_ij conj(B2_ij), so the
  // normalised trace is a real inner product of the flattened matrices.
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(segments, segments);
  for (Index f = 0; f < bins; ++f) {
    const Index n = params[0][static_cast<size_t>(f)].size();
    Eigen::MatrixXd flat(2 * n, segments);
    for (Index l = 0; l < segments; ++l) {
      const auto& b = params[static_cast<size_t>(l)][static_cast<size_t>(f)];
      const double norm = b.norm();
      if (!(norm > 0.0))
        ThrowInvalid("pairwise_distances: zero parameter matrix for segment " + std::to_string(l));
      const Eigen::Map<const Eigen::VectorXcd> v(b.data(), n);
      flat.col(l).head(n) = v.real() / norm;
      flat.col(l).tail(n) = v.imag() / norm;
    }
    sim.noalias() += flat.transpose() * flat;
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(segments, segments) - sim / static_cast<double>(bins);
  d = 0.5 * (d + d.transpose()).eval();
  d.diagonal().setZero();
  return d;
}

std::vector<int> CompleteLinkage(const Eigen::MatrixXd& distances, Index num_clusters) {
  const Index n = distances.rows();
  if (distances.cols() != n) ThrowInvalid("complete_linkage: distance matrix must be square");
  if (num_clusters < 1 || num_clusters > n)
    ThrowInvalid("complete_linkage: num_clusters " + std::to_string(num_clusters) +
                 " outside [1, " + std::to_string(n) + "]");

  // Clusters are keyed by their lowest member index; d holds the complete
  // linkage distance between active representatives.
  Eigen::MatrixXd d = distances;
  std::vector<char> active(static_cast<size_t>(n), 1);
  std::vector<Index> parent(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;

  for (Index remaining = n; remaining > num_clusters; --remaining) {
    double best = std::numeric_limits<double>::infinity();
    Index bi = -1, bj = -1;
    for (Index i = 0; i < n; ++i) {
      if (!active[static_cast<size_t>(i)]) continue;
      for (Index j = i + 1; j < n; ++j) {
        if (!active[static_cast<size_t>(j)]) continue;
        if (d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) {  // only NaN distances left; merge the first active pair
      for (Index i = 0; i < n && bj < 0; ++i) {
        if (!active[static_cast<size_t>(i)]) continue;
        if (bi < 0) bi = i;
        else bj = i;
      }
    }
    for (Index x = 0; x < n; ++x) {
      if (!active[static_cast<size_t>(x)] || x == bi || x == bj) continue;
      const double v = std::max(d(bi, x), d(bj, x));
      d(bi, x) = d(x, bi) = v;
    }
    active[static_cast<size_t>(bj)] = 0;
    parent[static_cast<size_t>(bj)] = bi;
  }

  std::vector<int> cluster_of_rep(static_cast<size_t>(n), -1);
  int next_label = 0;
  for (Index i = 0; i < n; ++i)
    if (active[static_cast<size_t>(i)]) cluster_of_rep[static_cast<size_t>(i)] = next_label++;
  std::vector<int> labels(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index r = i;
    while (parent[static_cast<size_t>(r)] != r) r = parent[static_cast<size_t>(r)];
    labels[static_cast<size_t>(i)] = cluster_of_rep[static_cast<size_t>(r)];
  }
  return labels;
}

std::vector<FrameRange> SplitSegments(Index frames, Index segment_length) {
  if (segment_length < 1) ThrowInvalid("segment length must be >= 1");
  std::vector<FrameRange> out;
  for (Index b = 0; b < frames; b += segment_length)
    out.push_back({b, std::min(frames, b + segment_length)});
  return out;
}

Priors PriorsFromLabels(const SegmentLabeling& labeling, Index frames, Index classes) {
  Priors priors;
  priors.values.resize(frames, classes);
  const double other = classes > 1 ? (1.0 - kAssignedPrior) / static_cast<double>(classes - 1) : 0.0;
  const double assigned = classes > 1 ? kAssignedPrior : 1.0;
  for (size_t s = 0; s < labeling.segments.size(); ++s) {
    const auto& seg = labeling.segments[s];
    for (Index t = seg.begin; t < seg.end; ++t) {
      priors.values.row(t).setConstant(other);
      priors.values(t, labeling.labels[s]) = assigned;
    }
  }
  return priors;
}

ClusterInit ClusterInitialization(const cacgmm::ObservationModel& obs, Index segment_length,
                                  Index num_classes) {
  if (num_classes < 1) ThrowInvalid("cluster init: need at least one class");
  if (obs.frames() < segment_length)
    ThrowInvalid("cluster init: " + std::to_string(obs.frames()) +
                 " frames are fewer than one segment of " + std::to_string(segment_length));
  ClusterInit out;
  out.labeling.segments = SplitSegments(obs.frames(), segment_length);
  const Index segments = static_cast<Index>(out.labeling.segments.size());
  if (segments < num_classes || segments < 2)
    ThrowInvalid("cluster init: " + std::to_string(segments) + " segments cannot form " +
                 std::to_string(num_classes) + " clusters; use a shorter segment length");

  std::vector<std::vector<Eigen::MatrixXcd>> params;
  params.reserve(static_cast<size_t>(segments));
  for (const auto& seg : out.labeling.segments) params.push_back(FitSingleCacg(obs, seg));
  out.distances = PairwiseDistances(params);
  out.labeling.labels = CompleteLinkage(out.distances, num_classes);
  out.priors = PriorsFromLabels(out.labeling, obs.frames(), num_classes);
  return out;
}

}  // namespace smmsep::init
