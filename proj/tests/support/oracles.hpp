// Independent brute-force references and random problem generators shared by
// the unit and acceptance tests. Everything here is written as plain loops
// without the feature/GEMM formulation used by the library.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "core/cacgmm.hpp"
#include "core/types.hpp"

namespace smmsep::testing {

using Rng = std::mt19937_64;

Eigen::VectorXcd RandomComplexGaussian(Index n, Rng& rng);
Eigen::VectorXcd RandomUnitVector(Index m, Rng& rng);
// Hermitian positive definite with eigenvalues in [0.05, 1] before scaling to
// trace m.
Eigen::MatrixXcd RandomHermitianPd(Index m, Rng& rng);
// Normalised complex Gaussian with covariance B: a cACG(B) sample.
Eigen::VectorXcd SampleCacg(const Eigen::MatrixXcd& b, Rng& rng);

// Observations drawn from a cACGMM with random B per (f, k) and Dirichlet
// priors per frame. masked_fraction of the bins are zeroed.
struct Problem {
  DirectionalObservations z;
  Priors priors;
  ParameterSet params;
};
Problem RandomProblem(Index frames, Index bins, Index channels, Index classes, std::uint64_t seed,
                      double masked_fraction = 0.0);

Posteriors RandomPosteriors(Index frames, Index bins, Index classes, Rng& rng);

// Scalar-loop EM of the cACGMM with time-varying priors.
struct NaiveState {
  // gamma[f][t][k], pi[t][k], b[f][k]
  std::vector<std::vector<std::vector<double>>> gamma;
  std::vector<std::vector<double>> pi;
  std::vector<std::vector<Eigen::MatrixXcd>> b;
  double log_likelihood = 0.0;
};

double NaiveLogPdf(const Eigen::VectorXcd& z, const Eigen::MatrixXcd& b);
// Symmetrise, floor eigenvalues at 1e-10 lambda_max, scale to trace M.
Eigen::MatrixXcd NaiveRegularize(const Eigen::MatrixXcd& b);
std::vector<std::vector<double>> NaivePriors(const DirectionalObservations& z,
                                             const std::vector<std::vector<std::vector<double>>>& gamma);
std::vector<std::vector<Eigen::MatrixXcd>> NaiveParameters(
    const DirectionalObservations& z, const std::vector<std::vector<std::vector<double>>>& gamma,
    const std::vector<std::vector<Eigen::MatrixXcd>>& prev);
// Returns the log-likelihood; fills gamma.
double NaiveEStep(const DirectionalObservations& z, const std::vector<std::vector<double>>& pi,
                  const std::vector<std::vector<Eigen::MatrixXcd>>& b,
                  std::vector<std::vector<std::vector<double>>>& gamma);
// One iteration per entry: priors, parameters, E-step, starting from gamma
// with B = I.
std::vector<NaiveState> NaiveFit(const DirectionalObservations& z, const Posteriors& init, int iterations);

std::vector<std::vector<std::vector<double>>> ToNested(const Posteriors& gamma);

// Fixed-point single cACG fit with unit weights until the relative change is
// below tol.
Eigen::MatrixXcd NaiveSingleCacg(const std::vector<Eigen::VectorXcd>& z, int max_iterations, double tol);

std::vector<double> NaiveDilate(const std::vector<double>& x, Index window);
std::vector<double> NaiveErode(const std::vector<double>& x, Index window);

// Complete linkage by rescanning all member pairs at every merge. Ties go to
// the pair of clusters with the smallest (lowest member, lowest member).
std::vector<int> NaiveCompleteLinkage(const Eigen::MatrixXd& d, Index num_clusters);
// True when a and b induce the same partition.
bool SamePartition(const std::vector<int>& a, const std::vector<int>& b);

// Random symmetric distance matrix with zero diagonal. With `quantized`,
// entries come from a small set so that ties occur.
Eigen::MatrixXd RandomDistances(Index n, Rng& rng, bool quantized);

// All permutations of 0..n-1 in lexicographic order.
std::vector<std::vector<int>> AllPermutations(int n);

// Randomised mixture state with classes >= 2 whose priors and posteriors are
// row-normalised and whose class activities overlap in blocks.
cacgmm::MixtureState RandomState(Index frames, Index bins, Index classes, Index channels, Rng& rng);

}  // namespace smmsep::testing
