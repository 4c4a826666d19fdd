// Complex angular central Gaussian mixture model with time-varying priors.
//
//   p(z_tf) = sum_k pi_tk A(z_tf; B_fk)
//   A(z; B) = (M-1)! / (2 pi^M det B) * (z^H B^-1 z)^-M
//
// Fitting is batch EM. The B update is one fixed-point step of the weighted
// Tyler-type estimator per iteration, using the outer product z z^H. Every
// updated B is Hermitian-symmetrised, eigenvalue floored and scaled to trace
// M (the density does not depend on the scale of B).
#pragma once

#include <functional>
#include <vector>

#include "core/types.hpp"

namespace smmsep::cacgmm {

inline constexpr int kDefaultIterations = 100;

// log((M-1)! / (2 pi^M)).
double LogNormalizer(Index channels);

// log A(z; B) for a unit vector z. Throws if B is not positive definite.
double CacgLogPdf(const Eigen::Ref<const Eigen::VectorXcd>& z, const Eigen::MatrixXcd& b);

struct MixtureState {
  Priors priors;
  ParameterSet parameters;
  Posteriors posteriors;
  std::vector<double> log_likelihood_trace;

  Index classes() const { return priors.classes(); }
};

struct StepDiagnostics {
  Index underflow_bins = 0;      // bins where every class had zero weight
  Index frozen_parameters = 0;   // (f, k) pairs without responsibility mass
  Index floored_parameters = 0;  // (f, k) pairs where the eigenvalue floor was active
  Index rejected_permutations = 0;
};

// Observations with per-frequency real features of z z^H, computed once and
// reused by every EM step.
class ObservationModel {
 public:
  explicit ObservationModel(const DirectionalObservations& z);

  Index frames() const { return frames_; }
  Index bins() const { return bins_; }
  Index channels() const { return channels_; }

  // T x M^2 features of bin f.
  const Eigen::MatrixXd& features(Index f) const { return features_[static_cast<size_t>(f)]; }
  // 1 for usable frames of bin f, 0 for zero-norm frames.
  const Eigen::VectorXd& valid(Index f) const { return valid_[static_cast<size_t>(f)]; }
  Index valid_count(Index f) const { return valid_counts_[static_cast<size_t>(f)]; }

 private:
  Index frames_ = 0, bins_ = 0, channels_ = 0;
  std::vector<Eigen::MatrixXd> features_;
  std::vector<Eigen::VectorXd> valid_;
  std::vector<Index> valid_counts_;
};

// Posterior update. Masked bins receive uniform posteriors and do not count
// towards the log-likelihood written to *log_likelihood.
Posteriors EStep(const ObservationModel& obs, const Priors& priors, const ParameterSet& params,
                 double* log_likelihood = nullptr, StepDiagnostics* diag = nullptr);

// pi_tk = mean over frequencies of gamma_tfk.
Priors MStepPriors(const Posteriors& gamma);
// Same, averaging only over bins that are not masked in obs.
Priors MStepPriors(const Posteriors& gamma, const ObservationModel& obs);

// One fixed-point step for every B_fk, starting from prev. (f, k) pairs
// without responsibility mass keep their previous value.
ParameterSet MStepParameters(const ObservationModel& obs, const Posteriors& gamma,
                             const ParameterSet& prev, StepDiagnostics* diag = nullptr);

double LogLikelihood(const ObservationModel& obs, const Priors& priors, const ParameterSet& params);

struct FitOptions {
  int iterations = kDefaultIterations;
  bool align_permutations = true;
  // Hook fires after the listed (1-based) iterations, after permutation
  // alignment. It may change the number of classes.
  std::vector<int> hook_iterations;
  std::function<void(int iteration, MixtureState& state)> hook;
};

struct FitResult {
  MixtureState state;
  StepDiagnostics diagnostics;
};

// EM from initial posteriors: the first step is an M-step with B = I.
FitResult Fit(const ObservationModel& obs, const Posteriors& init, const FitOptions& options);
// Frequency-tied initialisation: gamma_init(t, f, k) = pi_init(t, k).
FitResult Fit(const ObservationModel& obs, const Priors& init, const FitOptions& options);

Posteriors BroadcastPriors(const Priors& priors, Index bins);

}  // namespace smmsep::cacgmm
