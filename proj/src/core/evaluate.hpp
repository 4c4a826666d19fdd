// Separation and diarization metrics.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace smmsep::eval {

inline constexpr double kSiSdrCap = 60.0;

struct SiSdr {
  double db = 0.0;      // clamped to [-cap, cap]
  bool defined = true;  // false for a silent reference
};

// Scale-invariant SDR of zero-mean versions of both signals.
SiSdr ScaleInvariantSdr(const Eigen::Ref<const Eigen::VectorXd>& estimate,
                        const Eigen::Ref<const Eigen::VectorXd>& reference);

struct DerBreakdown {
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double speech = 0.0;  // total reference speaker-frames
  double der = 0.0;     // (miss + false alarm + confusion) / speech, clamped to [0, 1]
};

// Frame-level DER. mapping[k] is the estimated speaker matched to reference
// speaker k, or -1. Frame counts of the two matrices must agree.
DerBreakdown DiarizationError(const ActivityMatrix& reference, const ActivityMatrix& estimate,
                              const std::vector<int>& mapping);

struct EvalInput {
  std::vector<Eigen::VectorXd> references;  // per reference speaker (reference channel)
  std::vector<Eigen::VectorXd> estimates;   // per estimated speaker
  Eigen::VectorXd mixture;                  // reference channel of the mixture, optional
  ActivityMatrix reference_activity;
  ActivityMatrix estimated_activity;
};

struct EvalReport {
  std::vector<double> si_sdr;          // per reference speaker
  std::vector<bool> si_sdr_defined;    // per reference speaker
  std::vector<double> mixture_si_sdr;  // mixture channel vs each reference
  std::vector<int> permutation;        // reference speaker -> estimate, -1 if unmatched
  DerBreakdown der;
  std::map<std::string, double> runtime_s;

  double MeanSiSdr() const;
  double MeanMixtureSiSdr() const;
};

// The permutation maximises the summed SI-SDR when audio is given and the
// frame agreement of the activity matrices otherwise; the same permutation is
// used for DER. Missing estimates score as silent signals.
EvalReport Evaluate(const EvalInput& input);

}  // namespace smmsep::eval
