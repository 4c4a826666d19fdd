#include "core/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "core/linalg.hpp"

namespace smmsep::eval {

SiSdr ScaleInvariantSdr(const Eigen::Ref<const Eigen::VectorXd>& estimate,
                        const Eigen::Ref<const Eigen::VectorXd>& reference) {
  if (estimate.size() != reference.size())
    ThrowInvalid("si_sdr: estimate has " + std::to_string(estimate.size()) +
                 " samples, reference has " + std::to_string(reference.size()));
  SiSdr out;
  if (reference.size() == 0) {
    out.defined = false;
    return out;
  }
  const Eigen::ArrayXd r = reference.array() - reference.mean();
  const Eigen::ArrayXd e = estimate.array() - estimate.mean();
  const double rr = (r * r).sum();
  if (!(rr > 0.0)) {
    out.defined = false;
    return out;
  }
  const double alpha = (e * r).sum() / rr;
  const Eigen::ArrayXd target = alpha * r;
  const double num = (target * target).sum();
  const double den = (target - e).square().sum();
  if (!(num > 0.0)) out.db = -kSiSdrCap;
  else if (!(den > 0.0)) out.db = kSiSdrCap;
  else out.db = std::clamp(10.0 * std::log10(num / den), -kSiSdrCap, kSiSdrCap);
  return out;
}

DerBreakdown DiarizationError(const ActivityMatrix& reference, const ActivityMatrix& estimate,
                              const std::vector<int>& mapping) {
  if (reference.frames() != estimate.frames())
    ThrowInvalid("der: reference has " + std::to_string(reference.frames()) +
                 " frames, estimate has " + std::to_string(estimate.frames()));
  if (static_cast<Index>(mapping.size()) != reference.speakers())
    ThrowInvalid("der: mapping size does not match the reference speaker count");
  for (int j : mapping)
    if (j >= estimate.speakers()) ThrowInvalid("der: mapping refers to a missing estimate");

  DerBreakdown out;
  for (Index t = 0; t < reference.frames(); ++t) {
    Index n_ref = 0, n_est = 0, n_correct = 0;
    for (Index k = 0; k < reference.speakers(); ++k) {
      if (!reference.active(t, k)) continue;
      ++n_ref;
      const int j = mapping[static_cast<size_t>(k)];
      if (j >= 0 && estimate.active(t, j)) ++n_correct;
    }
    for (Index j = 0; j < estimate.speakers(); ++j) n_est += estimate.active(t, j) ? 1 : 0;
    out.speech += static_cast<double>(n_ref);
    out.miss += static_cast<double>(std::max<Index>(0, n_ref - n_est));
    out.false_alarm += static_cast<double>(std::max<Index>(0, n_est - n_ref));
    out.confusion += static_cast<double>(std::min(n_ref, n_est) - n_correct);
  }
  const double errors = out.miss + out.false_alarm + out.confusion;
  if (out.speech > 0.0) out.der = std::clamp(errors / out.speech, 0.0, 1.0);
  else out.der = errors > 0.0 ? 1.0 : 0.0;
  return out;
}

double EvalReport::MeanSiSdr() const {
  double sum = 0.0;
  int n = 0;
  for (size_t k = 0; k < si_sdr.size(); ++k)
    if (si_sdr_defined[k]) {
      sum += si_sdr[k];
      ++n;
    }
  return n > 0 ? sum / n : std::nan("");
}

double EvalReport::MeanMixtureSiSdr() const {
  double sum = 0.0;
  int n = 0;
  for (size_t k = 0; k < mixture_si_sdr.size(); ++k)
    if (k < si_sdr_defined.size() && si_sdr_defined[k]) {
      sum += mixture_si_sdr[k];
      ++n;
    }
  return n > 0 ? sum / n : std::nan("");
}

EvalReport Evaluate(const EvalInput& in) {
  const Index refs = static_cast<Index>(std::max<size_t>(in.references.size(),
                                                         static_cast<size_t>(in.reference_activity.speakers())));
  const Index ests = static_cast<Index>(std::max<size_t>(in.estimates.size(),
                                                         static_cast<size_t>(in.estimated_activity.speakers())));
  const bool audio = !in.references.empty();
  if (audio && static_cast<Index>(in.references.size()) != refs)
    ThrowInvalid("evaluate: reference audio and activity disagree on the speaker count");
  if (audio && !in.estimates.empty() && static_cast<Index>(in.estimates.size()) != ests)
    ThrowInvalid("evaluate: estimated audio and activity disagree on the speaker count");

  EvalReport report;
  const Index n = std::max<Index>(std::max(refs, ests), 1);
  Eigen::MatrixXd score = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::vector<SiSdr>> sdr(static_cast<size_t>(refs));

  if (audio) {
    for (Index k = 0; k < refs; ++k) {
      const auto& r = in.references[static_cast<size_t>(k)];
      const SiSdr silent = ScaleInvariantSdr(Eigen::VectorXd::Zero(r.size()), r);
      for (Index j = 0; j < n; ++j) {
        const SiSdr s = j < static_cast<Index>(in.estimates.size())
                            ? ScaleInvariantSdr(in.estimates[static_cast<size_t>(j)], r)
                            : silent;
        sdr[static_cast<size_t>(k)].push_back(s);
        score(k, j) = s.defined ? s.db : 0.0;
      }
      if (in.mixture.size() > 0) report.mixture_si_sdr.push_back(ScaleInvariantSdr(in.mixture, r).db);
    }
  } else {
    const Index frames = std::min(in.reference_activity.frames(), in.estimated_activity.frames());
    for (Index k = 0; k < in.reference_activity.speakers(); ++k)
      for (Index j = 0; j < in.estimated_activity.speakers(); ++j)
        score(k, j) = (in.reference_activity.active.col(k).head(frames) &&
                       in.estimated_activity.active.col(j).head(frames)).count();
  }

  const auto assignment = linalg::MaxAssignment(score);
  for (Index k = 0; k < refs; ++k) {
    const int j = assignment[static_cast<size_t>(k)];
    report.permutation.push_back(j < ests ? j : -1);
    if (audio) {
      const SiSdr s = sdr[static_cast<size_t>(k)][static_cast<size_t>(j)];
      report.si_sdr.push_back(s.db);
      report.si_sdr_defined.push_back(s.defined);
    }
  }
  if (in.reference_activity.frames() > 0 || in.estimated_activity.frames() > 0) {
    std::vector<int> mapping = report.permutation;
    for (int& j : mapping)
      if (j >= in.estimated_activity.speakers()) j = -1;
    report.der = DiarizationError(in.reference_activity, in.estimated_activity, mapping);
  }
  return report;
}

}  // namespace smmsep::eval
