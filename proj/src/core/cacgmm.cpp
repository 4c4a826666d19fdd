#include "core/cacgmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "core/linalg.hpp"
#include "core/permutation.hpp"

namespace smmsep::cacgmm {
namespace {

constexpr double kMinQuadraticForm = 1e-300;
constexpr double kMinMass = 1e-100;

struct InverseParameters {
  Eigen::MatrixXd coefficients;  // M^2 x C
  Eigen::RowVectorXd log_det;    // 1 x C
  // (class, Cholesky factor) of classes whose quadratic forms bypass the GEMM
  std::vector<std::pair<Index, Eigen::MatrixXcd>> ill_conditioned;
};

InverseParameters Invert(const ParameterSet& params, Index f) {
  const Index classes = params.classes(), m = params.channels();
  InverseParameters inv;
  inv.coefficients.resize(linalg::FeatureDim(m), classes);
  inv.log_det.resize(classes);
  for (Index k = 0; k < classes; ++k) {
    Eigen::LLT<Eigen::MatrixXcd> llt(params.at(f, k));
    if (llt.info() != Eigen::Success)
      ThrowNumerical("cacgmm: parameter matrix B(f=" + std::to_string(f) + ", k=" +
                     std::to_string(k) + ") is not positive definite");
    const auto& l = llt.matrixLLT();
    double log_det = 0.0;
    for (Index i = 0; i < m; ++i) log_det += 2.0 * std::log(l(i, i).real());
    const Eigen::MatrixXcd b_inv = llt.solve(Eigen::MatrixXcd::Identity(m, m));
    inv.coefficients.col(k) = linalg::QuadraticCoefficients(b_inv);
    inv.log_det(k) = log_det;
    if (linalg::ConditionBound(params.at(f, k), b_inv) > linalg::kFeatureConditionLimit)
      inv.ill_conditioned.emplace_back(k, llt.matrixL());
  }
  return inv;
}

// T x C matrix of z^H B^-1 z.
void QuadraticForms(const ObservationModel& obs, Index f, const InverseParameters& inv, Eigen::MatrixXd& q) {
  q.noalias() = obs.features(f) * inv.coefficients;
  for (const auto& [k, l] : inv.ill_conditioned) q.col(k) = linalg::QuadraticFormsByFactor(obs.features(f), l);
  q = q.cwiseMax(kMinQuadraticForm);
}


void CheckFinite(const Eigen::Ref<const Eigen::MatrixXd>& x, const char* what, int iteration) {
  if (!x.allFinite())
    ThrowNumerical("cacgmm: non-finite " + std::string(what) + " in EM iteration " +
                   std::to_string(iteration));
}

}  // namespace

double LogNormalizer(Index channels) {
  return std::lgamma(static_cast<double>(channels)) - std::log(2.0) -
         static_cast<double>(channels) * std::log(std::numbers::pi);
}

double CacgLogPdf(const Eigen::Ref<const Eigen::VectorXcd>& z, const Eigen::MatrixXcd& b) {
  const Index m = z.size();
  if (b.rows() != m || b.cols() != m) ThrowInvalid("cacg: dimension mismatch between z and B");
  Eigen::LLT<Eigen::MatrixXcd> llt(b);
  if (llt.info() != Eigen::Success) ThrowNumerical("cacg: B is not positive definite");
  double log_det = 0.0;
  for (Index i = 0; i < m; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  const Eigen::VectorXcd w = llt.matrixL().solve(z);
  const double q = w.squaredNorm();
  return LogNormalizer(m) - log_det - static_cast<double>(m) * std::log(q);
}

ObservationModel::ObservationModel(const DirectionalObservations& z)
    : frames_(z.frames()), bins_(z.bins()), channels_(z.channels()) {
  features_.reserve(static_cast<size_t>(bins_));
  valid_.reserve(static_cast<size_t>(bins_));
  for (Index f = 0; f < bins_; ++f) {
    features_.push_back(linalg::Features(z.data.bin(f)));
    Eigen::VectorXd v(frames_);
    Index count = 0;
    for (Index t = 0; t < frames_; ++t) {
      v(t) = z.masked(t, f) ? 0.0 : 1.0;
      count += z.masked(t, f) ? 0 : 1;
    }
    valid_.push_back(std::move(v));
    valid_counts_.push_back(count);
  }
}

namespace {

// Posteriors of one frequency from the quadratic forms q (T x C). Rows are
// evaluated in the linear domain; rows whose normaliser is not safely inside
// the normal range are redone in the log domain. Returns the summed
// log-likelihood of the valid rows.
double BinPosteriors(const Eigen::MatrixXd& q, const Eigen::MatrixXd& pi, const Eigen::ArrayXXd& log_pi,
                     const Eigen::ArrayXd& class_term, Index channels, const Eigen::VectorXd& valid,
                     Eigen::Map<Eigen::MatrixXd> g, StepDiagnostics* diag) {
  constexpr double kSafeSum = 1e-250;
  const Index frames = q.rows(), classes = q.cols();
  const double m = static_cast<double>(channels);
  const double uniform = 1.0 / static_cast<double>(classes);

  const Eigen::ArrayXXd r = q.array().inverse();
  Eigen::ArrayXXd p = r;
  for (Index i = 1; i < channels; ++i) p *= r;
  for (Index k = 0; k < classes; ++k) p.col(k) *= pi.col(k).array() * std::exp(class_term(k));
  const Eigen::ArrayXd sum = p.rowwise().sum();
  g = p.matrix();
  g.array().colwise() /= sum;
  const Eigen::ArrayXd row_ll = sum.log();

  double ll = 0.0;
  for (Index t = 0; t < frames; ++t) {
    if (valid(t) == 0.0) {
      g.row(t).setConstant(uniform);
      continue;
    }
    if (std::isfinite(sum(t)) && sum(t) > kSafeSum) {
      ll += row_ll(t);
      continue;
    }
    Eigen::ArrayXd lp(classes);
    for (Index k = 0; k < classes; ++k) lp(k) = log_pi(t, k) - m * std::log(q(t, k)) + class_term(k);
    const double mx = lp.maxCoeff();
    const double s = (lp - mx).exp().sum();
    const double row = mx + std::log(s);
    if (!std::isfinite(row)) {
      g.row(t).setConstant(uniform);
      if (diag) ++diag->underflow_bins;
      continue;
    }
    g.row(t) = (lp - row).exp().matrix().transpose();
    ll += row;
  }
  return ll;
}

struct EStepContext {
  const ObservationModel& obs;
  const Priors& priors;
  Eigen::ArrayXXd log_pi;
  double log_norm;
};

EStepContext MakeEStepContext(const ObservationModel& obs, const Priors& priors, const ParameterSet& params) {
  if (priors.frames() != obs.frames()) ThrowInvalid("e_step: priors have the wrong number of frames");
  if (params.bins() != obs.bins() || params.classes() != priors.classes() ||
      params.channels() != obs.channels())
    ThrowInvalid("e_step: parameter shape does not match observations/priors");
  return {obs, priors, priors.values.array().log(), LogNormalizer(obs.channels())};
}

// E-step of bin f. Leaves the quadratic forms of `params` in q.
double EStepBin(const EStepContext& ctx, const ParameterSet& params, Index f, Eigen::MatrixXd& q,
                Eigen::Map<Eigen::MatrixXd> g, StepDiagnostics* diag) {
  const InverseParameters inv = Invert(params, f);
  QuadraticForms(ctx.obs, f, inv, q);
  const Eigen::ArrayXd class_term = ctx.log_norm - inv.log_det.array();
  return BinPosteriors(q, ctx.priors.values, ctx.log_pi, class_term, ctx.obs.channels(), ctx.obs.valid(f),
                       g, diag);
}

void CheckMStepShapes(const ObservationModel& obs, const Posteriors& gamma, const ParameterSet& prev) {
  if (gamma.frames() != obs.frames() || gamma.bins() != obs.bins())
    ThrowInvalid("m_step: posterior shape does not match observations");
  if (prev.bins() != obs.bins() || prev.classes() != gamma.classes() || prev.channels() != obs.channels())
    ThrowInvalid("m_step: previous parameter shape mismatch");
}

// Parameter update of bin f in place; q holds the quadratic forms of the
// current parameters.
void MStepBin(const ObservationModel& obs, Eigen::Map<const Eigen::MatrixXd> g, const Eigen::MatrixXd& q,
              Index f, ParameterSet& params, StepDiagnostics* diag) {
  const Index classes = params.classes(), m = obs.channels();
  const Eigen::MatrixXd weighted = obs.valid(f).asDiagonal() * g;
  const Eigen::RowVectorXd mass = weighted.colwise().sum();
  const Eigen::MatrixXd w = weighted.cwiseQuotient(q);
  const Eigen::MatrixXd s = obs.features(f).transpose() * w;  // M^2 x C
  for (Index k = 0; k < classes; ++k) {
    if (!(mass(k) > kMinMass)) {
      if (diag) ++diag->frozen_parameters;
      continue;
    }
    Eigen::MatrixXcd b = linalg::FeaturesToHermitian(s.col(k), m) * (static_cast<double>(m) / mass(k));
    if (linalg::RegularizeHermitian(b) && diag) ++diag->floored_parameters;
    params.at(f, k) = std::move(b);
  }
}

// One EM iteration after the prior update, bin by bin: parameter update from
// gamma, then the E-step overwriting gamma. q holds the quadratic forms of the
// incoming parameters when q_valid and those of the updated ones on return.
double FusedStep(const ObservationModel& obs, const Priors& priors, ParameterSet& params, Posteriors& gamma,
                 std::vector<Eigen::MatrixXd>& q, bool q_valid, StepDiagnostics* diag) {
  CheckMStepShapes(obs, gamma, params);
  const EStepContext ctx = MakeEStepContext(obs, priors, params);
  q.resize(static_cast<size_t>(obs.bins()));
  double ll = 0.0;
  for (Index f = 0; f < obs.bins(); ++f) {
    Eigen::MatrixXd& qf = q[static_cast<size_t>(f)];
    if (!q_valid) QuadraticForms(obs, f, Invert(params, f), qf);
    MStepBin(obs, std::as_const(gamma).bin(f), qf, f, params, diag);
    ll += EStepBin(ctx, params, f, qf, gamma.bin(f), diag);
  }
  return ll;
}

}  // namespace

ParameterSet MStepParameters(const ObservationModel& obs, const Posteriors& gamma,
                             const ParameterSet& prev, StepDiagnostics* diag) {
  CheckMStepShapes(obs, gamma, prev);
  ParameterSet next = prev;
  Eigen::MatrixXd q;
  for (Index f = 0; f < obs.bins(); ++f) {
    QuadraticForms(obs, f, Invert(prev, f), q);
    MStepBin(obs, gamma.bin(f), q, f, next, diag);
  }
  return next;
}

Posteriors EStep(const ObservationModel& obs, const Priors& priors, const ParameterSet& params,
                 double* log_likelihood, StepDiagnostics* diag) {
  const EStepContext ctx = MakeEStepContext(obs, priors, params);
  Posteriors gamma(obs.frames(), obs.bins(), priors.classes());
  Eigen::MatrixXd q;
  double ll = 0.0;
  for (Index f = 0; f < obs.bins(); ++f) ll += EStepBin(ctx, params, f, q, gamma.bin(f), diag);
  if (log_likelihood) *log_likelihood = ll;
  return gamma;
}

Priors MStepPriors(const Posteriors& gamma) {
  Priors priors;
  priors.values = Eigen::MatrixXd::Zero(gamma.frames(), gamma.classes());
  for (Index f = 0; f < gamma.bins(); ++f) priors.values += gamma.bin(f);
  priors.values /= static_cast<double>(gamma.bins());
  return priors;
}

Priors MStepPriors(const Posteriors& gamma, const ObservationModel& obs) {
  const Index frames = gamma.frames(), classes = gamma.classes();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(frames, classes);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(frames);
  for (Index f = 0; f < gamma.bins(); ++f) {
    sum += obs.valid(f).asDiagonal() * gamma.bin(f);
    count += obs.valid(f);
  }
  Priors priors;
  priors.values.resize(frames, classes);
  for (Index t = 0; t < frames; ++t) {
    if (count(t) > 0.0) {
      priors.values.row(t) = sum.row(t) / count(t);
    } else {
      priors.values.row(t).setZero();
      for (Index f = 0; f < gamma.bins(); ++f) priors.values.row(t) += gamma.bin(f).row(t);
      priors.values.row(t) /= static_cast<double>(gamma.bins());
    }
  }
  return priors;
}


double LogLikelihood(const ObservationModel& obs, const Priors& priors, const ParameterSet& params) {
  double ll = 0.0;
  EStep(obs, priors, params, &ll);
  return ll;
}

Posteriors BroadcastPriors(const Priors& priors, Index bins) {
  Posteriors gamma(priors.frames(), bins, priors.classes());
  for (Index f = 0; f < bins; ++f) gamma.bin(f) = priors.values;
  return gamma;
}

namespace {

// Change of sum_t sum_k gamma'_tk log pi_tk when bin f is permuted. A
// permutation that does not decrease this term cannot decrease the EM lower
// bound, which keeps the likelihood trace monotone.
double BoundChange(const Eigen::Ref<const Eigen::MatrixXd>& g, const std::vector<int>& perm,
                   const Eigen::MatrixXd& log_pi, const Eigen::VectorXd& valid) {
  double delta = 0.0;
  for (Index k = 0; k < g.cols(); ++k) {
    const Index src = perm[static_cast<size_t>(k)];
    if (src == k) continue;
    for (Index t = 0; t < g.rows(); ++t) {
      if (valid(t) == 0.0) continue;
      const double diff = g(t, src) - g(t, k);
      if (diff == 0.0) continue;
      delta += diff * log_pi(t, k);
    }
  }
  return std::isnan(delta) ? -std::numeric_limits<double>::infinity() : delta;
}

}  // namespace

FitResult Fit(const ObservationModel& obs, const Posteriors& init, const FitOptions& options) {
  if (options.iterations < 1) ThrowInvalid("fit: iterations must be >= 1");
  if (init.frames() != obs.frames() || init.bins() != obs.bins())
    ThrowInvalid("fit: initial posteriors have shape T=" + std::to_string(init.frames()) + " F=" +
                 std::to_string(init.bins()) + ", observations have T=" +
                 std::to_string(obs.frames()) + " F=" + std::to_string(obs.bins()));
  if (init.classes() < 1) ThrowInvalid("fit: need at least one class");

  FitResult result;
  MixtureState& state = result.state;
  state.posteriors = init;
  state.parameters = ParameterSet(obs.bins(), init.classes(), obs.channels());
  // Quadratic forms of the current parameters, kept from the E-step for the
  // next parameter update; dropped whenever a hook changes the state.
  std::vector<Eigen::MatrixXd> q;
  bool q_valid = false;

  for (int it = 1; it <= options.iterations; ++it) {
    state.priors = MStepPriors(state.posteriors, obs);
    CheckFinite(state.priors.values, "prior", it);
    const double ll =
        FusedStep(obs, state.priors, state.parameters, state.posteriors, q, q_valid, &result.diagnostics);
    q_valid = true;
    if (!std::isfinite(ll))
      ThrowNumerical("cacgmm: non-finite log-likelihood in EM iteration " + std::to_string(it));
    state.log_likelihood_trace.push_back(ll);

    if (options.align_permutations && state.classes() > 1) {
      const auto aligned = permutation::AlignFrequencies(state.posteriors);
      const Eigen::MatrixXd log_pi = state.priors.values.array().log().matrix();
      for (Index f = 0; f < obs.bins(); ++f) {
        if (aligned.map.IsIdentity(f)) continue;
        const auto& perm = aligned.map.perm[static_cast<size_t>(f)];
        auto g = state.posteriors.bin(f);
        if (BoundChange(g, perm, log_pi, obs.valid(f)) < 0.0) {
          ++result.diagnostics.rejected_permutations;
          continue;
        }
        const Eigen::MatrixXd copy = g;
        const Eigen::MatrixXd q_copy = q[static_cast<size_t>(f)];
        std::vector<Eigen::MatrixXcd> b(static_cast<size_t>(state.classes()));
        for (Index k = 0; k < state.classes(); ++k) b[static_cast<size_t>(k)] = state.parameters.at(f, k);
        for (Index k = 0; k < state.classes(); ++k) {
          const int src = perm[static_cast<size_t>(k)];
          g.col(k) = copy.col(src);
          q[static_cast<size_t>(f)].col(k) = q_copy.col(src);
          state.parameters.at(f, k) = b[static_cast<size_t>(src)];
        }
      }
    }

    if (options.hook) {
      for (int h : options.hook_iterations) {
        if (h == it) {
          options.hook(it, state);
          q_valid = false;
          break;
        }
      }
    }
  }
  return result;
}

FitResult Fit(const ObservationModel& obs, const Priors& init, const FitOptions& options) {
  if (init.frames() != obs.frames())
    ThrowInvalid("fit: initial priors have " + std::to_string(init.frames()) +
                 " frames, observations have " + std::to_string(obs.frames()));
  return Fit(obs, BroadcastPriors(init, obs.bins()), options);
}

}  // namespace smmsep::cacgmm
