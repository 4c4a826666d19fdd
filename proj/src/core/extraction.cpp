#include "core/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/linalg.hpp"
#include "core/spectral.hpp"

namespace smmsep::extraction {
namespace {

// Solves a Hermitian PSD system, loading the diagonal with `loading * trace / n`
// when the plain factorisation fails. Returns false if even that fails.
bool SolveLoaded(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& rhs, double loading,
                 Eigen::MatrixXcd& out) {
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() == Eigen::Success) {
    out = llt.solve(rhs);
    if (out.allFinite()) return true;
  }
  const Index n = a.rows();
  const double trace = a.trace().real();
  if (!(trace > 0.0)) return false;
  Eigen::MatrixXcd loaded = a;
  loaded.diagonal().array() += loading * trace / static_cast<double>(n);
  llt.compute(loaded);
  if (llt.info() != Eigen::Success) return false;
  out = llt.solve(rhs);
  return out.allFinite();
}

}  // namespace

MultichannelSpectrogram WpeDereverberate(const MultichannelSpectrogram& spec,
                                         const WpeOptions& options) {
  if (options.taps < 1) ThrowInvalid("wpe: taps must be >= 1");
  if (options.delay < 1) ThrowInvalid("wpe: delay must be >= 1");
  if (options.iterations < 1) ThrowInvalid("wpe: iterations must be >= 1");

  MultichannelSpectrogram out = spec;
  const Index frames = spec.frames(), m = spec.channels();
  const Index taps = options.taps, delay = options.delay;
  const Index dim = m * taps;

  for (Index f = 0; f < spec.bins(); ++f) {
    const auto y = spec.data.bin(f);  // M x T
    // Stacked delayed observations: rows [k*M, (k+1)*M) hold y_{t-delay-k}.
    Eigen::MatrixXcd context = Eigen::MatrixXcd::Zero(dim, frames);
    for (Index k = 0; k < taps; ++k) {
      const Index shift = delay + k;
      if (shift >= frames) break;
      context.block(k * m, shift, m, frames - shift) = y.leftCols(frames - shift);
    }
    Eigen::MatrixXcd x = y;
    for (int it = 0; it < options.iterations; ++it) {
      Eigen::VectorXd power = x.cwiseAbs2().colwise().mean().transpose();
      const double floor = std::max(kPowerFloor * power.mean(), 1e-300);
      const Eigen::VectorXd inv_power = power.cwiseMax(floor).cwiseInverse();
      const Eigen::MatrixXcd scaled = context * inv_power.cwiseSqrt().cast<cdouble>().asDiagonal();
      Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(dim, dim);
      lower.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
      const Eigen::MatrixXcd r = lower.selfadjointView<Eigen::Lower>();
      const Eigen::MatrixXcd p = context * (inv_power.cast<cdouble>().asDiagonal() * y.adjoint());
      Eigen::MatrixXcd g;
      if (!SolveLoaded(r, p, 1e-10, g)) break;  // zero context: nothing to predict
      x = y - g.adjoint() * context;
    }
    out.data.bin(f) = x;
  }
  return out;
}

std::vector<Eigen::MatrixXcd> EstimateCovariance(const ComplexTensor& y, FrameRange seg,
                                                 const Eigen::MatrixXd& mask) {
  const Index m = y.channels();
  if (seg.begin < 0 || seg.end > y.frames() || seg.length() < 1)
    ThrowInvalid("estimate_covariance: segment outside the spectrogram");
  if (mask.rows() != seg.length() || mask.cols() != y.bins())
    ThrowInvalid("estimate_covariance: mask shape does not match the segment");
  std::vector<Eigen::MatrixXcd> out(static_cast<size_t>(y.bins()));
  for (Index f = 0; f < y.bins(); ++f) {
    const auto obs = y.bin(f).middleCols(seg.begin, seg.length());
    const Eigen::VectorXd w = mask.col(f);
    const double mass = w.sum();
    Eigen::MatrixXcd phi;
    if (mass > 0.0) {
      phi = obs * w.cast<cdouble>().asDiagonal() * obs.adjoint() / mass;
    } else {
      phi = obs * obs.adjoint() / static_cast<double>(seg.length());
      const double trace = phi.trace().real();
      phi.diagonal().array() += trace > 0.0 ? 1e-6 * trace / static_cast<double>(m) : 1e-12;
    }
    out[static_cast<size_t>(f)] = 0.5 * (phi + phi.adjoint());
  }
  return out;
}

MaskPair MakeMasks(const Posteriors& gamma, Index target_class, FrameRange seg, double floor) {
  if (target_class < 0 || target_class >= gamma.classes())
    ThrowInvalid("make_masks: target class out of range");
  MaskPair masks;
  masks.target.resize(seg.length(), gamma.bins());
  masks.distortion.resize(seg.length(), gamma.bins());
  for (Index f = 0; f < gamma.bins(); ++f) {
    const auto g = gamma.bin(f).middleRows(seg.begin, seg.length());
    masks.target.col(f) = g.col(target_class);
    masks.distortion.col(f) =
        (g.rowwise().sum() - g.col(target_class)).cwiseMax(floor);
  }
  return masks;
}

BeamformOutput WmpdrBeamform(const ComplexTensor& y, FrameRange seg, const MaskPair& masks,
                             Index reference_channel) {
  const Index m = y.channels(), bins = y.bins(), len = seg.length();
  if (reference_channel < 0 || reference_channel >= m)
    ThrowInvalid("wmpdr: reference channel out of range");
  if (masks.target.rows() != len || masks.target.cols() != bins)
    ThrowInvalid("wmpdr: target mask shape does not match the segment");

  const auto target_cov = EstimateCovariance(y, seg, masks.target);
  BeamformOutput out;
  out.signal.resize(len, bins);
  out.weights.resize(static_cast<size_t>(bins));
  out.steering.resize(static_cast<size_t>(bins));

  for (Index f = 0; f < bins; ++f) {
    const auto obs = y.bin(f).middleCols(seg.begin, len);
    Eigen::VectorXcd v = linalg::PrincipalEigenvector(target_cov[static_cast<size_t>(f)]);
    const cdouble ref = v(reference_channel);
    if (std::abs(ref) > 1e-12 * v.norm()) v /= ref;

    Eigen::VectorXd lambda(len);
    for (Index t = 0; t < len; ++t)
      lambda(t) = masks.target(t, f) * std::norm(obs(reference_channel, t));
    const double floor = std::max(kPowerFloor * lambda.maxCoeff(), 1e-300);
    const Eigen::VectorXd inv = lambda.cwiseMax(floor).cwiseInverse() / static_cast<double>(len);
    const Eigen::MatrixXcd r = obs * inv.cast<cdouble>().asDiagonal() * obs.adjoint();

    Eigen::MatrixXcd r_inv_v;
    if (!SolveLoaded(0.5 * (r + r.adjoint()), v, 1e-6, r_inv_v))
      ThrowNumerical("wmpdr: weighted covariance is not invertible at frequency " +
                     std::to_string(f));
    const cdouble denom = v.dot(r_inv_v.col(0));  // v^H R^-1 v
    Eigen::VectorXcd w = r_inv_v.col(0) / std::conj(denom);
    // Enforce w^H v = 1 exactly up to rounding.
    w /= std::conj(w.dot(v));
    out.signal.col(f) = (w.adjoint() * obs).transpose();
    out.weights[static_cast<size_t>(f)] = std::move(w);
    out.steering[static_cast<size_t>(f)] = std::move(v);
  }
  return out;
}

std::pair<Index, Index> FramesToSamples(FrameRange frames, const StftGeometry& g) {
  const Index half = g.frame_shift / 2;
  Index start = spectral::FrameCenter(frames.begin, g.frame_size, g.frame_shift) - half;
  Index end = spectral::FrameCenter(frames.end - 1, g.frame_size, g.frame_shift) + (g.frame_shift - half);
  const Index n = g.signal_length;
  start = std::clamp<Index>(start, 0, n);
  end = std::clamp<Index>(end, 0, n);
  return {start, end};
}

Extraction ExtractAll(const MultichannelSpectrogram& spec, const Posteriors& gamma,
                      const activity::SpeechSegments& speech, const ExtractionConfig& cfg) {
  if (gamma.frames() != spec.frames() || gamma.bins() != spec.bins())
    ThrowInvalid("extract_all: posteriors do not match the spectrogram");
  if (speech.classes.size() != speech.segments.size())
    ThrowInvalid("extract_all: speech segments and classes disagree");

  Extraction out;
  const Index speakers = static_cast<Index>(speech.classes.size());
  for (Index s = 0; s < speakers; ++s) {
    const Index cls = speech.classes[static_cast<size_t>(s)];
    MultichannelSpectrogram stream;
    stream.geometry = spec.geometry;
    stream.data = ComplexTensor(spec.frames(), spec.bins(), 1);
    for (const auto& seg : speech.segments[static_cast<size_t>(s)]) {
      if (seg.length() < 1 || seg.begin < 0 || seg.end > spec.frames()) {
        ++out.skipped_segments;
        continue;
      }
      const auto masks = MakeMasks(gamma, cls, seg, cfg.distortion_floor);
      const auto bf = WmpdrBeamform(spec.data, seg, masks, cfg.reference_channel);
      for (Index f = 0; f < spec.bins(); ++f)
        for (Index t = 0; t < seg.length(); ++t) stream.data(seg.begin + t, f, 0) = bf.signal(t, f);
      const auto [start, end] = FramesToSamples(seg, spec.geometry);
      out.segments.push_back({s, cls, seg, start, end});
    }
    out.streams.push_back(spectral::Istft(stream));
  }
  return out;
}

}  // namespace smmsep::extraction
