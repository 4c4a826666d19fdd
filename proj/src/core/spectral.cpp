#include "core/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

namespace smmsep::spectral {
namespace {

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

void CheckFraming(int frame_size, int frame_shift) {
  if (!IsPowerOfTwo(frame_size) || frame_size < 2)
    ThrowInvalid("stft: frame_size must be a power of two >= 2, got " + std::to_string(frame_size));
  if (frame_shift <= 0 || frame_size % frame_shift != 0)
    ThrowInvalid("stft: frame_shift must divide frame_size (" + std::to_string(frame_size) + "/" +
                 std::to_string(frame_shift) + ")");
}

}  // namespace

std::vector<double> AnalysisWindow(int frame_size) {
  std::vector<double> w(static_cast<size_t>(frame_size));
  for (int n = 0; n < frame_size; ++n)
    w[static_cast<size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / frame_size);
  return w;
}

std::vector<double> SynthesisWindow(int frame_size, int frame_shift) {
  CheckFraming(frame_size, frame_shift);
  const auto w = AnalysisWindow(frame_size);
  std::vector<double> g(w.size());
  for (int n = 0; n < frame_size; ++n) {
    double denom = 0.0;
    for (int m = n % frame_shift; m < frame_size; m += frame_shift)
      denom += w[static_cast<size_t>(m)] * w[static_cast<size_t>(m)];
    if (denom < 1e-8)
      ThrowInvalid("stft: Hann window cannot reconstruct with frame_shift " +
                   std::to_string(frame_shift));
    g[static_cast<size_t>(n)] = w[static_cast<size_t>(n)] / denom;
  }
  return g;
}

Index NumFrames(Index num_samples, int frame_size, int frame_shift) {
  const Index pad = frame_size - frame_shift;
  const Index padded = num_samples + 2 * pad;
  return 1 + (padded - frame_size + frame_shift - 1) / frame_shift;
}

Index FrameCenter(Index t, int frame_size, int frame_shift) {
  return t * frame_shift - (frame_size - frame_shift) + frame_size / 2;
}

MultichannelSpectrogram Stft(const TimeSignal& signal, int frame_size, int frame_shift) {
  CheckFraming(frame_size, frame_shift);
  if (signal.sample_rate <= 0) ThrowInvalid("stft: sample_rate must be positive");
  const Index n = signal.num_samples();
  if (n < frame_size)
    ThrowInvalid("stft: signal has " + std::to_string(n) + " samples, shorter than one frame (" +
                 std::to_string(frame_size) + ")");
  if (signal.num_channels() < 1) ThrowInvalid("stft: signal has no channels");

  const Index frames = NumFrames(n, frame_size, frame_shift);
  const Index bins = frame_size / 2 + 1;
  const Index channels = signal.num_channels();
  const Index pad = frame_size - frame_shift;

  MultichannelSpectrogram spec;
  spec.geometry = {frame_size, frame_shift, signal.sample_rate, n};
  spec.data = ComplexTensor(frames, bins, channels);

  const auto window = AnalysisWindow(frame_size);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<size_t>(frame_size));
  std::vector<cdouble> out(static_cast<size_t>(bins));

  for (Index m = 0; m < channels; ++m) {
    const double* x = signal.samples.col(m).data();
    for (Index t = 0; t < frames; ++t) {
      const Index start = t * frame_shift - pad;
      for (Index i = 0; i < frame_size; ++i) {
        const Index s = start + i;
        const double v = (s >= 0 && s < n) ? x[s] : 0.0;
        frame[static_cast<size_t>(i)] = v * window[static_cast<size_t>(i)];
      }
      fft.fwd(out.data(), frame.data(), frame_size);
      for (Index f = 0; f < bins; ++f) spec.data(t, f, m) = out[static_cast<size_t>(f)];
    }
  }
  return spec;
}

TimeSignal Istft(const MultichannelSpectrogram& spec) {
  const auto& g = spec.geometry;
  CheckFraming(g.frame_size, g.frame_shift);
  if (spec.bins() != g.frame_size / 2 + 1)
    ThrowInvalid("istft: spectrogram has " + std::to_string(spec.bins()) +
                 " bins, inconsistent with frame_size " + std::to_string(g.frame_size));
  if (g.sample_rate <= 0) ThrowInvalid("istft: sample_rate must be positive");
  const Index frames = spec.frames();
  const Index pad = g.padding();
  const Index full = (frames - 1) * g.frame_shift + g.frame_size - 2 * pad;
  if (full <= 0) ThrowInvalid("istft: too few frames to synthesise a signal");
  if (g.signal_length > full)
    ThrowInvalid("istft: signal_length " + std::to_string(g.signal_length) + " exceeds the " +
                 std::to_string(full) + " samples covered by " + std::to_string(frames) + " frames");
  const Index length = g.signal_length > 0 ? g.signal_length : full;

  const auto synth = SynthesisWindow(g.frame_size, g.frame_shift);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cdouble> in(static_cast<size_t>(spec.bins()));
  std::vector<double> frame(static_cast<size_t>(g.frame_size));

  TimeSignal out(length, spec.channels(), g.sample_rate);
  for (Index m = 0; m < spec.channels(); ++m) {
    double* y = out.samples.col(m).data();
    for (Index t = 0; t < frames; ++t) {
      for (Index f = 0; f < spec.bins(); ++f) in[static_cast<size_t>(f)] = spec.data(t, f, m);
      fft.inv(frame.data(), in.data(), g.frame_size);
      const Index start = t * g.frame_shift - pad;
      for (Index i = 0; i < g.frame_size; ++i) {
        const Index s = start + i;
        if (s >= 0 && s < length) y[s] += frame[static_cast<size_t>(i)] * synth[static_cast<size_t>(i)];
      }
    }
  }
  return out;
}

DirectionalObservations NormalizeObservations(const ComplexTensor& y) {
  DirectionalObservations z;
  const Index frames = y.frames(), bins = y.bins(), channels = y.channels();
  z.data = ComplexTensor(frames, bins, channels);
  z.zero_norm.assign(static_cast<size_t>(frames * bins), 0);
  const double uniform = 1.0 / std::sqrt(static_cast<double>(channels));
  for (Index f = 0; f < bins; ++f) {
    const auto in = y.bin(f);
    auto out = z.data.bin(f);
    for (Index t = 0; t < frames; ++t) {
      const double norm = in.col(t).norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        z.zero_norm[static_cast<size_t>(f * frames + t)] = 1;
        out.col(t).setConstant(cdouble(uniform, 0.0));
      } else {
        out.col(t) = in.col(t) / norm;
      }
    }
  }
  return z;
}

DirectionalObservations NormalizeObservations(const MultichannelSpectrogram& spec) {
  return NormalizeObservations(spec.data);
}

}  // namespace smmsep::spectral
