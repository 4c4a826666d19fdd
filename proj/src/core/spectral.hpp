// STFT analysis/synthesis and unit-norm observation vectors.
#pragma once

#include <vector>

#include "core/types.hpp"

namespace smmsep::spectral {

inline constexpr int kDefaultFrameSize = 1024;
inline constexpr int kDefaultFrameShift = 256;
inline constexpr int kDefaultSampleRate = 16000;

// Periodic Hann analysis window.
std::vector<double> AnalysisWindow(int frame_size);

// Synthesis window that makes overlap-add of windowed frames reconstruct the
// input exactly for the given shift. Throws if no such window exists.
std::vector<double> SynthesisWindow(int frame_size, int frame_shift);

// Number of frames for a signal of `num_samples`. The signal is zero padded
// by (frame_size - frame_shift) samples on both sides, and the tail is
// extended so the last frame is complete.
Index NumFrames(Index num_samples, int frame_size, int frame_shift);

MultichannelSpectrogram Stft(const TimeSignal& signal, int frame_size = kDefaultFrameSize,
                             int frame_shift = kDefaultFrameShift);

// Inverse of Stft. Returns geometry.signal_length samples, or the full
// overlap-add length when signal_length is 0.
TimeSignal Istft(const MultichannelSpectrogram& spec);

// Sample index of the centre of frame t.
Index FrameCenter(Index t, int frame_size, int frame_shift);

DirectionalObservations NormalizeObservations(const MultichannelSpectrogram& spec);
DirectionalObservations NormalizeObservations(const ComplexTensor& y);

}  // namespace smmsep::spectral
