// Synthetic meetings: anechoic far-field propagation of pseudo-speech sources
// to a microphone array plus white noise,
//   y_m(n) = sum_k (h_mk * s_k)(n) + v_m(n),
// where h_mk is a fractional delay by r_mk / c with 1 / r_mk attenuation, or
// an imported room impulse response.
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace smmsep::sim {

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr Index kSincHalfWidth = 32;

struct Utterance {
  Eigen::VectorXd signal;
  Index onset = 0;  // samples
};

struct SpeakerSpec {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::vector<Utterance> utterances;
  // Optional L x M impulse responses. When set, they replace the anechoic
  // propagation for this speaker.
  Eigen::MatrixXd rir;
};

struct MeetingSpec {
  int sample_rate = 16000;
  Index length = 0;  // samples; 0 extends to the end of the last utterance
  std::vector<Eigen::Vector3d> microphones;
  std::vector<SpeakerSpec> speakers;
  bool noise = true;
  double snr_db = 20.0;  // relative to the speech power at channel 0
  std::string overlap_style = "custom";

  void Validate() const;
};

struct Meeting {
  TimeSignal mixture;
  std::vector<TimeSignal> images;  // per speaker, same shape as the mixture
  TimeSignal noise;
  ActivityMatrix activity;  // frame-level ground truth (frame centres)
  // Sample extents [begin, end) of every utterance, per speaker.
  std::vector<std::vector<std::pair<Index, Index>>> utterances;
};

// Frame t is active for speaker k when its centre sample lies inside one of
// k's utterances.
ActivityMatrix FrameActivity(const std::vector<std::vector<std::pair<Index, Index>>>& utterances,
                             Index num_samples, Index frame_size, Index frame_shift);

Meeting SimulateMeeting(const MeetingSpec& spec, std::uint64_t seed, Index frame_size = 1024,
                        Index frame_shift = 256);

// Windowed-sinc fractional delay of x by `delay` samples (>= 0), scaled by
// gain, accumulated into out starting at `offset`.
void AddDelayed(const Eigen::Ref<const Eigen::VectorXd>& x, double delay, double gain, Index offset,
                Eigen::Ref<Eigen::VectorXd> out);

// Voiced syllables (harmonic series with a drifting f0 and a formant
// envelope) alternating with short fricative bursts and pauses; unit RMS.
Eigen::VectorXd PseudoSpeech(Index samples, int sample_rate, double base_f0, std::mt19937_64& rng);

// Linear convolution via FFT.
Eigen::VectorXd Convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h);

struct RandomMeetingOptions {
  int speakers = 3;
  double duration_s = 60.0;
  double overlap_ratio = 0.3;  // overlapped time / meeting time
  double snr_db = 20.0;
  bool noise = true;
  int microphones = 4;
  double array_radius_m = 0.05;
  double min_distance_m = 1.0;
  double max_distance_m = 2.5;
  double min_separation_deg = 40.0;
  double min_utterance_s = 3.0;
  double max_utterance_s = 8.0;
  double lead_silence_s = 0.5;
  int sample_rate = 16000;
};

// LibriCSS-like turn taking: consecutive utterances come from different
// speakers and overlap by an amount chosen to reach the target ratio, with at
// most two concurrent speakers.
MeetingSpec RandomMeeting(const RandomMeetingOptions& options, std::uint64_t seed);

std::vector<Eigen::Vector3d> CircularArray(int microphones, double radius_m);

}  // namespace smmsep::sim
