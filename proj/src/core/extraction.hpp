// Dereverberation and mask-based beamforming on speech segments.
#pragma once

#include <vector>

#include "core/activity.hpp"
#include "core/types.hpp"

namespace smmsep::extraction {

inline constexpr double kDistortionFloor = 1e-4;
inline constexpr double kPowerFloor = 1e-10;

struct WpeOptions {
  int taps = 10;
  int delay = 3;
  int iterations = 3;
};

// Offline weighted prediction error dereverberation, independently per
// frequency. Prediction filters over frames [t - delay - taps + 1, t - delay]
// are re-estimated `iterations` times with the channel-averaged power of the
// current estimate as weights.
MultichannelSpectrogram WpeDereverberate(const MultichannelSpectrogram& spec,
                                         const WpeOptions& options = {});

// Phi_f = sum_t mask(t, f) y y^H / sum_t mask(t, f) over the frames of seg.
// mask is seg.length() x F. Bins without mask mass fall back to the
// unweighted covariance (loaded if that is zero as well).
std::vector<Eigen::MatrixXcd> EstimateCovariance(const ComplexTensor& y, FrameRange seg,
                                                 const Eigen::MatrixXd& mask);

struct MaskPair {
  Eigen::MatrixXd target;      // T_seg x F
  Eigen::MatrixXd distortion;  // T_seg x F, >= floor
};

// Target = gamma of `target_class`; distortion = max(sum of the other
// classes, floor).
MaskPair MakeMasks(const Posteriors& gamma, Index target_class, FrameRange seg,
                   double floor = kDistortionFloor);

struct BeamformOutput {
  Eigen::MatrixXcd signal;                 // T_seg x F
  std::vector<Eigen::VectorXcd> weights;   // per frequency
  std::vector<Eigen::VectorXcd> steering;  // per frequency, reference entry 1
};

// Weighted minimum power distortionless response beamformer:
//   v_f   principal eigenvector of the target covariance, scaled so that
//         v_f[ref] = 1 (relative transfer function)
//   lam   target power estimate target(t,f) * |y_ref(t,f)|^2, floored
//   R_f   sum_t y y^H / lam_t
//   w_f   R_f^-1 v_f / (v_f^H R_f^-1 v_f)
// The output w^H y is the target image at the reference channel.
BeamformOutput WmpdrBeamform(const ComplexTensor& y, FrameRange seg, const MaskPair& masks,
                             Index reference_channel = 0);

struct ExtractionConfig {
  Index reference_channel = 0;
  double distortion_floor = kDistortionFloor;
};

struct ExtractedSegment {
  Index speaker = 0;
  Index mixture_class = 0;
  FrameRange frames;
  Index start_sample = 0;  // [start_sample, end_sample) in the input signal
  Index end_sample = 0;
};

struct Extraction {
  std::vector<TimeSignal> streams;  // one single-channel stream per speaker
  std::vector<ExtractedSegment> segments;
  Index skipped_segments = 0;
};

// Sample span represented by a frame range (frame centres +- shift/2,
// clipped to the signal).
std::pair<Index, Index> FramesToSamples(FrameRange frames, const StftGeometry& geometry);

Extraction ExtractAll(const MultichannelSpectrogram& spec, const Posteriors& gamma,
                      const activity::SpeechSegments& speech, const ExtractionConfig& cfg = {});

}  // namespace smmsep::extraction
