// Speaker activity from the learned priors: noise class identification,
// class fusion and speech segmentation, all built on 1-D dilation/erosion.
#pragma once

#include <span>
#include <vector>

#include "core/cacgmm.hpp"
#include "core/types.hpp"

namespace smmsep::activity {

struct MorphologyConfig {
  Index smooth_window = 101;
  double activity_threshold = 0.2;
  double fuse_iou_threshold = 0.8;
  Index segment_window = 79;
  double segment_threshold = 0.5;

  void Validate() const;
};

// Centred sliding maximum / minimum with shift one. The window is clipped to
// the valid index range at the sequence ends. window must be odd.
std::vector<double> Dilate(std::span<const double> x, Index window);
std::vector<double> Erode(std::span<const double> x, Index window);

// Thresholded closing of one class prior: Erode(Dilate(pi_k)) > threshold.
std::vector<char> SmoothedActivity(const Priors& priors, Index k, const MorphologyConfig& cfg);

// Intersection over union of two indicator sequences; 0/0 is 0.
double Iou(std::span<const char> a, std::span<const char> b);

// The class that is active for the most frames after smoothing. Ties go to
// the lowest index.
Index IdentifyNoiseClass(const Priors& priors, const MorphologyConfig& cfg);

double ClassIou(const Priors& priors, Index k, Index kappa, const MorphologyConfig& cfg);

enum class FusionMode {
  kThreshold,  // fuse every pair above cfg.fuse_iou_threshold, transitively
  kForced,     // fuse exactly the pair with the highest IoU
};

struct FusionResult {
  cacgmm::MixtureState state;
  // groups[new_class] lists the original classes summed into it.
  std::vector<std::vector<Index>> groups;
  Index noise_class = 0;  // index of the noise class in the fused state
};

// Sums priors and posteriors of fused classes; the fused class takes the
// lowest original index and keeps that class's B. The noise class never
// takes part in a fusion.
FusionResult FuseClasses(const cacgmm::MixtureState& state, const MorphologyConfig& cfg,
                         FusionMode mode, Index noise_class);

struct SpeechSegments {
  // Mixture class backing each output speaker (noise excluded), in order.
  std::vector<Index> classes;
  // Sorted, disjoint frame ranges per output speaker.
  std::vector<std::vector<FrameRange>> segments;
};

struct Segmentation {
  ActivityMatrix activity;  // T x (number of output speakers)
  SpeechSegments speech;
};

// a_tk = Dilate(pi_k, segment_window) >= segment_threshold for every
// non-noise class.
Segmentation SegmentSpeech(const Priors& priors, Index noise_class, const MorphologyConfig& cfg);

std::vector<FrameRange> Runs(std::span<const char> indicator);

}  // namespace smmsep::activity
