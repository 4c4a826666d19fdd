#include "core/activity.hpp"

#include <deque>
#include <numeric>
#include <string>

namespace smmsep::activity {
namespace {

void CheckWindow(Index window, const char* name) {
  if (window < 1 || window % 2 == 0)
    ThrowInvalid(std::string(name) + ": window must be odd and >= 1, got " + std::to_string(window));
}

// Monotone-deque sliding extremum over [i - h, i + h] clipped to [0, n).
template <typename Better>
std::vector<double> SlidingExtremum(std::span<const double> x, Index window, Better better) {
  const Index n = static_cast<Index>(x.size());
  const Index h = window / 2;
  std::vector<double> y(x.size());
  std::deque<Index> q;
  Index next = 0;
  for (Index i = 0; i < n; ++i) {
    const Index hi = std::min(n - 1, i + h);
    for (; next <= hi; ++next) {
      while (!q.empty() && !better(x[static_cast<size_t>(q.back())], x[static_cast<size_t>(next)]))
        q.pop_back();
      q.push_back(next);
    }
    while (q.front() < i - h) q.pop_front();
    y[static_cast<size_t>(i)] = x[static_cast<size_t>(q.front())];
  }
  return y;
}

std::vector<double> Column(const Priors& priors, Index k) {
  std::vector<double> c(static_cast<size_t>(priors.frames()));
  for (Index t = 0; t < priors.frames(); ++t) c[static_cast<size_t>(t)] = priors.values(t, k);
  return c;
}

}  // namespace

void MorphologyConfig::Validate() const {
  CheckWindow(smooth_window, "smooth_window");
  CheckWindow(segment_window, "segment_window");
  for (double v : {activity_threshold, fuse_iou_threshold, segment_threshold})
    if (!(v > 0.0 && v < 1.0)) ThrowInvalid("morphology thresholds must lie in (0, 1)");
}

std::vector<double> Dilate(std::span<const double> x, Index window) {
  CheckWindow(window, "dilate");
  return SlidingExtremum(x, window, [](double kept, double incoming) { return kept > incoming; });
}

std::vector<double> Erode(std::span<const double> x, Index window) {
  CheckWindow(window, "erode");
  return SlidingExtremum(x, window, [](double kept, double incoming) { return kept < incoming; });
}

std::vector<char> SmoothedActivity(const Priors& priors, Index k, const MorphologyConfig& cfg) {
  const auto smooth = Erode(Dilate(Column(priors, k), cfg.smooth_window), cfg.smooth_window);
  std::vector<char> out(smooth.size());
  for (size_t t = 0; t < smooth.size(); ++t) out[t] = smooth[t] > cfg.activity_threshold ? 1 : 0;
  return out;
}

double Iou(std::span<const char> a, std::span<const char> b) {
  if (a.size() != b.size()) ThrowInvalid("iou: length mismatch");
  Index inter = 0, uni = 0;
  for (size_t t = 0; t < a.size(); ++t) {
    inter += (a[t] && b[t]) ? 1 : 0;
    uni += (a[t] || b[t]) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Index IdentifyNoiseClass(const Priors& priors, const MorphologyConfig& cfg) {
  if (priors.classes() < 2) ThrowInvalid("noise identification needs at least two classes");
  Index best = 0, best_count = -1;
  for (Index k = 0; k < priors.classes(); ++k) {
    const auto a = SmoothedActivity(priors, k, cfg);
    const Index count = std::accumulate(a.begin(), a.end(), Index{0});
    if (count > best_count) {
      best = k;
      best_count = count;
    }
  }
  return best;
}

double ClassIou(const Priors& priors, Index k, Index kappa, const MorphologyConfig& cfg) {
  if (k == kappa) ThrowInvalid("class_iou: classes must differ");
  return Iou(SmoothedActivity(priors, k, cfg), SmoothedActivity(priors, kappa, cfg));
}

FusionResult FuseClasses(const cacgmm::MixtureState& state, const MorphologyConfig& cfg,
                         FusionMode mode, Index noise_class) {
  const Index classes = state.classes();
  if (noise_class < 0 || noise_class >= classes) ThrowInvalid("fuse_classes: invalid noise class");

  std::vector<std::vector<char>> act(static_cast<size_t>(classes));
  for (Index k = 0; k < classes; ++k)
    if (k != noise_class) act[static_cast<size_t>(k)] = SmoothedActivity(state.priors, k, cfg);

  // root[k]: lowest class index of k's group.
  std::vector<Index> root(static_cast<size_t>(classes));
  std::iota(root.begin(), root.end(), Index{0});
  auto find = [&](Index k) {
    while (root[static_cast<size_t>(k)] != k) k = root[static_cast<size_t>(k)];
    return k;
  };
  auto unite = [&](Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    root[static_cast<size_t>(b)] = a;
  };

  const Index candidates = classes - 1;
  if (mode == FusionMode::kForced) {
    if (candidates < 2)
      ThrowInvalid("fuse_classes: forced fusion needs at least two non-noise classes");
    double best = -1.0;
    Index bk = -1, bj = -1;
    for (Index k = 0; k < classes; ++k) {
      if (k == noise_class) continue;
      for (Index j = k + 1; j < classes; ++j) {
        if (j == noise_class) continue;
        const double iou = Iou(act[static_cast<size_t>(k)], act[static_cast<size_t>(j)]);
        if (iou > best) {
          best = iou;
          bk = k;
          bj = j;
        }
      }
    }
    unite(bk, bj);
  } else {
    for (Index k = 0; k < classes; ++k) {
      if (k == noise_class) continue;
      for (Index j = k + 1; j < classes; ++j) {
        if (j == noise_class) continue;
        if (Iou(act[static_cast<size_t>(k)], act[static_cast<size_t>(j)]) > cfg.fuse_iou_threshold)
          unite(k, j);
      }
    }
  }

  FusionResult out;
  std::vector<Index> new_index(static_cast<size_t>(classes), -1);
  for (Index k = 0; k < classes; ++k) {
    const Index r = find(k);
    if (r == k) {
      new_index[static_cast<size_t>(k)] = static_cast<Index>(out.groups.size());
      out.groups.push_back({});
    }
    out.groups[static_cast<size_t>(new_index[static_cast<size_t>(r)])].push_back(k);
  }
  out.noise_class = new_index[static_cast<size_t>(noise_class)];

  const Index fused = static_cast<Index>(out.groups.size());
  const auto& src = state;
  auto& dst = out.state;
  dst.log_likelihood_trace = src.log_likelihood_trace;
  dst.priors.values = Eigen::MatrixXd::Zero(src.priors.frames(), fused);
  dst.posteriors = Posteriors(src.posteriors.frames(), src.posteriors.bins(), fused);
  dst.parameters = ParameterSet(src.parameters.bins(), fused, src.parameters.channels());
  for (Index c = 0; c < fused; ++c) {
    const auto& group = out.groups[static_cast<size_t>(c)];
    for (Index k : group) dst.priors.values.col(c) += src.priors.values.col(k);
    for (Index f = 0; f < src.posteriors.bins(); ++f) {
      auto g = dst.posteriors.bin(f);
      const auto s = src.posteriors.bin(f);
      for (Index k : group) g.col(c) += s.col(k);
      dst.parameters.at(f, c) = src.parameters.at(f, group.front());
    }
  }
  return out;
}

std::vector<FrameRange> Runs(std::span<const char> indicator) {
  std::vector<FrameRange> out;
  const Index n = static_cast<Index>(indicator.size());
  Index t = 0;
  while (t < n) {
    if (!indicator[static_cast<size_t>(t)]) {
      ++t;
      continue;
    }
    const Index begin = t;
    while (t < n && indicator[static_cast<size_t>(t)]) ++t;
    out.push_back({begin, t});
  }
  return out;
}

Segmentation SegmentSpeech(const Priors& priors, Index noise_class, const MorphologyConfig& cfg) {
  CheckWindow(cfg.segment_window, "segment_speech");
  Segmentation out;
  for (Index k = 0; k < priors.classes(); ++k)
    if (k != noise_class) out.speech.classes.push_back(k);
  const Index speakers = static_cast<Index>(out.speech.classes.size());
  out.activity.active.resize(priors.frames(), speakers);
  for (Index s = 0; s < speakers; ++s) {
    const auto d = Dilate(Column(priors, out.speech.classes[static_cast<size_t>(s)]), cfg.segment_window);
    std::vector<char> a(d.size());
    for (size_t t = 0; t < d.size(); ++t) {
      a[t] = d[t] >= cfg.segment_threshold ? 1 : 0;
      out.activity.active(static_cast<Index>(t), s) = a[t] != 0;
    }
    out.speech.segments.push_back(Runs(a));
  }
  return out;
}

}  // namespace smmsep::activity
