#include "core/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "core/spectral.hpp"

namespace smmsep::sim {
namespace {

constexpr double kPi = std::numbers::pi;

double Sinc(double x) { return std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

// Smooth onset and offset ramps of `ramp` samples.
void ApplyRamps(Eigen::Ref<Eigen::VectorXd> x, Index ramp) {
  const Index n = x.size();
  ramp = std::min(ramp, n / 2);
  for (Index i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / static_cast<double>(ramp));
    x(i) *= g;
    x(n - 1 - i) *= g;
  }
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Index Samples(double seconds, int rate) { return static_cast<Index>(std::llround(seconds * rate)); }

}  // namespace

void MeetingSpec::Validate() const {
  if (sample_rate <= 0) ThrowInvalid("meeting: sample rate must be positive");
  if (microphones.empty()) ThrowInvalid("meeting: need at least one microphone");
  if (length < 0) ThrowInvalid("meeting: length must be non-negative");
  const Index m = static_cast<Index>(microphones.size());
  for (size_t k = 0; k < speakers.size(); ++k) {
    const auto& s = speakers[k];
    if (s.rir.size() > 0 && s.rir.cols() != m)
      ThrowInvalid("meeting: impulse response of speaker " + std::to_string(k) + " has " +
                   std::to_string(s.rir.cols()) + " channels, array has " + std::to_string(m));
    std::vector<std::pair<Index, Index>> spans;
    for (const auto& u : s.utterances) {
      if (u.onset < 0) ThrowInvalid("meeting: negative onset for speaker " + std::to_string(k));
      spans.emplace_back(u.onset, u.onset + u.signal.size());
    }
    std::sort(spans.begin(), spans.end());
    for (size_t i = 1; i < spans.size(); ++i)
      if (spans[i].first < spans[i - 1].second)
        ThrowInvalid("meeting: utterances of speaker " + std::to_string(k) + " overlap at sample " +
                     std::to_string(spans[i].first));
  }
}

void AddDelayed(const Eigen::Ref<const Eigen::VectorXd>& x, double delay, double gain, Index offset,
                Eigen::Ref<Eigen::VectorXd> out) {
  if (delay < 0.0) ThrowInvalid("fractional delay must be non-negative");
  const Index whole = static_cast<Index>(std::floor(delay));
  const double frac = delay - static_cast<double>(whole);
  const Index n = x.size(), len = out.size();
  // out[offset + whole + j + i] += c_j x[i] with c_j = h(j - frac), |j| <= W.
  for (Index j = -kSincHalfWidth; j <= kSincHalfWidth; ++j) {
    const double u = static_cast<double>(j) - frac;
    const double window =
        0.5 + 0.5 * std::cos(kPi * u / static_cast<double>(kSincHalfWidth + 1));
    const double c = gain * Sinc(u) * window;
    const Index start = offset + whole + j;
    const Index i0 = std::max<Index>(0, -start);
    const Index i1 = std::min<Index>(n, len - start);
    if (i1 > i0) out.segment(start + i0, i1 - i0) += c * x.segment(i0, i1 - i0);
  }
}

Eigen::VectorXd Convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  if (x.size() == 0 || h.size() == 0) return Eigen::VectorXd::Zero(0);
  const Index out_len = x.size() + h.size() - 1;
  Index n = 1;
  while (n < out_len) n <<= 1;
  std::vector<double> a(static_cast<size_t>(n), 0.0), b(static_cast<size_t>(n), 0.0);
  std::copy(x.data(), x.data() + x.size(), a.begin());
  std::copy(h.data(), h.data() + h.size(), b.begin());
  Eigen::FFT<double> fft;
  std::vector<cdouble> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  std::vector<double> y;
  fft.inv(y, fa);
  return Eigen::Map<const Eigen::VectorXd>(y.data(), out_len);
}

Eigen::VectorXd PseudoSpeech(Index samples, int rate, double base_f0, std::mt19937_64& rng) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(samples);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double fs = static_cast<double>(rate);
  const double max_harmonic_hz = 0.45 * fs;
  Index pos = 0;
  while (pos < samples) {
    if (Uniform(rng, 0.0, 1.0) < 0.15) {
      // Fricative: differentiated (high-pass) noise burst.
      const Index len = std::min(Samples(Uniform(rng, 0.05, 0.12), rate), samples - pos);
      Eigen::VectorXd burst(len);
      double prev = 0.0;
      for (Index i = 0; i < len; ++i) {
        const double v = normal(rng);
        burst(i) = 0.3 * (v - prev);
        prev = v;
      }
      ApplyRamps(burst, Samples(0.01, rate));
      out.segment(pos, len) = burst;
      pos += len;
    } else {
      const Index len = std::min(Samples(Uniform(rng, 0.10, 0.25), rate), samples - pos);
      const double f0 = base_f0 * Uniform(rng, 0.85, 1.2);
      const double drift = Uniform(rng, -0.3, 0.3);
      const double formants[3] = {Uniform(rng, 300, 900), Uniform(rng, 900, 2500),
                                  Uniform(rng, 2300, 3500)};
      const double widths[3] = {Uniform(rng, 80, 200), Uniform(rng, 80, 200),
                                Uniform(rng, 80, 200)};
      const int harmonics = static_cast<int>(max_harmonic_hz / (f0 * (1.0 + std::abs(drift))));
      Eigen::VectorXd syllable = Eigen::VectorXd::Zero(len);
      Eigen::VectorXd phase(len);
      double acc = 0.0;
      for (Index i = 0; i < len; ++i) {
        const double f = f0 * (1.0 + drift * static_cast<double>(i) / static_cast<double>(len));
        acc += 2.0 * kPi * f / fs;
        phase(i) = acc;
      }
      for (int h = 1; h <= harmonics; ++h) {
        const double fh = f0 * h;
        double amp = 0.0;
        for (int q = 0; q < 3; ++q) {
          const double d = (fh - formants[q]) / widths[q];
          amp += 1.0 / (1.0 + d * d);
        }
        amp = (amp + 0.3) / std::sqrt(static_cast<double>(h));
        const double phi0 = Uniform(rng, 0.0, 2.0 * kPi);
        syllable.array() += amp * (static_cast<double>(h) * phase.array() + phi0).sin();
      }
      ApplyRamps(syllable, Samples(0.02, rate));
      out.segment(pos, len) = syllable;
      pos += len;
    }
    const double pause = Uniform(rng, 0.0, 1.0) < 0.1 ? Uniform(rng, 0.2, 0.4) : Uniform(rng, 0.02, 0.12);
    pos += Samples(pause, rate);
  }
  const double rms = std::sqrt(out.squaredNorm() / std::max<double>(1.0, static_cast<double>(samples)));
  if (rms > 0.0) out /= rms;
  return out;
}

ActivityMatrix FrameActivity(const std::vector<std::vector<std::pair<Index, Index>>>& utterances,
                             Index num_samples, Index frame_size, Index frame_shift) {
  const Index frames = spectral::NumFrames(num_samples, static_cast<int>(frame_size),
                                           static_cast<int>(frame_shift));
  ActivityMatrix a;
  a.active = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
      frames, static_cast<Index>(utterances.size()), false);
  for (size_t k = 0; k < utterances.size(); ++k) {
    for (Index t = 0; t < frames; ++t) {
      const Index c = spectral::FrameCenter(t, static_cast<int>(frame_size), static_cast<int>(frame_shift));
      for (const auto& [b, e] : utterances[k])
        if (c >= b && c < e) a.active(t, static_cast<Index>(k)) = true;
    }
  }
  return a;
}

Meeting SimulateMeeting(const MeetingSpec& spec, std::uint64_t seed, Index frame_size,
                        Index frame_shift) {
  spec.Validate();
  const Index m = static_cast<Index>(spec.microphones.size());
  const Index speakers = static_cast<Index>(spec.speakers.size());
  const double fs = static_cast<double>(spec.sample_rate);

  auto distance = [&](Index k, Index mic) {
    return (spec.speakers[static_cast<size_t>(k)].position -
            spec.microphones[static_cast<size_t>(mic)]).norm();
  };
  Index length = spec.length;
  if (length == 0) {
    for (Index k = 0; k < speakers; ++k) {
      const auto& s = spec.speakers[static_cast<size_t>(k)];
      Index tail = s.rir.size() > 0 ? s.rir.rows() : 0;
      if (s.rir.size() == 0)
        for (Index mic = 0; mic < m; ++mic)
          tail = std::max(tail, static_cast<Index>(std::ceil(distance(k, mic) / kSpeedOfSound * fs)) +
                                    kSincHalfWidth + 1);
      for (const auto& u : s.utterances) length = std::max(length, u.onset + u.signal.size() + tail);
    }
  }

  Meeting out;
  out.mixture = TimeSignal(length, m, spec.sample_rate);
  out.noise = TimeSignal(length, m, spec.sample_rate);
  for (Index k = 0; k < speakers; ++k) {
    const auto& s = spec.speakers[static_cast<size_t>(k)];
    TimeSignal image(length, m, spec.sample_rate);
    std::vector<std::pair<Index, Index>> spans;
    for (const auto& u : s.utterances) {
      spans.emplace_back(std::min(u.onset, length), std::min(u.onset + u.signal.size(), length));
      for (Index mic = 0; mic < m; ++mic) {
        if (s.rir.size() > 0) {
          const Eigen::VectorXd y = Convolve(u.signal, s.rir.col(mic));
          const Index n = std::max<Index>(0, std::min<Index>(y.size(), length - u.onset));
          if (n > 0) image.samples.col(mic).segment(u.onset, n) += y.head(n);
        } else {
          const double r = distance(k, mic);
          if (!(r > 0.0)) ThrowInvalid("meeting: source " + std::to_string(k) + " coincides with a microphone");
          AddDelayed(u.signal, r / kSpeedOfSound * fs, 1.0 / r, u.onset, image.samples.col(mic));
        }
      }
    }
    out.mixture.samples += image.samples;
    out.images.push_back(std::move(image));
    out.utterances.push_back(std::move(spans));
  }

  if (spec.noise && length > 0) {
    const double speech_power = out.mixture.samples.col(0).squaredNorm() / static_cast<double>(length);
    const double sigma = std::sqrt(speech_power / std::pow(10.0, spec.snr_db / 10.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index mic = 0; mic < m; ++mic)
      for (Index n = 0; n < length; ++n) out.noise.samples(n, mic) = sigma * normal(rng);
    out.mixture.samples += out.noise.samples;
  }
  out.activity = FrameActivity(out.utterances, length, frame_size, frame_shift);
  return out;
}

std::vector<Eigen::Vector3d> CircularArray(int microphones, double radius_m) {
  if (microphones < 1) ThrowInvalid("array: need at least one microphone");
  std::vector<Eigen::Vector3d> out;
  for (int i = 0; i < microphones; ++i) {
    const double a = 2.0 * kPi * i / microphones;
    out.emplace_back(radius_m * std::cos(a), radius_m * std::sin(a), 0.0);
  }
  return out;
}

MeetingSpec RandomMeeting(const RandomMeetingOptions& o, std::uint64_t seed) {
  if (o.speakers < 1) ThrowInvalid("random meeting: need at least one speaker");
  if (!(o.duration_s > 0.0)) ThrowInvalid("random meeting: duration must be positive");
  if (!(o.overlap_ratio >= 0.0 && o.overlap_ratio < 1.0))
    ThrowInvalid("random meeting: overlap ratio must lie in [0, 1)");
  if (!(o.min_utterance_s > 0.2 && o.max_utterance_s >= o.min_utterance_s))
    ThrowInvalid("random meeting: invalid utterance length range");
  std::mt19937_64 rng(seed);
  const int rate = o.sample_rate;

  MeetingSpec spec;
  spec.sample_rate = rate;
  spec.length = Samples(o.duration_s, rate);
  spec.microphones = CircularArray(o.microphones, o.array_radius_m);
  spec.noise = o.noise;
  spec.snr_db = o.snr_db;
  spec.overlap_style = "ov" + std::to_string(static_cast<int>(std::lround(o.overlap_ratio * 100)));

  // Azimuths with a minimum pairwise separation (rejection sampling, relaxed
  // after repeated failures).
  std::vector<double> azimuths;
  double separation = o.min_separation_deg * kPi / 180.0;
  for (int attempt = 0; static_cast<int>(azimuths.size()) < o.speakers; ++attempt) {
    if (attempt > 0 && attempt % 1000 == 0) {
      separation *= 0.8;
      azimuths.clear();
    }
    const double a = Uniform(rng, 0.0, 2.0 * kPi);
    bool ok = true;
    for (double b : azimuths) {
      const double d = std::abs(std::remainder(a - b, 2.0 * kPi));
      if (d < separation) ok = false;
    }
    if (ok) azimuths.push_back(a);
  }
  std::vector<double> f0(static_cast<size_t>(o.speakers));
  for (int k = 0; k < o.speakers; ++k) {
    const double r = Uniform(rng, o.min_distance_m, o.max_distance_m);
    SpeakerSpec s;
    s.position = Eigen::Vector3d(r * std::cos(azimuths[static_cast<size_t>(k)]),
                                 r * std::sin(azimuths[static_cast<size_t>(k)]), 0.0);
    spec.speakers.push_back(std::move(s));
    f0[static_cast<size_t>(k)] = Uniform(rng, 90.0, 220.0);
  }

  const double mean_len = 0.5 * (o.min_utterance_s + o.max_utterance_s);
  const double target_overlap = o.overlap_ratio / (1.0 + o.overlap_ratio) * mean_len;
  std::vector<int> turns(static_cast<size_t>(o.speakers), 0);
  int prev = -1;
  double prev_end = o.lead_silence_s, prev_len = 0.0, prev_overlap = 0.0;
  while (true) {
    // Least-talkative speaker other than the previous one; ties at random.
    std::vector<int> candidates;
    int fewest = 1 << 30;
    for (int k = 0; k < o.speakers; ++k) {
      if (k == prev && o.speakers > 1) continue;
      if (turns[static_cast<size_t>(k)] < fewest) {
        fewest = turns[static_cast<size_t>(k)];
        candidates.clear();
      }
      if (turns[static_cast<size_t>(k)] == fewest) candidates.push_back(k);
    }
    const int who = candidates[std::uniform_int_distribution<size_t>(0, candidates.size() - 1)(rng)];
    double len = Uniform(rng, o.min_utterance_s, o.max_utterance_s);
    double overlap = 0.0;
    if (prev >= 0 && o.speakers > 1) {
      overlap = target_overlap * Uniform(rng, 0.5, 1.5);
      overlap = std::min({overlap, prev_len - prev_overlap - 0.1, len - 0.1});
      overlap = std::max(overlap, 0.0);
    }
    const double onset = prev_end - overlap;
    if (onset > o.duration_s - 1.0) break;
    len = std::min(len, o.duration_s - onset);
    Utterance u;
    u.onset = Samples(onset, rate);
    u.signal = PseudoSpeech(Samples(len, rate), rate, f0[static_cast<size_t>(who)], rng);
    spec.speakers[static_cast<size_t>(who)].utterances.push_back(std::move(u));
    ++turns[static_cast<size_t>(who)];
    prev = who;
    prev_end = onset + len;
    prev_len = len;
    prev_overlap = overlap;
  }
  return spec;
}

}  // namespace smmsep::sim
