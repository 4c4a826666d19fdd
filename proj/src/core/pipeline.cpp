#include "core/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "core/serialize.hpp"
#include "core/spectral.hpp"
#include "core/wav.hpp"

namespace smmsep::pipeline {
namespace {

namespace fs = std::filesystem;
using config::InitScheme;
using config::PipelineConfig;

template <typename Fn>
auto Stage(const char* name, std::map<std::string, double>& runtime, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto stop = [&] {
    runtime[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      stop();
    } else {
      auto out = fn();
      stop();
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

void DumpPosteriors(const fs::path& dir, const char* name, const Posteriors& g) {
  io::WriteNpy(dir / name, g.raw().data(), {g.bins(), g.classes(), g.frames()});
}

void DumpPriors(const fs::path& dir, const char* name, const Priors& p) {
  io::WriteNpy(dir / name, p.values.data(), {p.classes(), p.frames()});
}

void DumpActivity(const fs::path& dir, const char* name, const ActivityMatrix& a) {
  std::vector<std::uint8_t> bytes(static_cast<size_t>(a.active.size()));
  for (Index k = 0; k < a.speakers(); ++k)
    for (Index t = 0; t < a.frames(); ++t)
      bytes[static_cast<size_t>(k * a.frames() + t)] = a.active(t, k) ? 1 : 0;
  io::WriteNpy(dir / name, bytes.data(), {a.speakers(), a.frames()});
}

}  // namespace

MultichannelSpectrogram Analyze(const TimeSignal& mixture, const PipelineConfig& cfg) {
  cfg.Validate();
  std::map<std::string, double> runtime;
  auto spec = Stage("stft", runtime, [&] { return spectral::Stft(mixture, cfg.frame_size, cfg.frame_shift); });
  if (cfg.wpe) {
    spec = Stage("wpe", runtime, [&] {
      return extraction::WpeDereverberate(spec, {cfg.wpe_taps, cfg.wpe_delay, cfg.wpe_iterations});
    });
  }
  return spec;
}

PipelineResult Separate(const MultichannelSpectrogram& spec, const PipelineConfig& cfg,
                        const ActivityMatrix* oracle_activity) {
  cfg.Validate();
  if (cfg.reference_channel >= spec.channels())
    throw StageError("config", Error(Error::Kind::kInvalidArgument,
                                     "reference_channel " + std::to_string(cfg.reference_channel) +
                                         " but the input has " + std::to_string(spec.channels()) +
                                         " channels"));
  PipelineResult result;
  result.config = cfg;
  result.geometry = spec.geometry;
  auto& rt = result.runtime_s;
  const fs::path dump = cfg.dump_dir;
  if (!dump.empty()) fs::create_directories(dump);
  if (!dump.empty())
    io::WriteNpy(dump / "spectrogram.npy", spec.data.raw().data(), {spec.bins(), spec.frames(), spec.channels()});

  const auto obs = Stage("normalize", rt, [&] {
    return cacgmm::ObservationModel(spectral::NormalizeObservations(spec));
  });

  const Index classes = cfg.classes();
  const Posteriors init = Stage("init", rt, [&] {
    switch (cfg.init) {
      case InitScheme::kProposed: {
        auto ci = init::ClusterInitialization(obs, cfg.segment_length, classes);
        result.clustering = ci.labeling;
        if (!dump.empty()) io::WriteNpy(dump / "cluster_distances.npy", ci.distances.data(),
                                        {ci.distances.rows(), ci.distances.cols()});
        return cacgmm::BroadcastPriors(ci.priors, obs.bins());
      }
      case InitScheme::kDirichlet:
      case InitScheme::kDirichletTied:
        return init::Dirichlet(obs.frames(), obs.bins(),
                               std::vector<double>(static_cast<size_t>(classes), cfg.dirichlet_alpha),
                               cfg.init == InitScheme::kDirichletTied, config::DeriveSeed(cfg.seed, 1));
      case InitScheme::kOracle: {
        if (!oracle_activity) ThrowInvalid("oracle initialization needs ground-truth activity");
        if (oracle_activity->frames() != obs.frames())
          ThrowInvalid("oracle activity has " + std::to_string(oracle_activity->frames()) +
                       " frames, the spectrogram has " + std::to_string(obs.frames()));
        if (oracle_activity->speakers() + 1 + cfg.extra_classes != classes)
          ThrowInvalid("oracle activity has " + std::to_string(oracle_activity->speakers()) +
                       " speakers, the configuration expects " + std::to_string(cfg.speakers));
        if (cfg.extra_classes != 0) ThrowInvalid("oracle initialization requires extra_classes = 0");
        return init::Oracle(*oracle_activity, obs.bins());
      }
    }
    ThrowInvalid("unknown initialization");
  });
  if (!dump.empty()) DumpPosteriors(dump, "init_posteriors.npy", init);

  cacgmm::FitOptions options;
  options.iterations = cfg.iterations;
  options.align_permutations = cfg.align_permutations;
  options.hook_iterations = cfg.fusion_iterations;
  options.hook = [&](int iteration, cacgmm::MixtureState& state) {
    if (state.classes() < 3) return;  // forced fusion needs two non-noise classes
    const Index noise = activity::IdentifyNoiseClass(state.priors, cfg.morphology);
    auto fused = activity::FuseClasses(state, cfg.morphology, activity::FusionMode::kForced, noise);
    result.fusions.push_back({iteration, fused.groups});
    state = std::move(fused.state);
  };
  auto fit = Stage("em", rt, [&] { return cacgmm::Fit(obs, init, options); });
  result.diagnostics = fit.diagnostics;
  result.state = std::move(fit.state);

  result.noise_class = Stage("noise_id", rt, [&] {
    return activity::IdentifyNoiseClass(result.state.priors, cfg.morphology);
  });
  if (cfg.final_fusion) {
    Stage("fusion", rt, [&] {
      auto fused = activity::FuseClasses(result.state, cfg.morphology, activity::FusionMode::kThreshold,
                                         result.noise_class);
      result.fusions.push_back({0, fused.groups});
      result.noise_class = fused.noise_class;
      result.state = std::move(fused.state);
    });
  }
  if (!dump.empty()) {
    DumpPriors(dump, "priors.npy", result.state.priors);
    DumpPosteriors(dump, "posteriors.npy", result.state.posteriors);
    io::WriteNpy(dump / "log_likelihood.npy", result.state.log_likelihood_trace.data(),
                 {static_cast<Index>(result.state.log_likelihood_trace.size())});
  }

  result.segmentation = Stage("segmentation", rt, [&] {
    return activity::SegmentSpeech(result.state.priors, result.noise_class, cfg.morphology);
  });
  if (!dump.empty()) DumpActivity(dump, "activity.npy", result.segmentation.activity);

  result.extraction = Stage("extraction", rt, [&] {
    return extraction::ExtractAll(spec, result.state.posteriors, result.segmentation.speech,
                                  {cfg.reference_channel, cfg.distortion_floor});
  });
  return result;
}

PipelineResult Run(const TimeSignal& mixture, const PipelineConfig& cfg,
                   const ActivityMatrix* oracle_activity) {
  const auto start = std::chrono::steady_clock::now();
  const auto spec = Analyze(mixture, cfg);
  const double analyze_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto result = Separate(spec, cfg, oracle_activity);
  result.runtime_s["analysis"] = analyze_s;
  return result;
}

eval::EvalReport EvaluateAgainst(const PipelineResult& result, const sim::Meeting& meeting) {
  const Index ref = result.config.reference_channel;
  eval::EvalInput in;
  for (const auto& image : meeting.images) in.references.push_back(image.samples.col(ref));
  for (const auto& stream : result.extraction.streams) in.estimates.push_back(stream.samples.col(0));
  in.mixture = meeting.mixture.samples.col(ref);
  in.reference_activity = meeting.activity;
  in.estimated_activity = result.segmentation.activity;
  auto report = eval::Evaluate(in);
  report.runtime_s = result.runtime_s;
  return report;
}

void SaveOutputs(const PipelineResult& result, const fs::path& dir, const std::string& file_id) {
  fs::create_directories(dir);
  std::vector<std::string> names;
  for (size_t s = 0; s < result.extraction.streams.size(); ++s) {
    names.push_back("spk" + std::to_string(s) + ".wav");
    wav::Write((dir / names.back()).string(), result.extraction.streams[s]);
  }
  io::WriteText(dir / "segments.json",
                io::ManifestJson(result.extraction, result.segmentation.speech.classes, result.geometry, names));
  io::WriteRttm(dir / "separation.rttm",
                io::SegmentsToRttm(result.extraction.segments, result.geometry.sample_rate, file_id));
  io::SaveCheckpoint(dir / "state.ckpt", result.state);
  io::WriteText(dir / "config.json", config::ToJson(result.config));
}

void SaveMeeting(const sim::Meeting& meeting, const fs::path& dir, const std::string& file_id) {
  fs::create_directories(dir);
  wav::Write((dir / "mixture.wav").string(), meeting.mixture);
  wav::Write((dir / "noise.wav").string(), meeting.noise);
  std::vector<io::RttmSegment> rttm;
  const double rate = static_cast<double>(meeting.mixture.sample_rate);
  for (size_t k = 0; k < meeting.images.size(); ++k) {
    wav::Write((dir / ("reference_spk" + std::to_string(k) + ".wav")).string(), meeting.images[k]);
    for (const auto& [b, e] : meeting.utterances[k])
      rttm.push_back({file_id, "spk" + std::to_string(k), static_cast<double>(b) / rate,
                      static_cast<double>(e - b) / rate});
  }
  std::sort(rttm.begin(), rttm.end(), [](const auto& a, const auto& b) {
    return a.onset_s < b.onset_s || (a.onset_s == b.onset_s && a.speaker < b.speaker);
  });
  io::WriteRttm(dir / "reference.rttm", rttm);
}

sim::Meeting LoadMeeting(const fs::path& dir, int frame_size, int frame_shift) {
  sim::Meeting m;
  m.mixture = wav::Read((dir / "mixture.wav").string());
  const Index n = m.mixture.num_samples();
  if (fs::exists(dir / "noise.wav")) m.noise = wav::Read((dir / "noise.wav").string());
  else m.noise = TimeSignal(n, m.mixture.num_channels(), m.mixture.sample_rate);
  for (int k = 0;; ++k) {
    const fs::path p = dir / ("reference_spk" + std::to_string(k) + ".wav");
    if (!fs::exists(p)) break;
    m.images.push_back(wav::Read(p.string()));
    if (m.images.back().num_samples() != n)
      ThrowInvalid("meeting: " + p.string() + " differs in length from the mixture");
  }
  std::vector<std::string> speakers;
  for (size_t k = 0; k < m.images.size(); ++k) speakers.push_back("spk" + std::to_string(k));
  const auto rttm = io::ReadRttm(dir / "reference.rttm");
  const double rate = static_cast<double>(m.mixture.sample_rate);
  StftGeometry g{frame_size, frame_shift, m.mixture.sample_rate, n};
  m.activity = io::RttmToActivity(rttm, g, &speakers);
  m.utterances.resize(speakers.size());
  for (const auto& s : rttm) {
    const auto k = std::find(speakers.begin(), speakers.end(), s.speaker) - speakers.begin();
    m.utterances[static_cast<size_t>(k)].emplace_back(std::llround(s.onset_s * rate),
                                                      std::llround((s.onset_s + s.duration_s) * rate));
  }
  return m;
}

}  // namespace smmsep::pipeline
