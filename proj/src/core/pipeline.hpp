// End-to-end separation: STFT, optional WPE, initialization, EM with the
// fusion schedule, noise identification, final fusion, segmentation and
// extraction.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/activity.hpp"
#include "core/cacgmm.hpp"
#include "core/config.hpp"
#include "core/evaluate.hpp"
#include "core/extraction.hpp"
#include "core/initialization.hpp"
#include "core/simulate.hpp"

namespace smmsep::pipeline {

// STFT of the mixture followed by WPE when enabled. Separate runs on the same
// mixture with the same STFT/WPE settings may share the result.
MultichannelSpectrogram Analyze(const TimeSignal& mixture, const config::PipelineConfig& cfg);

struct FusionEvent {
  int iteration = 0;  // 0 for the final fusion
  std::vector<std::vector<Index>> groups;
};

struct PipelineResult {
  config::PipelineConfig config;
  StftGeometry geometry;
  cacgmm::MixtureState state;  // after the final fusion
  cacgmm::StepDiagnostics diagnostics;
  std::optional<init::SegmentLabeling> clustering;  // proposed initialization only
  std::vector<FusionEvent> fusions;
  Index noise_class = 0;
  activity::Segmentation segmentation;
  extraction::Extraction extraction;
  std::map<std::string, double> runtime_s;
};

// oracle_activity is required for the oracle initialization (T x K on the
// STFT frame grid) and ignored otherwise.
PipelineResult Separate(const MultichannelSpectrogram& spec, const config::PipelineConfig& cfg,
                        const ActivityMatrix* oracle_activity = nullptr);

PipelineResult Run(const TimeSignal& mixture, const config::PipelineConfig& cfg,
                   const ActivityMatrix* oracle_activity = nullptr);

// Reference channel of the speaker images against the extracted streams.
eval::EvalReport EvaluateAgainst(const PipelineResult& result, const sim::Meeting& meeting);

// Writes spk<i>.wav, segments.json, separation.rttm, state.ckpt and
// config.json into dir.
void SaveOutputs(const PipelineResult& result, const std::filesystem::path& dir,
                 const std::string& file_id);

// Meeting on disk: mixture.wav, reference_spk<k>.wav (multichannel speaker
// images), noise.wav and reference.rttm.
void SaveMeeting(const sim::Meeting& meeting, const std::filesystem::path& dir,
                 const std::string& file_id);
// Inverse of SaveMeeting; activity is rebuilt on the given frame grid.
sim::Meeting LoadMeeting(const std::filesystem::path& dir, int frame_size, int frame_shift);

}  // namespace smmsep::pipeline
