// File formats: RTTM, the JSON segment manifest, MixtureState checkpoints,
// .npy arrays and the JSON evaluation report.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/cacgmm.hpp"
#include "core/evaluate.hpp"
#include "core/extraction.hpp"
#include "core/types.hpp"

namespace smmsep::io {

struct RttmSegment {
  std::string file;
  std::string speaker;
  double onset_s = 0.0;
  double duration_s = 0.0;
};

std::string FormatRttm(const std::vector<RttmSegment>& segments);
std::vector<RttmSegment> ParseRttm(const std::string& text);
void WriteRttm(const std::filesystem::path& path, const std::vector<RttmSegment>& segments);
std::vector<RttmSegment> ReadRttm(const std::filesystem::path& path);

// RTTM lines for extracted segments; speaker s is labelled "spk<s>".
std::vector<RttmSegment> SegmentsToRttm(const std::vector<extraction::ExtractedSegment>& segments,
                                        int sample_rate, const std::string& file_id);

// Frame activity from RTTM lines using the frame-centre rule. Speakers are
// ordered by first appearance unless `speakers` lists them.
ActivityMatrix RttmToActivity(const std::vector<RttmSegment>& segments, const StftGeometry& geometry,
                              std::vector<std::string>* speakers = nullptr);

// Segment manifest: geometry, one entry per speaker with its WAV name and
// mixture class, and one entry per extracted segment.
std::string ManifestJson(const extraction::Extraction& extraction, const std::vector<Index>& classes,
                         const StftGeometry& geometry, const std::vector<std::string>& wav_names);

// Checkpoint layout:
//   8 bytes  magic "SMMSEPCK"
//   u32      format version (1)
//   u64      header length H
//   H bytes  JSON header: shapes, log-likelihood trace and an "arrays" list of
//            {name, dtype, shape, offset, bytes} relative to the payload start
//   payload  little-endian raw arrays:
//            priors      f8, shape [C, T]   (prior of class c at frame t)
//            posteriors  f8, shape [F, C, T]
//            parameters  c16, shape [F, C, M, M] (column-major matrices)
void SaveCheckpoint(const std::filesystem::path& path, const cacgmm::MixtureState& state);
cacgmm::MixtureState LoadCheckpoint(const std::filesystem::path& path);

// NumPy .npy (format 1.0), C order.
void WriteNpy(const std::filesystem::path& path, const double* data, const std::vector<Index>& shape);
void WriteNpy(const std::filesystem::path& path, const cdouble* data, const std::vector<Index>& shape);
void WriteNpy(const std::filesystem::path& path, const std::uint8_t* data, const std::vector<Index>& shape);

std::string ReportJson(const eval::EvalReport& report);

std::string ReadText(const std::filesystem::path& path);
void WriteText(const std::filesystem::path& path, const std::string& text);

}  // namespace smmsep::io
