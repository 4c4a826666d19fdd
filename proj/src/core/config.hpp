// Pipeline configuration, presets and the flat key table used by the config
// file and the command line.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/activity.hpp"

namespace smmsep::config {

enum class InitScheme { kProposed, kDirichlet, kDirichletTied, kOracle };

struct PipelineConfig {
  int frame_size = 1024;
  int frame_shift = 256;
  int iterations = 100;
  InitScheme init = InitScheme::kProposed;
  std::uint64_t seed = 0;
  Index segment_length = 30;
  int speakers = 3;
  int extra_classes = 2;  // mixture classes = speakers + 1 + extra_classes
  std::vector<int> fusion_iterations = {10, 20};  // forced fusions; empty disables
  bool final_fusion = true;
  bool align_permutations = true;
  double dirichlet_alpha = 1.0;
  bool wpe = true;
  int wpe_taps = 10;
  int wpe_delay = 3;
  int wpe_iterations = 3;
  activity::MorphologyConfig morphology;
  Index reference_channel = 0;
  double distortion_floor = 1e-4;
  std::string dump_dir;  // per-stage .npy dumps when non-empty

  int classes() const { return speakers + 1 + extra_classes; }
  void Validate() const;
};

std::string InitName(InitScheme scheme);
InitScheme ParseInit(const std::string& name);

// "proposed", "dirichlet" or "oracle".
PipelineConfig Preset(const std::string& name);
std::vector<std::string> PresetNames();

std::string ToJson(const PipelineConfig& cfg);
// Keys missing from the text keep the values of `base`; unknown keys throw.
PipelineConfig FromJson(const std::string& text, const PipelineConfig& base = {});

struct KeyInfo {
  const char* name;
  const char* help;
};
const std::vector<KeyInfo>& Keys();

// Sets one key from its textual value ("true", "0.5", "10,20", ...).
void Set(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string Get(const PipelineConfig& cfg, const std::string& key);

// Independent stream seed from a base seed (splitmix64 of seed and stream).
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace smmsep::config
