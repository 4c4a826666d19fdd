#include "core/config.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace smmsep::config {
namespace {

using nlohmann::json;

json ToJsonObject(const PipelineConfig& c) {
  const auto& m = c.morphology;
  return json{{"frame_size", c.frame_size},
              {"frame_shift", c.frame_shift},
              {"iterations", c.iterations},
              {"init", InitName(c.init)},
              {"seed", c.seed},
              {"segment_length", c.segment_length},
              {"speakers", c.speakers},
              {"extra_classes", c.extra_classes},
              {"fusion_iterations", c.fusion_iterations},
              {"final_fusion", c.final_fusion},
              {"align_permutations", c.align_permutations},
              {"dirichlet_alpha", c.dirichlet_alpha},
              {"wpe", c.wpe},
              {"wpe_taps", c.wpe_taps},
              {"wpe_delay", c.wpe_delay},
              {"wpe_iterations", c.wpe_iterations},
              {"smooth_window", m.smooth_window},
              {"activity_threshold", m.activity_threshold},
              {"fuse_iou_threshold", m.fuse_iou_threshold},
              {"segment_window", m.segment_window},
              {"segment_threshold", m.segment_threshold},
              {"reference_channel", c.reference_channel},
              {"distortion_floor", c.distortion_floor},
              {"dump_dir", c.dump_dir}};
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    ThrowInvalid(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

PipelineConfig FromJsonObject(const json& j, PipelineConfig c) {
  if (!j.is_object()) ThrowInvalid("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto& keys = Keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const KeyInfo& k) { return key == k.name; }))
      ThrowInvalid("config: unknown key '" + key + "'");
  }
  auto& m = c.morphology;
  Read(j, "frame_size", c.frame_size);
  Read(j, "frame_shift", c.frame_shift);
  Read(j, "iterations", c.iterations);
  if (j.contains("init")) {
    std::string name;
    Read(j, "init", name);
    c.init = ParseInit(name);
  }
  Read(j, "seed", c.seed);
  Read(j, "segment_length", c.segment_length);
  Read(j, "speakers", c.speakers);
  Read(j, "extra_classes", c.extra_classes);
  Read(j, "fusion_iterations", c.fusion_iterations);
  Read(j, "final_fusion", c.final_fusion);
  Read(j, "align_permutations", c.align_permutations);
  Read(j, "dirichlet_alpha", c.dirichlet_alpha);
  Read(j, "wpe", c.wpe);
  Read(j, "wpe_taps", c.wpe_taps);
  Read(j, "wpe_delay", c.wpe_delay);
  Read(j, "wpe_iterations", c.wpe_iterations);
  Read(j, "smooth_window", m.smooth_window);
  Read(j, "activity_threshold", m.activity_threshold);
  Read(j, "fuse_iou_threshold", m.fuse_iou_threshold);
  Read(j, "segment_window", m.segment_window);
  Read(j, "segment_threshold", m.segment_threshold);
  Read(j, "reference_channel", c.reference_channel);
  Read(j, "distortion_floor", c.distortion_floor);
  Read(j, "dump_dir", c.dump_dir);
  return c;
}

}  // namespace

void PipelineConfig::Validate() const {
  auto fail = [](const std::string& msg) { ThrowInvalid("config: " + msg); };
  if (frame_size < 2 || (frame_size & (frame_size - 1)) != 0) fail("frame_size must be a power of two");
  if (frame_shift < 1 || frame_size % frame_shift != 0) fail("frame_shift must divide frame_size");
  if (iterations < 1) fail("iterations must be >= 1");
  if (segment_length < 1) fail("segment_length must be >= 1");
  if (speakers < 1) fail("speakers must be >= 1");
  if (extra_classes < 0) fail("extra_classes must be >= 0");
  for (int it : fusion_iterations)
    if (it < 1 || it > iterations) fail("fusion iteration " + std::to_string(it) + " outside [1, iterations]");
  if (!(dirichlet_alpha > 0.0)) fail("dirichlet_alpha must be positive");
  if (wpe_taps < 1 || wpe_delay < 1 || wpe_iterations < 1) fail("wpe taps, delay and iterations must be >= 1");
  if (reference_channel < 0) fail("reference_channel must be >= 0");
  if (!(distortion_floor > 0.0 && distortion_floor < 1.0)) fail("distortion_floor must lie in (0, 1)");
  morphology.Validate();
}

std::string InitName(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::kProposed: return "proposed";
    case InitScheme::kDirichlet: return "dirichlet";
    case InitScheme::kDirichletTied: return "dirichlet_tied";
    case InitScheme::kOracle: return "oracle";
  }
  return "proposed";
}

InitScheme ParseInit(const std::string& name) {
  for (auto s : {InitScheme::kProposed, InitScheme::kDirichlet, InitScheme::kDirichletTied,
                 InitScheme::kOracle})
    if (InitName(s) == name) return s;
  ThrowInvalid("config: unknown init scheme '" + name +
               "' (expected proposed, dirichlet, dirichlet_tied or oracle)");
}

PipelineConfig Preset(const std::string& name) {
  PipelineConfig c;
  if (name == "proposed") return c;
  if (name == "dirichlet") {
    c.init = InitScheme::kDirichlet;
    c.extra_classes = 0;
    c.fusion_iterations.clear();
    return c;
  }
  if (name == "oracle") {
    c.init = InitScheme::kOracle;
    c.iterations = 20;
    c.extra_classes = 0;
    c.fusion_iterations.clear();
    c.final_fusion = false;
    c.wpe = false;
    return c;
  }
  ThrowInvalid("config: unknown preset '" + name + "' (expected proposed, dirichlet or oracle)");
}

std::vector<std::string> PresetNames() { return {"proposed", "dirichlet", "oracle"}; }

std::string ToJson(const PipelineConfig& cfg) { return ToJsonObject(cfg).dump(2); }

PipelineConfig FromJson(const std::string& text, const PipelineConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    ThrowInvalid(std::string("config: cannot parse JSON: ") + e.what());
  }
  return FromJsonObject(j, base);
}

const std::vector<KeyInfo>& Keys() {
  static const std::vector<KeyInfo> keys = {
      {"frame_size", "STFT frame size in samples (power of two)"},
      {"frame_shift", "STFT frame shift in samples"},
      {"iterations", "EM iterations"},
      {"init", "initialization: proposed, dirichlet, dirichlet_tied or oracle"},
      {"seed", "base random seed"},
      {"segment_length", "segment length in frames for the clustering initialization"},
      {"speakers", "number of speakers K"},
      {"extra_classes", "mixture classes beyond K + 1"},
      {"fusion_iterations", "comma-separated EM iterations after which a forced fusion runs"},
      {"final_fusion", "threshold fusion after EM"},
      {"align_permutations", "frequency permutation alignment after every E-step"},
      {"dirichlet_alpha", "concentration of the Dirichlet initialization"},
      {"wpe", "WPE dereverberation before EM"},
      {"wpe_taps", "WPE filter taps"},
      {"wpe_delay", "WPE prediction delay in frames"},
      {"wpe_iterations", "WPE power re-estimation iterations"},
      {"smooth_window", "dilation/erosion window for noise detection and fusion (odd)"},
      {"activity_threshold", "activity threshold for noise detection and fusion"},
      {"fuse_iou_threshold", "IoU threshold of the final fusion"},
      {"segment_window", "dilation window of the speech segmentation (odd)"},
      {"segment_threshold", "activity threshold of the speech segmentation"},
      {"reference_channel", "beamformer reference channel"},
      {"distortion_floor", "floor of the distortion mask"},
      {"dump_dir", "directory for per-stage .npy dumps (empty disables)"},
  };
  return keys;
}

void Set(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  json j = ToJsonObject(cfg);
  if (!j.contains(key)) ThrowInvalid("config: unknown key '" + key + "'");
  const json& current = j[key];
  json parsed;
  if (current.is_string()) {
    parsed = value;
  } else if (current.is_array()) {
    parsed = json::array();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        parsed.push_back(v);
      } catch (const std::exception&) {
        ThrowInvalid("config: '" + key + "' expects comma-separated integers, got '" + value + "'");
      }
    }
  } else if (current.is_boolean()) {
    if (value == "true" || value == "1" || value == "on") parsed = true;
    else if (value == "false" || value == "0" || value == "off") parsed = false;
    else ThrowInvalid("config: '" + key + "' expects true or false, got '" + value + "'");
  } else {
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      ThrowInvalid("config: '" + key + "' expects a number, got '" + value + "'");
    }
    if (!parsed.is_number()) ThrowInvalid("config: '" + key + "' expects a number, got '" + value + "'");
    if (current.is_number_integer() && !parsed.is_number_integer())
      ThrowInvalid("config: '" + key + "' expects an integer, got '" + value + "'");
    if (current.is_number_unsigned() && parsed.is_number_integer() && parsed.get<long long>() < 0)
      ThrowInvalid("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  j[key] = parsed;
  cfg = FromJsonObject(j, cfg);
}

std::string Get(const PipelineConfig& cfg, const std::string& key) {
  const json j = ToJsonObject(cfg);
  if (!j.contains(key)) ThrowInvalid("config: unknown key '" + key + "'");
  const json& v = j[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i].get<int>());
    return out;
  }
  return v.dump();
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace smmsep::config
