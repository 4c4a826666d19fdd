#include "smmsep/smmsep.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "core/config.hpp"
#include "core/pipeline.hpp"
#include "core/serialize.hpp"
#include "core/simulate.hpp"
#include "core/wav.hpp"

struct smmsep_config {
  smmsep::config::PipelineConfig value;
};

struct smmsep_meeting {
  smmsep::sim::Meeting value;
  int frame_size = 1024;
  int frame_shift = 256;
};

struct smmsep_result {
  smmsep::pipeline::PipelineResult value;
};

namespace {

namespace fs = std::filesystem;
using smmsep::Error;
using smmsep::StageError;

thread_local std::string g_last_error;
thread_local std::string g_last_stage;

smmsep_status Fail(smmsep_status status, const std::string& message, const std::string& stage = "") {
  g_last_error = message;
  g_last_stage = stage;
  return status;
}

smmsep_status FromKind(Error::Kind kind) {
  switch (kind) {
    case Error::Kind::kInvalidArgument: return SMMSEP_ERR_INVALID_ARGUMENT;
    case Error::Kind::kIo: return SMMSEP_ERR_IO;
    case Error::Kind::kNumerical: return SMMSEP_ERR_NUMERICAL;
    case Error::Kind::kState: return SMMSEP_ERR_INTERNAL;
  }
  return SMMSEP_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
smmsep_status Guard(Fn&& fn) {
  try {
    fn();
    return SMMSEP_OK;
  } catch (const StageError& e) {
    return Fail(SMMSEP_ERR_STAGE, e.what(), e.stage());
  } catch (const Error& e) {
    return Fail(FromKind(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const fs::filesystem_error& e) {
    return Fail(SMMSEP_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(SMMSEP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(SMMSEP_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(SMMSEP_ERR_INTERNAL, "unknown exception");
  }
}

char* Duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Require(const void* p, const char* what) {
  if (!p) smmsep::ThrowInvalid(std::string(what) + " must not be NULL");
}

smmsep_status Separate(const smmsep_config* cfg, const smmsep::TimeSignal& mixture,
                       const smmsep::ActivityMatrix* oracle, smmsep_result** out) {
  return Guard([&] {
    auto result = std::make_unique<smmsep_result>();
    result->value = smmsep::pipeline::Run(mixture, cfg->value, oracle);
    *out = result.release();
  });
}

}  // namespace

extern "C" {

const char* smmsep_version(void) { return SMMSEP_VERSION; }

const char* smmsep_status_name(smmsep_status status) {
  switch (status) {
    case SMMSEP_OK: return "ok";
    case SMMSEP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SMMSEP_ERR_IO: return "i/o error";
    case SMMSEP_ERR_NUMERICAL: return "numerical error";
    case SMMSEP_ERR_STAGE: return "stage error";
    case SMMSEP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* smmsep_last_error(void) { return g_last_error.c_str(); }
const char* smmsep_last_error_stage(void) { return g_last_stage.c_str(); }
void smmsep_string_free(char* str) { std::free(str); }

smmsep_status smmsep_config_create(const char* preset, smmsep_config** out) {
  if (!out) return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "out must not be NULL");
  *out = nullptr;
  return Guard([&] {
    auto cfg = std::make_unique<smmsep_config>();
    if (preset) cfg->value = smmsep::config::Preset(preset);
    *out = cfg.release();
  });
}

smmsep_status smmsep_config_clone(const smmsep_config* cfg, smmsep_config** out) {
  if (!cfg || !out) return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "cfg and out must not be NULL");
  return Guard([&] { *out = new smmsep_config(*cfg); });
}

void smmsep_config_destroy(smmsep_config* cfg) { delete cfg; }

smmsep_status smmsep_config_set(smmsep_config* cfg, const char* key, const char* value) {
  return Guard([&] {
    Require(cfg, "cfg");
    Require(key, "key");
    Require(value, "value");
    smmsep::config::Set(cfg->value, key, value);
  });
}

smmsep_status smmsep_config_get(const smmsep_config* cfg, const char* key, char** value) {
  return Guard([&] {
    Require(cfg, "cfg");
    Require(key, "key");
    Require(value, "value");
    *value = Duplicate(smmsep::config::Get(cfg->value, key));
  });
}

smmsep_status smmsep_config_to_json(const smmsep_config* cfg, char** json) {
  return Guard([&] {
    Require(cfg, "cfg");
    Require(json, "json");
    *json = Duplicate(smmsep::config::ToJson(cfg->value));
  });
}

smmsep_status smmsep_config_from_json(smmsep_config* cfg, const char* json) {
  return Guard([&] {
    Require(cfg, "cfg");
    Require(json, "json");
    cfg->value = smmsep::config::FromJson(json, cfg->value);
  });
}

smmsep_status smmsep_config_load(smmsep_config* cfg, const char* path) {
  return Guard([&] {
    Require(cfg, "cfg");
    Require(path, "path");
    cfg->value = smmsep::config::FromJson(smmsep::io::ReadText(path), cfg->value);
  });
}

smmsep_status smmsep_config_save(const smmsep_config* cfg, const char* path) {
  return Guard([&] {
    Require(cfg, "cfg");
    Require(path, "path");
    smmsep::io::WriteText(path, smmsep::config::ToJson(cfg->value));
  });
}

size_t smmsep_config_key_count(void) { return smmsep::config::Keys().size(); }

const char* smmsep_config_key_name(size_t index) {
  const auto& keys = smmsep::config::Keys();
  return index < keys.size() ? keys[index].name : nullptr;
}

const char* smmsep_config_key_help(size_t index) {
  const auto& keys = smmsep::config::Keys();
  return index < keys.size() ? keys[index].help : nullptr;
}

size_t smmsep_preset_count(void) { return smmsep::config::PresetNames().size(); }

const char* smmsep_preset_name(size_t index) {
  static const std::vector<std::string> names = smmsep::config::PresetNames();
  return index < names.size() ? names[index].c_str() : nullptr;
}

void smmsep_meeting_options_default(smmsep_meeting_options* options) {
  if (!options) return;
  const smmsep::sim::RandomMeetingOptions d;
  options->speakers = d.speakers;
  options->duration_s = d.duration_s;
  options->overlap_ratio = d.overlap_ratio;
  options->snr_db = d.snr_db;
  options->microphones = d.microphones;
  options->array_radius_m = d.array_radius_m;
  options->min_separation_deg = d.min_separation_deg;
  options->sample_rate = d.sample_rate;
  options->seed = 0;
}

smmsep_status smmsep_meeting_simulate(const smmsep_meeting_options* options, int frame_size,
                                      int frame_shift, smmsep_meeting** out) {
  return Guard([&] {
    Require(options, "options");
    Require(out, "out");
    if (frame_size < 2 || frame_shift < 1 || frame_shift > frame_size)
      smmsep::ThrowInvalid("invalid STFT frame size/shift");
    smmsep::sim::RandomMeetingOptions o;
    o.speakers = options->speakers;
    o.duration_s = options->duration_s;
    o.overlap_ratio = options->overlap_ratio;
    o.snr_db = options->snr_db;
    o.microphones = options->microphones;
    o.array_radius_m = options->array_radius_m;
    o.min_separation_deg = options->min_separation_deg;
    o.sample_rate = options->sample_rate;
    auto meeting = std::make_unique<smmsep_meeting>();
    const auto spec = smmsep::sim::RandomMeeting(o, smmsep::config::DeriveSeed(options->seed, 100));
    meeting->value = smmsep::sim::SimulateMeeting(spec, smmsep::config::DeriveSeed(options->seed, 101),
                                                  frame_size, frame_shift);
    meeting->frame_size = frame_size;
    meeting->frame_shift = frame_shift;
    *out = meeting.release();
  });
}

smmsep_status smmsep_meeting_load(const char* dir, int frame_size, int frame_shift, smmsep_meeting** out) {
  return Guard([&] {
    Require(dir, "dir");
    Require(out, "out");
    auto meeting = std::make_unique<smmsep_meeting>();
    meeting->value = smmsep::pipeline::LoadMeeting(dir, frame_size, frame_shift);
    meeting->frame_size = frame_size;
    meeting->frame_shift = frame_shift;
    *out = meeting.release();
  });
}

smmsep_status smmsep_meeting_save(const smmsep_meeting* meeting, const char* dir, const char* file_id) {
  return Guard([&] {
    Require(meeting, "meeting");
    Require(dir, "dir");
    smmsep::pipeline::SaveMeeting(meeting->value, dir, file_id ? file_id : "meeting");
  });
}

void smmsep_meeting_destroy(smmsep_meeting* meeting) { delete meeting; }

size_t smmsep_meeting_speakers(const smmsep_meeting* meeting) {
  return meeting ? meeting->value.images.size() : 0;
}

size_t smmsep_meeting_channels(const smmsep_meeting* meeting) {
  return meeting ? static_cast<size_t>(meeting->value.mixture.num_channels()) : 0;
}

size_t smmsep_meeting_samples(const smmsep_meeting* meeting) {
  return meeting ? static_cast<size_t>(meeting->value.mixture.num_samples()) : 0;
}

int smmsep_meeting_sample_rate(const smmsep_meeting* meeting) {
  return meeting ? meeting->value.mixture.sample_rate : 0;
}

smmsep_status smmsep_separate_file(const smmsep_config* cfg, const char* wav_path, smmsep_result** out) {
  if (!cfg || !wav_path || !out)
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "cfg, wav_path and out must not be NULL");
  smmsep::TimeSignal mixture;
  const auto status = Guard([&] { mixture = smmsep::wav::Read(wav_path); });
  if (status != SMMSEP_OK) return status;
  return Separate(cfg, mixture, nullptr, out);
}

smmsep_status smmsep_separate_meeting(const smmsep_config* cfg, const smmsep_meeting* meeting,
                                      smmsep_result** out) {
  if (!cfg || !meeting || !out)
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "cfg, meeting and out must not be NULL");
  const auto& m = meeting->value;
  if (cfg->value.frame_size != meeting->frame_size || cfg->value.frame_shift != meeting->frame_shift) {
    // Ground truth on the configuration's frame grid.
    const auto activity = smmsep::sim::FrameActivity(m.utterances, m.mixture.num_samples(),
                                                     cfg->value.frame_size, cfg->value.frame_shift);
    return Separate(cfg, m.mixture, &activity, out);
  }
  return Separate(cfg, m.mixture, &m.activity, out);
}

smmsep_status smmsep_separate_buffer(const smmsep_config* cfg, const float* samples, size_t frames,
                                     size_t channels, int sample_rate, smmsep_result** out) {
  if (!cfg || !samples || !out)
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "cfg, samples and out must not be NULL");
  if (frames == 0 || channels == 0 || sample_rate <= 0)
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "empty buffer or invalid sample rate");
  smmsep::TimeSignal mixture(static_cast<smmsep::Index>(frames), static_cast<smmsep::Index>(channels),
                             sample_rate);
  for (size_t n = 0; n < frames; ++n)
    for (size_t c = 0; c < channels; ++c)
      mixture.samples(static_cast<smmsep::Index>(n), static_cast<smmsep::Index>(c)) = samples[n * channels + c];
  return Separate(cfg, mixture, nullptr, out);
}

void smmsep_result_destroy(smmsep_result* result) { delete result; }

size_t smmsep_result_speakers(const smmsep_result* result) {
  return result ? result->value.extraction.streams.size() : 0;
}

smmsep_status smmsep_result_stream(const smmsep_result* result, size_t speaker, const double** samples,
                                   size_t* length) {
  if (!result || !samples || !length)
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "result, samples and length must not be NULL");
  const auto& streams = result->value.extraction.streams;
  if (speaker >= streams.size())
    return Fail(SMMSEP_ERR_INVALID_ARGUMENT, "speaker " + std::to_string(speaker) + " out of range (" +
                                                 std::to_string(streams.size()) + " streams)");
  *samples = streams[speaker].samples.data();
  *length = static_cast<size_t>(streams[speaker].num_samples());
  return SMMSEP_OK;
}

size_t smmsep_result_segments(const smmsep_result* result) {
  return result ? result->value.extraction.segments.size() : 0;
}

smmsep_status smmsep_result_rttm(const smmsep_result* result, const char* file_id, char** text) {
  return Guard([&] {
    Require(result, "result");
    Require(text, "text");
    const auto& r = result->value;
    *text = Duplicate(smmsep::io::FormatRttm(smmsep::io::SegmentsToRttm(
        r.extraction.segments, r.geometry.sample_rate, file_id ? file_id : "meeting")));
  });
}

smmsep_status smmsep_result_manifest(const smmsep_result* result, char** json) {
  return Guard([&] {
    Require(result, "result");
    Require(json, "json");
    const auto& r = result->value;
    std::vector<std::string> names;
    for (size_t s = 0; s < r.extraction.streams.size(); ++s) names.push_back("spk" + std::to_string(s) + ".wav");
    *json = Duplicate(smmsep::io::ManifestJson(r.extraction, r.segmentation.speech.classes, r.geometry, names));
  });
}

smmsep_status smmsep_result_summary(const smmsep_result* result, char** json) {
  return Guard([&] {
    Require(result, "result");
    Require(json, "json");
    const auto& r = result->value;
    nlohmann::json j;
    j["runtime_s"] = r.runtime_s;
    j["classes"] = r.state.classes();
    j["noise_class"] = r.noise_class;
    j["speakers"] = r.extraction.streams.size();
    j["segments"] = r.extraction.segments.size();
    j["skipped_segments"] = r.extraction.skipped_segments;
    j["log_likelihood"] = r.state.log_likelihood_trace;
    j["fusions"] = nlohmann::json::array();
    for (const auto& event : r.fusions) j["fusions"].push_back({{"iteration", event.iteration}, {"groups", event.groups}});
    const auto& d = r.diagnostics;
    j["diagnostics"] = {{"underflow_bins", d.underflow_bins},
                        {"frozen_parameters", d.frozen_parameters},
                        {"floored_parameters", d.floored_parameters},
                        {"rejected_permutations", d.rejected_permutations}};
    if (r.clustering) j["clustering_labels"] = r.clustering->labels;
    *json = Duplicate(j.dump(2));
  });
}

smmsep_status smmsep_result_save(const smmsep_result* result, const char* dir, const char* file_id) {
  return Guard([&] {
    Require(result, "result");
    Require(dir, "dir");
    smmsep::pipeline::SaveOutputs(result->value, dir, file_id ? file_id : "meeting");
  });
}

smmsep_status smmsep_evaluate(const smmsep_result* result, const smmsep_meeting* meeting, char** report_json) {
  return Guard([&] {
    Require(result, "result");
    Require(meeting, "meeting");
    Require(report_json, "report_json");
    *report_json = Duplicate(
        smmsep::io::ReportJson(smmsep::pipeline::EvaluateAgainst(result->value, meeting->value)));
  });
}

smmsep_status smmsep_evaluate_dirs(const char* meeting_dir, const char* output_dir, int frame_size,
                                   int frame_shift, char** report_json) {
  return Guard([&] {
    Require(meeting_dir, "meeting_dir");
    Require(output_dir, "output_dir");
    Require(report_json, "report_json");
    const auto meeting = smmsep::pipeline::LoadMeeting(meeting_dir, frame_size, frame_shift);
    const fs::path out(output_dir);
    smmsep::eval::EvalInput in;
    for (const auto& image : meeting.images) in.references.push_back(image.samples.col(0));
    in.mixture = meeting.mixture.samples.col(0);
    std::vector<std::string> speakers;
    for (int s = 0; fs::exists(out / ("spk" + std::to_string(s) + ".wav")); ++s) {
      const auto stream = smmsep::wav::Read((out / ("spk" + std::to_string(s) + ".wav")).string());
      if (stream.num_samples() != meeting.mixture.num_samples())
        smmsep::ThrowInvalid("spk" + std::to_string(s) + ".wav differs in length from the mixture");
      in.estimates.push_back(stream.samples.col(0));
      speakers.push_back("spk" + std::to_string(s));
    }
    const smmsep::StftGeometry geometry{frame_size, frame_shift, meeting.mixture.sample_rate,
                                        meeting.mixture.num_samples()};
    in.reference_activity = meeting.activity;
    in.estimated_activity = smmsep::io::RttmToActivity(smmsep::io::ReadRttm(out / "separation.rttm"), geometry,
                                                        &speakers);
    *report_json = Duplicate(smmsep::io::ReportJson(smmsep::eval::Evaluate(in)));
  });
}

}  // extern "C"
