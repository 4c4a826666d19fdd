// Command-line front end. Uses only the C API of libsmmsep.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smmsep/smmsep.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Failure {
  smmsep_status status;
};

void Check(smmsep_status status, const char* what) {
  if (status == SMMSEP_OK) return;
  const std::string stage = smmsep_last_error_stage();
  std::fprintf(stderr, "error: %s failed (%s%s%s): %s\n", what, smmsep_status_name(status),
               stage.empty() ? "" : ", stage ", stage.c_str(), smmsep_last_error());
  throw Failure{status};
}

std::string TakeString(char* s) {
  std::string out = s ? s : "";
  smmsep_string_free(s);
  return out;
}

template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};
using Config = Handle<smmsep_config, smmsep_config_destroy>;
using Meeting = Handle<smmsep_meeting, smmsep_meeting_destroy>;
using Result = Handle<smmsep_result, smmsep_result_destroy>;

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  os << text;
  if (!os) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    throw Failure{SMMSEP_ERR_IO};
  }
}

// Pipeline options shared by the subcommands: preset, config file and one
// flag per configuration key.
struct PipelineFlags {
  std::string preset;
  std::string config_file;
  std::map<std::string, std::optional<std::string>> values;

  void Add(CLI::App* app) {
    app->add_option("--preset", preset, "start from a preset (proposed, dirichlet, oracle)");
    app->add_option("--config", config_file, "JSON configuration applied after the preset");
    for (size_t i = 0; i < smmsep_config_key_count(); ++i) {
      const std::string key = smmsep_config_key_name(i);
      std::string flag = key;
      for (char& c : flag)
        if (c == '_') c = '-';
      app->add_option("--" + flag, values[key], smmsep_config_key_help(i));
    }
  }

  void Build(Config& cfg) const {
    Check(smmsep_config_create(preset.empty() ? nullptr : preset.c_str(), cfg.out()), "config");
    if (!config_file.empty()) Check(smmsep_config_load(cfg.get(), config_file.c_str()), "config file");
    for (const auto& [key, value] : values) {
      if (!value) continue;
      Check(smmsep_config_set(cfg.get(), key.c_str(), value->c_str()), ("--" + key).c_str());
    }
  }
};

struct MeetingFlags {
  smmsep_meeting_options options{};

  MeetingFlags() { smmsep_meeting_options_default(&options); }

  void Add(CLI::App* app) {
    app->add_option("--num-speakers", options.speakers, "speakers in the simulated meeting");
    app->add_option("--duration", options.duration_s, "meeting length in seconds");
    app->add_option("--overlap", options.overlap_ratio, "overlapped time / meeting time");
    app->add_option("--snr", options.snr_db, "signal-to-noise ratio in dB");
    app->add_option("--mics", options.microphones, "microphones on the circular array");
    app->add_option("--array-radius", options.array_radius_m, "array radius in metres");
    app->add_option("--min-separation", options.min_separation_deg, "minimum speaker azimuth separation in degrees");
    app->add_option("--sample-rate", options.sample_rate, "sample rate in Hz");
  }
};

int GetInt(const Config& cfg, const char* key) {
  char* value = nullptr;
  Check(smmsep_config_get(cfg.get(), key, &value), key);
  return std::stoi(TakeString(value));
}

std::string Summary(const Result& result) {
  char* text = nullptr;
  Check(smmsep_result_summary(result.get(), &text), "summary");
  return TakeString(text);
}

std::string Evaluate(const Result& result, const Meeting& meeting) {
  char* text = nullptr;
  Check(smmsep_evaluate(result.get(), meeting.get(), &text), "evaluate");
  return TakeString(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised multichannel meeting separation and diarization"};
  app.set_version_flag("--version", std::string(smmsep_version()));
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "simulate a synthetic meeting");
  MeetingFlags sim_meeting;
  std::string sim_out, sim_id = "meeting";
  std::uint64_t sim_seed = 0;
  int sim_frame_size = 1024, sim_frame_shift = 256;
  sim_meeting.Add(simulate);
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--seed", sim_seed, "meeting seed");
  simulate->add_option("--file-id", sim_id, "RTTM file id");
  simulate->add_option("--frame-size", sim_frame_size, "STFT frame size of the ground-truth activity");
  simulate->add_option("--frame-shift", sim_frame_shift, "STFT frame shift of the ground-truth activity");

  // separate
  auto* separate = app.add_subcommand("separate", "separate a mixture WAV or a meeting directory");
  PipelineFlags sep_flags;
  std::string sep_input, sep_meeting, sep_out, sep_id = "meeting", sep_report;
  sep_flags.Add(separate);
  auto* input_opt = separate->add_option("--input", sep_input, "multichannel mixture WAV");
  auto* meeting_opt = separate->add_option("--meeting", sep_meeting, "meeting directory (enables oracle init)");
  input_opt->excludes(meeting_opt);
  separate->add_option("--out", sep_out, "output directory")->required();
  separate->add_option("--file-id", sep_id, "RTTM file id");
  separate->add_option("--report", sep_report, "JSON evaluation report (requires --meeting)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score separation outputs against a meeting directory");
  std::string ev_meeting, ev_output, ev_report;
  int ev_frame_size = 1024, ev_frame_shift = 256;
  evaluate->add_option("--meeting", ev_meeting, "meeting directory")->required();
  evaluate->add_option("--output", ev_output, "directory written by separate")->required();
  evaluate->add_option("--report", ev_report, "write the JSON report here instead of stdout");
  evaluate->add_option("--frame-size", ev_frame_size, "STFT frame size of the activity grid");
  evaluate->add_option("--frame-shift", ev_frame_shift, "STFT frame shift of the activity grid");

  // run-all
  auto* run_all = app.add_subcommand("run-all", "simulate meetings and run every preset on each");
  PipelineFlags all_flags;
  MeetingFlags all_meeting;
  std::string all_out;
  int all_count = 10;
  std::uint64_t all_seed = 1;
  std::vector<std::string> all_presets = {"proposed", "dirichlet", "oracle"};
  all_flags.Add(run_all);
  all_meeting.Add(run_all);
  run_all->add_option("--out", all_out, "output directory")->required();
  run_all->add_option("--meetings", all_count, "number of meetings")->check(CLI::PositiveNumber);
  run_all->add_option("--meeting-seed", all_seed, "seed of the first meeting; meeting i uses seed + i");
  run_all->add_option("--presets", all_presets, "presets to run")->delimiter(',');

  // default-config
  auto* defaults = app.add_subcommand("default-config", "print a configuration as JSON");
  PipelineFlags def_flags;
  def_flags.Add(defaults);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      Meeting meeting;
      sim_meeting.options.seed = sim_seed;
      Check(smmsep_meeting_simulate(&sim_meeting.options, sim_frame_size, sim_frame_shift, meeting.out()),
            "simulate");
      Check(smmsep_meeting_save(meeting.get(), sim_out.c_str(), sim_id.c_str()), "save meeting");
      std::printf("wrote %s: %zu speakers, %zu channels, %zu samples at %d Hz\n", sim_out.c_str(),
                  smmsep_meeting_speakers(meeting.get()), smmsep_meeting_channels(meeting.get()),
                  smmsep_meeting_samples(meeting.get()), smmsep_meeting_sample_rate(meeting.get()));
    } else if (separate->parsed()) {
      if (sep_input.empty() == sep_meeting.empty()) {
        std::fprintf(stderr, "error: give exactly one of --input and --meeting\n");
        return 2;
      }
      if (!sep_report.empty() && sep_meeting.empty()) {
        std::fprintf(stderr, "error: --report requires --meeting\n");
        return 2;
      }
      Config cfg;
      sep_flags.Build(cfg);
      Result result;
      Meeting meeting;
      if (!sep_meeting.empty()) {
        Check(smmsep_meeting_load(sep_meeting.c_str(), GetInt(cfg, "frame_size"), GetInt(cfg, "frame_shift"),
                                  meeting.out()),
              "load meeting");
        Check(smmsep_separate_meeting(cfg.get(), meeting.get(), result.out()), "separate");
      } else {
        Check(smmsep_separate_file(cfg.get(), sep_input.c_str(), result.out()), "separate");
      }
      Check(smmsep_result_save(result.get(), sep_out.c_str(), sep_id.c_str()), "save outputs");
      WriteFile(fs::path(sep_out) / "summary.json", Summary(result));
      if (!sep_report.empty()) WriteFile(sep_report, Evaluate(result, meeting));
      std::printf("wrote %s: %zu speakers, %zu segments\n", sep_out.c_str(), smmsep_result_speakers(result.get()),
                  smmsep_result_segments(result.get()));
    } else if (evaluate->parsed()) {
      char* text = nullptr;
      Check(smmsep_evaluate_dirs(ev_meeting.c_str(), ev_output.c_str(), ev_frame_size, ev_frame_shift, &text),
            "evaluate");
      const std::string report = TakeString(text);
      if (ev_report.empty()) std::printf("%s\n", report.c_str());
      else WriteFile(ev_report, report);
    } else if (run_all->parsed()) {
      json summary;
      std::map<std::string, std::vector<json>> reports;
      for (int i = 0; i < all_count; ++i) {
        const std::uint64_t seed = all_seed + static_cast<std::uint64_t>(i);
        const std::string id = "meeting" + std::to_string(seed);
        const fs::path dir = fs::path(all_out) / id;
        Meeting meeting;
        all_meeting.options.seed = seed;
        Config base;
        all_flags.Build(base);
        Check(smmsep_meeting_simulate(&all_meeting.options, GetInt(base, "frame_size"), GetInt(base, "frame_shift"),
                                      meeting.out()),
              "simulate");
        Check(smmsep_meeting_save(meeting.get(), (dir / "meeting").c_str(), id.c_str()), "save meeting");
        for (const auto& preset : all_presets) {
          PipelineFlags flags = all_flags;
          flags.preset = preset;
          Config cfg;
          flags.Build(cfg);
          Result result;
          Check(smmsep_separate_meeting(cfg.get(), meeting.get(), result.out()), preset.c_str());
          Check(smmsep_result_save(result.get(), (dir / preset).c_str(), id.c_str()), "save outputs");
          WriteFile(dir / preset / "summary.json", Summary(result));
          const std::string report = Evaluate(result, meeting);
          WriteFile(dir / preset / "report.json", report);
          const json r = json::parse(report);
          reports[preset].push_back(r);
          std::printf("%s %-10s DER %.4f  SI-SDR %7.2f dB  (mixture %.2f dB)\n", id.c_str(), preset.c_str(),
                      r["der"]["der"].get<double>(), r["mean_si_sdr_db"].is_null() ? NAN : r["mean_si_sdr_db"].get<double>(),
                      r["mean_mixture_si_sdr_db"].is_null() ? NAN : r["mean_mixture_si_sdr_db"].get<double>());
          std::fflush(stdout);
        }
      }
      for (const auto& [preset, list] : reports) {
        double der = 0.0, sdr = 0.0, mix = 0.0;
        int defined = 0;
        for (const auto& r : list) {
          der += r["der"]["der"].get<double>();
          if (!r["mean_si_sdr_db"].is_null()) {
            sdr += r["mean_si_sdr_db"].get<double>();
            mix += r["mean_mixture_si_sdr_db"].get<double>();
            ++defined;
          }
        }
        const double n = static_cast<double>(list.size());
        summary[preset] = {{"meetings", list.size()},
                           {"mean_der", der / n},
                           {"mean_si_sdr_db", defined ? json(sdr / defined) : json(nullptr)},
                           {"mean_mixture_si_sdr_db", defined ? json(mix / defined) : json(nullptr)}};
      }
      WriteFile(fs::path(all_out) / "summary.json", summary.dump(2));
      std::printf("%s\n", summary.dump(2).c_str());
    } else if (defaults->parsed()) {
      Config cfg;
      def_flags.Build(cfg);
      char* text = nullptr;
      Check(smmsep_config_to_json(cfg.get(), &text), "config");
      std::printf("%s\n", TakeString(text).c_str());
    }
  } catch (const Failure&) {
    return 1;
  }
  return 0;
}
