#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <smmsep/smmsep.h>

namespace {

namespace fs = std::filesystem;

std::string Take(char* s) {
  std::string out = s ? s : "";
  smmsep_string_free(s);
  return out;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STRNE(smmsep_version(), "");
  EXPECT_STREQ(smmsep_status_name(SMMSEP_OK), "ok");
  EXPECT_STRNE(smmsep_status_name(SMMSEP_ERR_IO), smmsep_status_name(SMMSEP_ERR_NUMERICAL));
}

TEST(CApi, ConfigKeysPresetsAndJson) {
  ASSERT_EQ(smmsep_preset_count(), 3u);
  EXPECT_STREQ(smmsep_preset_name(0), "proposed");
  EXPECT_EQ(smmsep_preset_name(3), nullptr);
  ASSERT_GT(smmsep_config_key_count(), 20u);
  EXPECT_EQ(smmsep_config_key_name(smmsep_config_key_count()), nullptr);

  smmsep_config* cfg = nullptr;
  ASSERT_EQ(smmsep_config_create("oracle", &cfg), SMMSEP_OK);
  char* v = nullptr;
  ASSERT_EQ(smmsep_config_get(cfg, "iterations", &v), SMMSEP_OK);
  EXPECT_EQ(Take(v), "20");
  EXPECT_EQ(smmsep_config_set(cfg, "iterations", "7"), SMMSEP_OK);
  EXPECT_EQ(smmsep_config_set(cfg, "no_such_key", "1"), SMMSEP_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(smmsep_last_error()).find("no_such_key"), std::string::npos);

  char* json = nullptr;
  ASSERT_EQ(smmsep_config_to_json(cfg, &json), SMMSEP_OK);
  const std::string text = Take(json);
  smmsep_config* other = nullptr;
  ASSERT_EQ(smmsep_config_create(nullptr, &other), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_from_json(other, text.c_str()), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_get(other, "iterations", &v), SMMSEP_OK);
  EXPECT_EQ(Take(v), "7");
  EXPECT_EQ(smmsep_config_from_json(other, "{not json"), SMMSEP_ERR_INVALID_ARGUMENT);

  smmsep_config* clone = nullptr;
  ASSERT_EQ(smmsep_config_clone(other, &clone), SMMSEP_OK);
  const fs::path path = fs::temp_directory_path() / "smmsep_capi_config.json";
  ASSERT_EQ(smmsep_config_save(clone, path.c_str()), SMMSEP_OK);
  smmsep_config* loaded = nullptr;
  ASSERT_EQ(smmsep_config_create(nullptr, &loaded), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_load(loaded, path.c_str()), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_get(loaded, "init", &v), SMMSEP_OK);
  EXPECT_EQ(Take(v), "oracle");
  EXPECT_EQ(smmsep_config_load(loaded, "/nonexistent/dir/c.json"), SMMSEP_ERR_IO);
  fs::remove(path);

  EXPECT_EQ(smmsep_config_create("bogus", &other), SMMSEP_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(smmsep_config_get(nullptr, "iterations", &v), SMMSEP_ERR_INVALID_ARGUMENT);
  smmsep_config_destroy(cfg);
  smmsep_config_destroy(other);
  smmsep_config_destroy(clone);
  smmsep_config_destroy(loaded);
  smmsep_config_destroy(nullptr);
}

TEST(CApi, SimulateSeparateEvaluate) {
  smmsep_meeting_options opts;
  smmsep_meeting_options_default(&opts);
  EXPECT_EQ(opts.speakers, 3);
  opts.speakers = 2;
  opts.duration_s = 15.0;
  opts.seed = 4;
  smmsep_meeting* meeting = nullptr;
  ASSERT_EQ(smmsep_meeting_simulate(&opts, 1024, 256, &meeting), SMMSEP_OK);
  EXPECT_EQ(smmsep_meeting_speakers(meeting), 2u);
  EXPECT_EQ(smmsep_meeting_channels(meeting), 4u);
  EXPECT_EQ(smmsep_meeting_sample_rate(meeting), 16000);
  const size_t samples = smmsep_meeting_samples(meeting);
  EXPECT_GT(samples, 14u * 16000u);

  smmsep_config* cfg = nullptr;
  ASSERT_EQ(smmsep_config_create("proposed", &cfg), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_set(cfg, "speakers", "2"), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_set(cfg, "iterations", "8"), SMMSEP_OK);
  ASSERT_EQ(smmsep_config_set(cfg, "fusion_iterations", "3,5"), SMMSEP_OK);
  smmsep_result* result = nullptr;
  ASSERT_EQ(smmsep_separate_meeting(cfg, meeting, &result), SMMSEP_OK) << smmsep_last_error();
  ASSERT_EQ(smmsep_result_speakers(result), 2u);
  const double* stream = nullptr;
  size_t length = 0;
  ASSERT_EQ(smmsep_result_stream(result, 1, &stream, &length), SMMSEP_OK);
  EXPECT_EQ(length, samples);
  EXPECT_EQ(smmsep_result_stream(result, 2, &stream, &length), SMMSEP_ERR_INVALID_ARGUMENT);

  char* text = nullptr;
  ASSERT_EQ(smmsep_result_rttm(result, "meet", &text), SMMSEP_OK);
  const std::string rttm = Take(text);
  if (smmsep_result_segments(result) > 0) {
    EXPECT_EQ(rttm.rfind("SPEAKER meet 1 ", 0), 0u);
  }
  ASSERT_EQ(smmsep_result_manifest(result, &text), SMMSEP_OK);
  EXPECT_NE(Take(text).find("\"segments\""), std::string::npos);
  ASSERT_EQ(smmsep_result_summary(result, &text), SMMSEP_OK);
  EXPECT_NE(Take(text).find("runtime"), std::string::npos);
  ASSERT_EQ(smmsep_evaluate(result, meeting, &text), SMMSEP_OK);
  const std::string report = Take(text);
  EXPECT_NE(report.find("\"der\""), std::string::npos);

  const fs::path dir = fs::temp_directory_path() / "smmsep_capi_run";
  fs::remove_all(dir);
  ASSERT_EQ(smmsep_meeting_save(meeting, (dir / "meeting").c_str(), "meet"), SMMSEP_OK);
  ASSERT_EQ(smmsep_result_save(result, (dir / "out").c_str(), "meet"), SMMSEP_OK);
  ASSERT_EQ(smmsep_evaluate_dirs((dir / "meeting").c_str(), (dir / "out").c_str(), 1024, 256, &text), SMMSEP_OK)
      << smmsep_last_error();
  EXPECT_NE(Take(text).find("\"der\""), std::string::npos);

  smmsep_meeting* reloaded = nullptr;
  ASSERT_EQ(smmsep_meeting_load((dir / "meeting").c_str(), 1024, 256, &reloaded), SMMSEP_OK);
  EXPECT_EQ(smmsep_meeting_samples(reloaded), samples);
  smmsep_result* from_file = nullptr;
  ASSERT_EQ(smmsep_separate_file(cfg, (dir / "meeting" / "mixture.wav").c_str(), &from_file), SMMSEP_OK);
  EXPECT_EQ(smmsep_result_speakers(from_file), 2u);
  EXPECT_EQ(smmsep_meeting_load((dir / "none").c_str(), 1024, 256, &reloaded), SMMSEP_ERR_IO);
  fs::remove_all(dir);

  smmsep_result_destroy(from_file);
  smmsep_result_destroy(result);
  smmsep_meeting_destroy(reloaded);
  smmsep_meeting_destroy(meeting);
  smmsep_config_destroy(cfg);
}

TEST(CApi, StageErrorsNameTheStage) {
  smmsep_config* cfg = nullptr;
  ASSERT_EQ(smmsep_config_create(nullptr, &cfg), SMMSEP_OK);
  std::vector<float> tiny(2 * 200, 0.1f);
  smmsep_result* result = nullptr;
  EXPECT_EQ(smmsep_separate_buffer(cfg, tiny.data(), 200, 2, 16000, &result), SMMSEP_ERR_STAGE);
  EXPECT_STRNE(smmsep_last_error_stage(), "");
  EXPECT_EQ(result, nullptr);
  EXPECT_EQ(smmsep_separate_buffer(cfg, nullptr, 200, 2, 16000, &result), SMMSEP_ERR_INVALID_ARGUMENT);
  smmsep_config_destroy(cfg);
}

}  // namespace
