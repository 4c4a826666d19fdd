/* Unsupervised multichannel meeting separation and diarization.
 *
 * C interface to the smmsep shared library. Objects are opaque handles owned
 * by the caller and released with the matching *_destroy function. Every
 * function that can fail returns an smmsep_status; on failure a message is
 * available from smmsep_last_error() on the calling thread until the next
 * failing call. Strings returned through char** are heap allocated and must
 * be released with smmsep_string_free().
 */
#ifndef SMMSEP_SMMSEP_H
#define SMMSEP_SMMSEP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SMMSEP_BUILDING_LIBRARY)
#    define SMMSEP_API __declspec(dllexport)
#  else
#    define SMMSEP_API __declspec(dllimport)
#  endif
#else
#  define SMMSEP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smmsep_status {
  SMMSEP_OK = 0,
  SMMSEP_ERR_INVALID_ARGUMENT = 1,
  SMMSEP_ERR_IO = 2,
  SMMSEP_ERR_NUMERICAL = 3,
  /* A pipeline stage failed; smmsep_last_error_stage() names it. */
  SMMSEP_ERR_STAGE = 4,
  SMMSEP_ERR_INTERNAL = 5
} smmsep_status;

typedef struct smmsep_config smmsep_config;
typedef struct smmsep_meeting smmsep_meeting;
typedef struct smmsep_result smmsep_result;

SMMSEP_API const char* smmsep_version(void);
SMMSEP_API const char* smmsep_status_name(smmsep_status status);
SMMSEP_API const char* smmsep_last_error(void);
/* Stage of the last SMMSEP_ERR_STAGE failure, "" otherwise. */
SMMSEP_API const char* smmsep_last_error_stage(void);
SMMSEP_API void smmsep_string_free(char* str);

/* ---- configuration ---------------------------------------------------- */

/* preset: "proposed", "dirichlet", "oracle", or NULL for the defaults. */
SMMSEP_API smmsep_status smmsep_config_create(const char* preset, smmsep_config** out);
SMMSEP_API smmsep_status smmsep_config_clone(const smmsep_config* cfg, smmsep_config** out);
SMMSEP_API void smmsep_config_destroy(smmsep_config* cfg);

/* Values use the textual form of the command line: "true", "0.5", "10,20". */
SMMSEP_API smmsep_status smmsep_config_set(smmsep_config* cfg, const char* key, const char* value);
SMMSEP_API smmsep_status smmsep_config_get(const smmsep_config* cfg, const char* key, char** value);

/* from_json keeps current values for keys missing from the document. */
SMMSEP_API smmsep_status smmsep_config_to_json(const smmsep_config* cfg, char** json);
SMMSEP_API smmsep_status smmsep_config_from_json(smmsep_config* cfg, const char* json);
SMMSEP_API smmsep_status smmsep_config_load(smmsep_config* cfg, const char* path);
SMMSEP_API smmsep_status smmsep_config_save(const smmsep_config* cfg, const char* path);

SMMSEP_API size_t smmsep_config_key_count(void);
/* NULL when index is out of range. */
SMMSEP_API const char* smmsep_config_key_name(size_t index);
SMMSEP_API const char* smmsep_config_key_help(size_t index);

SMMSEP_API size_t smmsep_preset_count(void);
SMMSEP_API const char* smmsep_preset_name(size_t index);

/* ---- synthetic meetings ----------------------------------------------- */

typedef struct smmsep_meeting_options {
  int speakers;
  double duration_s;
  double overlap_ratio;
  double snr_db;
  int microphones;
  double array_radius_m;
  double min_separation_deg;
  int sample_rate;
  uint64_t seed;
} smmsep_meeting_options;

SMMSEP_API void smmsep_meeting_options_default(smmsep_meeting_options* options);

/* Ground-truth activity is computed on the given STFT frame grid. */
SMMSEP_API smmsep_status smmsep_meeting_simulate(const smmsep_meeting_options* options, int frame_size,
                                                 int frame_shift, smmsep_meeting** out);
/* Directory layout: mixture.wav, reference_spk<k>.wav, noise.wav and
 * reference.rttm. */
SMMSEP_API smmsep_status smmsep_meeting_load(const char* dir, int frame_size, int frame_shift,
                                             smmsep_meeting** out);
SMMSEP_API smmsep_status smmsep_meeting_save(const smmsep_meeting* meeting, const char* dir,
                                             const char* file_id);
SMMSEP_API void smmsep_meeting_destroy(smmsep_meeting* meeting);

SMMSEP_API size_t smmsep_meeting_speakers(const smmsep_meeting* meeting);
SMMSEP_API size_t smmsep_meeting_channels(const smmsep_meeting* meeting);
SMMSEP_API size_t smmsep_meeting_samples(const smmsep_meeting* meeting);
SMMSEP_API int smmsep_meeting_sample_rate(const smmsep_meeting* meeting);

/* ---- separation ------------------------------------------------------- */

/* The oracle initialization is only available through separate_meeting. */
SMMSEP_API smmsep_status smmsep_separate_file(const smmsep_config* cfg, const char* wav_path,
                                              smmsep_result** out);
SMMSEP_API smmsep_status smmsep_separate_meeting(const smmsep_config* cfg, const smmsep_meeting* meeting,
                                                 smmsep_result** out);
/* samples: channel-interleaved, frames * channels values. */
SMMSEP_API smmsep_status smmsep_separate_buffer(const smmsep_config* cfg, const float* samples,
                                                size_t frames, size_t channels, int sample_rate,
                                                smmsep_result** out);
SMMSEP_API void smmsep_result_destroy(smmsep_result* result);

SMMSEP_API size_t smmsep_result_speakers(const smmsep_result* result);
/* Borrowed pointer into the result, valid until it is destroyed. */
SMMSEP_API smmsep_status smmsep_result_stream(const smmsep_result* result, size_t speaker,
                                              const double** samples, size_t* length);
SMMSEP_API size_t smmsep_result_segments(const smmsep_result* result);
SMMSEP_API smmsep_status smmsep_result_rttm(const smmsep_result* result, const char* file_id, char** text);
SMMSEP_API smmsep_status smmsep_result_manifest(const smmsep_result* result, char** json);
/* Runtime per stage, fusion events and EM diagnostics. */
SMMSEP_API smmsep_status smmsep_result_summary(const smmsep_result* result, char** json);
/* Writes spk<i>.wav, segments.json, separation.rttm, state.ckpt and
 * config.json. */
SMMSEP_API smmsep_status smmsep_result_save(const smmsep_result* result, const char* dir,
                                            const char* file_id);

/* ---- evaluation ------------------------------------------------------- */

/* JSON report: per-speaker SI-SDR, mixture SI-SDR, permutation and DER. */
SMMSEP_API smmsep_status smmsep_evaluate(const smmsep_result* result, const smmsep_meeting* meeting,
                                         char** report_json);
/* Same report for outputs on disk (spk<i>.wav and separation.rttm in
 * output_dir) against a meeting directory. */
SMMSEP_API smmsep_status smmsep_evaluate_dirs(const char* meeting_dir, const char* output_dir,
                                              int frame_size, int frame_shift, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* SMMSEP_SMMSEP_H */
