/* Copyright 2026 The geomdn Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the geomdn library. Every function returns a status code;
 * on failure geomdn_last_error() describes the problem (per thread, valid
 * until the next failing call on that thread). Handles are opaque and owned
 * by the caller until passed to the matching destroy function.
 */

#ifndef GEOMDN_GEOMDN_H_
#define GEOMDN_GEOMDN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(GEOMDN_BUILDING_LIBRARY)
#define GEOMDN_API __attribute__((visibility("default")))
#else
#define GEOMDN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum geomdn_status {
  GEOMDN_OK = 0,
  GEOMDN_E_INVALID_ARGUMENT = 1,
  GEOMDN_E_DOMAIN = 2,
  GEOMDN_E_CONTRACT = 3,
  GEOMDN_E_IO = 4,
  GEOMDN_E_FORMAT = 5,
  GEOMDN_E_TRAINING = 6,
  GEOMDN_E_INIT = 7,
  GEOMDN_E_PIPELINE = 8,
  GEOMDN_E_INTERNAL = 99
} geomdn_status;

typedef enum geomdn_rule {
  GEOMDN_RULE_MODEL_DEFAULT = -1,
  GEOMDN_RULE_STRONGEST_PI = 0,
  GEOMDN_RULE_MAX_MIXTURE_PROB = 1
} geomdn_rule;

typedef struct geomdn_config geomdn_config;
typedef struct geomdn_model geomdn_model;

/* Receives one line of text without its trailing newline. */
typedef void (*geomdn_line_fn)(const char* line, void* user);

GEOMDN_API const char* geomdn_last_error(void);
GEOMDN_API const char* geomdn_status_name(geomdn_status status);
GEOMDN_API const char* geomdn_version(void);

/* ---- configuration ---- */

GEOMDN_API geomdn_status geomdn_config_create(geomdn_config** out);
GEOMDN_API void geomdn_config_destroy(geomdn_config* config);
GEOMDN_API geomdn_status geomdn_config_set(geomdn_config* config, const char* key,
                                           const char* value);
/* Copies the value (NUL-terminated) into buf when it fits; *needed receives
 * the size including the terminator. */
GEOMDN_API geomdn_status geomdn_config_get(const geomdn_config* config, const char* key,
                                           char* buf, size_t capacity, size_t* needed);
GEOMDN_API geomdn_status geomdn_config_apply_profile(geomdn_config* config, const char* name);
GEOMDN_API geomdn_status geomdn_config_load_file(geomdn_config* config, const char* path);
/* Checks consistency; each warning goes to `warn`. */
GEOMDN_API geomdn_status geomdn_config_validate(const geomdn_config* config,
                                                geomdn_line_fn warn, void* user);

GEOMDN_API size_t geomdn_config_key_count(void);
GEOMDN_API const char* geomdn_config_key_name(size_t index);
GEOMDN_API const char* geomdn_config_key_section(size_t index);
GEOMDN_API const char* geomdn_config_key_help(size_t index);
GEOMDN_API size_t geomdn_profile_count(void);
GEOMDN_API const char* geomdn_profile_name(size_t index);

/* ---- commands ---- */

/* Trains on the configured train/dev corpora and writes the vocabulary,
 * checkpoint and (if configured) training log. Progress goes to `log`. */
GEOMDN_API geomdn_status geomdn_train(const geomdn_config* config, geomdn_line_fn log,
                                      void* user);

typedef struct geomdn_eval_report {
  int is_geolocation;
  double acc_at_161; /* percent */
  double mean_km;
  double median_km;
  double perplexity; /* dialect models */
  size_t users;
  size_t vocab_size;
} geomdn_eval_report;

/* Scores the configured test corpus. The printable summary goes to `out`,
 * diagnostics to `log`. */
GEOMDN_API geomdn_status geomdn_evaluate(const geomdn_config* config,
                                         geomdn_eval_report* report, geomdn_line_fn out,
                                         geomdn_line_fn log, void* user);

/* Predictions TSV for the lines of `input_path` ("id TAB text" or bare text)
 * or, when input_path is NULL, for the single `text`. Written to the
 * configured output path, or line by line to `out` when that path is empty. */
GEOMDN_API geomdn_status geomdn_predict(const geomdn_config* config, const char* input_path,
                                        const char* text, size_t top_k, geomdn_line_fn out,
                                        void* user);

/* Per-region rankings and recall.tsv in the configured output directory;
 * the recall table is also sent to `out`. */
GEOMDN_API geomdn_status geomdn_dialect(const geomdn_config* config, const char* regions_path,
                                        size_t samples, size_t k, double radius_km,
                                        geomdn_line_fn out, geomdn_line_fn log, void* user);

/* CSV grid (lat,lon,log_value) to the configured output path. `word` is used
 * for dialect models, `text` for mixture models. */
GEOMDN_API geomdn_status geomdn_heatmap(const geomdn_config* config, const char* word,
                                        const char* text, double lat_min, double lat_max,
                                        double lon_min, double lon_max, size_t resolution);

/* Writes a synthetic corpus ("bimodal" or "dialect" preset plus any
 * synthetic keys set in the config) into out_dir. */
GEOMDN_API geomdn_status geomdn_synth(const geomdn_config* config, const char* preset,
                                      const char* out_dir);

/* ---- models ---- */

/* vocab_path may be NULL; text prediction then fails. */
GEOMDN_API geomdn_status geomdn_model_load(const char* checkpoint_path, const char* vocab_path,
                                           geomdn_model** out);
GEOMDN_API void geomdn_model_destroy(geomdn_model* model);
GEOMDN_API geomdn_status geomdn_model_save(const geomdn_model* model, const char* path);
GEOMDN_API const char* geomdn_model_kind(const geomdn_model* model);
GEOMDN_API size_t geomdn_model_num_components(const geomdn_model* model);
/* Writes 2*n doubles (lat, lon per text) into out_latlon. */
GEOMDN_API geomdn_status geomdn_model_predict(const geomdn_model* model,
                                              const char* const* texts, size_t n,
                                              geomdn_rule rule, double* out_latlon);

/* ---- math helpers ---- */

GEOMDN_API geomdn_status geomdn_log_pdf(double mu1, double mu2, double sigma1, double sigma2,
                                        double rho, double x1, double x2, double* out);
GEOMDN_API double geomdn_haversine_km(double lat1, double lon1, double lat2, double lon2);

#ifdef __cplusplus
}
#endif

#endif /* GEOMDN_GEOMDN_H_ */
