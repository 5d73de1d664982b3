/* Copyright 2026 the lser authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* lser -- speech emotion recognition with a dual liquid state machine.
 *
 * C interface of the shared library. All state lives behind opaque handles;
 * every fallible call returns an lser_status and leaves a human-readable
 * detail message in thread-local storage (lser_last_error_message).
 */

#ifndef LSER_LSER_H_
#define LSER_LSER_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef LSER_BUILDING
#    define LSER_API __declspec(dllexport)
#  else
#    define LSER_API __declspec(dllimport)
#  endif
#else
#  define LSER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lser_status {
  LSER_OK = 0,
  LSER_ERR_FILE_NOT_FOUND = 1,
  LSER_ERR_MALFORMED_RIFF = 2,
  LSER_ERR_UNSUPPORTED_ENCODING = 3,
  LSER_ERR_SHORT_SIGNAL = 4,
  LSER_ERR_BAD_ARGUMENT = 5,
  LSER_ERR_SILENT_FRAME = 6,
  LSER_ERR_DEGENERATE_FRAME = 7,
  LSER_ERR_DIMENSION_MISMATCH = 8,
  LSER_ERR_MISSING_CACHE = 9,
  LSER_ERR_IO = 10,
  LSER_ERR_BAD_CONFIG = 11,
  LSER_ERR_NUMERIC_FAULT = 12,
  LSER_ERR_STAGE_FAILURES = 13,
  LSER_ERR_INTERNAL = 14,
} lser_status;

typedef struct lser_config lser_config;  /* pipeline configuration */
typedef struct lser_report lser_report;  /* evaluation results */

typedef struct lser_stage_stats {
  int32_t computed; /* artifacts built in this run */
  int32_t reused;   /* artifacts already cached */
  int32_t failed;   /* corpus entries that errored */
} lser_stage_stats;

LSER_API const char* lser_version(void);
LSER_API const char* lser_status_name(lser_status status);

/* Detail message of the most recent failure on this thread. */
LSER_API const char* lser_last_error_message(void);

/* --- configuration ----------------------------------------------------- */

/* Creates a configuration populated with the full defaults. Never fails. */
LSER_API lser_config* lser_config_create(void);
LSER_API void lser_config_destroy(lser_config* config);

LSER_API lser_status lser_config_load(const char* path, lser_config** out);
LSER_API lser_status lser_config_save(const lser_config* config,
                                      const char* path);

/* Dotted keys into the JSON schema, e.g. "reservoir.seed", "corpus.dir". */
LSER_API lser_status lser_config_set(lser_config* config, const char* key,
                                     const char* value);
/* Writes the value (JSON-encoded scalars as text) into buf; returns the
 * required size including the terminator via *size. */
LSER_API lser_status lser_config_get(const lser_config* config,
                                     const char* key, char* buf, size_t bufsize,
                                     size_t* size);

/* --- corpus ------------------------------------------------------------ */

/* Writes the bundled seven-class synthetic test corpus (n_per_class
 * one-second utterances per class, Emo-DB naming). */
LSER_API lser_status lser_make_synthetic_corpus(const char* dir, uint64_t seed,
                                                int32_t n_per_class);

/* --- pipeline stages ---------------------------------------------------- */

/* Each stage is idempotent over its content-addressed cache. stats may be
 * NULL. A stage returns LSER_ERR_STAGE_FAILURES when some corpus entries
 * failed; the per-entry messages are in lser_last_error_message(). */
LSER_API lser_status lser_run_preprocess(const lser_config* config,
                                         lser_stage_stats* stats);
LSER_API lser_status lser_run_simulate(const lser_config* config,
                                       lser_stage_stats* stats);
LSER_API lser_status lser_run_evaluate(const lser_config* config,
                                       lser_report** out);
LSER_API lser_status lser_run_all(const lser_config* config,
                                  lser_report** out);
/* Runs the component sweep and writes <output.dir>/sweep.csv. */
LSER_API lser_status lser_run_sweep(const lser_config* config);

/* --- reports ------------------------------------------------------------ */

LSER_API void lser_report_destroy(lser_report* report);
LSER_API double lser_report_mean_accuracy(const lser_report* report);
LSER_API double lser_report_ci95(const lser_report* report);
LSER_API int32_t lser_report_n_classes(const lser_report* report);
/* Raw confusion count, rows true class, columns predicted class. */
LSER_API int64_t lser_report_confusion(const lser_report* report, int32_t truth,
                                       int32_t predicted);
/* Paths of the files written by evaluate (report JSON, confusion CSV). */
LSER_API const char* lser_report_json_path(const lser_report* report);
LSER_API const char* lser_report_confusion_csv_path(const lser_report* report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LSER_LSER_H_ */
