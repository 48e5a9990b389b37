/* Copyright 2026 The Entret Authors.
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

/* C interface to the entret retrieval engine.
 *
 * Every call returns an entret_status. On failure a message describing the
 * error is available from entret_last_error() on the calling thread until
 * the next failing call on that thread. Strings returned through char **
 * out-parameters are owned by the caller and released with
 * entret_string_free().
 */

#ifndef ENTRET_ENTRET_H_
#define ENTRET_ENTRET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ENTRET_BUILDING_LIBRARY)
#define ENTRET_API __attribute__((visibility("default")))
#else
#define ENTRET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum entret_status {
  ENTRET_OK = 0,
  ENTRET_USAGE_ERROR = 1,   /* bad arguments or configuration */
  ENTRET_DATA_ERROR = 2,    /* missing, malformed or inconsistent input */
  ENTRET_NUMERIC_ERROR = 3, /* non-finite values, failed numeric check */
  ENTRET_INTERNAL_ERROR = 4 /* anything else (allocation failure, bugs) */
} entret_status;

typedef struct entret_config entret_config;
typedef struct entret_engine entret_engine;

ENTRET_API const char *entret_version(void);
ENTRET_API const char *entret_last_error(void);
ENTRET_API void entret_string_free(char *s);

/* Run configuration: key=value settings with defaults for every key. */
ENTRET_API entret_status entret_config_create(entret_config **out);
ENTRET_API void entret_config_free(entret_config *config);
ENTRET_API entret_status entret_config_set(entret_config *config, const char *key,
                                           const char *value);
/* Merges a key=value file ('#' comments). */
ENTRET_API entret_status entret_config_load(entret_config *config, const char *path);
/* Current value of one key. */
ENTRET_API entret_status entret_config_get(const entret_config *config, const char *key,
                                           char **value);
/* Newline-separated list of every key. */
ENTRET_API entret_status entret_config_keys(char **keys);

/* Newline-separated list of command names. */
ENTRET_API entret_status entret_commands(char **names);

/* Runs one command (ingest, synth, train, mine, build-index, evaluate,
 * query, benchmark, gradcheck). 'output' receives the text intended for
 * stdout; it may be NULL. */
ENTRET_API entret_status entret_run(const entret_config *config, const char *command,
                                    char **output);

/* Finite-difference gradient check on a random model with E = D = dims. */
ENTRET_API entret_status entret_gradcheck(uint32_t dims, uint32_t batch, uint32_t samples,
                                          uint64_t seed, double *max_relative_error,
                                          size_t *coordinates);

/* Query engine over a saved vocabulary, model and index. */
ENTRET_API entret_status entret_engine_open(const char *vocab_path, const char *model_path,
                                            const char *index_path, entret_engine **out);
ENTRET_API void entret_engine_close(entret_engine *engine);
ENTRET_API entret_status entret_engine_size(const entret_engine *engine, size_t *entities);
/* Top-k entity ids and scores for a span in context. 'ids' must hold k
 * pointers (each released with entret_string_free) and 'scores' k values;
 * 'found' receives the number written. */
ENTRET_API entret_status entret_engine_query(const entret_engine *engine, const char *span,
                                             const char *context, size_t k, char **ids,
                                             float *scores, size_t *found);

#ifdef __cplusplus
}
#endif

#endif /* ENTRET_ENTRET_H_ */
