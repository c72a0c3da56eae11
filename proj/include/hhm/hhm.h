/*
 * Copyright (C) 2026 The hhm Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the hand-hygiene action pipeline. Every function returns an
 * hhm_status; on failure hhm_last_error() describes the cause for the calling
 * thread until its next hhm call.
 */

#ifndef HHM_HHM_H
#define HHM_HHM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HHM_API __declspec(dllexport)
#else
#define HHM_API __attribute__((visibility("default")))
#endif

typedef enum hhm_status {
    HHM_OK = 0,
    HHM_ERR_INTERNAL = 1,
    HHM_ERR_CONFIG = 2,
    HHM_ERR_DATA = 3,
    HHM_ERR_MODEL = 4,
    HHM_ERR_ARGUMENT = 5
} hhm_status;

typedef enum hhm_log_level { HHM_LOG_DEBUG = 0, HHM_LOG_INFO = 1, HHM_LOG_WARN = 2, HHM_LOG_ERROR = 3 } hhm_log_level;

typedef enum hhm_stream { HHM_STREAM_RGB = 0, HHM_STREAM_FLOW = 1 } hhm_stream;

/* Opaque pipeline configuration. */
typedef struct hhm_config hhm_config;

/* Receives log lines, or stage output text when passed to a run function. */
typedef void (*hhm_log_fn)(hhm_log_level level, const char* message, void* user);
typedef void (*hhm_write_fn)(const char* text, void* user);

HHM_API const char* hhm_version(void);
HHM_API const char* hhm_last_error(void);

/* NULL restores the default stderr logger. */
HHM_API void hhm_set_log_callback(hhm_log_fn fn, void* user);

HHM_API hhm_status hhm_config_new(hhm_config** out);
HHM_API hhm_status hhm_config_load(const char* path, hhm_config** out);
HHM_API void hhm_config_free(hhm_config* cfg);
/* Overrides keys with a (possibly partial) JSON object. */
HHM_API hhm_status hhm_config_patch(hhm_config* cfg, const char* json);
HHM_API hhm_status hhm_config_set_seed(hhm_config* cfg, uint64_t seed);
HHM_API hhm_status hhm_config_seed(const hhm_config* cfg, uint64_t* out);
/* Resolved configuration as JSON; release with hhm_string_free. */
HHM_API hhm_status hhm_config_to_json(const hhm_config* cfg, char** out);
HHM_API void hhm_string_free(char* s);

/* Stage output goes to `write` (stdout when NULL). */
HHM_API hhm_status hhm_run_gen(const hhm_config* cfg, int force, hhm_write_fn write, void* user);
HHM_API hhm_status hhm_run_prepare(const hhm_config* cfg, hhm_write_fn write, void* user);
HHM_API hhm_status hhm_run_flow(const hhm_config* cfg, hhm_write_fn write, void* user);
HHM_API hhm_status hhm_run_train(const hhm_config* cfg, hhm_stream stream, hhm_write_fn write, void* user);
HHM_API hhm_status hhm_run_eval(const hhm_config* cfg, hhm_write_fn write, void* user);
/* Scores the 16-frame window at `start` of a frame directory. */
HHM_API hhm_status hhm_run_infer(const hhm_config* cfg, const char* clip_dir, int start, double* score, int* label,
                                 hhm_write_fn write, void* user);

#ifdef __cplusplus
}
#endif

#endif /* HHM_HHM_H */
