/* C interface of the cell-free multi-RIS downlink simulator.
 *
 * All entry points are exported from the shared library with C linkage and
 * operate on opaque handles. Functions returning int use the error codes
 * below; when a message buffer is supplied, a human-readable description of
 * the failure is copied into it (always NUL-terminated).
 */
#ifndef CELLFREE_H
#define CELLFREE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CF_API __declspec(dllexport)
#else
#define CF_API __attribute__((visibility("default")))
#endif

enum cf_status {
    CF_OK = 0,
    CF_ERR_CONFIG = 2,  /* bad configuration file, key or value */
    CF_ERR_RUNTIME = 3  /* solver or I/O failure */
};

typedef struct cf_config cf_config;
typedef struct cf_result cf_result;

/* ---- configuration ---------------------------------------------------- */

/* Fresh configuration holding the built-in defaults. Never fails. */
CF_API cf_config* cf_config_create(void);
CF_API void cf_config_free(cf_config* cfg);

/* Load a config file (TOML-style key-value syntax) over the defaults. */
CF_API int cf_config_load_file(cf_config* cfg, const char* path, char* errmsg, int errmsg_len);

/* Same, from an in-memory string. */
CF_API int cf_config_load_string(cf_config* cfg, const char* text, char* errmsg, int errmsg_len);

/* Override one dotted key, e.g. ("run.mode", "no-coop") or
 * ("run.pmax_dbm", "[-10, 0, 10]"). Values use config-file syntax; bare
 * words are accepted as strings. */
CF_API int cf_config_set(cf_config* cfg, const char* key, const char* value, char* errmsg,
                         int errmsg_len);

/* Validate the assembled configuration without running anything. */
CF_API int cf_config_validate(const cf_config* cfg, char* errmsg, int errmsg_len);

/* Effective value of one key (after defaults), rendered as text. Returns the
 * full length needed, or -1 if the key is unknown; copies at most
 * buf_len - 1 bytes. Strings are returned unquoted. */
CF_API long cf_config_get(const cf_config* cfg, const char* key, char* buf, long buf_len);

/* Render the effective configuration; returns the length the full text
 * would need (excluding the NUL), truncating the copy to buf_len - 1. */
CF_API long cf_config_render(const cf_config* cfg, char* buf, long buf_len);

/* ---- experiments ------------------------------------------------------ */

/* Run the configured Monte-Carlo sweep. On success *result owns the rows
 * until cf_result_free. */
CF_API int cf_run_sweep(const cf_config* cfg, cf_result** result, char* errmsg, int errmsg_len);

CF_API void cf_result_free(cf_result* result);

CF_API long cf_result_row_count(const cf_result* result);

/* Per-row accessors; row indices follow the (p_max, realization) sweep
 * order. Out-of-range indices return 0. */
CF_API double cf_result_pmax_dbm(const cf_result* result, long row);
CF_API uint64_t cf_result_seed(const cf_result* result, long row);
CF_API long cf_result_iterations(const cf_result* result, long row);
CF_API double cf_result_sum_rate(const cf_result* result, long row);

/* Write the result table (and optionally the first cell's per-iteration
 * trace) as CSV. */
CF_API int cf_result_write_csv(const cf_result* result, const char* path, char* errmsg,
                               int errmsg_len);
CF_API int cf_result_write_trace_csv(const cf_result* result, const char* path, char* errmsg,
                                     int errmsg_len);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CELLFREE_H */
