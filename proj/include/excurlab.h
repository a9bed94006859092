#ifndef EXCURLAB_H
#define EXCURLAB_H

/* C API for the Brownian excursion laboratory.
 *
 * All functions are thread-safe as long as each xl_config / xl_run handle
 * is used from one thread at a time.  Functions that can fail return an
 * xl_status; on any non-XL_OK return, xl_last_error() gives a diagnostic
 * for the calling thread (valid until that thread's next API call).
 * Strings returned from a handle stay valid until the handle is destroyed.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xl_status {
  XL_OK = 0,
  XL_ERR_INVALID_ARGUMENT = 1, /* bad key, value, range, or null pointer */
  XL_ERR_PARSE = 2,            /* malformed config text */
  XL_ERR_IO = 3,               /* file open/create/write failure */
  XL_ERR_RUNTIME = 4,          /* execution failure */
  XL_ERR_OUT_OF_MEMORY = 5
} xl_status;

/* Opaque handles. */
typedef struct xl_config xl_config;
typedef struct xl_run xl_run;

/* Library version string, e.g. "0.1.0". */
const char* xl_version(void);

/* Diagnostic for the calling thread's most recent failed call ("" if the
 * most recent call succeeded). */
const char* xl_last_error(void);

/* --- configuration ----------------------------------------------------- */

/* Returns a new empty configuration, or NULL on allocation failure. */
xl_config* xl_config_create(void);
void xl_config_destroy(xl_config* cfg);

/* Overlays `key = value` lines from a UTF-8 file.  Later values win, so
 * call this before xl_config_set to give explicit settings priority. */
xl_status xl_config_load_file(xl_config* cfg, const char* path);

/* Sets one key.  Unknown keys and malformed values are errors. */
xl_status xl_config_set(xl_config* cfg, const char* key, const char* value);

/* Copies the raw value of a set key into buf (always NUL-terminated,
 * truncated to buf_len - 1 characters).  Fails if the key is unknown or
 * not set. */
xl_status xl_config_get(const xl_config* cfg, const char* key, char* buf,
                        size_t buf_len);

/* Key registry, for front ends that expose one flag per key. */
size_t xl_known_key_count(void);
const char* xl_known_key_name(size_t index);  /* NULL if out of range */
const char* xl_known_key_help(size_t index);  /* NULL if out of range */

/* Subcommand registry. */
size_t xl_subcommand_count(void);
const char* xl_subcommand_name(size_t index); /* NULL if out of range */
const char* xl_subcommand_help(size_t index); /* NULL if out of range */

/* --- runs -------------------------------------------------------------- */

/* Executes one subcommand: validates the configuration, runs the driver,
 * and writes the primary CSV plus a machine-readable summary JSON.  On
 * XL_OK, *out owns the results and must be freed with xl_run_destroy. */
xl_status xl_run_command(const xl_config* cfg, const char* subcommand,
                         xl_run** out);

/* 1 iff every gating in-run pass criterion held. */
int xl_run_passed(const xl_run* run);
const char* xl_run_summary_json(const xl_run* run);
const char* xl_run_report_text(const xl_run* run);
size_t xl_run_output_count(const xl_run* run);
const char* xl_run_output_path(const xl_run* run, size_t index);
void xl_run_destroy(xl_run* run);

/* --- direct analytic evaluation ---------------------------------------- */
/* All on the interval (a, b); results are written to *out. */

/* Probability that a Brownian path started at x in [a, b] stays strictly
 * inside (a, b) for time at least s. */
xl_status xl_psi(double a, double b, double x, double s, double* out);

/* CDF of the limiting age law at s. */
xl_status xl_limit_cdf(double a, double b, double s, double* out);

/* Inverse of the limiting age CDF at probability p in [0, 1). */
xl_status xl_limit_cdf_inverse(double a, double b, double p, double* out);

/* Tail weight of excursion lifetimes above t: sqrt(2 / (pi t)). */
xl_status xl_ito_tail(double t, double* out);

/* Rate of excursions with lifetime above s per unit boundary local time. */
xl_status xl_exit_rate(double a, double b, double s, double* out);

#ifdef __cplusplus
}
#endif

#endif /* EXCURLAB_H */
