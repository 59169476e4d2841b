/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef RVOPT_H
#define RVOPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  RVOPT_STATUS_OK = 0,
  RVOPT_STATUS_NULL_ARGUMENT = 1,
  RVOPT_STATUS_INVALID_UTF8 = 2,
  RVOPT_STATUS_PARSE = 3,
  RVOPT_STATUS_VALIDATION = 4,
  RVOPT_STATUS_DIMENSION = 5,
  RVOPT_STATUS_INVALID_INPUT = 6,
  RVOPT_STATUS_NUMERICAL = 7,
  RVOPT_STATUS_IO = 8,
  RVOPT_STATUS_BUFFER_TOO_SMALL = 9,
  RVOPT_STATUS_PANIC = 10,
} RvoptStatus;

/**
 * Outcome of a certificate.
 */
typedef enum {
  RVOPT_CERTIFICATE_STATUS_HOLDS = 0,
  RVOPT_CERTIFICATE_STATUS_VIOLATED = 1,
  RVOPT_CERTIFICATE_STATUS_LP_INFEASIBLE = 2,
  RVOPT_CERTIFICATE_STATUS_INCONCLUSIVE = 3,
} RvoptCertificateStatus;

/**
 * A certificate computed at a reference point.
 */
typedef struct RvoptCertificate RvoptCertificate;

/**
 * A validated problem instance.
 */
typedef struct RvoptProblem RvoptProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library on the same thread.
 */
const char *rvopt_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *rvopt_version(void);

/**
 * Parses and validates a problem document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a writable pointer.
 */
RvoptStatus rvopt_problem_from_json(const char *json, RvoptProblem **out);

/**
 * Loads and validates a problem document from a file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a writable pointer.
 */
RvoptStatus rvopt_problem_load(const char *path, RvoptProblem **out);

/**
 * Releases a problem. Null is ignored.
 *
 * # Safety
 * `problem` must come from this library and not be used afterwards.
 */
void rvopt_problem_free(RvoptProblem *problem);

/**
 * Decision, objective and constraint dimensions.
 *
 * # Safety
 * `problem` must be valid; the out pointers must be writable.
 */
RvoptStatus rvopt_problem_dims(const RvoptProblem *problem, size_t *n, size_t *m, size_t *p);

/**
 * Merit value at `x` (length `len`).
 *
 * # Safety
 * `x` must point to `len` doubles and `out` must be writable.
 */
RvoptStatus rvopt_merit(const RvoptProblem *problem, const double *x, size_t len, double *out);

/**
 * Feasibility of `x`.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` must be writable.
 */
RvoptStatus rvopt_is_feasible(const RvoptProblem *problem, const double *x, size_t len, bool *out);

/**
 * Multiplier-rule certificate at `x` using the scenario fan (or the
 * document's fan override).
 *
 * # Safety
 * `x` must point to `len` doubles and `out` must be writable.
 */
RvoptStatus rvopt_multiplier_certificate(const RvoptProblem *problem,
                                         const double *x,
                                         size_t len,
                                         RvoptCertificate **out);

/**
 * # Safety
 * `cert` must be valid and `out` writable.
 */
RvoptStatus rvopt_certificate_status(const RvoptCertificate *cert, RvoptCertificateStatus *out);

/**
 * # Safety
 * `cert` must be valid and `out` writable.
 */
RvoptStatus rvopt_certificate_residual(const RvoptCertificate *cert, double *out);

/**
 * Copies the objective multiplier into `buf`. `len` receives its length
 * (0 when there is none). Fails with `BufferTooSmall` when `cap` is short;
 * `len` is set in that case too.
 *
 * # Safety
 * `buf` must hold `cap` doubles (may be null when `cap` is 0); `len` writable.
 */
RvoptStatus rvopt_certificate_multiplier(const RvoptCertificate *cert,
                                         double *buf,
                                         size_t cap,
                                         size_t *len);

/**
 * Serializes a certificate. Release the string with `rvopt_string_free`.
 *
 * # Safety
 * `cert` must be valid and `out` writable.
 */
RvoptStatus rvopt_certificate_to_json(const RvoptCertificate *cert, char **out);

/**
 * Releases a certificate. Null is ignored.
 *
 * # Safety
 * `cert` must come from this library and not be used afterwards.
 */
void rvopt_certificate_free(RvoptCertificate *cert);

/**
 * Full analysis report at `x` as JSON, with default options and `seed`.
 * `verdict` receives the CLI exit code of the report (0, 2 or 3).
 *
 * # Safety
 * `x` must point to `len` doubles; `out` and `verdict` must be writable.
 */
RvoptStatus rvopt_report_json(const RvoptProblem *problem,
                              const double *x,
                              size_t len,
                              uint64_t seed,
                              char **out,
                              int32_t *verdict);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void rvopt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RVOPT_H */
