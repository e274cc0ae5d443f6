#ifndef LTQKD_H
#define LTQKD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LtqkdPointStatus {
  LTQKD_POINT_STATUS_OK = 0,
  LTQKD_POINT_STATUS_NO_KEY = 1,
  LTQKD_POINT_STATUS_INCONCLUSIVE = 2,
  LTQKD_POINT_STATUS_ERROR = 3,
} LtqkdPointStatus;

typedef enum LtqkdStatus {
  LTQKD_STATUS_OK = 0,
  LTQKD_STATUS_NULL_POINTER = 1,
  LTQKD_STATUS_INVALID_UTF8 = 2,
  LTQKD_STATUS_CONFIG = 3,
  LTQKD_STATUS_OUT_OF_RANGE = 4,
  LTQKD_STATUS_NUMERICAL = 5,
  LTQKD_STATUS_IO = 6,
  LTQKD_STATUS_INDEX = 7,
  LTQKD_STATUS_PANIC = 8,
} LtqkdStatus;

typedef struct LtqkdConfig LtqkdConfig;

typedef struct LtqkdScan LtqkdScan;

/**
 * One scan row. Fields mirror the CSV columns.
 */
typedef struct LtqkdPoint {
  double loss_db;
  double eta;
  double e_x;
  double e_z;
  double y_z;
  double rate;
  double w_max;
  double d0x;
  enum LtqkdPointStatus status;
} LtqkdPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ltqkd_last_error_message(void);

/**
 * Parse a scan configuration in the `key = value` text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum LtqkdStatus ltqkd_config_parse(const char *text, struct LtqkdConfig **out);

/**
 * # Safety
 * `config` must come from `ltqkd_config_parse` and not be freed twice.
 */
void ltqkd_config_free(struct LtqkdConfig *config);

/**
 * Serialise a configuration back to text. Free the result with
 * `ltqkd_string_free`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum LtqkdStatus ltqkd_config_to_string(const struct LtqkdConfig *config, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ltqkd_string_free(char *s);

/**
 * Evaluate a single loss value with the settings in `config`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum LtqkdStatus ltqkd_evaluate_point(const struct LtqkdConfig *config,
                                      double loss_db,
                                      struct LtqkdPoint *out);

/**
 * Run the loss scan described by `config`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum LtqkdStatus ltqkd_scan_run(const struct LtqkdConfig *config, struct LtqkdScan **out);

/**
 * Number of rows in a scan; 0 for a null handle.
 *
 * # Safety
 * `scan` must be null or a live handle.
 */
size_t ltqkd_scan_len(const struct LtqkdScan *scan);

/**
 * # Safety
 * `scan` must be a live handle; `out` must be writable.
 */
enum LtqkdStatus ltqkd_scan_get(const struct LtqkdScan *scan, size_t index, struct LtqkdPoint *out);

/**
 * Write the scan as CSV to `path`.
 *
 * # Safety
 * `scan` must be a live handle; `path` a NUL-terminated string.
 */
enum LtqkdStatus ltqkd_scan_write_csv(const struct LtqkdScan *scan, const char *path);

/**
 * # Safety
 * `scan` must come from `ltqkd_scan_run` and not be freed twice.
 */
void ltqkd_scan_free(struct LtqkdScan *scan);

/**
 * Binary entropy in bits.
 *
 * # Safety
 * `out` must be writable.
 */
enum LtqkdStatus ltqkd_binary_entropy(double x, double *out);

/**
 * `max(0, y_z (1 - h(e_x) - f h(e_z)))`.
 *
 * # Safety
 * `out` must be writable.
 */
enum LtqkdStatus ltqkd_secret_key_rate(double y_z, double e_x, double e_z, double f, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LTQKD_H */
