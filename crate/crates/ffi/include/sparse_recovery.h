#ifndef SPARSE_RECOVERY_H
#define SPARSE_RECOVERY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum SrStatus {
  SR_STATUS_OK = 0,
  // A required pointer argument was null.
  SR_STATUS_NULL_POINTER = 1,
  // A parameter or configuration was rejected.
  SR_STATUS_INVALID_ARGUMENT = 2,
  // A buffer length does not match N or m.
  SR_STATUS_LENGTH_MISMATCH = 3,
  // The output buffers are too small; the required count was written.
  SR_STATUS_BUFFER_TOO_SMALL = 4,
  // A panic or other internal failure.
  SR_STATUS_INTERNAL = 5,
} SrStatus;

// Opaque recovery configuration.
typedef struct SrConfig SrConfig;

// Opaque measurement layout planned from an [`SrConfig`].
typedef struct SrLayout SrLayout;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message, NUL-terminated and
// truncated to `cap` bytes, into `buf`. Returns the full message length
// excluding the terminator, so a return value `>= cap` means truncation.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t sr_last_error_message(char *buf, size_t cap);

// Creates a configuration with the default constants.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to release
// with [`sr_config_free`].
enum SrStatus sr_config_new(size_t n,
                            size_t k,
                            double eps,
                            size_t ell,
                            uint64_t seed,
                            struct SrConfig **out);

// Overrides one named constant, e.g. `"c_reps"`.
//
// # Safety
// `config` must be a live handle and `name` a NUL-terminated string.
enum SrStatus sr_config_set_constant(struct SrConfig *config, const char *name, double value);

// Releases a configuration. Null is ignored.
//
// # Safety
// `config` must be null or a handle from [`sr_config_new`] not yet freed.
void sr_config_free(struct SrConfig *config);

// Plans the measurement layout for `config`.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer; on success it
// receives a handle to release with [`sr_layout_free`].
enum SrStatus sr_layout_plan(const struct SrConfig *config, struct SrLayout **out);

// Signal length N of a layout, or 0 for a null handle.
//
// # Safety
// `layout` must be null or a live handle.
size_t sr_layout_n(const struct SrLayout *layout);

// Number of measurements m of a layout, or 0 for a null handle.
//
// # Safety
// `layout` must be null or a live handle.
size_t sr_layout_m(const struct SrLayout *layout);

// Releases a layout. Null is ignored.
//
// # Safety
// `layout` must be null or a handle from [`sr_layout_plan`] not yet freed.
void sr_layout_free(struct SrLayout *layout);

// Computes `mu = Φx`. `x_len` must equal N and `mu_len` must equal m.
//
// # Safety
// `x` must point to `x_len` readable doubles and `mu` to `mu_len` writable ones.
enum SrStatus sr_measure(const struct SrLayout *layout,
                         const double *x,
                         size_t x_len,
                         double *mu,
                         size_t mu_len);

// Recovers the sparse approximation from `mu` (length m). The support is
// written in increasing order to `indices`/`values` (each `cap` long) and
// its size to `*nnz`. When `cap` is too small, `*nnz` still receives the
// required size and [`SrStatus::BufferTooSmall`] is returned.
//
// # Safety
// `mu` must point to `mu_len` readable doubles, `indices`/`values` to `cap`
// writable elements each (may be null when `cap == 0`), and `nnz` must be valid.
enum SrStatus sr_recover(const struct SrLayout *layout,
                         const double *mu,
                         size_t mu_len,
                         size_t *indices,
                         double *values,
                         size_t cap,
                         size_t *nnz);

// Fills `x` (length `n`) with an exactly `k`-sparse test signal whose
// spike magnitudes lie in [1, 10].
//
// # Safety
// `x` must point to `n` writable doubles.
enum SrStatus sr_generate_sparse_signal(size_t n, size_t k, uint64_t seed, double *x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSE_RECOVERY_H */
