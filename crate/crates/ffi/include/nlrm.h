#ifndef NLRM_H
#define NLRM_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum NlrmStatus {
  NLRM_STATUS_OK = 0,
  NLRM_STATUS_NULL_POINTER = 1,
  // Bad argument: shape, rank, tolerance, enum value, non-finite data.
  NLRM_STATUS_INVALID_ARGUMENT = 2,
  // Valid but degenerate input, such as an all-zero matrix.
  NLRM_STATUS_DEGENERATE = 3,
  NLRM_STATUS_NO_CONVERGENCE = 4,
  NLRM_STATUS_IO = 5,
  // Malformed file contents.
  NLRM_STATUS_PARSE = 6,
  // Internal error; the library caught a panic.
  NLRM_STATUS_INTERNAL = 7,
} NlrmStatus;

typedef enum NlrmAlgorithm {
  NLRM_ALGORITHM_MU = 0,
  NLRM_ALGORITHM_HALS = 1,
  NLRM_ALGORITHM_PG = 2,
} NlrmAlgorithm;

typedef enum NlrmNoiseConvention {
  // The noise level is the entry variance.
  NLRM_NOISE_CONVENTION_VARIANCE = 0,
  // The noise level is the entry standard deviation.
  NLRM_NOISE_CONVENTION_STD_DEV = 1,
} NlrmNoiseConvention;

// Result of the nonnegative low-rank approximation.
typedef struct NlrmApprox NlrmApprox;

// Dense row-major matrix.
typedef struct NlrmMatrix NlrmMatrix;

// Best factorization over all restarts of an NMF baseline.
typedef struct NlrmNmf NlrmNmf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Short static description of an [`NlrmStatus`] value. Never null.
const char *nlrm_status_string(uint32_t status);

// Message of the last failed call on this thread, or "" after a success.
// Valid until the next library call on the same thread. Never null.
const char *nlrm_last_error_message(void);

// Copies `rows * cols` row-major values from `data`, or zero-fills when
// `data` is null.
//
// # Safety
// `data` must be null or point to `rows * cols` doubles; `out` must be valid
// for writes.
enum NlrmStatus nlrm_matrix_new(size_t rows,
                                size_t cols,
                                const double *data,
                                struct NlrmMatrix **out);

// # Safety
// `m` must be null or a handle from this library not yet freed.
void nlrm_matrix_free(struct NlrmMatrix *m);

// Row count, 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t nlrm_matrix_rows(const struct NlrmMatrix *m);

// Column count, 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t nlrm_matrix_cols(const struct NlrmMatrix *m);

// Copies the entries row-major into `out`, which holds `len >= rows * cols`
// doubles.
//
// # Safety
// `m` must be a live handle and `out` valid for `len` writes.
enum NlrmStatus nlrm_matrix_copy_data(const struct NlrmMatrix *m, double *out, size_t len);

// Reads a CSV file, or the binary format when the name ends in `.bin`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` valid for writes.
enum NlrmStatus nlrm_matrix_read(const char *path, struct NlrmMatrix **out);

// Writes CSV, or the binary format when the name ends in `.bin`.
//
// # Safety
// `m` must be a live handle and `path` a NUL-terminated string.
enum NlrmStatus nlrm_matrix_write(const struct NlrmMatrix *m, const char *path);

// Synthetic input: a nonnegative product of planted rank `planted_rank`
// plus Gaussian noise, or a uniform full-rank matrix when `planted_rank` is 0.
// `convention` is an [`NlrmNoiseConvention`] value.
//
// # Safety
// `out` must be valid for writes.
enum NlrmStatus nlrm_generate(size_t rows,
                              size_t cols,
                              size_t planted_rank,
                              double noise_level,
                              uint32_t convention,
                              uint64_t seed,
                              struct NlrmMatrix **out);

// Nearest nonnegative rank-`rank` matrix by alternating projections.
// `tol <= 0` and `max_iter == 0` select the defaults (1e-10, 1000).
// Stopping at `max_iter` is not an error; see [`nlrm_approx_converged`].
//
// # Safety
// `a` must be a live handle and `out` valid for writes.
enum NlrmStatus nlrm_approx_solve(const struct NlrmMatrix *a,
                                  size_t rank,
                                  double tol,
                                  size_t max_iter,
                                  struct NlrmApprox **out);

// # Safety
// `h` must be null or a live handle.
void nlrm_approx_free(struct NlrmApprox *h);

// `||A - X||_F / ||A||_F`, NaN for a null handle.
//
// # Safety
// `h` must be null or a live handle.
double nlrm_approx_residual(const struct NlrmApprox *h);

// # Safety
// `h` must be null or a live handle.
size_t nlrm_approx_iterations(const struct NlrmApprox *h);

// # Safety
// `h` must be null or a live handle.
bool nlrm_approx_converged(const struct NlrmApprox *h);

// The rank constraint the approximation was computed under.
//
// # Safety
// `h` must be null or a live handle.
size_t nlrm_approx_rank(const struct NlrmApprox *h);

// New matrix handle holding a copy of the approximation.
//
// # Safety
// `h` must be a live handle and `out` valid for writes.
enum NlrmStatus nlrm_approx_matrix(const struct NlrmApprox *h, struct NlrmMatrix **out);

// Copies up to `len` leading singular values of the approximation into
// `out`, descending, and stores the full count in `count` when non-null.
//
// # Safety
// `h` must be a live handle and `out` valid for `len` writes (may be null
// when `len` is 0).
enum NlrmStatus nlrm_approx_singular_values(const struct NlrmApprox *h,
                                            double *out,
                                            size_t len,
                                            size_t *count);

// NMF baseline with `restarts` seeded random initializations; the handle
// holds the best one. `algorithm` is an [`NlrmAlgorithm`] value;
// `max_iter == 0` selects the default (500).
//
// # Safety
// `a` must be a live handle and `out` valid for writes.
enum NlrmStatus nlrm_nmf_solve(const struct NlrmMatrix *a,
                               size_t rank,
                               uint32_t algorithm,
                               size_t restarts,
                               size_t max_iter,
                               uint64_t seed,
                               struct NlrmNmf **out);

// # Safety
// `h` must be null or a live handle.
void nlrm_nmf_free(struct NlrmNmf *h);

// Best relative residual over the restarts, NaN for a null handle.
//
// # Safety
// `h` must be null or a live handle.
double nlrm_nmf_residual(const struct NlrmNmf *h);

// Copies the `m x r` factor `B` (`which == 0`) or the `r x n` factor `C`
// (`which == 1`) into a new matrix handle.
//
// # Safety
// `h` must be a live handle and `out` valid for writes.
enum NlrmStatus nlrm_nmf_factor(const struct NlrmNmf *h, uint32_t which, struct NlrmMatrix **out);

// Largest consecutive ratio in a descending spectrum of `len >= 2` values.
// `index` receives the number of values before the drop, `ratio` the ratio.
//
// # Safety
// `sigma` must point to `len` doubles; `index` and `ratio` valid for writes.
enum NlrmStatus nlrm_detect_jump(const double *sigma, size_t len, size_t *index, double *ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLRM_H */
