#ifndef ROBVARIO_H
#define ROBVARIO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum RvStatus {
  RV_STATUS_OK = 0,
  RV_STATUS_NULL_POINTER = 1,
  RV_STATUS_INVALID_ARGUMENT = 2,
  RV_STATUS_PARSE = 3,
  RV_STATUS_IO = 4,
  RV_STATUS_BUFFER_TOO_SMALL = 5,
  RV_STATUS_NOT_USABLE = 6,
  RV_STATUS_NUMERICAL = 7,
  RV_STATUS_PANIC = 99,
} RvStatus;

// A grid of `nx * ny` cells, `x` fastest, row 0 southernmost.
typedef struct RvGrid RvGrid;

// A raw or reweighted MCD fit.
typedef struct RvMcdFit RvMcdFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rv_version(void);

// Message of the last failed call on this thread, or NULL after a
// successful one. Valid until the next call into the library.
const char *rv_last_error_message(void);

// Creates a grid from `nx * ny` values. `mask` may be NULL; a nonzero mask
// byte marks a missing cell.
//
// # Safety
// `values` (and `mask` if non-NULL) must point to `nx * ny` elements.
enum RvStatus rv_grid_new(size_t nx,
                          size_t ny,
                          const double *values,
                          const uint8_t *mask,
                          struct RvGrid **out);

// Releases a grid; NULL is ignored.
//
// # Safety
// `grid` must come from this library and not be used afterwards.
void rv_grid_free(struct RvGrid *grid);

// # Safety
// `grid` must be a live handle; `nx` and `ny` must be writable.
enum RvStatus rv_grid_dims(const struct RvGrid *grid, size_t *nx, size_t *ny);

// Copies cell values (masked cells as NaN) and, if `mask` is non-NULL, the
// mask into buffers of at least `len` elements.
//
// # Safety
// `values` (and `mask` if non-NULL) must hold `len` elements.
enum RvStatus rv_grid_values(const struct RvGrid *grid, double *values, uint8_t *mask, size_t len);

// Reads an ESRI ASCII grid; nodata cells become masked.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RvStatus rv_grid_load_asc(const char *path, struct RvGrid **out);

// # Safety
// `grid` must be a live handle and `path` a NUL-terminated string.
enum RvStatus rv_grid_save_asc(const struct RvGrid *grid, const char *path);

// Simulates a zero-mean Gaussian field. `model` is
// `family:range:sill[:theta:ratio]`, e.g. `spherical:5:2:3pi/8:2`.
//
// # Safety
// `model` must be a NUL-terminated string; `out` must be writable.
enum RvStatus rv_simulate_field(const char *model,
                                size_t nx,
                                size_t ny,
                                uint64_t seed,
                                struct RvGrid **out);

// Estimates `2γ(h_1..h_{h_max})` along one direction (`ew`, `sn`, `swne`,
// `senw`) with one estimator (`matheron`, `genton`, `mcd.org.re`, ...).
// `counts` may be NULL. Both buffers need at least `h_max` elements.
//
// # Safety
// Strings must be NUL-terminated; buffers must hold `len` elements.
enum RvStatus rv_estimate_variogram(const struct RvGrid *grid,
                                    const char *estimator,
                                    const char *direction,
                                    size_t h_max,
                                    uint64_t seed,
                                    double *values,
                                    size_t *counts,
                                    size_t len);

// Exact breakdown point `numerator / denominator` on a line of `n_x`
// observations. `scenario` is `block` or `isolated`; `estimator` one of
// `mcd.org`, `mcd.diff`, `mcd.org.mod`, `mcd.diff.mod`, `genton`.
//
// # Safety
// Strings must be NUL-terminated; outputs must be writable.
enum RvStatus rv_breakdown_point(const char *scenario,
                                 const char *estimator,
                                 uint64_t n_x,
                                 uint64_t h_max,
                                 uint64_t m,
                                 uint64_t *numerator,
                                 uint64_t *denominator);

// # Safety
// `out` must be writable.
enum RvStatus rv_chisq_cdf(double x, double df, double *out);

// # Safety
// `out` must be writable.
enum RvStatus rv_chisq_quantile(double p, double df, double *out);

// Qn scale of `n` values with the normal consistency factor; a nonzero
// `finite_sample` also applies the small-sample factor.
//
// # Safety
// `x` must hold `n` values; `out` must be writable.
enum RvStatus rv_qn(const double *x, size_t n, int32_t finite_sample, double *out);

// FAST-MCD on `n` row-major rows of dimension `p`. `alpha` in `[0.5, 1]`
// sets the subset fraction; pass 0 for `⌊(n+p+1)/2⌋`. A nonzero `reweight`
// returns the one-step reweighted fit.
//
// # Safety
// `data` must hold `n * p` values; `out` must be writable.
enum RvStatus rv_mcd_fit(const double *data,
                         size_t n,
                         size_t p,
                         double alpha,
                         int32_t reweight,
                         uint64_t seed,
                         struct RvMcdFit **out);

// Releases a fit; NULL is ignored.
//
// # Safety
// `fit` must come from [`rv_mcd_fit`] and not be used afterwards.
void rv_mcd_free(struct RvMcdFit *fit);

// Dimension `p` of a fit, or 0 for NULL.
//
// # Safety
// `fit` must be NULL or a live handle.
size_t rv_mcd_dim(const struct RvMcdFit *fit);

// Copies the `p` location estimates.
//
// # Safety
// `out` must hold `len` values.
enum RvStatus rv_mcd_location(const struct RvMcdFit *fit, double *out, size_t len);

// Copies the `p * p` scatter matrix, row-major.
//
// # Safety
// `out` must hold `len` values.
enum RvStatus rv_mcd_scatter(const struct RvMcdFit *fit, double *out, size_t len);

// Copies the sorted zero-based row indices of the raw subset and stores
// their number in `count`.
//
// # Safety
// `out` must hold `len` values; `count` must be writable.
enum RvStatus rv_mcd_support(const struct RvMcdFit *fit, size_t *out, size_t len, size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBVARIO_H */
