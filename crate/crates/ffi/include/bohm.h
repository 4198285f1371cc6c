#ifndef BOHM_H
#define BOHM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum BohmStatus {
  BOHM_STATUS_OK = 0,
  BOHM_STATUS_NULL_POINTER = 1,
  BOHM_STATUS_INVALID_ARGUMENT = 2,
  BOHM_STATUS_INVALID_GRID = 3,
  /**
   * The configuration failed validation.
   */
  BOHM_STATUS_SCHEMA = 4,
  /**
   * A numerical precondition failed (nodes, overlap, non-finite values).
   */
  BOHM_STATUS_NUMERICAL = 5,
  BOHM_STATUS_IO = 6,
  /**
   * Caller-supplied buffer has the wrong length.
   */
  BOHM_STATUS_BUFFER_SIZE = 7,
  /**
   * An internal panic was caught at the boundary.
   */
  BOHM_STATUS_PANIC = 8,
} BohmStatus;

typedef struct BohmGrid BohmGrid;

typedef struct BohmPropagator BohmPropagator;

typedef struct BohmWave BohmWave;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bohm_last_error(char *buf, size_t len);

/**
 * Periodic grid with one axis (`ndim = 1`) or two; `mins`, `maxs` and
 * `points` each hold `ndim` entries.
 *
 * # Safety
 * Arrays must hold `ndim` elements; `out` must be writable.
 */
enum BohmStatus bohm_grid_new(size_t ndim,
                              const double *mins,
                              const double *maxs,
                              const size_t *points,
                              struct BohmGrid **out);

/**
 * # Safety
 * `grid` must come from [`bohm_grid_new`] and not be used afterwards.
 */
void bohm_grid_free(struct BohmGrid *grid);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t bohm_grid_len(const struct BohmGrid *grid);

/**
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t bohm_grid_ndim(const struct BohmGrid *grid);

/**
 * Normalized Gaussian packet; `center`, `width` and `wavenumber` hold one
 * entry per axis.
 *
 * # Safety
 * Handles must be live; arrays must hold `ndim` elements.
 */
enum BohmStatus bohm_wave_gaussian(const struct BohmGrid *grid,
                                   const double *center,
                                   const double *width,
                                   const double *wavenumber,
                                   double hbar,
                                   struct BohmWave **out);

/**
 * # Safety
 * `wave` must come from this library and not be used afterwards.
 */
void bohm_wave_free(struct BohmWave *wave);

/**
 * # Safety
 * `wave` must be live; `out` writable.
 */
enum BohmStatus bohm_wave_norm(const struct BohmWave *wave, double *out);

/**
 * # Safety
 * `wave` must be live; `out` writable.
 */
enum BohmStatus bohm_wave_time(const struct BohmWave *wave, double *out);

/**
 * Writes `|psi|^2` at every grid point (`len` must equal the grid length).
 *
 * # Safety
 * `wave` must be live; `density` must hold `len` writable elements.
 */
enum BohmStatus bohm_wave_density(const struct BohmWave *wave, double *density, size_t len);

/**
 * Split-step propagator with an optional tabulated real potential
 * (`potential` may be null for a free particle) and one mass per axis.
 *
 * # Safety
 * Handles must be live; `potential` must be null or hold `potential_len`
 * values; `masses` must hold one entry per axis.
 */
enum BohmStatus bohm_propagator_new(const struct BohmGrid *grid,
                                    const double *potential,
                                    size_t potential_len,
                                    const double *masses,
                                    double hbar,
                                    double dt,
                                    struct BohmPropagator **out);

/**
 * # Safety
 * `prop` must come from this library and not be used afterwards.
 */
void bohm_propagator_free(struct BohmPropagator *prop);

/**
 * Advances `wave` in place by `steps` time steps.
 *
 * # Safety
 * Both handles must be live.
 */
enum BohmStatus bohm_propagator_step(const struct BohmPropagator *prop,
                                     struct BohmWave *wave,
                                     size_t steps);

/**
 * Guidance velocity on the grid. `velocity` holds `ndim * len` values,
 * axis-major; `node_mask` (may be null) receives 1 at masked nodes.
 *
 * # Safety
 * `wave` must be live; `masses` holds one entry per axis; buffers must be
 * writable with the stated lengths.
 */
enum BohmStatus bohm_velocity(const struct BohmWave *wave,
                              const double *masses,
                              double *velocity,
                              size_t velocity_len,
                              uint8_t *node_mask,
                              size_t mask_len);

/**
 * Draws `n` positions from `|psi|^2` into `positions` (`n * ndim` values,
 * point-major). Deterministic in `seed`.
 *
 * # Safety
 * `wave` must be live; `positions` must hold `len` writable elements.
 */
enum BohmStatus bohm_sample(const struct BohmWave *wave,
                            size_t n,
                            uint64_t seed,
                            double *positions,
                            size_t len);

/**
 * Kolmogorov-Smirnov distance between `n` point-major samples and
 * `|psi|^2` (largest over axis marginals).
 *
 * # Safety
 * `wave` must be live; `positions` holds `n * ndim` values; `out` writable.
 */
enum BohmStatus bohm_ks_distance(const struct BohmWave *wave,
                                 const double *positions,
                                 size_t n,
                                 double *out);

/**
 * Coarse-grained H-function of `n` samples against `|psi|^2`, with cells
 * of `cell` grid points per axis.
 *
 * # Safety
 * `wave` must be live; `positions` holds `n * ndim` values; `out` writable.
 */
enum BohmStatus bohm_h_bar(const struct BohmWave *wave,
                           const double *positions,
                           size_t n,
                           size_t cell,
                           double *out);

/**
 * Runs the TOML configuration at `config_path`, writing outputs to
 * `out_dir` (may be null to use the configured directory). `exit_code`
 * receives 0 when every check passed and 2 otherwise.
 *
 * # Safety
 * Strings must be NUL-terminated; `exit_code` writable.
 */
enum BohmStatus bohm_run_config(const char *config_path, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOHM_H */
