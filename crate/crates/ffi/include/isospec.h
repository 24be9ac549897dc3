#ifndef ISOSPEC_H
#define ISOSPEC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum IsoStatus {
  ISO_STATUS_OK = 0,
  ISO_STATUS_NULL_ARGUMENT = 1,
  ISO_STATUS_INVALID_ARGUMENT = 2,
  ISO_STATUS_PARSE_ERROR = 3,
  ISO_STATUS_NOT_INTEGRABLE = 4,
  ISO_STATUS_SINGULAR = 5,
  ISO_STATUS_NUMERICAL_FAILURE = 6,
  ISO_STATUS_BUFFER_TOO_SMALL = 7,
  ISO_STATUS_PANIC = 8,
} IsoStatus;

// An intertwined pair `(V0, V1)` with its operator.
typedef struct IsoPair IsoPair;

// Intertwiner parameters `(n, a, c)`.
typedef struct IsoParams IsoParams;

// Library version as a static NUL-terminated string.
const char *iso_version(void);

// Length in bytes, without the terminator, of the last error message on
// this thread; 0 if there is none.
uintptr_t iso_last_error_length(void);

// Copies the last error message into `buf` including the terminator.
// Returns `BufferTooSmall` (writing nothing) if `len` cannot hold it.
//
// # Safety
// `buf` must be valid for `len` bytes of writes.
enum IsoStatus iso_last_error_message(char *buf, uintptr_t len);

// Parameters from `a` (length `n`) and `c` (`n*n`, row-major, antisymmetric).
//
// # Safety
// `a` and `c` must point to `n` and `n*n` readable doubles; `out` must be
// writable.
enum IsoStatus iso_params_new(uintptr_t n,
                              const double *a,
                              const double *c,
                              struct IsoParams **out);

// One of the ten `n = 3` presets, `row` in 1..=10.
//
// # Safety
// `out` must be writable.
enum IsoStatus iso_params_preset(uintptr_t row, struct IsoParams **out);

// Dimension of `params`, or 0 for a null handle.
//
// # Safety
// `params` must be null or a live handle.
uintptr_t iso_params_dimension(const struct IsoParams *params);

// Integrability check. `free_parameters` receives the parameter count left
// by the constraints, or -1 where the analysis does not provide one.
//
// # Safety
// `params` must be a live handle; outputs may be null.
enum IsoStatus iso_params_check(const struct IsoParams *params,
                                bool *satisfied,
                                int64_t *free_parameters);

// # Safety
// `params` must be null or a handle not yet freed.
void iso_params_free(struct IsoParams *params);

// Planar pair: `f` is an expression in `eta`, `h` in `kappa`.
//
// # Safety
// `f` and `h` must be NUL-terminated strings; `out` must be writable.
enum IsoStatus iso_pair_new_2d(double a1,
                               double a2,
                               double c,
                               const char *f,
                               const char *h,
                               struct IsoPair **out);

// Pair in any dimension with `eta = L_i / L_j` (0-based). `f` is an
// expression in `eta`; `h` may use `x1..xn` and `Lsq`.
//
// # Safety
// `params` must be a live handle, `f` and `h` NUL-terminated strings and
// `out` writable.
enum IsoStatus iso_pair_new_general(const struct IsoParams *params,
                                    uintptr_t i,
                                    uintptr_t j,
                                    const char *f,
                                    const char *h,
                                    struct IsoPair **out);

// Dimension of `pair`, or 0 for a null handle.
//
// # Safety
// `pair` must be null or a live handle.
uintptr_t iso_pair_dimension(const struct IsoPair *pair);

// `V0`, `V1` and `L0` at `x`. Returns `Singular` on a singular locus.
//
// # Safety
// `pair` must be a live handle and `x` must hold `len` doubles; outputs may
// be null.
enum IsoStatus iso_pair_eval(const struct IsoPair *pair,
                             const double *x,
                             uintptr_t len,
                             double *v0,
                             double *v1,
                             double *l0);

// Largest scaled residual of the consistency identities at `x`.
//
// # Safety
// `pair` must be a live handle, `x` must hold `len` doubles and `out` must
// be writable.
enum IsoStatus iso_pair_identity_residual(const struct IsoPair *pair,
                                          const double *x,
                                          uintptr_t len,
                                          double *out);

// Observed order of the finite-difference intertwining residual on a
// Gaussian of width `sigma` in the cube of half-width `width` around
// `center`, over the given cell counts.
//
// # Safety
// `pair` must be a live handle, `center` must hold `len` doubles, `cells`
// `ncells` entries, and `order` must be writable.
enum IsoStatus iso_pair_convergence_order(const struct IsoPair *pair,
                                          const double *center,
                                          uintptr_t len,
                                          double sigma,
                                          double width,
                                          const uintptr_t *cells,
                                          uintptr_t ncells,
                                          double *order);

// # Safety
// `pair` must be null or a handle not yet freed.
void iso_pair_free(struct IsoPair *pair);

// Lowest `k` eigenvalues of `H∓ = −d²/dξ² + f² ∓ f'` for a superpotential
// `f(xi)` on `nodes` points of `[lo, hi]`. `max_deviation` receives the
// worst mismatch of the expected pairing.
//
// # Safety
// `f` must be a NUL-terminated string; `minus` and `plus` must be writable
// for `k` doubles; `max_deviation` may be null.
enum IsoStatus iso_partner_spectrum(const char *f,
                                    double lo,
                                    double hi,
                                    uintptr_t nodes,
                                    uintptr_t k,
                                    double *minus,
                                    double *plus,
                                    double *max_deviation);

#endif  /* ISOSPEC_H */
