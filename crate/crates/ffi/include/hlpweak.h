#ifndef HLPWEAK_H
#define HLPWEAK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HlpStatus {
  HLP_STATUS_OK = 0,
  HLP_STATUS_NULL_POINTER = 1,
  HLP_STATUS_INVALID_UTF8 = 2,
  HLP_STATUS_PARSE = 3,
  HLP_STATUS_DOMAIN = 4,
  HLP_STATUS_DIVERGENCE = 5,
  HLP_STATUS_UNSUPPORTED_SHAPE = 6,
  HLP_STATUS_EVALUATION = 7,
  HLP_STATUS_UNBOUNDED_NORM = 8,
  HLP_STATUS_INFINITE_KERNEL_CONSTANT = 9,
  HLP_STATUS_SINGULAR_DENOMINATOR = 10,
  HLP_STATUS_NON_CONVERGENCE = 11,
  HLP_STATUS_PANIC = 12,
} HlpStatus;

/**
 * Opaque piecewise power-log radial function.
 */
typedef struct HlpRadialFunction HlpRadialFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into this library on the same
 * thread.
 */
const char *hlp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hlp_version(void);

/**
 * Parses a radial function; free the handle with [`hlp_radial_free`].
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HlpStatus hlp_radial_parse(const char *text, struct HlpRadialFunction **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `f` must come from this library and not have been freed.
 */
void hlp_radial_free(struct HlpRadialFunction *f);

/**
 * Canonical text of a function; free it with [`hlp_string_free`].
 *
 * # Safety
 * `f` must be a live handle and `out` a writable pointer.
 */
enum HlpStatus hlp_radial_to_string(const struct HlpRadialFunction *f, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void hlp_string_free(char *s);

/**
 * `f(r)` for `r > 0`.
 *
 * # Safety
 * `f` must be a live handle and `out` a writable pointer.
 */
enum HlpStatus hlp_radial_evaluate(const struct HlpRadialFunction *f, double r, double *out);

/**
 * HLP operator of `f` in dimension `n`, evaluated at `r`.
 *
 * # Safety
 * `f` must be a live handle and `out` a writable pointer.
 */
enum HlpStatus hlp_apply_hlp(const struct HlpRadialFunction *f, uint32_t n, double r, double *out);

/**
 * Closed-form HLP image of `f` as a new handle.
 *
 * # Safety
 * `f` must be a live handle and `out` a writable pointer.
 */
enum HlpStatus hlp_apply_hlp_symbolic(const struct HlpRadialFunction *f,
                                      uint32_t n,
                                      struct HlpRadialFunction **out);

/**
 * `||f||` in `L^p(|x|^beta dx)` on `R^n`.
 *
 * # Safety
 * `f` must be a live handle and `out` a writable pointer.
 */
enum HlpStatus hlp_strong_norm(const struct HlpRadialFunction *f,
                               double p,
                               double beta,
                               uint32_t n,
                               double *out);

/**
 * `||g||` in `L^{q,inf}(|x|^gamma dx)` on `R^n`.
 *
 * # Safety
 * `g` must be a live handle and `out` a writable pointer.
 */
enum HlpStatus hlp_weak_norm(const struct HlpRadialFunction *g,
                             double q,
                             double gamma,
                             uint32_t n,
                             double *out);

/**
 * Surface area of the unit sphere in `R^n`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum HlpStatus hlp_unit_sphere_area(uint32_t n, double *out);

/**
 * Both printed variants of the weighted `L^p -> L^{q,inf}` constant, plus
 * whether they disagree. Null out pointers are skipped.
 *
 * # Safety
 * Each out pointer must be null or writable.
 */
enum HlpStatus hlp_thm21_constants(double p,
                                   double q,
                                   double beta,
                                   double gamma,
                                   uint32_t n,
                                   double *statement,
                                   double *proof_variant,
                                   bool *discrepancy);

/**
 * Sharp `L^1 -> L^{(n+gamma)/n, inf}(|x|^gamma)` constant.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum HlpStatus hlp_thm22_constant(double gamma, uint32_t n, double *out);

/**
 * Nested kernel constant `M` for an `arity`-linear kernel (`hardy`, `hlp`
 * or `hilbert`); `ps` and `betas` hold `arity` entries each.
 *
 * # Safety
 * `kernel_name` must be NUL-terminated, `ps` and `betas` must point to
 * `arity` doubles and `out` must be writable.
 */
enum HlpStatus hlp_kernel_constant(const char *kernel_name,
                                   size_t arity,
                                   uint32_t n,
                                   const double *ps,
                                   const double *betas,
                                   double rel_tol,
                                   double *out);

/**
 * Weak-type bound `(w_n/(n+gamma))^{1/q} M` for an `arity`-linear kernel.
 *
 * # Safety
 * As [`hlp_kernel_constant`].
 */
enum HlpStatus hlp_kernel_bound(const char *kernel_name,
                                size_t arity,
                                uint32_t n,
                                const double *ps,
                                const double *betas,
                                double q,
                                double gamma,
                                double rel_tol,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HLPWEAK_H */
