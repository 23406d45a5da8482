#ifndef BLOCHLAB_H
#define BLOCHLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Seminorm kind selector for `blochlab_seminorm_json`.
 */
typedef enum BlochlabSeminorm {
  BlochlabSeminorm_Bloch = 0,
  BlochlabSeminorm_BlochLog = 1,
  BlochlabSeminorm_Normal = 2,
} BlochlabSeminorm;

/**
 * Status codes mirroring the CLI exit contract.
 */
typedef enum BlochlabStatus {
  BlochlabStatus_Ok = 0,
  /**
   * Unparseable input or invalid argument combination.
   */
  BlochlabStatus_InputError = 2,
  /**
   * Input outside the mathematical domain or a numerical failure.
   */
  BlochlabStatus_DomainError = 3,
  /**
   * A certificate pipeline ran but its verdict is FAIL.
   */
  BlochlabStatus_VerdictFail = 4,
  /**
   * Null pointer handed where a value was required.
   */
  BlochlabStatus_NullPointer = 5,
  /**
   * Unexpected internal failure.
   */
  BlochlabStatus_InternalError = 6,
} BlochlabStatus;

/**
 * Opaque expression handle.
 */
typedef struct BlochlabExpr BlochlabExpr;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the most recent error message for this thread into `buf`
 * (truncated to `len` bytes including the terminator). Returns the full
 * message length, or 0 when no error is stored.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes, or be NULL (then only
 * the length is reported).
 */
uintptr_t blochlab_last_error_message(char *buf, uintptr_t len);

/**
 * Parse the expression mini-language into an opaque handle.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum BlochlabStatus blochlab_expr_parse(const char *src, struct BlochlabExpr **out);

/**
 * Parse a JSON AST into an opaque handle.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum BlochlabStatus blochlab_expr_parse_json(const char *src, struct BlochlabExpr **out);

/**
 * Release an expression handle. NULL is a no-op.
 *
 * # Safety
 * `expr` must have come from one of the parse or deriv functions and not
 * have been freed already.
 */
void blochlab_expr_free(struct BlochlabExpr *expr);

/**
 * Exact symbolic derivative as a new handle.
 *
 * # Safety
 * `expr` must be a live handle; `out` must be a valid pointer.
 */
enum BlochlabStatus blochlab_expr_deriv(const struct BlochlabExpr *expr, struct BlochlabExpr **out);

/**
 * Evaluate at the point with boundary gap `gap_log` and argument `theta`.
 *
 * # Safety
 * `expr` must be a live handle; `out_re` and `out_im` must be valid.
 */
enum BlochlabStatus blochlab_expr_eval(const struct BlochlabExpr *expr,
                                       double gap_log,
                                       double theta,
                                       double *out_re,
                                       double *out_im);

/**
 * ln |f(z)|; -inf at zeros of f.
 *
 * # Safety
 * `expr` must be a live handle; `out` must be valid.
 */
enum BlochlabStatus blochlab_expr_log_modulus(const struct BlochlabExpr *expr,
                                              double gap_log,
                                              double theta,
                                              double *out);

/**
 * (1 - |z|^2) |f'(z)|, the Bloch quantity at one point.
 *
 * # Safety
 * `expr` must be a live handle; `out` must be valid.
 */
enum BlochlabStatus blochlab_bloch_quantity(const struct BlochlabExpr *expr,
                                            double gap_log,
                                            double theta,
                                            double *out);

/**
 * Lower-bound seminorm estimate; the result is the JSON estimate document.
 *
 * # Safety
 * `expr` must be a live handle; `out_json` must be valid. The returned
 * string must be freed with `blochlab_string_free`.
 */
enum BlochlabStatus blochlab_seminorm_json(const struct BlochlabExpr *expr,
                                           enum BlochlabSeminorm kind,
                                           uint32_t levels,
                                           uintptr_t jobs,
                                           char **out_json);

/**
 * Run the horocycle-versus-radius dichotomy; the result is the JSON report.
 * Returns `VerdictFail` when the report verdict is not PASS (the JSON is
 * still produced).
 *
 * # Safety
 * `expr` may be NULL (then log(1/(1-z)) is used); `out_json` must be valid.
 * The returned string must be freed with `blochlab_string_free`.
 */
enum BlochlabStatus blochlab_theorem2_json(const struct BlochlabExpr *expr,
                                           double c,
                                           double a,
                                           uint32_t depth,
                                           uintptr_t jobs,
                                           char **out_json);

/**
 * Run the radius-schedule construction; the result is the JSON report.
 * Returns `VerdictFail` when the verdict is not PASS (the JSON is still
 * produced).
 *
 * # Safety
 * `expr` may be NULL (then log(1/(1-z)) is used); `out_json` must be valid.
 * The returned string must be freed with `blochlab_string_free`.
 */
enum BlochlabStatus blochlab_theorem4_json(const struct BlochlabExpr *expr,
                                           uintptr_t n,
                                           double r1_gap_log,
                                           double margin,
                                           uintptr_t jobs,
                                           char **out_json);

/**
 * Release a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must have been returned by a blochlab function and not freed yet.
 */
void blochlab_string_free(char *s);

/**
 * ABI version of this header/library pair.
 */
int blochlab_abi_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BLOCHLAB_H */
