#ifndef RSA_LAB_H
#define RSA_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `Ok`, `BoundViolated`, `Infeasible`, and `Diverged` mirror
 * the CLI exit-code contract; the remainder are FFI-level failures.
 */
typedef enum RsaStatus {
  RsaStatus_Ok = 0,
  RsaStatus_BoundViolated = 1,
  RsaStatus_Infeasible = 2,
  RsaStatus_Diverged = 3,
  RsaStatus_InvalidArgument = 4,
  RsaStatus_ParseError = 5,
  RsaStatus_RuntimeError = 6,
  RsaStatus_NullPointer = 7,
} RsaStatus;

/**
 * Opaque problem handle.
 */
typedef struct RsaProblem RsaProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the calling thread's most recent error, or NULL.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *rsa_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by an `rsa_*` function and not freed before.
 */
void rsa_string_free(char *s);

/**
 * Generate a finite-sum quadratic instance (composite Zero).
 *
 * # Safety
 * `out` must be a valid pointer to an `RsaProblem*` slot.
 */
enum RsaStatus rsa_problem_generate_quadratic(uintptr_t d,
                                              uintptr_t n,
                                              double c,
                                              double l,
                                              uint64_t seed,
                                              bool centered,
                                              struct RsaProblem **out);

/**
 * Generate a strongly convex nonlinear finite sum.
 * `composite`: "none", "l1", or "half-squared-l2" (`lambda` ignored for none).
 *
 * # Safety
 * `composite` must be a NUL-terminated string; `out` a valid slot.
 */
enum RsaStatus rsa_problem_generate_nonlinear(uintptr_t d,
                                              uintptr_t n,
                                              double c,
                                              double l,
                                              const char *composite,
                                              double lambda,
                                              uint64_t seed,
                                              bool centered,
                                              struct RsaProblem **out);

/**
 * Parse an instance from its JSON serialization.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid slot.
 */
enum RsaStatus rsa_problem_from_json(const char *json, struct RsaProblem **out);

/**
 * Serialize an instance to JSON (hex-float reals).
 *
 * # Safety
 * `problem` must be a live handle; `out` a valid slot.
 */
enum RsaStatus rsa_problem_to_json(const struct RsaProblem *problem, char **out);

/**
 * Destroy a problem handle.
 *
 * # Safety
 * `problem` must have come from a generator here and not be freed twice.
 */
void rsa_problem_free(struct RsaProblem *problem);

/**
 * Problem dimension d.
 *
 * # Safety
 * `problem` must be a live handle.
 */
uintptr_t rsa_problem_dim(const struct RsaProblem *problem);

/**
 * Number of component functions N.
 *
 * # Safety
 * `problem` must be a live handle.
 */
uintptr_t rsa_problem_terms(const struct RsaProblem *problem);

/**
 * Full objective `psi(x) = f(x) + g(x)`.
 *
 * # Safety
 * `x` must point to `len` readable doubles; `out` must be writable.
 */
enum RsaStatus rsa_problem_objective(const struct RsaProblem *problem,
                                     const double *x,
                                     uintptr_t len,
                                     double *out);

/**
 * Full smooth gradient `grad f(x)` written into `out` (`len` doubles).
 *
 * # Safety
 * `x` and `out` must point to `len` readable/writable doubles.
 */
enum RsaStatus rsa_problem_gradient(const struct RsaProblem *problem,
                                    const double *x,
                                    uintptr_t len,
                                    double *out);

/**
 * Certified optimizer written into `out` (`len = d` doubles).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum RsaStatus rsa_problem_optimizer(const struct RsaProblem *problem, double *out, uintptr_t len);

/**
 * `gamma(eta) = 1 - 2 eta c + eta^2 L^2`; `Infeasible` when `gamma >= 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RsaStatus rsa_rate_gamma(double eta, double c, double l, double *out);

/**
 * SAGA coefficient `max{gamma + b L^2, (eta^2/b + N - 1)/N}`; writes the
 * value and reports feasibility of the printed conditions.
 *
 * # Safety
 * `out_alpha` and `out_feasible` must be writable.
 */
enum RsaStatus rsa_rate_saga(double eta,
                             double b,
                             uintptr_t n,
                             double c,
                             double l,
                             double *out_alpha,
                             bool *out_feasible);

/**
 * Rate certificate as JSON, routed by algorithm name with a JSON parameter
 * object, mirroring `rsa-lab rate`. Example:
 * `rsa_rate_json("saga", "{\"eta\":0.1,\"b\":0.02,\"n\":10,\"c\":1,\"l\":2}", &out)`.
 *
 * # Safety
 * `algo` and `params_json` must be NUL-terminated strings; `out` a valid slot.
 */
enum RsaStatus rsa_rate_json(const char *algo, const char *params_json, char **out);

/**
 * Exact Wasserstein divergence between two measure JSON documents
 * (`{"atoms": [...], "weights": [...]}`) under the squared Euclidean
 * divergence.
 *
 * # Safety
 * `mu_json` and `nu_json` must be NUL-terminated strings; `out` writable.
 */
enum RsaStatus rsa_wasserstein_exact(const char *mu_json, const char *nu_json, double *out);

/**
 * Run the bound-verification protocol for a config file; the report JSON is
 * returned and the status mirrors the CLI exit code (0 pass,
 * 1 bound violated, 2 infeasible/invalid, 3 divergence budget exceeded).
 *
 * # Safety
 * `config_path` must be a NUL-terminated path; `out_report` a valid slot.
 */
enum RsaStatus rsa_verify_file(const char *config_path, char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RSA_LAB_H */
