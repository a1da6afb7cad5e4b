#ifndef BELTRAMI_H
#define BELTRAMI_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Nonlinearity selector for the semilinear entry points.
typedef enum BltQKind {
  BLT_Q_KIND_CONSTANT = 0,
  BLT_Q_KIND_POWER = 1,
  BLT_Q_KIND_SIGNED_POWER = 2,
  BLT_Q_KIND_NEG_EXP = 3,
} BltQKind;

// Status codes returned by every fallible entry point.
typedef enum BltStatus {
  BLT_STATUS_OK = 0,
  BLT_STATUS_CONFIG_ERROR = 1,
  BLT_STATUS_MISSING_SUPPORT = 2,
  BLT_STATUS_DEGENERATE = 3,
  BLT_STATUS_ELLIPTICITY = 4,
  BLT_STATUS_NONPOSITIVE_JACOBIAN = 5,
  BLT_STATUS_OUT_OF_RANGE = 6,
  BLT_STATUS_NEWTON_STAGNATION = 7,
  BLT_STATUS_DIVERGED = 8,
  BLT_STATUS_BLOWUP = 9,
  BLT_STATUS_NOT_CONJUGATE = 10,
  BLT_STATUS_INVERSION_COVERAGE = 11,
  BLT_STATUS_GRID_MISMATCH = 12,
  BLT_STATUS_IO_ERROR = 13,
  BLT_STATUS_FORMAT_ERROR = 14,
  BLT_STATUS_JSON_ERROR = 15,
  BLT_STATUS_NULL_ARGUMENT = 16,
  BLT_STATUS_PANIC = 17,
} BltStatus;

typedef struct BltComplexField BltComplexField;

typedef struct BltMap BltMap;

typedef struct BltMu BltMu;

typedef struct BltRealField BltRealField;

typedef struct BltReport BltReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message into `buf` (NUL-terminated, truncating) and
// return the full message length in bytes.
//
// # Safety
// `buf` must point to `len` writable bytes, or be null (then only the
// length is returned).
uintptr_t blt_last_error_message(char *buf, uintptr_t len);

// Create a complex field from `n*n` interleaved (re, im) pairs in row-major
// order. `support_radius < 0` means no declared compact support.
//
// # Safety
// `values` must point to `2*n*n` doubles; `out` must be a valid pointer.
enum BltStatus blt_complex_field_create(uint32_t n,
                                        double half_extent,
                                        const double *values,
                                        double support_radius,
                                        struct BltComplexField **out);

// Copy the field's node totals into `values` as interleaved (re, im) pairs.
//
// # Safety
// `field` must be a live handle; `values` must hold `2*n*n` doubles.
enum BltStatus blt_complex_field_values(const struct BltComplexField *field, double *values);

// # Safety
// `field` must be a live handle (or null, which is a no-op).
void blt_complex_field_free(struct BltComplexField *field);

// Create a real field from `n*n` row-major samples; see
// `blt_complex_field_create` for the support convention.
//
// # Safety
// `values` must point to `n*n` doubles; `out` must be a valid pointer.
enum BltStatus blt_real_field_create(uint32_t n,
                                     double half_extent,
                                     const double *values,
                                     double support_radius,
                                     struct BltRealField **out);

// # Safety
// `field` must be a live handle; `values` must hold `n*n` doubles.
enum BltStatus blt_real_field_values(const struct BltRealField *field, double *values);

// # Safety
// `field` must be a live handle (or null, which is a no-op).
void blt_real_field_free(struct BltRealField *field);

// Certify a complex field as a Beltrami coefficient (consumes nothing; the
// field is copied). Fails with `Degenerate` when sup|mu| is not < 1.
//
// # Safety
// `field` must be a live handle; `out` must be a valid pointer.
enum BltStatus blt_mu_create(const struct BltComplexField *field, struct BltMu **out);

// The zero coefficient (conformal case) on an n-by-n window.
//
// # Safety
// `out` must be a valid pointer.
enum BltStatus blt_mu_zero(uint32_t n, double half_extent, struct BltMu **out);

// sup|mu| of a certified coefficient.
//
// # Safety
// `mu` must be a live handle.
double blt_mu_k(const struct BltMu *mu);

// # Safety
// `mu` must be a live handle (or null, which is a no-op).
void blt_mu_free(struct BltMu *mu);

// # Safety
// `report` must be a live handle.
int blt_report_converged(const struct BltReport *report);

// # Safety
// `report` must be a live handle.
uint64_t blt_report_iterations(const struct BltReport *report);

// # Safety
// `report` must be a live handle.
double blt_report_final_residual(const struct BltReport *report);

// Serialize the report as JSON into `buf` (NUL-terminated, truncating);
// returns the full length in bytes.
//
// # Safety
// `report` must be a live handle; `buf` must hold `len` bytes or be null.
uintptr_t blt_report_json(const struct BltReport *report, char *buf, uintptr_t len);

// # Safety
// `report` must be a live handle (or null, which is a no-op).
void blt_report_free(struct BltReport *report);

// Solve omega_zbar = mu omega_z + sigma. `tol <= 0` or `max_iter == 0`
// select the defaults.
//
// # Safety
// `mu` and `sigma` must be live handles; `omega_out` and `report_out` must
// be valid pointers.
enum BltStatus blt_solve_beltrami(const struct BltMu *mu,
                                  const struct BltComplexField *sigma,
                                  double tol,
                                  uint64_t max_iter,
                                  struct BltComplexField **omega_out,
                                  struct BltReport **report_out);

// Solve omega_zbar = mu omega_z + sigma q(omega) by tau-continuation with
// default continuation parameters.
//
// # Safety
// `mu` and `sigma` must be live handles; `omega_out` and `report_out` must
// be valid pointers.
enum BltStatus blt_solve_semilinear(const struct BltMu *mu,
                                    const struct BltComplexField *sigma,
                                    enum BltQKind q_kind,
                                    double q_param,
                                    struct BltComplexField **omega_out,
                                    struct BltReport **report_out);

// Solve div(A grad u) = G Q(u) with A given entrywise (det A = 1 required)
// and Q acting on Re omega.
//
// # Safety
// `a11`, `a12`, `a22`, and `source` must be live handles; `u_out` and
// `report_out` must be valid pointers.
enum BltStatus blt_solve_poisson(const struct BltRealField *a11,
                                 const struct BltRealField *a12,
                                 const struct BltRealField *a22,
                                 const struct BltRealField *source,
                                 enum BltQKind q_kind,
                                 double q_param,
                                 struct BltRealField **u_out,
                                 struct BltReport **report_out);

// Residual of omega in the inhomogeneous Beltrami equation (relative L2).
//
// # Safety
// All handles must be live; `out` must be a valid pointer.
enum BltStatus blt_residual_beltrami(const struct BltMu *mu,
                                     const struct BltComplexField *sigma,
                                     const struct BltComplexField *omega,
                                     double *out);

// Compute the certified principal homeomorphism f = z + Cauchy(h).
//
// # Safety
// `mu` must be a live handle; `out` must be a valid pointer.
enum BltStatus blt_principal_map(const struct BltMu *mu,
                                 double tol,
                                 uint64_t max_iter,
                                 struct BltMap **out);

// Forward evaluation w = f(z) by bicubic interpolation.
//
// # Safety
// `map` must be a live handle; `wx` and `wy` must be valid pointers.
enum BltStatus blt_map_eval(const struct BltMap *map, double zx, double zy, double *wx, double *wy);

// Newton inversion z = f^{-1}(w) within the certified image region.
//
// # Safety
// `map` must be a live handle; `zx` and `zy` must be valid pointers.
enum BltStatus blt_map_invert(const struct BltMap *map,
                              double wx,
                              double wy,
                              double *zx,
                              double *zy);

// # Safety
// `map` must be a live handle (or null, which is a no-op).
void blt_map_free(struct BltMap *map);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BELTRAMI_H */
