#ifndef BEREZIN_H
#define BEREZIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BerezinStatus {
  BEREZIN_STATUS_OK = 0,
  BEREZIN_STATUS_NULL_POINTER = 1,
  BEREZIN_STATUS_INVALID_ARGUMENT = 2,
  BEREZIN_STATUS_DIMENSION_MISMATCH = 3,
  BEREZIN_STATUS_OUT_OF_DOMAIN = 4,
  BEREZIN_STATUS_ODD_LEVEL = 5,
  BEREZIN_STATUS_SINGULAR_PAIR = 6,
  BEREZIN_STATUS_DEGENERATE_KERNEL = 7,
  BEREZIN_STATUS_NUMERIC_FAILURE = 8,
  BEREZIN_STATUS_RESOURCE_LIMIT = 9,
  BEREZIN_STATUS_PANIC = 10,
} BerezinStatus;

/*
 Orthonormal basis of the level-`m` space on `C^d`.
 */
typedef struct BerezinBasis BerezinBasis;

/*
 Operator on the space of a [`BerezinBasis`].
 */
typedef struct BerezinOperator BerezinOperator;

typedef struct BerezinComplex {
  double re;
  double im;
} BerezinComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *berezin_version(void);

/*
 Copy the calling thread's last error message into `buffer` (NUL-terminated,
 truncated to `capacity`). Returns the full message length in bytes.

 # Safety
 `buffer` must be null or valid for `capacity` bytes.
 */
size_t berezin_last_error_message(char *buffer, size_t capacity);

/*
 Build the basis for `(d, m)`. `level = 0` selects the default quadrature level.

 # Safety
 `out` must be valid for a write.
 */
enum BerezinStatus berezin_basis_new(size_t d,
                                     uint32_t m,
                                     uint32_t level,
                                     struct BerezinBasis **out);

/*
 # Safety
 `basis` must be null or a handle from [`berezin_basis_new`] not yet freed.
 */
void berezin_basis_free(struct BerezinBasis *basis);

/*
 Number of basis functions `N`.

 # Safety
 `basis` must be a live handle and `out` valid for a write.
 */
enum BerezinStatus berezin_basis_len(const struct BerezinBasis *basis, size_t *out);

/*
 Complex dimension `d`.

 # Safety
 `basis` must be a live handle and `out` valid for a write.
 */
enum BerezinStatus berezin_basis_dim(const struct BerezinBasis *basis, size_t *out);

/*
 Normalization constant `c(m)`.

 # Safety
 `basis` must be a live handle and `out` valid for a write.
 */
enum BerezinStatus berezin_basis_c_m(const struct BerezinBasis *basis, double *out);

/*
 `psi_mu(nu) = (1 + conj(mu) . nu)^m`.

 # Safety
 `mu` and `nu` must each point to `d` values; `out` must be valid for a write.
 */
enum BerezinStatus berezin_coherent_eval(const struct BerezinBasis *basis,
                                         const struct BerezinComplex *mu,
                                         const struct BerezinComplex *nu,
                                         struct BerezinComplex *out);

/*
 Operator with the given `N x N` row-major entries.

 # Safety
 `entries` must point to `len` values; `out` must be valid for a write.
 */
enum BerezinStatus berezin_operator_from_matrix(const struct BerezinBasis *basis,
                                                const struct BerezinComplex *entries,
                                                size_t len,
                                                struct BerezinOperator **out);

/*
 Toeplitz operator of a shipped function (by code). The quadrature level is
 raised to the Toeplitz default when the basis carries a lower one.

 # Safety
 `basis` must be a live handle; `out` must be valid for a write.
 */
enum BerezinStatus berezin_toeplitz_new(const struct BerezinBasis *basis,
                                        uint32_t function_code,
                                        struct BerezinOperator **out);

/*
 Operator whose covariant symbol is the shipped function (by code).

 # Safety
 `basis` must be a live handle; `out` must be valid for a write.
 */
enum BerezinStatus berezin_symbol_operator_new(const struct BerezinBasis *basis,
                                               uint32_t function_code,
                                               struct BerezinOperator **out);

/*
 # Safety
 `op` must be null or a handle from an operator constructor not yet freed.
 */
void berezin_operator_free(struct BerezinOperator *op);

/*
 Copy the `N x N` entries in row-major order.

 # Safety
 `buffer` must be valid for `len` writes.
 */
enum BerezinStatus berezin_operator_entries(const struct BerezinOperator *op,
                                            struct BerezinComplex *buffer,
                                            size_t len);

/*
 Covariant symbol `A(nu, conj(mu))`.

 # Safety
 `nu` and `mu` must each point to `d` values; `out` must be valid for a write.
 */
enum BerezinStatus berezin_symbol_eval(const struct BerezinOperator *op,
                                       const struct BerezinComplex *nu,
                                       const struct BerezinComplex *mu,
                                       struct BerezinComplex *out);

/*
 Star product `(A1 * A2)(mu, conj(mu))` by quadrature.

 # Safety
 `mu` must point to `d` values; `out` must be valid for a write.
 */
enum BerezinStatus berezin_star_product(const struct BerezinOperator *op1,
                                        const struct BerezinOperator *op2,
                                        const struct BerezinComplex *mu,
                                        struct BerezinComplex *out);

/*
 Largest singular value.

 # Safety
 `op` must be a live handle; `out` must be valid for a write.
 */
enum BerezinStatus berezin_operator_norm(const struct BerezinOperator *op, double *out);

/*
 Holonomy of the torus loop `k1 A + k2 B` at even level `m`.

 # Safety
 `out` must be valid for a write.
 */
enum BerezinStatus berezin_torus_holonomy(int64_t k1,
                                          int64_t k2,
                                          uint32_t m,
                                          struct BerezinComplex *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEREZIN_H */
