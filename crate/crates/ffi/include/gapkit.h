#ifndef GAPKIT_H
#define GAPKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GapkitBackend {
  GAPKIT_BACKEND_SAMPLING = 0,
  GAPKIT_BACKEND_DETERMINISTIC = 1,
} GapkitBackend;

typedef enum GapkitEncoding {
  GAPKIT_ENCODING_EXACT = 0,
  GAPKIT_ENCODING_FROBENIUS = 1,
} GapkitEncoding;

typedef enum GapkitStatus {
  GAPKIT_STATUS_OK = 0,
  // The gap search ended without a detection; ledger fields are still set.
  GAPKIT_STATUS_NOT_FOUND = 1,
  // No refinement point landed in the gap; ledger fields are still set.
  GAPKIT_STATUS_DETECTION_FAILED = 2,
  GAPKIT_STATUS_INVALID_ARGUMENT = 3,
  GAPKIT_STATUS_CAPACITY = 4,
  GAPKIT_STATUS_CONTRACT = 5,
  GAPKIT_STATUS_IO = 6,
  GAPKIT_STATUS_NULL_POINTER = 7,
  GAPKIT_STATUS_PANIC = 8,
} GapkitStatus;

// Opaque Hermitian matrix.
typedef struct GapkitMatrix GapkitMatrix;

typedef struct GapkitOptions {
  uint64_t seed;
  enum GapkitBackend backend;
  enum GapkitEncoding encoding;
  // Smallest gap width searched; values <= 0 select the default.
  double gap_min;
} GapkitOptions;

// Cost counters, saturated at `UINT64_MAX`.
typedef struct GapkitLedger {
  uint64_t queries_uh;
  uint64_t queries_state_prep;
  uint64_t elementary_gates;
  uint64_t max_qubits;
  uint64_t classical_samples;
} GapkitLedger;

typedef struct GapkitConstResult {
  double mu_hat;
  double gap_hat;
  uint32_t iterations;
  uint64_t probes;
  struct GapkitLedger ledger;
} GapkitConstResult;

typedef struct GapkitEigResult {
  double lambda_k;
  double lambda_k1;
  double mu;
  double gap;
  double mu_hat;
  double gap_hat;
  uint64_t probes;
  struct GapkitLedger ledger;
} GapkitEigResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gapkit_version(void);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next `gapkit_*` call on the same thread.
const char *gapkit_last_error_message(void);

struct GapkitOptions gapkit_options_default(void);

// Creates a matrix from `n*n` row-major entries. `imag` may be null for a
// real matrix. The input must be Hermitian to within `1e-12` relative.
//
// # Safety
// `real` (and `imag` unless null) must point to `n*n` readable doubles;
// `out` must be writable.
enum GapkitStatus gapkit_matrix_new(size_t n,
                                    const double *real,
                                    const double *imag,
                                    struct GapkitMatrix **out);

// Reads an HMAT v1 file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum GapkitStatus gapkit_matrix_from_hmat_file(const char *path, struct GapkitMatrix **out);

// Random `n x n` matrix with eigenvalues in `[-1/2, 1/2]` whose `k`-th gap is
// exactly `gap`.
//
// # Safety
// `out` must be writable.
enum GapkitStatus gapkit_matrix_planted(size_t n,
                                        size_t k,
                                        double gap,
                                        uint64_t seed,
                                        struct GapkitMatrix **out);

// Releases a matrix. Null is ignored.
//
// # Safety
// `m` must come from a `gapkit_matrix_*` constructor and not be freed twice.
void gapkit_matrix_free(struct GapkitMatrix *m);

// Dimension, or 0 for null.
//
// # Safety
// `m` must be null or a live handle.
size_t gapkit_matrix_dim(const struct GapkitMatrix *m);

// Writes all eigenvalues in non-increasing order; `len` must equal the dimension.
//
// # Safety
// `m` must be a live handle; `out` must hold `len` writable doubles.
enum GapkitStatus gapkit_matrix_eigenvalues(const struct GapkitMatrix *m, double *out, size_t len);

// Constant-factor estimate of the `k`-th gap and its midpoint.
//
// # Safety
// `m` must be a live handle; `opts` may be null (defaults); `out` must be writable.
enum GapkitStatus gapkit_qgap_const(const struct GapkitMatrix *m,
                                    size_t k,
                                    double delta,
                                    const struct GapkitOptions *opts,
                                    struct GapkitConstResult *out);

// `eps`-accurate estimates of `λ_k`, `λ_{k+1}`, the midpoint and the gap.
//
// # Safety
// `m` must be a live handle; `opts` may be null (defaults); `out` must be writable.
enum GapkitStatus gapkit_qeig(const struct GapkitMatrix *m,
                              size_t k,
                              double delta,
                              double eps,
                              const struct GapkitOptions *opts,
                              struct GapkitEigResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAPKIT_H */
