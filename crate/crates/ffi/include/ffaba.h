#ifndef FFABA_H
#define FFABA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FfabaStatus {
  FFABA_STATUS_OK = 0,
  FFABA_STATUS_NULL_POINTER = 1,
  FFABA_STATUS_INVALID_ARGUMENT = 2,
  FFABA_STATUS_NUMERICAL = 3,
  FFABA_STATUS_BUFFER_TOO_SMALL = 4,
  FFABA_STATUS_CHECKS_FAILED = 5,
  FFABA_STATUS_PANIC = 6,
} FfabaStatus;

// Opaque: a chain, a gauge, solved Bethe roots and the on-shell dual vector.
typedef struct FfabaScenario FfabaScenario;

typedef struct FfabaComplex {
  double re;
  double im;
} FfabaComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *ffaba_version(void);

// Message of the last failed call on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *ffaba_last_error(void);

// θ_kind(u | scale·τ), or its u-derivative when `derivative` is nonzero.
//
// # Safety
// `out` must be valid for a write.
enum FfabaStatus ffaba_theta(uint8_t kind,
                             struct FfabaComplex u,
                             struct FfabaComplex tau,
                             uint8_t scale,
                             int32_t derivative,
                             struct FfabaComplex *out);

// Builds a seeded scenario with `n_sites` sites in sector `nu` at modulus `tau`.
// Free the handle with [`ffaba_scenario_free`].
//
// # Safety
// `out` must be valid for a write.
enum FfabaStatus ffaba_scenario_new(size_t n_sites,
                                    struct FfabaComplex tau,
                                    int64_t nu,
                                    uint64_t seed,
                                    struct FfabaScenario **out);

// # Safety
// `handle` must be null or come from [`ffaba_scenario_new`] and not be freed twice.
void ffaba_scenario_free(struct FfabaScenario *handle);

// Number of twin-free on-shell roots (N/2).
//
// # Safety
// `handle` must be a live scenario and `out` valid for a write.
enum FfabaStatus ffaba_scenario_root_count(const struct FfabaScenario *handle, size_t *out);

// Copies the twin-free roots into `out[0..len]`.
//
// # Safety
// `handle` must be a live scenario and `out` valid for `len` writes.
enum FfabaStatus ffaba_scenario_roots(const struct FfabaScenario *handle,
                                      struct FfabaComplex *out,
                                      size_t len);

// Normalised scalar product of the on-shell dual vector with the sector-λ
// Bethe vector at `us`, by brute force.
//
// # Safety
// `handle` must be a live scenario, `us` valid for `m` reads and `out` for a write.
enum FfabaStatus ffaba_scalar_product(const struct FfabaScenario *handle,
                                      int64_t lambda,
                                      const struct FfabaComplex *us,
                                      size_t m,
                                      struct FfabaComplex *out);

// The balanced closed form for sector λ; needs `m` = N/2.
//
// # Safety
// As for [`ffaba_scalar_product`].
enum FfabaStatus ffaba_scalar_product_closed(const struct FfabaScenario *handle,
                                             int64_t lambda,
                                             const struct FfabaComplex *us,
                                             size_t m,
                                             struct FfabaComplex *out);

// Runs the verification suite for a JSON configuration (NULL for defaults),
// optionally restricted to ids containing `only`. The JSON-lines report is
// returned through `report` and must be freed with [`ffaba_string_free`].
// Returns `FFABA_STATUS_CHECKS_FAILED` if any check failed or errored; the
// report is still written.
//
// # Safety
// `config` and `only` must be null or NUL-terminated; `report` valid for a write.
enum FfabaStatus ffaba_verify(const char *config, const char *only, char **report);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void ffaba_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FFABA_H */
