#ifndef CIMCS_H
#define CIMCS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CimStatus {
  CIM_STATUS_OK = 0,
  CIM_STATUS_NULL_POINTER = 1,
  CIM_STATUS_INVALID_ARGUMENT = 2,
  CIM_STATUS_DIMENSION_MISMATCH = 3,
  CIM_STATUS_NUMERICAL = 4,
  CIM_STATUS_IO = 5,
  CIM_STATUS_FORMAT = 6,
  CIM_STATUS_CONFIG = 7,
  CIM_STATUS_RUN_FAILED = 8,
  CIM_STATUS_PANIC = 9,
} CimStatus;

/**
 * Machine model selector.
 */
typedef enum CimModel {
  CIM_MODEL_WIGNER_OL = 0,
  CIM_MODEL_WIGNER_CAC = 1,
  CIM_MODEL_POSITIVE_P = 2,
} CimModel;

/**
 * A compressed-sensing instance.
 */
typedef struct CimInstance CimInstance;

/**
 * A QUBO built from an instance at a fixed threshold.
 */
typedef struct CimQubo CimQubo;

/**
 * Outcome of an alternating-minimisation run.
 */
typedef struct CimRun CimRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * success. Valid until the next call on the same thread.
 */
const char *cim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cim_version(void);

/**
 * Generates a seeded synthetic instance.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CimStatus cim_instance_generate(uintptr_t n,
                                     double alpha,
                                     double sparseness,
                                     double nu,
                                     uint64_t seed,
                                     struct CimInstance **out);

/**
 * Loads an instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CimStatus cim_instance_load(const char *path_, struct CimInstance **out);

/**
 * Writes an instance file.
 *
 * # Safety
 * `inst` must come from this library; `path` must be NUL-terminated.
 */
enum CimStatus cim_instance_save(const struct CimInstance *inst, const char *path_);

/**
 * Number of unknowns N and measurements M.
 *
 * # Safety
 * `inst` must come from this library; `n` and `m` must be writable.
 */
enum CimStatus cim_instance_dims(const struct CimInstance *inst, uintptr_t *n, uintptr_t *m);

/**
 * Copies the true source `x ∘ ξ` (length N) into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum CimStatus cim_instance_source(const struct CimInstance *inst, double *buf, uintptr_t len);

/**
 * Copies the true support (length N, 0 or 1) into `buf`.
 *
 * # Safety
 * `buf` must hold `len` bytes.
 */
enum CimStatus cim_instance_support(const struct CimInstance *inst, uint8_t *buf, uintptr_t len);

/**
 * Copies the observation matrix, row-major M×N, into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum CimStatus cim_instance_matrix(const struct CimInstance *inst, double *buf, uintptr_t len);

/**
 * Releases an instance; null is ignored.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void cim_instance_free(struct CimInstance *inst);

/**
 * Builds the QUBO of `inst` at threshold `eta` (`λ = η²/2`).
 *
 * # Safety
 * `inst` must come from this library; `out` must be writable.
 */
enum CimStatus cim_qubo_build(const struct CimInstance *inst, double eta, struct CimQubo **out);

/**
 * Energy and objective of support `sigma` (bytes, nonzero = on) at
 * signal `signal`, both of length N.
 *
 * # Safety
 * Buffers must hold `n` elements; `energy` and `objective` may be null.
 */
enum CimStatus cim_qubo_energy(const struct CimQubo *q,
                               const double *signal,
                               const uint8_t *sigma,
                               uintptr_t n,
                               double *energy,
                               double *objective);

/**
 * Releases a QUBO; null is ignored.
 *
 * # Safety
 * `q` must come from this library and not be used afterwards.
 */
void cim_qubo_free(struct CimQubo *q);

/**
 * One machine trajectory at fixed signal with the model's default
 * integrator settings; writes the binarised support into `sigma_out`.
 *
 * # Safety
 * `signal` and `sigma_out` must hold `n` elements.
 */
enum CimStatus cim_support_estimate(const struct CimQubo *q,
                                    enum CimModel model,
                                    const double *signal,
                                    uintptr_t n,
                                    double eta,
                                    uint64_t seed,
                                    uint8_t *sigma_out);

/**
 * Alternating minimisation with the synthetic defaults (52 iterations,
 * η from `eta_init` to `eta_end`).
 *
 * # Safety
 * `inst` must come from this library; `out` must be writable.
 */
enum CimStatus cim_altmin_run(const struct CimInstance *inst,
                              enum CimModel model,
                              double eta_init,
                              double eta_end,
                              uint64_t seed,
                              struct CimRun **out);

/**
 * Number of iterations recorded.
 *
 * # Safety
 * `run` must come from this library.
 */
uintptr_t cim_run_iterations(const struct CimRun *run);

/**
 * Final RMSE, direction cosine and Hamming loss; any output may be null.
 *
 * # Safety
 * `run` must come from this library.
 */
enum CimStatus cim_run_metrics(const struct CimRun *run,
                               double *rmse,
                               double *direction_cosine,
                               double *hamming_loss);

/**
 * Copies the final estimate `R ∘ σ` (length N) into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum CimStatus cim_run_estimate(const struct CimRun *run, double *buf, uintptr_t len);

/**
 * Releases a run; null is ignored.
 *
 * # Safety
 * `run` must come from this library and not be used afterwards.
 */
void cim_run_free(struct CimRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIMCS_H */
