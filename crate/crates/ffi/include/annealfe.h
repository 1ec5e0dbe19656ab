#ifndef ANNEALFE_H
#define ANNEALFE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AfeStatus {
  AFE_STATUS_OK = 0,
  AFE_STATUS_INVALID_ARGUMENT = 1,
  AFE_STATUS_CAPACITY = 2,
  AFE_STATUS_IO = 3,
  AFE_STATUS_PARSE = 4,
  AFE_STATUS_NULL_POINTER = 5,
  AFE_STATUS_PANIC = 6,
} AfeStatus;

typedef enum AfeMethod {
  AFE_METHOD_AIS = 0,
  AFE_METHOD_MAIS_V = 1,
  AFE_METHOD_MAIS_H = 2,
  AFE_METHOD_AUTO = 3,
} AfeMethod;

typedef enum AfeKernel {
  AFE_KERNEL_BLOCKED_GIBBS = 0,
  AFE_KERNEL_MH_AUGMENTED = 1,
} AfeKernel;

/**
 * Opaque model handle.
 */
typedef struct AfeModel AfeModel;

/**
 * Opaque estimation result handle.
 */
typedef struct AfeResult AfeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * including the terminator, so a zero-length call sizes the buffer.
 *
 * # Safety
 * `buf` must be writable for `len` bytes, or null when `len` is 0.
 */
size_t afe_last_error_message(char *buf, size_t len);

/**
 * Builds a model from bias vectors and a row-major `nv x nh` coupling buffer.
 *
 * # Safety
 * The input arrays must hold `nv`, `nh` and `nv * nh` doubles; `out` must be
 * a valid pointer.
 */
enum AfeStatus afe_model_new(size_t nv,
                             size_t nh,
                             const double *visible_bias,
                             const double *hidden_bias,
                             const double *coupling,
                             double temperature,
                             struct AfeModel **out);

/**
 * Parses a model from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum AfeStatus afe_model_from_json(const char *json, struct AfeModel **out);

/**
 * Reads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum AfeStatus afe_model_load(const char *path, struct AfeModel **out);

/**
 * # Safety
 * `model` must come from an `afe_model_*` constructor and not be freed yet.
 * Null is ignored.
 */
void afe_model_free(struct AfeModel *model);

/**
 * Number of visible units, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t afe_model_num_visible(const struct AfeModel *model);

/**
 * Number of hidden units, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t afe_model_num_hidden(const struct AfeModel *model);

/**
 * Energy of a joint configuration; spins are `-1` or `+1`.
 *
 * # Safety
 * `v` and `h` must hold `nv` and `nh` values; `out` must be valid.
 */
enum AfeStatus afe_model_energy(const struct AfeModel *model,
                                const int8_t *v,
                                size_t nv,
                                const int8_t *h,
                                size_t nh,
                                double *out);

/**
 * Exact `ln Z` of the model at inverse-temperature scale `beta`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid.
 */
enum AfeStatus afe_exact_log_z(const struct AfeModel *model, double beta, double *out);

/**
 * Runs one estimate with a linear schedule of `k` steps and `n` sequences.
 * `mh_sweeps` is ignored for the blocked Gibbs kernel.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid.
 */
enum AfeStatus afe_estimate(const struct AfeModel *model,
                            enum AfeMethod method,
                            enum AfeKernel kernel,
                            uint32_t mh_sweeps,
                            size_t k,
                            size_t n,
                            uint64_t seed,
                            struct AfeResult **out);

/**
 * # Safety
 * `result` must be a live handle; `out` must be valid.
 */
enum AfeStatus afe_result_log_z(const struct AfeResult *result, double *out);

/**
 * Total free energy estimate `-ln Z`.
 *
 * # Safety
 * `result` must be a live handle; `out` must be valid.
 */
enum AfeStatus afe_result_free_energy(const struct AfeResult *result, double *out);

/**
 * # Safety
 * `result` must be a live handle; `out` must be valid.
 */
enum AfeStatus afe_result_per_variable_free_energy(const struct AfeResult *result, double *out);

/**
 * # Safety
 * `result` must be a live handle; `out` must be valid.
 */
enum AfeStatus afe_result_effective_sample_size(const struct AfeResult *result, double *out);

/**
 * Number of per-sequence log weights, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t afe_result_num_weights(const struct AfeResult *result);

/**
 * Copies the log weights into `buf`, which must have room for all of them.
 *
 * # Safety
 * `result` must be a live handle; `buf` must be writable for `len` doubles.
 */
enum AfeStatus afe_result_copy_log_weights(const struct AfeResult *result, double *buf, size_t len);

/**
 * # Safety
 * `result` must come from [`afe_estimate`] and not be freed yet. Null is
 * ignored.
 */
void afe_result_free(struct AfeResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANNEALFE_H */
