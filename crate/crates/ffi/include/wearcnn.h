#ifndef WEARCNN_H
#define WEARCNN_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WCNN_PROFILE_PAPER 0

#define WCNN_PROFILE_DESK 1

typedef enum WcnnStatus {
  WCNN_STATUS_OK = 0,
  WCNN_STATUS_NULL_POINTER = 1,
  WCNN_STATUS_INVALID_ARGUMENT = 2,
  WCNN_STATUS_IO = 3,
  WCNN_STATUS_CHECKPOINT = 4,
  WCNN_STATUS_SHAPE = 5,
  WCNN_STATUS_INTERNAL = 6,
  WCNN_STATUS_PANIC = 7,
} WcnnStatus;

/**
 * Opaque network handle.
 */
typedef struct WcnnNetwork WcnnNetwork;

/**
 * Result of a one-tailed Welch test of H0: mean A <= mean B.
 */
typedef struct WcnnWelch {
  double t_stat;
  double df_raw;
  double df_floor;
  double t_crit;
  double p;
  bool reject;
} WcnnWelch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *wcnn_last_error(void);

/**
 * Freshly initialised network of the given profile.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum WcnnStatus wcnn_network_new(uint32_t profile, uint64_t seed, struct WcnnNetwork **out);

/**
 * Network from a TOML topology file and a checkpoint.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be valid for a write.
 */
enum WcnnStatus wcnn_network_load(const char *topology_path,
                                  const char *checkpoint_path,
                                  struct WcnnNetwork **out);

/**
 * Writes the topology and the weights.
 *
 * # Safety
 * `net` must come from this library; paths must be NUL-terminated.
 */
enum WcnnStatus wcnn_network_save(const struct WcnnNetwork *net,
                                  const char *topology_path,
                                  const char *checkpoint_path);

/**
 * Releases a network; NULL is ignored.
 *
 * # Safety
 * `net` must come from this library and not be used afterwards.
 */
void wcnn_network_free(struct WcnnNetwork *net);

/**
 * Number of trainable parameters.
 *
 * # Safety
 * `net` must come from this library; `out` must be valid for a write.
 */
enum WcnnStatus wcnn_network_param_count(const struct WcnnNetwork *net, size_t *out);

/**
 * Number of layers in the topology.
 *
 * # Safety
 * `net` must come from this library; `out` must be valid for a write.
 */
enum WcnnStatus wcnn_network_layer_count(const struct WcnnNetwork *net, size_t *out);

/**
 * Height, width and channels of one input image.
 *
 * # Safety
 * `net` must come from this library; `out` must hold 3 values.
 */
enum WcnnStatus wcnn_network_input_shape(const struct WcnnNetwork *net, size_t *out);

/**
 * Classifies `n` images stored row-major as `n × height × width × 3`
 * floats in `[0, 1]`. Writes `n` class indices to `classes` and, unless
 * `probabilities` is NULL, `n × 16` class probabilities.
 *
 * # Safety
 * Buffers must hold the stated number of elements.
 */
enum WcnnStatus wcnn_network_predict(const struct WcnnNetwork *net,
                                     const float *images,
                                     size_t n,
                                     uint32_t *classes,
                                     float *probabilities);

/**
 * Wear class of a cutting-edge radius in millimetres.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum WcnnStatus wcnn_class_of_radius(double radius_mm, uint32_t *out);

/**
 * Upper-tail critical value of Student's t.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum WcnnStatus wcnn_t_critical(double alpha, double df, double *out);

/**
 * One-tailed p-value `P(T > t)`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum WcnnStatus wcnn_p_one_tailed(double t, double df, double *out);

/**
 * Welch test of H0: mean A <= mean B from sample moments (standard
 * deviations with the N − 1 denominator).
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum WcnnStatus wcnn_welch_one_tailed(double mean_a,
                                      double sd_a,
                                      size_t n_a,
                                      double mean_b,
                                      double sd_b,
                                      size_t n_b,
                                      double alpha,
                                      struct WcnnWelch *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEARCNN_H */
