/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TACTILE_H
#define TACTILE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TactileStatus {
  TACTILE_STATUS_OK = 0,
  TACTILE_STATUS_NULL_POINTER = 1,
  TACTILE_STATUS_INVALID_ARGUMENT = 2,
  TACTILE_STATUS_SHAPE_MISMATCH = 3,
  TACTILE_STATUS_NOT_ARMED = 4,
  TACTILE_STATUS_IO = 5,
  TACTILE_STATUS_NUMERIC = 6,
  TACTILE_STATUS_BUFFER_TOO_SMALL = 7,
  TACTILE_STATUS_PANIC = 8,
} TactileStatus;

typedef enum TactileStrategyKind {
  TACTILE_STRATEGY_KIND_INFO_RV = 0,
  TACTILE_STRATEGY_KIND_DUAL_RV = 1,
  TACTILE_STRATEGY_KIND_PREEMPTION = 2,
  TACTILE_STRATEGY_KIND_RANDOM = 3,
} TactileStrategyKind;

/*
 Opaque classifier handle.
 */
typedef struct TactileModel TactileModel;

/*
 Opaque strategy handle.
 */
typedef struct TactileStrategy TactileStrategy;

typedef struct TactileDualRvParams {
  size_t l_info;
  size_t j_info;
  size_t l_div;
  size_t j_div;
  size_t q;
  size_t r;
  size_t k;
} TactileDualRvParams;

/*
 Outcome of one strategy step. Values the strategy did not compute are NaN.
 */
typedef struct TactileDecision {
  bool kept;
  bool trigger_fired;
  /*
   The batch is complete: take it, label it, retrain, then rearm.
   */
  bool retrain;
  /*
   The sample only fed a threshold calibration buffer.
   */
  bool calibrating;
  bool has_evicted;
  uint64_t evicted_id;
  double informativeness;
  double diversity_after;
  double gamma;
  double delta;
} TactileDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failed call on this thread, or NULL after a
 successful call. The pointer stays valid until the next call into the
 library from the same thread.
 */
const char *tactile_last_error(void);

/*
 Builds a model. `architecture` is a preset name (`mlp`, `mnist_cnn`,
 `fashion_cnn`, `cifar_cnn`) or a comma-separated layer list such as
 `flatten,dense:32:relu,dense:10:softmax`.

 # Safety
 `architecture` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TactileStatus tactile_model_new(const char *architecture,
                                     size_t height,
                                     size_t width,
                                     size_t channels,
                                     size_t classes,
                                     uint64_t seed,
                                     struct TactileModel **out);

/*
 # Safety
 `model` must come from [`tactile_model_new`] and not be used afterwards.
 */
void tactile_model_free(struct TactileModel *model);

/*
 # Safety
 `model` and `out` must be valid pointers.
 */
enum TactileStatus tactile_model_feature_len(const struct TactileModel *model, size_t *out);

/*
 # Safety
 `model` and `out` must be valid pointers.
 */
enum TactileStatus tactile_model_class_count(const struct TactileModel *model, size_t *out);

/*
 Class probabilities for one image of `len` values in [0,1], laid out
 height-major with interleaved channels.

 # Safety
 `pixels` must hold `len` floats and `probs` room for `probs_len` doubles.
 */
enum TactileStatus tactile_model_predict(const struct TactileModel *model,
                                         const float *pixels,
                                         size_t len,
                                         double *probs,
                                         size_t probs_len);

/*
 Feature-extractor output (the flatten layer) for one image.

 # Safety
 As for [`tactile_model_predict`].
 */
enum TactileStatus tactile_model_features(const struct TactileModel *model,
                                          const float *pixels,
                                          size_t len,
                                          double *features,
                                          size_t features_len);

/*
 Trains on `count` images stored back to back in `pixels` with their
 `labels`, using Adam with the usual moment defaults. Writes the mean
 loss of the last epoch to `final_loss` when it is not NULL.

 # Safety
 `pixels` must hold `count` images and `labels` `count` entries.
 */
enum TactileStatus tactile_model_train(struct TactileModel *model,
                                       const float *pixels,
                                       const uint32_t *labels,
                                       size_t count,
                                       size_t epochs,
                                       size_t batch_size,
                                       double learning_rate,
                                       uint64_t seed,
                                       bool warm_start,
                                       double *final_loss);

/*
 # Safety
 `model` must be valid and `path` a NUL-terminated string.
 */
enum TactileStatus tactile_model_save_weights(const struct TactileModel *model, const char *path);

/*
 Loads weights saved for the same architecture.

 # Safety
 `model` must be valid and `path` a NUL-terminated string.
 */
enum TactileStatus tactile_model_load_weights(struct TactileModel *model, const char *path);

/*
 # Safety
 `out` must be a valid pointer.
 */
enum TactileStatus tactile_strategy_info_rv(size_t l,
                                            size_t j,
                                            size_t k,
                                            struct TactileStrategy **out);

/*
 # Safety
 `params` and `out` must be valid pointers.
 */
enum TactileStatus tactile_strategy_dual_rv(const struct TactileDualRvParams *params,
                                            uint64_t seed,
                                            struct TactileStrategy **out);

/*
 # Safety
 `out` must be a valid pointer.
 */
enum TactileStatus tactile_strategy_preemption(size_t w,
                                               size_t k_sub,
                                               size_t n_sub,
                                               double lambda_i,
                                               double lambda_d,
                                               double alpha,
                                               struct TactileStrategy **out);

/*
 # Safety
 `out` must be a valid pointer.
 */
enum TactileStatus tactile_strategy_random(double p,
                                           size_t k,
                                           uint64_t seed,
                                           struct TactileStrategy **out);

/*
 # Safety
 `strategy` must come from a strategy constructor and not be used afterwards.
 */
void tactile_strategy_free(struct TactileStrategy *strategy);

/*
 Offers one stream sample to the strategy. `id` must increase from call
 to call; it is how taken batches refer back to samples.

 # Safety
 `strategy`, `model` and `out` must be valid; `pixels` must hold `len` floats.
 */
enum TactileStatus tactile_strategy_step(struct TactileStrategy *strategy,
                                         const struct TactileModel *model,
                                         uint64_t id,
                                         const float *pixels,
                                         size_t len,
                                         struct TactileDecision *out);

/*
 # Safety
 `strategy` and `out` must be valid pointers.
 */
enum TactileStatus tactile_strategy_batch_len(const struct TactileStrategy *strategy, size_t *out);

/*
 Moves every sample awaiting labels out of the strategy and writes their
 ids, in selection order, to `ids`. Fails with `BUFFER_TOO_SMALL`
 without taking anything if `capacity` is insufficient; `written` then
 holds the number needed.

 # Safety
 `ids` must have room for `capacity` values; `written` must be valid.
 */
enum TactileStatus tactile_strategy_take_batch(struct TactileStrategy *strategy,
                                               uint64_t *ids,
                                               size_t capacity,
                                               size_t *written);

/*
 Resets the batch, counters and thresholds after a retraining.

 # Safety
 `strategy` must be valid.
 */
enum TactileStatus tactile_strategy_rearm(struct TactileStrategy *strategy);

/*
 Entropy in nats of a probability vector.

 # Safety
 `p` must hold `n` doubles and `out` be valid.
 */
enum TactileStatus tactile_entropy(const double *p, size_t n, double *out);

/*
 One minus the gap between the two largest probabilities.

 # Safety
 `p` must hold `n` doubles and `out` be valid.
 */
enum TactileStatus tactile_margin(const double *p, size_t n, double *out);

/*
 # Safety
 `u` and `v` must each hold `dim` doubles and `out` be valid.
 */
enum TactileStatus tactile_cosine_distance(const double *u,
                                           const double *v,
                                           size_t dim,
                                           double *out);

/*
 Mean pairwise cosine distance of `count` row vectors of length `dim`.

 # Safety
 `vs` must hold `count * dim` doubles and `out` be valid.
 */
enum TactileStatus tactile_diversity(const double *vs, size_t count, size_t dim, double *out);

/*
 Half the log-determinant of `I + alpha * A`, with `A` the Gram matrix of
 the unit-normalized rows.

 # Safety
 `vs` must hold `count * dim` doubles and `out` be valid.
 */
enum TactileStatus tactile_logdet_diversity(const double *vs,
                                            size_t count,
                                            size_t dim,
                                            double alpha,
                                            double *out);

/*
 Batch buffer bytes for a strategy, given one-byte image values and
 four-byte feature values.
 */
uint64_t tactile_account_memory(enum TactileStrategyKind kind,
                                uint64_t k,
                                uint64_t image_bytes,
                                uint64_t feature_bytes);

/*
 Rescales a host timing to a target clock.

 # Safety
 `out` must be valid.
 */
enum TactileStatus tactile_estimate_mcu_time(double t_host,
                                             double host_clock_hz,
                                             double target_clock_hz,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TACTILE_H */
