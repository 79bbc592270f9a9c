#ifndef PROXEMICS_H
#define PROXEMICS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PxStatus {
  PX_STATUS_OK = 0,
  PX_STATUS_NULL_POINTER = 1,
  PX_STATUS_INVALID_ARGUMENT = 2,
  PX_STATUS_IO = 3,
  PX_STATUS_PARSE = 4,
  PX_STATUS_VALIDATION = 5,
  PX_STATUS_EMPTY = 6,
  PX_STATUS_BUFFER_TOO_SMALL = 7,
  PX_STATUS_PANIC = 8,
} PxStatus;

typedef enum PxZone {
  PX_ZONE_INTIMATE = 0,
  PX_ZONE_PERSONAL = 1,
  PX_ZONE_SOCIAL = 2,
  PX_ZONE_PUBLIC = 3,
} PxZone;

/**
 * Resampled frames of one room.
 */
typedef struct PxFrameStore PxFrameStore;

typedef struct PxSummary {
  size_t users;
  size_t frames;
  size_t pose_count;
  size_t rooms;
} PxSummary;

typedef struct PxVec3 {
  double x;
  double y;
  double z;
} PxVec3;

typedef struct PxExtent {
  double min_x;
  double max_x;
  double min_z;
  double max_z;
} PxExtent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *px_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *px_version(void);

/**
 * Loads a frame store written by `proxemics resample`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PxStatus px_frame_store_load_json(const char *path, struct PxFrameStore **out);

/**
 * Reads a JSON-lines tick log and resamples one room. A null `room_id`
 * selects the first room in id order.
 *
 * # Safety
 * `path` and a non-null `room_id` must be NUL-terminated strings; `out`
 * must be writable.
 */
enum PxStatus px_frame_store_from_log(const char *path,
                                      int64_t frame_period_ms,
                                      const char *room_id,
                                      struct PxFrameStore **out);

/**
 * Releases a store. Null is ignored.
 *
 * # Safety
 * `store` must come from a `px_frame_store_*` constructor and not be used
 * afterwards.
 */
void px_frame_store_free(struct PxFrameStore *store);

/**
 * # Safety
 * `store` must be a live handle and `out` writable.
 */
enum PxStatus px_frame_store_summary(const struct PxFrameStore *store, struct PxSummary *out);

/**
 * Zone of an interpersonal distance under the default boundaries.
 *
 * # Safety
 * `out` must be writable.
 */
enum PxStatus px_classify_zone(double distance, enum PxZone *out);

/**
 * Nearest-neighbour distance probabilities. `out_bins` always receives the
 * bin count; when it exceeds `capacity` nothing else is written and
 * `BufferTooSmall` is returned.
 *
 * # Safety
 * `out_probabilities` must hold `capacity` doubles; `out_bins` writable.
 */
enum PxStatus px_nn_histogram(const struct PxFrameStore *store,
                              double bin_width,
                              double range,
                              double *out_probabilities,
                              size_t capacity,
                              size_t *out_bins);

/**
 * Share of nearest-neighbour samples closer than `threshold`.
 *
 * # Safety
 * `store` must be a live handle and `out` writable.
 */
enum PxStatus px_intimate_collision_rate(const struct PxFrameStore *store,
                                         double threshold,
                                         double *out);

/**
 * # Safety
 * `store` must be a live handle and `out` writable.
 */
enum PxStatus px_fov_containment(const struct PxFrameStore *store,
                                 struct PxVec3 target,
                                 double half_angle_rad,
                                 double *out);

/**
 * # Safety
 * `store` must be a live handle and `out` writable.
 */
enum PxStatus px_occupied_extent(const struct PxFrameStore *store,
                                 double quantile,
                                 struct PxExtent *out);

/**
 * Row-major `n x n` distance and ego-bearing angle matrices. Undefined
 * angles (diagonal, coincident users) are written as NaN.
 *
 * # Safety
 * `positions` and `directions` must hold `n` elements; both outputs must
 * hold `n * n` doubles.
 */
enum PxStatus px_pairwise(const struct PxVec3 *positions,
                          const struct PxVec3 *directions,
                          size_t n,
                          double *out_distance,
                          double *out_angle);

/**
 * Density clustering of `n` points: `out_labels[i]` is the cluster of
 * point `i` or -1 for noise; `out_clusters` receives the cluster count.
 *
 * # Safety
 * `positions` and `out_labels` must hold `n` elements; `out_clusters`
 * must be writable.
 */
enum PxStatus px_detect_groups(const struct PxVec3 *positions,
                               size_t n,
                               double eps,
                               size_t min_size,
                               int64_t *out_labels,
                               size_t *out_clusters);

/**
 * Validates one tick event given as JSON. On success `out_canonical`
 * (if non-null) receives the canonical encoding, to be released with
 * [`px_string_free`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_canonical` null or writable.
 */
enum PxStatus px_validate_tick_json(const char *json, char **out_canonical);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void px_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROXEMICS_H */
