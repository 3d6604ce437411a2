#ifndef PSG_H
#define PSG_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/*
 Result code of every fallible call.
 */
typedef enum PsgStatus {
  PSG_STATUS_OK = 0,
  PSG_STATUS_NULL_POINTER = 1,
  PSG_STATUS_INVALID_UTF8 = 2,
  PSG_STATUS_INVALID_CONFIG = 3,
  PSG_STATUS_INVALID_STRATEGY = 4,
  PSG_STATUS_RANDOMIZED = 5,
  PSG_STATUS_UNSUPPORTED = 6,
  PSG_STATUS_CAP_EXCEEDED = 7,
  PSG_STATUS_SHAPE_MISMATCH = 8,
  PSG_STATUS_OUT_OF_RANGE = 9,
  PSG_STATUS_INTERNAL = 10,
} PsgStatus;

/*
 A P-function grid over budgets `1..=a_max` and winners `0..=n`.
 */
typedef struct PsgPFunction PsgPFunction;

/*
 A parsed strategy.
 */
typedef struct PsgStrategy PsgStrategy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *psg_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *psg_version(void);

/*
 Parses a strategy string such as `ks0`, `ks:D=3:E=R` or `bs:D=0:I=5:E=B`.

 # Safety
 `text` must be NULL or a NUL-terminated string; `out` must be NULL or
 writable.
 */
enum PsgStatus psg_strategy_parse(const char *text, struct PsgStrategy **out);

/*
 Canonical text of a strategy, or NULL. Free with [`psg_string_free`].

 # Safety
 `strategy` must be NULL or a live handle.
 */
char *psg_strategy_to_string(const struct PsgStrategy *strategy);

/*
 Whether the strategy uses no randomness (and so can go to the oracle).

 # Safety
 `strategy` must be NULL or a live handle.
 */
bool psg_strategy_is_deterministic(const struct PsgStrategy *strategy);

/*
 # Safety
 `strategy` must be NULL or a handle from [`psg_strategy_parse`] not yet freed.
 */
void psg_strategy_free(struct PsgStrategy *strategy);

/*
 Closed-form P-function on `boxes` boxes with `keys` players.

 # Safety
 `strategy` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_exact(const struct PsgStrategy *strategy,
                                   size_t boxes,
                                   size_t keys,
                                   size_t a_max,
                                   struct PsgPFunction **out);

/*
 Monte Carlo estimate from `samples` placements drawn with `seed`.

 # Safety
 `strategy` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_estimate(const struct PsgStrategy *strategy,
                                      size_t boxes,
                                      size_t keys,
                                      size_t a_max,
                                      uint64_t samples,
                                      uint64_t seed,
                                      struct PsgPFunction **out);

/*
 Exact P-function by enumerating every placement (small `boxes` only).

 # Safety
 `strategy` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_oracle(const struct PsgStrategy *strategy,
                                    size_t boxes,
                                    size_t keys,
                                    size_t a_max,
                                    struct PsgPFunction **out);

/*
 Grid shape: boxes `N`, players `n` and largest budget.

 # Safety
 `p` must be a live handle; each out-pointer must be NULL or writable.
 */
enum PsgStatus psg_pfunction_shape(const struct PsgPFunction *p,
                                   size_t *boxes,
                                   size_t *keys,
                                   size_t *a_max);

/*
 `P(a, w)` as a double.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_get(const struct PsgPFunction *p, size_t a, size_t w, double *out);

/*
 `P(a, w)` as an exact `num/den` string, for closed-form and oracle grids.
 Free the string with [`psg_string_free`].

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_get_exact(const struct PsgPFunction *p,
                                       size_t a,
                                       size_t w,
                                       char **out);

/*
 Margin of error of cell `(a, w)`, for Monte Carlo grids.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_margin(const struct PsgPFunction *p, size_t a, size_t w, double *out);

/*
 Minimum-winner view `P^min(a, w) = sum_{w' >= w} P(a, w')` as a new handle.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_pfunction_min_view(const struct PsgPFunction *p, struct PsgPFunction **out);

/*
 Efficiency with weight exponent `beta`, normalized to the random strategy.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum PsgStatus psg_efficiency(const struct PsgPFunction *p, double beta, double *out);

/*
 Error distance between two grids of the same shape and kind.

 # Safety
 `p` and `q` must be live handles; `out` must be writable.
 */
enum PsgStatus psg_error_distance(const struct PsgPFunction *p,
                                  const struct PsgPFunction *q,
                                  double *out);

/*
 Grid as JSON (with `num/den` strings when exact), or NULL. Free with
 [`psg_string_free`].

 # Safety
 `p` must be NULL or a live handle.
 */
char *psg_pfunction_to_json(const struct PsgPFunction *p);

/*
 # Safety
 `p` must be NULL or a handle from this library not yet freed.
 */
void psg_pfunction_free(struct PsgPFunction *p);

/*
 # Safety
 `s` must be NULL or a string returned by this library, not yet freed.
 */
void psg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSG_H */
