#ifndef POLAR_GSCL_H
#define POLAR_GSCL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_POINTER = 1,
  PG_STATUS_INVALID_ARGUMENT = 2,
  PG_STATUS_CAPACITY = 3,
  PG_STATUS_CONTRACT = 4,
  PG_STATUS_IO = 5,
  PG_STATUS_PARSE = 6,
  PG_STATUS_PANIC = 7,
} PgStatus;

typedef enum PgChannel {
  // Design parameter is E_b/N_0 in dB.
  PG_CHANNEL_BIAWGN = 0,
  // Design parameter is the erasure probability.
  PG_CHANNEL_BEC = 1,
} PgChannel;

// Opaque code handle.
typedef struct PgCode PgCode;

// Opaque decoder handle.
typedef struct PgDecoder PgDecoder;

// Outcome of one decode.
typedef struct PgDecodeResult {
  // 1 when the threshold test accepted the candidate, 0 for an erasure.
  int32_t accepted;
  double log_w_best;
  double log_p_y;
  double threshold_log;
} PgDecodeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *pg_last_error_message(void);

// Creates a code of length `n` from 1-based frozen indices, frozen to 0.
//
// # Safety
// `frozen` must point to `frozen_len` readable values; `out` must be
// writable.
enum PgStatus pg_code_new(size_t n, const size_t *frozen, size_t frozen_len, struct PgCode **out);

// Parses a code from its JSON file format.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum PgStatus pg_code_from_json(const char *json, struct PgCode **out);

// Constructs a code, capping the mixing factor at `gamma_star` unless it
// is negative.
//
// # Safety
// `out` must be writable.
enum PgStatus pg_code_construct(size_t n,
                                size_t k,
                                int64_t gamma_star,
                                enum PgChannel channel,
                                double design_param,
                                struct PgCode **out);

// Writes the JSON form of `code` into a new string, to be released with
// [`pg_string_free`].
//
// # Safety
// `code` must be a live handle; `out` must be writable.
enum PgStatus pg_code_to_json(const struct PgCode *code, char **out);

// # Safety
// `s` must come from this library or be null.
void pg_string_free(char *s);

// # Safety
// `code` must come from this library or be null.
void pg_code_free(struct PgCode *code);

// Block length, or 0 for a null handle.
//
// # Safety
// `code` must be a live handle or null.
size_t pg_code_n(const struct PgCode *code);

// # Safety
// `code` must be a live handle or null.
size_t pg_code_k(const struct PgCode *code);

// Mixing factor.
//
// # Safety
// `code` must be a live handle or null.
size_t pg_code_gamma(const struct PgCode *code);

// 1-based position of the last frozen bit, 0 when nothing is frozen.
//
// # Safety
// `code` must be a live handle or null.
size_t pg_code_last_frozen(const struct PgCode *code);

// `2^γ`, or 0 when it does not fit.
//
// # Safety
// `code` must be a live handle or null.
size_t pg_code_list_size(const struct PgCode *code);

// Encodes `k` information bits into `n` codeword bits.
//
// # Safety
// `info` must hold `info_len` bytes and `codeword` `codeword_len` bytes.
enum PgStatus pg_encode(const struct PgCode *code,
                        const uint8_t *info,
                        size_t info_len,
                        uint8_t *codeword,
                        size_t codeword_len);

// Creates a GSCL decoder; `list_size` 0 selects `2^γ`.
//
// # Safety
// `code` must be a live handle; `out` must be writable.
enum PgStatus pg_decoder_new(const struct PgCode *code, size_t list_size, struct PgDecoder **out);

// # Safety
// `decoder` must come from this library or be null.
void pg_decoder_free(struct PgDecoder *decoder);

// Decodes channel LLRs `ln W(y|0)/W(y|1)` with threshold `t` (`-INFINITY`
// for the complete decoder). The candidate codeword is written to
// `codeword` when it is not null, whether or not it was accepted.
//
// # Safety
// `llrs` must hold `len` values, `codeword` `codeword_len` bytes, and
// `result` must be writable.
enum PgStatus pg_decode_llrs(struct PgDecoder *decoder,
                             const double *llrs,
                             size_t len,
                             double t,
                             struct PgDecodeResult *result,
                             uint8_t *codeword,
                             size_t codeword_len);

// As [`pg_decode_llrs`], from per-symbol log-likelihoods laid out as
// `ln W(y_j|0), ln W(y_j|1)` pairs (`2·len` values).
//
// # Safety
// `loglik` must hold `2·len` values; see [`pg_decode_llrs`].
enum PgStatus pg_decode_loglik(struct PgDecoder *decoder,
                               const double *loglik,
                               size_t len,
                               double t,
                               struct PgDecodeResult *result,
                               uint8_t *codeword,
                               size_t codeword_len);

// Log of the acceptance bound `2^k·2^{nT}/(1+2^{nT})`.
double pg_threshold_log(size_t n, size_t k, double t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLAR_GSCL_H */
