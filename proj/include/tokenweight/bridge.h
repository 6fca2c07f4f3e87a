/* C-compatible entry points for external training loops.
 *
 * All buffers are caller-owned, flat and contiguous. Functions keep no state
 * and are safe to call from several threads as long as each call owns its
 * buffers. Every function returns TW_OK or an error code and, when `err` is
 * non-NULL, writes a NUL-terminated message of at most err_len bytes.
 */
#ifndef TOKENWEIGHT_BRIDGE_H
#define TOKENWEIGHT_BRIDGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define TW_OK 0
#define TW_EINVAL 1   /* rejected input */
#define TW_EFAIL 2    /* internal failure */

#define TW_VERSION_MAJOR 1
#define TW_VERSION_MINOR 0

/* "major.minor.patch" of the library. */
const char* tw_version(void);

/* Per-token weights for a caller tokenization of `text` (UTF-8).
 *
 * span_starts/span_ends hold n_tokens half-open code-point ranges. Spans must
 * be non-empty, inside the text and in increasing order without overlap; the
 * message of a rejected call names the first offending token index.
 *
 * Keywords come from the built-in set `set_name` ("diagnostic",
 * "quantitative", "combined") or, when set_name is NULL, from the n_words
 * strings in `words`. out_weights receives n_tokens values: gamma on tokens
 * overlapping a keyword match, 1 elsewhere. */
int tw_weights_for(const char* text, const int64_t* span_starts, const int64_t* span_ends,
                   size_t n_tokens, const char* set_name, const char* const* words, size_t n_words,
                   double gamma, double* out_weights, char* err, size_t err_len);

/* Normalized weighted cross-entropy of row-major T x V logits.
 * out_grad (T x V) may be NULL to skip the gradient. */
int tw_loss_and_grad(const double* logits, size_t t, size_t v, const int32_t* targets,
                     const double* weights, double* out_value, double* out_grad, char* err,
                     size_t err_len);

#ifdef __cplusplus
}
#endif

#endif
