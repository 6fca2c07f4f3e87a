#include "tokenweight/bridge.h"

#include <algorithm>
#include <cstring>
#include <string>

#include "tokenweight/error.hpp"
#include "tokenweight/lexicon.hpp"
#include "tokenweight/loss.hpp"
#include "tokenweight/spanmap.hpp"
#include "tokenweight/text.hpp"

namespace {

using namespace tokenweight;

void set_error(char* err, size_t err_len, const std::string& msg) {
  if (err == nullptr || err_len == 0) return;
  const auto n = std::min(msg.size(), err_len - 1);
  std::memcpy(err, msg.data(), n);
  err[n] = '\0';
}

template <typename F>
int guarded(char* err, size_t err_len, F&& body) {
  try {
    body();
    set_error(err, err_len, "");
    return TW_OK;
  } catch (const ValidationError& e) {
    set_error(err, err_len, e.what());
    return TW_EINVAL;
  } catch (const std::exception& e) {
    set_error(err, err_len, e.what());
    return TW_EFAIL;
  } catch (...) {
    set_error(err, err_len, "unknown error");
    return TW_EFAIL;
  }
}

}  // namespace

extern "C" {

const char* tw_version(void) { return "1.0.0"; }

int tw_weights_for(const char* text, const int64_t* span_starts, const int64_t* span_ends,
                   size_t n_tokens, const char* set_name, const char* const* words, size_t n_words,
                   double gamma, double* out_weights, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (text == nullptr || out_weights == nullptr) throw ValidationError("text and out_weights are required");
    if (n_tokens == 0) throw ValidationError("tokenization is empty");
    if (span_starts == nullptr || span_ends == nullptr) throw ValidationError("span buffers are required");

    TokenizedSequence seq;
    seq.text = text;
    const auto length = static_cast<int64_t>(text::decode_utf8(seq.text).size());
    int64_t prev_end = 0;
    for (size_t i = 0; i < n_tokens; ++i) {
      const auto s = span_starts[i], e = span_ends[i];
      if (s < prev_end || s >= e || e > length) {
        throw ValidationError("invalid span at token " + std::to_string(i) + ": [" + std::to_string(s) + ", " +
                              std::to_string(e) + ") with text length " + std::to_string(length));
      }
      prev_end = e;
      seq.ids.push_back(special::unk);
      seq.spans.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
    }

    KeywordSet custom;
    const KeywordSet* set = nullptr;
    if (set_name != nullptr) {
      set = &builtin_set(set_name);
    } else {
      if (words == nullptr && n_words > 0) throw ValidationError("word list is NULL");
      std::vector<Keyword> entries;
      for (size_t i = 0; i < n_words; ++i) {
        if (words[i] == nullptr) throw ValidationError("word " + std::to_string(i) + " is NULL");
        entries.push_back({text::to_lower(words[i]), KeywordCategory::diagnostic});
      }
      custom = KeywordSet("custom", std::move(entries));
      set = &custom;
    }

    auto w = keyword_weights(seq, *set, gamma);
    std::copy(w.lambdas.begin(), w.lambdas.end(), out_weights);
  });
}

int tw_loss_and_grad(const double* logits, size_t t, size_t v, const int32_t* targets,
                     const double* weights, double* out_value, double* out_grad, char* err,
                     size_t err_len) {
  return guarded(err, err_len, [&] {
    if (logits == nullptr || targets == nullptr || weights == nullptr || out_value == nullptr) {
      throw ValidationError("logits, targets, weights and out_value are required");
    }
    if (t == 0 || v == 0) throw ValidationError("T and V must be positive");
    Matrix m(t, v);
    std::copy(logits, logits + t * v, m.data.begin());
    auto r = weighted_cross_entropy(m, std::span<const TokenId>(targets, t),
                                    std::span<const double>(weights, t), out_grad != nullptr);
    *out_value = r.value;
    if (out_grad != nullptr) std::copy(r.gradient->data.begin(), r.gradient->data.end(), out_grad);
  });
}

}  // extern "C"
