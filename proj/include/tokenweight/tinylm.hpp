#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tokenweight/tokenizer.hpp"

namespace tokenweight {

struct ModelShape {
  std::size_t embed_dim = 12;  // d
  std::size_t context = 4;     // n previous tokens
  std::size_t hidden = 32;     // h

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Fixed-window neural language model. The input to the hidden layer is the
/// concatenation of the embeddings of the previous `context` tokens and one
/// extra slot holding the summed prompt-token projections, so every
/// prediction can see the whole prompt:
///
///     x      = [E[c_1], ..., E[c_n], sum_p P[p]]       (d * (n + 1))
///     hidden = tanh(x W1 + b1)                         (h)
///     logits = hidden W2 + b2                          (V)
class TinyLM {
 public:
  TinyLM() = default;
  TinyLM(ModelShape shape, std::size_t vocab_size, std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t input_dim() const { return shape_.embed_dim * (shape_.context + 1); }

  /// Scratch buffers for one position; reuse across calls.
  struct Activations {
    std::vector<double> input;
    std::vector<double> hidden;
    std::vector<double> logits;
  };

  /// Sum of the prompt projections of `prompt` (zeros for an empty prompt).
  std::vector<double> prompt_summary(std::span<const TokenId> prompt) const;

  /// `window` holds exactly `context` ids, oldest first.
  void forward(std::span<const TokenId> window, std::span<const double> summary,
               Activations& act) const;

  bool all_finite() const;

  // Parameters, row-major.
  std::vector<double> embedding;   // V x d
  std::vector<double> projection;  // V x d, prompt tokens
  std::vector<double> w1;          // input_dim x h
  std::vector<double> b1;          // h
  std::vector<double> w2;          // h x V
  std::vector<double> b2;          // V

  friend bool operator==(const TinyLM&, const TinyLM&) = default;

 private:
  ModelShape shape_;
  std::size_t vocab_size_ = 0;
};

/// Training/decoding view of one sample: [bos] prompt [sep] report [eos].
/// Positions before the first report token are never scored.
struct SequenceLayout {
  std::vector<TokenId> prompt;  // without bos/sep
  std::vector<TokenId> tokens;  // full sequence
  std::size_t first_target = 0; // index into tokens of the first scored token
};

SequenceLayout layout_sequence(std::span<const TokenId> prompt, std::span<const TokenId> report);

/// Copies the `context` ids preceding position `pos` of `tokens` (pad-filled).
void context_window(std::span<const TokenId> tokens, std::size_t pos, std::span<TokenId> window);

/// Checkpoint: versioned text format holding the vocabulary and parameters.
///
///     tokenweight-tinylm 1
///     vocab <V>
///     <V escaped pieces, one per line>
///     shape <d> <n> <h>
///     embedding <count>
///     <values, one per line, %.17g>
///     ... likewise projection, w1, b1, w2, b2
void write_checkpoint(std::ostream& out, const TinyLM& model, const Vocabulary& vocab);

struct Checkpoint {
  TinyLM model;
  Vocabulary vocab;
};
Checkpoint read_checkpoint(std::istream& in);

}  // namespace tokenweight
