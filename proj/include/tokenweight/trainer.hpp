#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenweight/corpus.hpp"
#include "tokenweight/lexicon.hpp"
#include "tokenweight/loss.hpp"
#include "tokenweight/tinylm.hpp"

namespace tokenweight {

struct TrainConfig {
  double learning_rate = 0.2;
  double gamma = 1.0;               // forced to 1 when no lexicon is given
  std::string keyword_set = "none"; // label only; the lexicon is passed to train()
  double data_fraction = 1.0;
  std::size_t epochs = 8;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  ModelShape shape;
};

/// A sample laid out for training, with per-target weights. Targets are the
/// report tokens followed by eos; eos always has weight 1.
struct EncodedSample {
  SequenceLayout layout;
  std::vector<TokenId> targets;
  std::vector<double> lambdas;
  std::vector<std::size_t> keyword_targets;  // indices into targets
};

/// Tokenizes prompt and report and weights report tokens via keyword
/// matching on the reference report (all ones without a lexicon).
EncodedSample encode_sample(const SynthSample& sample, const Vocabulary& vocab,
                            const KeywordSet* lexicon, double gamma);

/// Logits for every next-token prediction of the sequence; row p scores
/// tokens[p + 1].
Matrix sequence_logits(const TinyLM& model, const SequenceLayout& layout);

/// L_tw of the report region of `all_logits` (as returned by
/// sequence_logits). Rows that predict prompt tokens are ignored.
LossResult report_loss(const Matrix& all_logits, const EncodedSample& sample,
                       bool with_gradient = false);

struct TrainResult {
  TinyLM model;
  std::vector<double> epoch_losses;  // mean per-report L_tw seen during each epoch
};

/// Mini-batch SGD on the mean per-report weighted loss. Deterministic given
/// (corpus, vocab, lexicon, config). Throws RuntimeFailure naming the epoch
/// and step if the loss or parameters become non-finite, ValidationError on
/// an empty corpus.
TrainResult train(std::span<const SynthSample> corpus, const Vocabulary& vocab,
                  const KeywordSet* lexicon, const TrainConfig& config);

/// Mean per-report L_tw over `samples` (no parameter updates).
double corpus_loss(const TinyLM& model, std::span<const EncodedSample> samples);

/// Mean teacher-forced NLL over report tokens covered by `lexicon`.
double keyword_nll(const TinyLM& model, std::span<const SynthSample> samples,
                   const Vocabulary& vocab, const KeywordSet& lexicon);

inline constexpr std::size_t kDefaultMaxReportTokens = 128;

/// Greedy decoding after [bos] prompt [sep] until eos or max_len tokens.
std::string generate_report(const TinyLM& model, const Vocabulary& vocab, std::string_view prompt,
                            std::size_t max_len = kDefaultMaxReportTokens);

/// Vocabulary trained on prompts and reports together.
Vocabulary train_corpus_vocab(std::span<const SynthSample> corpus, std::size_t target_size);

}  // namespace tokenweight
