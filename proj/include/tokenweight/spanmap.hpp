#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "tokenweight/lexicon.hpp"
#include "tokenweight/tokenizer.hpp"

namespace tokenweight {

struct KeywordSpan {
  Keyword keyword;
  CharSpan span;
};

/// Token positions covered by keyword matches, stored 0-based and sorted.
struct TokenSpanIndex {
  std::vector<std::size_t> positions;
  std::size_t length = 0;  // T
};

struct KeywordMatch {
  Keyword keyword;
  CharSpan span;
  std::vector<std::size_t> token_indices;
};

/// Per-token weights: gamma on keyword positions, 1 elsewhere, and their sum.
struct WeightVector {
  std::vector<double> lambdas;
  double gamma = 1.0;
  double total = 0.0;

  std::size_t size() const { return lambdas.size(); }
};

/// Case-insensitive whole-word occurrences of the set's keywords. A match
/// must be delimited on both sides by the text edge or a character that is
/// not a letter, digit or hyphen. When several keywords start at the same
/// offset only the longest is kept. Sorted by start offset.
std::vector<KeywordSpan> find_keyword_spans(std::string_view text, const KeywordSet& set);

/// Token i is selected iff its span shares at least one character with a
/// match. Throws ValidationError if a match lies outside the text.
TokenSpanIndex spans_to_token_indices(std::span<const KeywordSpan> matches,
                                      const TokenizedSequence& seq);

/// find_keyword_spans + per-match token indices, for display.
std::vector<KeywordMatch> match_keywords(const TokenizedSequence& seq, const KeywordSet& set);

/// Throws ValidationError if gamma <= 0, T == 0, or idx does not describe a
/// sequence of length T.
WeightVector build_weight_vector(std::size_t length, const TokenSpanIndex& idx, double gamma);

/// The full pipeline: match on the reference text, map to tokens, weight.
WeightVector keyword_weights(const TokenizedSequence& seq, const KeywordSet& set, double gamma);

}  // namespace tokenweight
