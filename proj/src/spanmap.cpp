#include "tokenweight/spanmap.hpp"

#include <algorithm>
#include <cmath>

#include "tokenweight/error.hpp"
#include "tokenweight/text.hpp"

namespace tokenweight {

std::vector<KeywordSpan> find_keyword_spans(std::string_view text, const KeywordSet& set) {
  auto haystack = text::to_lower(text::decode_utf8(text));
  const std::u32string_view view = haystack;

  auto boundary_before = [&](std::size_t pos) { return pos == 0 || !text::is_word_char(view[pos - 1]); };
  auto boundary_after = [&](std::size_t pos) {
    return pos == view.size() || !text::is_word_char(view[pos]);
  };

  std::vector<KeywordSpan> found;
  for (const auto& kw : set.entries()) {
    auto needle = text::decode_utf8(kw.surface);
    std::size_t pos = view.find(needle);
    while (pos != std::u32string_view::npos) {
      auto end = pos + needle.size();
      if (boundary_before(pos) && boundary_after(end)) found.push_back({kw, {pos, end}});
      pos = view.find(needle, pos + 1);
    }
  }

  // Longest first within a start offset, then keep the first of each offset.
  std::sort(found.begin(), found.end(), [](const KeywordSpan& a, const KeywordSpan& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    if (a.span.end != b.span.end) return a.span.end > b.span.end;
    return a.keyword.surface < b.keyword.surface;
  });
  auto last = std::unique(found.begin(), found.end(), [](const KeywordSpan& a, const KeywordSpan& b) {
    return a.span.start == b.span.start;
  });
  found.erase(last, found.end());
  return found;
}

namespace {

std::vector<std::size_t> overlapping_tokens(const CharSpan& span, const TokenizedSequence& seq) {
  // Spans are sorted and tile the text, so binary search for the first token
  // ending after span.start.
  auto first = std::partition_point(seq.spans.begin(), seq.spans.end(),
                                    [&](const CharSpan& t) { return t.end <= span.start; });
  std::vector<std::size_t> out;
  for (auto it = first; it != seq.spans.end() && it->start < span.end; ++it) {
    if (it->overlaps(span)) out.push_back(static_cast<std::size_t>(it - seq.spans.begin()));
  }
  return out;
}

void check_in_range(const CharSpan& span, std::size_t text_len) {
  if (span.start >= span.end || span.end > text_len) {
    throw ValidationError("keyword span [" + std::to_string(span.start) + ", " +
                          std::to_string(span.end) + ") lies outside the text of length " +
                          std::to_string(text_len));
  }
}

}  // namespace

TokenSpanIndex spans_to_token_indices(std::span<const KeywordSpan> matches,
                                      const TokenizedSequence& seq) {
  const auto text_len = seq.spans.empty() ? text::decode_utf8(seq.text).size() : seq.spans.back().end;
  TokenSpanIndex idx;
  idx.length = seq.size();
  for (const auto& m : matches) {
    check_in_range(m.span, text_len);
    auto tokens = overlapping_tokens(m.span, seq);
    idx.positions.insert(idx.positions.end(), tokens.begin(), tokens.end());
  }
  std::sort(idx.positions.begin(), idx.positions.end());
  idx.positions.erase(std::unique(idx.positions.begin(), idx.positions.end()), idx.positions.end());
  return idx;
}

std::vector<KeywordMatch> match_keywords(const TokenizedSequence& seq, const KeywordSet& set) {
  std::vector<KeywordMatch> out;
  for (auto& m : find_keyword_spans(seq.text, set)) {
    auto tokens = overlapping_tokens(m.span, seq);
    out.push_back({std::move(m.keyword), m.span, std::move(tokens)});
  }
  return out;
}

WeightVector build_weight_vector(std::size_t length, const TokenSpanIndex& idx, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("gamma must be a finite positive number, got " + std::to_string(gamma));
  }
  if (length == 0) throw ValidationError("cannot weight an empty sequence (T = 0)");
  if (idx.length != length) {
    throw ValidationError("token index describes T=" + std::to_string(idx.length) +
                          " but the sequence has T=" + std::to_string(length));
  }
  WeightVector w;
  w.gamma = gamma;
  w.lambdas.assign(length, 1.0);
  for (auto p : idx.positions) {
    if (p >= length) throw ValidationError("token position " + std::to_string(p) + " out of range");
    w.lambdas[p] = gamma;
  }
  for (double l : w.lambdas) w.total += l;
  return w;
}

WeightVector keyword_weights(const TokenizedSequence& seq, const KeywordSet& set, double gamma) {
  auto matches = find_keyword_spans(seq.text, set);
  return build_weight_vector(seq.size(), spans_to_token_indices(matches, seq), gamma);
}

}  // namespace tokenweight
