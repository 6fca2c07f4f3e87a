#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tokenweight {

using TokenId = std::int32_t;

/// Half-open range [start, end) of code-point offsets into a source text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const CharSpan& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// Reserved ids, always the first entries of every vocabulary. `sep` marks
/// the prompt/report boundary in training sequences.
namespace special {
inline constexpr TokenId pad = 0;
inline constexpr TokenId bos = 1;
inline constexpr TokenId eos = 2;
inline constexpr TokenId unk = 3;
inline constexpr TokenId sep = 4;
inline constexpr TokenId count = 5;
}  // namespace special

class Vocabulary {
 public:
  Vocabulary();

  /// Builds a vocabulary from explicit non-special pieces (specials are
  /// prepended). Throws ValidationError on empty or duplicate pieces.
  static Vocabulary from_pieces(std::span<const std::string> pieces);

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(TokenId id) const;
  bool is_special(TokenId id) const { return id >= 0 && id < special::count; }
  bool valid(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  /// Id of a non-special piece, or special::unk.
  TokenId id_of(std::string_view piece) const;
  const std::vector<std::string>& pieces() const { return pieces_; }

  /// Longest non-special piece matching `text` at `pos`, as (id, length in
  /// characters); (unk, 1) when nothing matches.
  std::pair<TokenId, std::size_t> longest_match(std::u32string_view text, std::size_t pos) const;

  /// Appends a non-special piece; returns false if it already exists.
  bool add_piece(std::string piece);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.pieces_ == b.pieces_; }

 private:
  std::vector<std::string> pieces_;
  std::vector<std::u32string> chars_;  // pieces_ decoded, for matching
  std::unordered_map<std::u32string, TokenId> id_of_;
  std::size_t max_piece_chars_ = 1;
};

/// Token ids plus the source-text span each one covers. Spans tile the text.
struct TokenizedSequence {
  std::string text;
  std::vector<TokenId> ids;
  std::vector<CharSpan> spans;

  std::size_t size() const { return ids.size(); }
};

/// Splits text into BPE training chunks: an optional single leading space
/// followed by a run of letters/digits, or any other single character.
std::vector<std::u32string> pretokenize(std::u32string_view text);

/// Byte-pair merging over the corpus until the vocabulary holds
/// `target_size` pieces or no adjacent pair is left to merge.
/// Ties on pair count go to the lexicographically smallest pair.
/// Throws ValidationError if the corpus is empty or target_size is smaller
/// than the specials plus the distinct characters.
Vocabulary train_vocab(std::span<const std::string> corpus, std::size_t target_size);

/// Greedy longest-match segmentation. Characters with no piece become a
/// single unk token covering that character.
TokenizedSequence tokenize(std::string_view text, const Vocabulary& vocab);

/// Concatenates pieces; unk tokens are rendered from the source text via
/// their spans, other specials render as nothing. Throws ValidationError on
/// an id outside the vocabulary.
std::string detokenize(const TokenizedSequence& seq, const Vocabulary& vocab);

/// Renders bare ids (no spans); unk renders as nothing.
std::string decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab);

/// One piece per line in id order; `\\`, `\n`, `\t`, `\r` and `\s` (space)
/// escapes keep every piece on a single line.
void write_vocab(std::ostream& out, const Vocabulary& vocab);
std::string escape_piece(std::string_view piece);
Vocabulary read_vocab(std::istream& in);

}  // namespace tokenweight
