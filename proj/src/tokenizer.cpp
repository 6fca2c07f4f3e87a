#include "tokenweight/tokenizer.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "tokenweight/error.hpp"
#include "tokenweight/text.hpp"

namespace tokenweight {

namespace {

constexpr std::string_view kSpecialNames[special::count] = {"<pad>", "<bos>", "<eos>", "<unk>",
                                                             "<sep>"};

using Symbols = std::vector<std::u32string>;

std::string unescape_piece(std::string_view line, std::size_t line_no) {
  std::string out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '\\') {
      out.push_back(line[i]);
      continue;
    }
    if (++i == line.size()) {
      throw ValidationError("vocab line " + std::to_string(line_no) + ": dangling escape");
    }
    switch (line[i]) {
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 's': out.push_back(' '); break;
      default:
        throw ValidationError("vocab line " + std::to_string(line_no) + ": unknown escape '\\" +
                              std::string(1, line[i]) + "'");
    }
  }
  return out;
}

}  // namespace

std::string escape_piece(std::string_view piece) {
  std::string out;
  for (char c : piece) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case ' ': out += "\\s"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto name : kSpecialNames) {
    pieces_.emplace_back(name);
    chars_.push_back(text::decode_utf8(name));
  }
}

Vocabulary Vocabulary::from_pieces(std::span<const std::string> pieces) {
  Vocabulary v;
  for (const auto& p : pieces) {
    if (p.empty()) throw ValidationError("empty vocabulary piece");
    if (!v.add_piece(p)) throw ValidationError("duplicate vocabulary piece '" + p + "'");
  }
  return v;
}

bool Vocabulary::add_piece(std::string piece) {
  auto chars = text::decode_utf8(piece);
  if (chars.empty() || id_of_.contains(chars)) return false;
  auto id = static_cast<TokenId>(pieces_.size());
  id_of_.emplace(chars, id);
  max_piece_chars_ = std::max(max_piece_chars_, chars.size());
  pieces_.push_back(std::move(piece));
  chars_.push_back(std::move(chars));
  return true;
}

const std::string& Vocabulary::piece(TokenId id) const {
  if (!valid(id)) throw ValidationError("token id " + std::to_string(id) + " outside vocabulary");
  return pieces_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::id_of(std::string_view piece) const {
  auto it = id_of_.find(text::decode_utf8(piece));
  return it == id_of_.end() ? special::unk : it->second;
}

std::pair<TokenId, std::size_t> Vocabulary::longest_match(std::u32string_view text,
                                                          std::size_t pos) const {
  auto max_len = std::min(max_piece_chars_, text.size() - pos);
  std::u32string key;
  for (auto len = max_len; len > 0; --len) {
    key.assign(text.substr(pos, len));
    if (auto it = id_of_.find(key); it != id_of_.end()) return {it->second, len};
  }
  return {special::unk, 1};
}

std::vector<std::u32string> pretokenize(std::u32string_view text) {
  std::vector<std::u32string> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    if (text[j] == U' ' && j + 1 < text.size() && text::is_alnum(text[j + 1])) ++j;
    if (text::is_alnum(text[j])) {
      while (j < text.size() && text::is_alnum(text[j])) ++j;
    } else {
      j = i + 1;
    }
    chunks.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return chunks;
}

Vocabulary train_vocab(std::span<const std::string> corpus, std::size_t target_size) {
  if (corpus.empty()) throw ValidationError("cannot train a vocabulary on an empty corpus");

  std::map<std::u32string, std::size_t> chunk_counts;
  std::set<char32_t> alphabet;
  for (const auto& line : corpus) {
    auto chars = text::decode_utf8(line);
    alphabet.insert(chars.begin(), chars.end());
    for (auto& chunk : pretokenize(chars)) ++chunk_counts[chunk];
  }

  const auto minimum = special::count + alphabet.size();
  if (target_size < minimum) {
    throw ValidationError("target vocabulary size " + std::to_string(target_size) +
                          " is below the minimum " + std::to_string(minimum) + " (" +
                          std::to_string(special::count) + " specials + " +
                          std::to_string(alphabet.size()) + " distinct characters)");
  }

  Vocabulary vocab;
  for (char32_t ch : alphabet) vocab.add_piece(text::encode_utf8(ch));

  std::vector<std::pair<Symbols, std::size_t>> words;
  words.reserve(chunk_counts.size());
  for (const auto& [chunk, count] : chunk_counts) {
    Symbols symbols;
    for (char32_t ch : chunk) symbols.emplace_back(1, ch);
    words.emplace_back(std::move(symbols), count);
  }

  while (vocab.size() < target_size) {
    std::map<std::pair<std::u32string, std::u32string>, std::size_t> pair_counts;
    for (const auto& [symbols, count] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_counts[{symbols[i], symbols[i + 1]}] += count;
      }
    }
    if (pair_counts.empty()) break;

    // std::map iterates pairs in lexicographic order, so the first maximum
    // found is the tie-break winner.
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto& [left, right] = best->first;
    auto merged = left + right;

    for (auto& [symbols, count] : words) {
      Symbols next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(symbols[i]));
        }
      }
      symbols = std::move(next);
    }
    vocab.add_piece(text::encode_utf8(merged));
  }
  return vocab;
}

TokenizedSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenizedSequence seq;
  seq.text = std::string(text);
  auto chars = text::decode_utf8(text);
  std::size_t pos = 0;
  while (pos < chars.size()) {
    auto [id, len] = vocab.longest_match(chars, pos);
    seq.ids.push_back(id);
    seq.spans.push_back({pos, pos + len});
    pos += len;
  }
  return seq;
}

std::string detokenize(const TokenizedSequence& seq, const Vocabulary& vocab) {
  if (seq.ids.size() != seq.spans.size()) {
    throw ValidationError("token sequence has " + std::to_string(seq.ids.size()) + " ids but " +
                          std::to_string(seq.spans.size()) + " spans");
  }
  std::u32string source;
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    auto id = seq.ids[i];
    const auto& piece = vocab.piece(id);  // validates
    if (id == special::unk) {
      if (source.empty()) source = text::decode_utf8(seq.text);
      const auto& span = seq.spans[i];
      if (span.end > source.size() || span.start > span.end) {
        throw ValidationError("unk token " + std::to_string(i) + " has a span outside the text");
      }
      out += text::encode_utf8(std::u32string_view(source).substr(span.start, span.length()));
    } else if (!vocab.is_special(id)) {
      out += piece;
    }
  }
  return out;
}

std::string decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (auto id : ids) {
    const auto& piece = vocab.piece(id);
    if (!vocab.is_special(id)) out += piece;
  }
  return out;
}

void write_vocab(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& piece : vocab.pieces()) out << escape_piece(piece) << '\n';
}

Vocabulary read_vocab(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no <= static_cast<std::size_t>(special::count)) {
      if (line != kSpecialNames[line_no - 1]) {
        throw ValidationError("vocab line " + std::to_string(line_no) + ": expected special '" +
                              std::string(kSpecialNames[line_no - 1]) + "'");
      }
      continue;
    }
    auto piece = unescape_piece(line, line_no);
    if (piece.empty() || !vocab.add_piece(std::move(piece))) {
      throw ValidationError("vocab line " + std::to_string(line_no) + ": empty or duplicate piece");
    }
  }
  if (line_no < static_cast<std::size_t>(special::count)) {
    throw ValidationError("vocab file is missing the special tokens");
  }
  return vocab;
}

}  // namespace tokenweight
