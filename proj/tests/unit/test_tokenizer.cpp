#include <doctest.h>

#include <random>
#include <sstream>

#include "tokenweight/corpus.hpp"
#include "tokenweight/error.hpp"
#include "tokenweight/text.hpp"
#include "tokenweight/tokenizer.hpp"
#include "tokenweight/trainer.hpp"

using namespace tokenweight;

namespace {

std::vector<std::string> piece_strings(const Vocabulary& v, const std::vector<TokenId>& ids) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(v.piece(id));
  return out;
}

// Spans must tile the text: contiguous, non-empty, covering every character.
void check_tiling(const TokenizedSequence& seq) {
  const auto length = text::decode_utf8(seq.text).size();
  std::size_t pos = 0;
  REQUIRE(seq.ids.size() == seq.spans.size());
  for (const auto& s : seq.spans) {
    CHECK(s.start == pos);
    CHECK(s.end > s.start);
    pos = s.end;
  }
  CHECK(pos == length);
}

}  // namespace

TEST_CASE("specials occupy the first ids") {
  Vocabulary v;
  CHECK(v.size() == static_cast<std::size_t>(special::count));
  CHECK(v.piece(special::pad) == "<pad>");
  CHECK(v.piece(special::unk) == "<unk>");
  CHECK(v.piece(special::sep) == "<sep>");
  CHECK(v.is_special(special::eos));
  CHECK_THROWS_AS(v.piece(99), ValidationError);
  // A literal "<unk>" in text is ordinary characters, never the special.
  CHECK(v.id_of("<unk>") == special::unk);
}

TEST_CASE("BPE on 'aaab' merges the most frequent pair first") {
  std::vector<std::string> corpus{"aaab"};
  const std::size_t chars = 2;  // a, b
  auto v = train_vocab(corpus, special::count + chars + 1);
  CHECK(v.size() == special::count + chars + 1);
  CHECK(v.id_of("aa") != special::unk);

  auto plain = train_vocab(corpus, special::count + chars);
  CHECK(plain.size() == special::count + chars);
  CHECK(plain.id_of("aa") == special::unk);
  CHECK(plain.id_of("a") != special::unk);
}

TEST_CASE("BPE tie-break picks the lexicographically smallest pair") {
  // "ab" and "cd" both occur twice.
  std::vector<std::string> corpus{"abcd", "abcd"};
  auto v = train_vocab(corpus, special::count + 4 + 1);
  CHECK(v.id_of("ab") != special::unk);
  CHECK(v.id_of("cd") == special::unk);
}

TEST_CASE("vocabulary training is deterministic and validated") {
  auto corpus = generate_corpus(200, 5);
  auto a = train_corpus_vocab(corpus, 150);
  auto b = train_corpus_vocab(corpus, 150);
  CHECK(a == b);
  CHECK(a.size() == 150);
  CHECK_THROWS_AS(train_vocab(std::vector<std::string>{}, 50), ValidationError);
  CHECK_THROWS_AS(train_vocab(std::vector<std::string>{"abc"}, 6), ValidationError);
}

TEST_CASE("greedy longest match") {
  std::vector<std::string> pieces{"d", "r", "u", "s", "e", "n", "dru", "sen"};
  auto v = Vocabulary::from_pieces(pieces);

  auto seq = tokenize("drusen", v);
  CHECK(piece_strings(v, seq.ids) == std::vector<std::string>{"dru", "sen"});
  REQUIRE(seq.spans.size() == 2);
  CHECK(seq.spans[0] == CharSpan{0, 3});
  CHECK(seq.spans[1] == CharSpan{3, 6});

  auto empty = tokenize("", v);
  CHECK(empty.size() == 0);
  CHECK(empty.spans.empty());
}

TEST_CASE("unknown characters become one unk each, recoverable via spans") {
  std::vector<std::string> pieces{"a", "b"};
  auto v = Vocabulary::from_pieces(pieces);
  auto seq = tokenize("a\xC3\xA9z", v);  // a, e-acute, z
  REQUIRE(seq.size() == 3);
  CHECK(seq.ids[1] == special::unk);
  CHECK(seq.ids[2] == special::unk);
  CHECK(seq.spans[1] == CharSpan{1, 2});
  CHECK(detokenize(seq, v) == "a\xC3\xA9z");
  CHECK(decode_ids(seq.ids, v) == "a");
  check_tiling(seq);
}

TEST_CASE("offsets count code points, not bytes") {
  std::vector<std::string> pieces{"\xC3\xA9", "t", "\xC3\xA9t"};
  auto v = Vocabulary::from_pieces(pieces);
  auto seq = tokenize("\xC3\xA9t\xC3\xA9", v);
  REQUIRE(seq.size() == 2);
  CHECK(seq.spans[0] == CharSpan{0, 2});
  CHECK(seq.spans[1] == CharSpan{2, 3});
}

TEST_CASE("tokenize/detokenize round-trip on generated reports") {
  auto corpus = generate_corpus(1000, 11);
  auto v = train_corpus_vocab(std::span(corpus).first(200), 250);
  for (const auto& s : corpus) {
    auto seq = tokenize(s.report, v);
    check_tiling(seq);
    CHECK(detokenize(seq, v) == s.report);
  }
}

TEST_CASE("round-trip on random byte strings including malformed UTF-8") {
  std::mt19937_64 rng(3);
  std::vector<std::string> pieces{"ab", "a", "b", " "};
  auto v = Vocabulary::from_pieces(pieces);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    auto len = std::uniform_int_distribution<int>(0, 20)(rng);
    for (int k = 0; k < len; ++k) s.push_back(static_cast<char>(std::uniform_int_distribution<int>(32, 126)(rng)));
    auto seq = tokenize(s, v);
    check_tiling(seq);
    CHECK(detokenize(seq, v) == s);
  }
  // Invalid bytes are replaced on decode, so the text stays consistent.
  auto seq = tokenize(std::string("a\xFF" "b"), v);
  check_tiling(seq);
}

TEST_CASE("pretokenizer chunks") {
  auto chunks = pretokenize(U"Late wet AMD, 2 foci.");
  std::vector<std::u32string> expect{U"Late", U" wet", U" AMD", U",", U" 2", U" foci", U"."};
  CHECK(chunks == expect);
}

TEST_CASE("vocabulary file round-trips pieces with escapes") {
  std::vector<std::string> pieces{" a", "b\\c", "x\ty", "line\nbreak", "\r"};
  auto v = Vocabulary::from_pieces(pieces);
  std::ostringstream out;
  write_vocab(out, v);
  std::istringstream in(out.str());
  auto back = read_vocab(in);
  CHECK(back == v);
  CHECK(out.str().rfind("<pad>\n<bos>\n<eos>\n<unk>\n<sep>\n\\sa\n", 0) == 0);

  std::istringstream bad("<pad>\n<bos>\n<eos>\n<unk>\n<sep>\na\\q\n");
  CHECK_THROWS_AS(read_vocab(bad), ValidationError);
}
