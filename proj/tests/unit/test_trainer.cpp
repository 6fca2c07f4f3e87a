#include <doctest.h>

#include <sstream>

#include "tokenweight/corpus.hpp"
#include "tokenweight/error.hpp"
#include "tokenweight/random.hpp"
#include "tokenweight/scoring.hpp"
#include "tokenweight/trainer.hpp"

using namespace tokenweight;

namespace {

struct Fixture {
  std::vector<SynthSample> corpus = generate_corpus(600, 21);
  Vocabulary vocab = train_corpus_vocab(corpus, 300);
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("sequence layout and context windows") {
  std::vector<TokenId> prompt{10, 11}, report{20, 21, 22};
  auto l = layout_sequence(prompt, report);
  CHECK(l.tokens == std::vector<TokenId>{special::bos, 10, 11, special::sep, 20, 21, 22, special::eos});
  CHECK(l.first_target == 4);
  std::vector<TokenId> w(4);
  context_window(l.tokens, 2, w);
  CHECK(w == std::vector<TokenId>{special::pad, special::pad, special::bos, 10});
}

TEST_CASE("encoded samples weight report tokens only; eos keeps weight 1") {
  auto& f = fixture();
  auto s = encode_sample(f.corpus[0], f.vocab, &builtin_set("combined"), 3.5);
  CHECK(s.targets.size() == s.lambdas.size());
  CHECK(s.targets.back() == special::eos);
  CHECK(s.lambdas.back() == 1.0);
  CHECK_FALSE(s.keyword_targets.empty());
  for (auto i : s.keyword_targets) CHECK(s.lambdas[i] == 3.5);
  auto plain = encode_sample(f.corpus[0], f.vocab, nullptr, 3.5);
  for (double l : plain.lambdas) CHECK(l == 1.0);
}

TEST_CASE("prompt positions do not enter the loss") {
  auto& f = fixture();
  TinyLM model(ModelShape{}, f.vocab.size(), 1);
  auto s = encode_sample(f.corpus[3], f.vocab, nullptr, 1.0);
  auto logits = sequence_logits(model, s.layout);
  auto base = report_loss(logits, s).value;
  // Scrambling every row that predicts a prompt token changes nothing.
  for (std::size_t r = 0; r + 1 < s.layout.first_target; ++r) {
    for (auto& x : logits.row(r)) x = 50.0 * std::sin(static_cast<double>(r) + x);
  }
  CHECK(report_loss(logits, s).value == base);
}

TEST_CASE("gamma=1 with a lexicon reproduces lexicon=none bit for bit") {
  auto& f = fixture();
  std::vector<SynthSample> train_set(f.corpus.begin(), f.corpus.begin() + 64);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.learning_rate = 1.0;
    cfg.seed = seed;
    cfg.gamma = 1.0;
    auto plain = train(train_set, f.vocab, nullptr, cfg);
    auto weighted = train(train_set, f.vocab, &builtin_set("combined"), cfg);
    CHECK(plain.model == weighted.model);
    CHECK(plain.epoch_losses == weighted.epoch_losses);
  }
}

TEST_CASE("training is deterministic and reduces loss") {
  auto corpus = generate_corpus(500, 3);
  auto vocab = train_corpus_vocab(corpus, 300);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 1;
  cfg.seed = 3;
  std::vector<EncodedSample> enc;
  for (const auto& s : corpus) enc.push_back(encode_sample(s, vocab, nullptr, 1.0));
  TinyLM initial(cfg.shape, vocab.size(), mix_seed(cfg.seed, 0));
  auto a = train(corpus, vocab, nullptr, cfg);
  auto b = train(corpus, vocab, nullptr, cfg);
  CHECK(a.model == b.model);
  CHECK(corpus_loss(a.model, enc) < corpus_loss(initial, enc));
}

TEST_CASE("divergence is reported with epoch and step") {
  auto& f = fixture();
  std::vector<SynthSample> train_set(f.corpus.begin(), f.corpus.begin() + 32);
  TrainConfig cfg;
  cfg.learning_rate = 1e308;
  cfg.epochs = 3;
  try {
    train(train_set, f.vocab, nullptr, cfg);
    FAIL("expected divergence");
  } catch (const RuntimeFailure& e) {
    std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("step") != std::string::npos);
  }
  CHECK_THROWS_AS(train({}, f.vocab, nullptr, TrainConfig{}), ValidationError);
}

TEST_CASE("keyword weighting lowers keyword NLL (diagnostic set, gamma 6)") {
  auto corpus = generate_corpus(1200, 31);
  std::vector<SynthSample> held(corpus.begin() + 1000, corpus.end());
  auto vocab = train_corpus_vocab(std::span(corpus).first(1000), 300);
  const auto& diag = builtin_set("diagnostic");
  int wins = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::vector<SynthSample> train_set(corpus.begin() + seed * 240, corpus.begin() + seed * 240 + 240);
    TrainConfig cfg;
    cfg.learning_rate = 2.15;
    cfg.seed = seed;
    auto plain = train(train_set, vocab, nullptr, cfg);
    cfg.gamma = 6.0;
    auto weighted = train(train_set, vocab, &diag, cfg);
    const double a = keyword_nll(plain.model, held, vocab, diag);
    const double b = keyword_nll(weighted.model, held, vocab, diag);
    MESSAGE("seed " << seed << ": keyword NLL standard " << a << ", weighted " << b);
    wins += b <= a;
  }
  CHECK(wins == 3);
}

TEST_CASE("generation") {
  auto& f = fixture();
  TinyLM model(ModelShape{}, f.vocab.size(), 4);
  auto prompt = f.corpus[0].prompt;
  CHECK(generate_report(model, f.vocab, prompt, 20) == generate_report(model, f.vocab, prompt, 20));
  CHECK(generate_report(model, f.vocab, prompt, 0).empty());
}

TEST_CASE("a trained model writes staged reports and beats the untrained one") {
  auto corpus = generate_corpus(1200, 3);
  std::vector<SynthSample> train_set(corpus.begin(), corpus.begin() + 1000);
  std::vector<SynthSample> held(corpus.begin() + 1000, corpus.end());
  auto vocab = train_corpus_vocab(train_set, 300);
  TrainConfig cfg;
  cfg.learning_rate = 2.15;
  cfg.epochs = 4;
  cfg.seed = 3;
  auto trained = train(train_set, vocab, nullptr, cfg);
  TinyLM untrained(cfg.shape, vocab.size(), mix_seed(cfg.seed, 0));

  std::size_t staged = 0;
  for (const auto& s : held) {
    staged += extract_labels(generate_report(trained.model, vocab, s.prompt)).stage != AmdStage::unknown;
  }
  CHECK(static_cast<double>(staged) / static_cast<double>(held.size()) >= 0.6);
  CHECK(score_model(trained.model, vocab, held).amd_f1 > score_model(untrained, vocab, held).amd_f1);
}

TEST_CASE("checkpoint round-trip") {
  auto& f = fixture();
  TinyLM model(ModelShape{6, 3, 10}, f.vocab.size(), 9);
  std::stringstream buf;
  write_checkpoint(buf, model, f.vocab);
  auto ck = read_checkpoint(buf);
  CHECK(ck.model == model);
  CHECK(ck.vocab == f.vocab);

  std::istringstream wrong("tokenweight-tinylm 2\n");
  CHECK_THROWS_AS(read_checkpoint(wrong), ValidationError);
  auto text = [&] {
    std::ostringstream o;
    write_checkpoint(o, model, f.vocab);
    return o.str();
  }();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(truncated), ValidationError);
}
