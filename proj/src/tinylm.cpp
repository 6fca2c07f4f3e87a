#include "tokenweight/tinylm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tokenweight/error.hpp"
#include "tokenweight/random.hpp"

namespace tokenweight {

namespace {

constexpr std::string_view kMagic = "tokenweight-tinylm";
constexpr int kCheckpointVersion = 1;

void write_block(std::ostream& out, std::string_view name, const std::vector<double>& values) {
  out << name << ' ' << values.size() << '\n';
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
}

void read_block(std::istream& in, std::string_view name, std::vector<double>& values) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != name) {
    throw ValidationError("checkpoint: expected block '" + std::string(name) + "'");
  }
  if (count != values.size()) {
    throw ValidationError("checkpoint: block '" + std::string(name) + "' has " +
                          std::to_string(count) + " values, expected " +
                          std::to_string(values.size()));
  }
  for (auto& v : values) {
    std::string token;
    if (!(in >> token)) throw ValidationError("checkpoint: truncated block '" + std::string(name) + "'");
    v = std::strtod(token.c_str(), nullptr);
  }
}

}  // namespace

TinyLM::TinyLM(ModelShape shape, std::size_t vocab_size, std::uint64_t seed)
    : shape_(shape), vocab_size_(vocab_size) {
  if (vocab_size < 2 || shape.embed_dim == 0 || shape.context == 0 || shape.hidden == 0) {
    throw ValidationError("model dimensions must be positive and V >= 2");
  }
  const auto d = shape.embed_dim;
  const auto h = shape.hidden;
  const auto in = input_dim();
  Rng rng(seed);
  std::normal_distribution<double> emb_init(0.0, 0.3);
  std::uniform_real_distribution<double> w1_init(-1.0 / std::sqrt(double(in)), 1.0 / std::sqrt(double(in)));
  std::uniform_real_distribution<double> w2_init(-1.0 / std::sqrt(double(h)), 1.0 / std::sqrt(double(h)));

  embedding.resize(vocab_size * d);
  for (auto& v : embedding) v = emb_init(rng);
  projection.resize(vocab_size * d);
  for (auto& v : projection) v = emb_init(rng);
  w1.resize(in * h);
  for (auto& v : w1) v = w1_init(rng);
  b1.assign(h, 0.0);
  w2.resize(h * vocab_size);
  for (auto& v : w2) v = w2_init(rng);
  b2.assign(vocab_size, 0.0);
}

std::vector<double> TinyLM::prompt_summary(std::span<const TokenId> prompt) const {
  const auto d = shape_.embed_dim;
  std::vector<double> summary(d, 0.0);
  if (prompt.empty()) return summary;
  for (auto id : prompt) {
    const double* e = &projection[static_cast<std::size_t>(id) * d];
    for (std::size_t k = 0; k < d; ++k) summary[k] += e[k];
  }
  return summary;
}

void TinyLM::forward(std::span<const TokenId> window, std::span<const double> summary,
                     Activations& act) const {
  const auto d = shape_.embed_dim;
  const auto h = shape_.hidden;
  const auto in = input_dim();
  act.input.resize(in);
  act.hidden.resize(h);
  act.logits.resize(vocab_size_);

  for (std::size_t c = 0; c < shape_.context; ++c) {
    const double* e = &embedding[static_cast<std::size_t>(window[c]) * d];
    std::copy(e, e + d, act.input.begin() + static_cast<std::ptrdiff_t>(c * d));
  }
  std::copy(summary.begin(), summary.end(),
            act.input.begin() + static_cast<std::ptrdiff_t>(shape_.context * d));

  auto& hid = act.hidden;
  std::copy(b1.begin(), b1.end(), hid.begin());
  for (std::size_t k = 0; k < in; ++k) {
    const double x = act.input[k];
    const double* __restrict w = &w1[k * h];
    double* __restrict out = hid.data();
#pragma omp simd
    for (std::size_t j = 0; j < h; ++j) out[j] += x * w[j];
  }
  for (auto& v : hid) v = std::tanh(v);

  std::copy(b2.begin(), b2.end(), act.logits.begin());
  for (std::size_t j = 0; j < h; ++j) {
    const double a = hid[j];
    const double* __restrict w = &w2[j * vocab_size_];
    double* __restrict out = act.logits.data();
#pragma omp simd
    for (std::size_t v = 0; v < vocab_size_; ++v) out[v] += a * w[v];
  }
}

bool TinyLM::all_finite() const {
  auto finite = [](const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(embedding) && finite(projection) && finite(w1) && finite(b1) && finite(w2) && finite(b2);
}

SequenceLayout layout_sequence(std::span<const TokenId> prompt, std::span<const TokenId> report) {
  SequenceLayout out;
  out.prompt.assign(prompt.begin(), prompt.end());
  out.tokens.reserve(prompt.size() + report.size() + 3);
  out.tokens.push_back(special::bos);
  out.tokens.insert(out.tokens.end(), prompt.begin(), prompt.end());
  out.tokens.push_back(special::sep);
  out.first_target = out.tokens.size();
  out.tokens.insert(out.tokens.end(), report.begin(), report.end());
  out.tokens.push_back(special::eos);
  return out;
}

void context_window(std::span<const TokenId> tokens, std::size_t pos, std::span<TokenId> window) {
  const auto n = window.size();
  for (std::size_t c = 0; c < n; ++c) {
    // window[n-1] is the token right before pos
    const auto back = n - c;
    window[c] = pos >= back ? tokens[pos - back] : special::pad;
  }
}

void write_checkpoint(std::ostream& out, const TinyLM& model, const Vocabulary& vocab) {
  if (vocab.size() != model.vocab_size()) {
    throw ValidationError("checkpoint: vocabulary size does not match the model");
  }
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "vocab " << vocab.size() << '\n';
  write_vocab(out, vocab);
  const auto& s = model.shape();
  out << "shape " << s.embed_dim << ' ' << s.context << ' ' << s.hidden << '\n';
  write_block(out, "embedding", model.embedding);
  write_block(out, "projection", model.projection);
  write_block(out, "w1", model.w1);
  write_block(out, "b1", model.b1);
  write_block(out, "w2", model.w2);
  write_block(out, "b2", model.b2);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != std::string(kMagic) + " " + std::to_string(kCheckpointVersion)) {
    throw ValidationError("not a tokenweight-tinylm version 1 checkpoint");
  }
  std::size_t vocab_size = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "vocab %zu", &vocab_size) != 1) {
    throw ValidationError("checkpoint: missing vocab header");
  }
  std::string vocab_text;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (!std::getline(in, line)) throw ValidationError("checkpoint: truncated vocabulary");
    vocab_text += line;
    vocab_text += '\n';
  }
  std::istringstream vocab_stream(vocab_text);
  Checkpoint ck{TinyLM{}, read_vocab(vocab_stream)};

  ModelShape shape;
  std::string tag;
  if (!(in >> tag >> shape.embed_dim >> shape.context >> shape.hidden) || tag != "shape") {
    throw ValidationError("checkpoint: missing shape line");
  }
  ck.model = TinyLM(shape, vocab_size, 0);
  read_block(in, "embedding", ck.model.embedding);
  read_block(in, "projection", ck.model.projection);
  read_block(in, "w1", ck.model.w1);
  read_block(in, "b1", ck.model.b1);
  read_block(in, "w2", ck.model.w2);
  read_block(in, "b2", ck.model.b2);
  return ck;
}

}  // namespace tokenweight
