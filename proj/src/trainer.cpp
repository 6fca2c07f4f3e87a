#include "tokenweight/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tokenweight/error.hpp"
#include "tokenweight/random.hpp"
#include "tokenweight/spanmap.hpp"

namespace tokenweight {

namespace {

struct Gradients {
  std::vector<double> embedding, projection, w1, b1, w2, b2;

  explicit Gradients(const TinyLM& m)
      : embedding(m.embedding.size()), projection(m.projection.size()), w1(m.w1.size()), b1(m.b1.size()), w2(m.w2.size()),
        b2(m.b2.size()) {}

  void zero() {
    for (auto* v : {&embedding, &projection, &w1, &b1, &w2, &b2}) std::fill(v->begin(), v->end(), 0.0);
  }
};

// Forward pass over the report targets, keeping activations for backprop.
struct ReportPass {
  std::vector<TinyLM::Activations> acts;
  std::vector<std::vector<TokenId>> windows;
  std::vector<double> summary;
  Matrix logits;
};

void forward_report(const TinyLM& model, const EncodedSample& s, ReportPass& pass) {
  const auto& layout = s.layout;
  const auto n = model.shape().context;
  const auto t_count = s.targets.size();
  pass.summary = model.prompt_summary(layout.prompt);
  pass.acts.resize(t_count);
  pass.windows.resize(t_count);
  pass.logits = Matrix(t_count, model.vocab_size());
  for (std::size_t i = 0; i < t_count; ++i) {
    auto& window = pass.windows[i];
    window.resize(n);
    context_window(layout.tokens, layout.first_target + i, window);
    model.forward(window, pass.summary, pass.acts[i]);
    std::copy(pass.acts[i].logits.begin(), pass.acts[i].logits.end(), pass.logits.row(i).begin());
  }
}

// Accumulates scale * dL/dtheta for one report into `grads`.
void backward_report(const TinyLM& model, const EncodedSample& s, const ReportPass& pass,
                     const Matrix& dlogits, double scale, Gradients& grads) {
  const auto d = model.shape().embed_dim;
  const auto n = model.shape().context;
  const auto h = model.shape().hidden;
  const auto in = model.input_dim();
  const auto vocab = model.vocab_size();
  std::vector<double> dh(h);
  std::vector<double> da(h);
  std::vector<double> dx(in);
  std::vector<double> dsummary(d, 0.0);

  for (std::size_t i = 0; i < s.targets.size(); ++i) {
    const auto& act = pass.acts[i];
    auto g = dlogits.row(i);

    // Output layer: gW2 += hidden^T g, dh = W2 g.
    for (std::size_t j = 0; j < h; ++j) {
      const double a = act.hidden[j];
      const double* __restrict w = &model.w2[j * vocab];
      double* __restrict gw = &grads.w2[j * vocab];
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t v = 0; v < vocab; ++v) {
        const double gv = scale * g[v];
        gw[v] += a * gv;
        acc += w[v] * gv;
      }
      dh[j] = acc;
    }
#pragma omp simd
    for (std::size_t v = 0; v < vocab; ++v) grads.b2[v] += scale * g[v];

    for (std::size_t j = 0; j < h; ++j) da[j] = dh[j] * (1.0 - act.hidden[j] * act.hidden[j]);
    for (std::size_t j = 0; j < h; ++j) grads.b1[j] += da[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double x = act.input[k];
      const double* __restrict w = &model.w1[k * h];
      double* __restrict gw = &grads.w1[k * h];
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = 0; j < h; ++j) {
        gw[j] += x * da[j];
        acc += w[j] * da[j];
      }
      dx[k] = acc;
    }

    for (std::size_t c = 0; c < n; ++c) {
      double* ge = &grads.embedding[static_cast<std::size_t>(pass.windows[i][c]) * d];
      for (std::size_t k = 0; k < d; ++k) ge[k] += dx[c * d + k];
    }
    for (std::size_t k = 0; k < d; ++k) dsummary[k] += dx[n * d + k];
  }

  for (auto id : s.layout.prompt) {
    double* gp = &grads.projection[static_cast<std::size_t>(id) * d];
    for (std::size_t k = 0; k < d; ++k) gp[k] += dsummary[k];
  }
}

void sgd_step(TinyLM& model, const Gradients& grads, double lr) {
  auto apply = [lr](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
  };
  apply(model.embedding, grads.embedding);
  apply(model.projection, grads.projection);
  apply(model.w1, grads.w1);
  apply(model.b1, grads.b1);
  apply(model.w2, grads.w2);
  apply(model.b2, grads.b2);
}

}  // namespace

EncodedSample encode_sample(const SynthSample& sample, const Vocabulary& vocab,
                            const KeywordSet* lexicon, double gamma) {
  auto prompt = tokenize(sample.prompt, vocab);
  auto report = tokenize(sample.report, vocab);

  EncodedSample out;
  out.layout = layout_sequence(prompt.ids, report.ids);
  out.targets = report.ids;
  out.targets.push_back(special::eos);

  if (report.size() == 0) {
    out.lambdas = {1.0};
    return out;
  }
  WeightVector weights;
  if (lexicon != nullptr) {
    auto idx = spans_to_token_indices(find_keyword_spans(report.text, *lexicon), report);
    weights = build_weight_vector(report.size(), idx, gamma);
    out.keyword_targets = idx.positions;
  } else {
    weights = build_weight_vector(report.size(), TokenSpanIndex{{}, report.size()}, 1.0);
  }
  out.lambdas = std::move(weights.lambdas);
  out.lambdas.push_back(1.0);
  return out;
}

Matrix sequence_logits(const TinyLM& model, const SequenceLayout& layout) {
  const auto rows = layout.tokens.size() - 1;
  Matrix logits(rows, model.vocab_size());
  auto summary = model.prompt_summary(layout.prompt);
  std::vector<TokenId> window(model.shape().context);
  TinyLM::Activations act;
  for (std::size_t p = 0; p < rows; ++p) {
    context_window(layout.tokens, p + 1, window);
    model.forward(window, summary, act);
    std::copy(act.logits.begin(), act.logits.end(), logits.row(p).begin());
  }
  return logits;
}

LossResult report_loss(const Matrix& all_logits, const EncodedSample& sample, bool with_gradient) {
  const auto first_row = sample.layout.first_target - 1;
  const auto t_count = sample.targets.size();
  if (all_logits.rows < first_row + t_count) {
    throw ValidationError("logit matrix is shorter than the sequence");
  }
  Matrix report(t_count, all_logits.cols);
  std::copy(all_logits.data.begin() + static_cast<std::ptrdiff_t>(first_row * all_logits.cols),
            all_logits.data.begin() + static_cast<std::ptrdiff_t>((first_row + t_count) * all_logits.cols),
            report.data.begin());
  return weighted_cross_entropy(report, sample.targets, sample.lambdas, with_gradient);
}

TrainResult train(std::span<const SynthSample> corpus, const Vocabulary& vocab,
                  const KeywordSet* lexicon, const TrainConfig& config) {
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (config.batch_size == 0 || config.epochs == 0) {
    throw ValidationError("epochs and batch size must be positive");
  }
  const double gamma = lexicon != nullptr ? config.gamma : 1.0;

  std::vector<EncodedSample> samples;
  samples.reserve(corpus.size());
  for (const auto& s : corpus) samples.push_back(encode_sample(s, vocab, lexicon, gamma));

  TrainResult result{TinyLM(config.shape, vocab.size(), mix_seed(config.seed, 0)), {}};
  auto& model = result.model;
  Rng order_rng(mix_seed(config.seed, 1));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  Gradients grads(model);
  ReportPass pass;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const auto end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      grads.zero();
      double batch_loss = 0.0;
      for (auto b = begin; b < end; ++b) {
        const auto& s = samples[order[b]];
        forward_report(model, s, pass);
        auto loss = [&] {
          try {
            return weighted_cross_entropy(pass.logits, s.targets, s.lambdas, true);
          } catch (const ValidationError& e) {
            throw RuntimeFailure("training diverged at epoch " + std::to_string(epoch + 1) +
                                 ", step " + std::to_string(step + 1) + ": " + e.what());
          }
        }();
        batch_loss += loss.value;
        backward_report(model, s, pass, *loss.gradient, scale, grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw RuntimeFailure("training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                             std::to_string(step + 1) + ": non-finite loss");
      }
      sgd_step(model, grads, config.learning_rate);
      epoch_loss += batch_loss;
      ++step;
    }
    if (!model.all_finite()) {
      throw RuntimeFailure("training diverged at epoch " + std::to_string(epoch + 1) +
                           ": non-finite parameters");
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return result;
}

double corpus_loss(const TinyLM& model, std::span<const EncodedSample> samples) {
  if (samples.empty()) throw ValidationError("corpus_loss needs at least one sample");
  ReportPass pass;
  double sum = 0.0;
  for (const auto& s : samples) {
    forward_report(model, s, pass);
    sum += weighted_cross_entropy(pass.logits, s.targets, s.lambdas).value;
  }
  return sum / static_cast<double>(samples.size());
}

double keyword_nll(const TinyLM& model, std::span<const SynthSample> samples,
                   const Vocabulary& vocab, const KeywordSet& lexicon) {
  ReportPass pass;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& sample : samples) {
    auto s = encode_sample(sample, vocab, &lexicon, 2.0);
    if (s.keyword_targets.empty()) continue;
    forward_report(model, s, pass);
    for (auto i : s.keyword_targets) {
      sum += token_nll(pass.logits.row(i), s.targets[i]);
      ++count;
    }
  }
  if (count == 0) throw ValidationError("no keyword positions in the given samples");
  return sum / static_cast<double>(count);
}

std::string generate_report(const TinyLM& model, const Vocabulary& vocab, std::string_view prompt,
                            std::size_t max_len) {
  auto prompt_ids = tokenize(prompt, vocab).ids;
  auto layout = layout_sequence(prompt_ids, {});
  layout.tokens.pop_back();  // drop the eos appended for training layouts
  auto summary = model.prompt_summary(layout.prompt);

  std::vector<TokenId> window(model.shape().context);
  std::vector<TokenId> generated;
  TinyLM::Activations act;
  const auto vocab_size = static_cast<TokenId>(model.vocab_size());
  while (generated.size() < max_len) {
    context_window(layout.tokens, layout.tokens.size(), window);
    model.forward(window, summary, act);
    TokenId best = special::eos;
    for (TokenId v = special::count; v < vocab_size; ++v) {
      if (act.logits[static_cast<std::size_t>(v)] > act.logits[static_cast<std::size_t>(best)]) best = v;
    }
    if (best == special::eos) break;
    generated.push_back(best);
    layout.tokens.push_back(best);
  }
  return decode_ids(generated, vocab);
}

Vocabulary train_corpus_vocab(std::span<const SynthSample> corpus, std::size_t target_size) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size() * 2);
  for (const auto& s : corpus) {
    lines.push_back(s.prompt);
    lines.push_back(s.report);
  }
  return train_vocab(lines, target_size);
}

}  // namespace tokenweight
