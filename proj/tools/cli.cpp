#include "cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "tokenweight/corpus.hpp"
#include "tokenweight/error.hpp"
#include "tokenweight/lexicon.hpp"
#include "tokenweight/loss.hpp"
#include "tokenweight/scoring.hpp"
#include "tokenweight/spanmap.hpp"
#include "tokenweight/sweep.hpp"
#include "tokenweight/text.hpp"
#include "tokenweight/tokenizer.hpp"
#include "tokenweight/trainer.hpp"

namespace tokenweight::cli {

namespace {

const std::vector<std::string> kSetChoices{"diagnostic", "quantitative", "combined", "none"};

std::string num(double v, const char* format = "%.6f") {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to --out when given, else to the command's output stream. File
// output goes through a temporary buffer so failed commands leave no file.
class Sink {
 public:
  Sink(std::ostream& fallback, std::string path) : fallback_(fallback), path_(std::move(path)) {}
  std::ostream& stream() { return path_.empty() ? fallback_ : buffer_; }
  void commit() {
    if (path_.empty()) return;
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path_ + "'");
    f << buffer_.str();
    if (!f) throw RuntimeFailure("write to '" + path_ + "' failed");
  }

 private:
  std::ostream& fallback_;
  std::string path_;
  std::ostringstream buffer_;
};

std::vector<SynthSample> load_corpus(const std::string& path) {
  auto in = open_input(path);
  auto corpus = read_corpus(in);
  if (corpus.empty()) throw ValidationError("'" + path + "' holds no records");
  return corpus;
}

Vocabulary load_vocab(const std::string& path) {
  auto in = open_input(path);
  return read_vocab(in);
}

// A keyword set from --set or a lexicon --file; nullptr for "none".
std::unique_ptr<KeywordSet> resolve_set(const std::string& name, const std::string& file, std::ostream& err) {
  if (!file.empty()) {
    auto in = open_input(file);
    auto loaded = load_lexicon(in, file);
    for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
    return std::make_unique<KeywordSet>(std::move(loaded.set));
  }
  if (name == "none") return nullptr;
  return std::make_unique<KeywordSet>(builtin_set(name));
}

// Word-level tokenization for `match` when no vocabulary is given: each
// pretokenizer chunk is one token.
TokenizedSequence chunk_tokens(std::string_view text) {
  TokenizedSequence seq;
  seq.text = std::string(text);
  auto chars = text::decode_utf8(text);
  std::size_t pos = 0;
  for (const auto& chunk : pretokenize(chars)) {
    seq.ids.push_back(special::unk);
    seq.spans.push_back({pos, pos + chunk.size()});
    pos += chunk.size();
  }
  return seq;
}

std::string text_arg(const std::string& text, const std::string& input) {
  if (!input.empty()) {
    auto in = open_input(input);
    return read_all(in);
  }
  return text;
}

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Random seed (all randomness derives from it)")->capture_default_str();
}

void add_out(CLI::App* cmd, std::string& out) {
  cmd->add_option("--out", out, "Write results to this file instead of stdout");
}

void add_set(CLI::App* cmd, std::string& set) {
  cmd->add_option("--set", set, "Keyword set")->check(CLI::IsMember(kSetChoices))->capture_default_str();
}

void print_usage_error(std::ostream& err, const std::string& message, const std::string& usage) {
  err << "error: " << message << "\n\n" << usage;
}

bool use_color(std::ostream& err) {
  return &err == &std::cerr && std::getenv("NO_COLOR") == nullptr && isatty(STDERR_FILENO);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keyword-weighted cross-entropy toolkit: lexicons, tokenizer, loss, training and sweeps",
               "tokenweight"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // Every handler runs after parsing; it may throw ValidationError or
  // RuntimeFailure.
  std::function<void()> action;

  std::uint64_t seed = 0;
  std::string out_path;
  std::string set = "combined";
  std::string lexicon_file;
  std::string text;
  std::string input;
  std::string vocab_path;
  std::string data_path;
  double gamma = 1.0;

  // lexicon show|check
  auto* lexicon = app.add_subcommand("lexicon", "Inspect keyword sets");
  lexicon->require_subcommand(1);
  auto* lex_show = lexicon->add_subcommand("show", "Print a keyword set, one keyword per line");
  lex_show->add_option("--set", set, "Built-in set")
      ->check(CLI::IsMember({"diagnostic", "quantitative", "combined"}))
      ->capture_default_str();
  lex_show->add_option("--file", lexicon_file, "Lexicon file instead of a built-in set");
  bool show_category = false;
  lex_show->add_flag("--category", show_category, "Append the category after a tab");
  add_out(lex_show, out_path);
  lex_show->callback([&] {
    action = [&] {
      auto ks = resolve_set(set, lexicon_file, err);
      Sink sink(out, out_path);
      for (const auto& k : ks->entries()) {
        sink.stream() << k.surface;
        if (show_category) sink.stream() << '\t' << to_string(k.category);
        sink.stream() << '\n';
      }
      sink.commit();
    };
  });
  auto* lex_check = lexicon->add_subcommand("check", "Validate a lexicon file");
  lex_check->add_option("file", lexicon_file, "Lexicon file")->required();
  lex_check->callback([&] {
    action = [&] {
      auto ks = resolve_set("none", lexicon_file, err);
      std::size_t diag = 0;
      for (const auto& k : ks->entries()) diag += k.category == KeywordCategory::diagnostic;
      out << "ok\tkeywords=" << ks->size() << "\tdiagnostic=" << diag
          << "\tquantitative=" << ks->size() - diag << '\n';
    };
  });

  // vocab train
  auto* vocab = app.add_subcommand("vocab", "Tokenizer vocabularies");
  vocab->require_subcommand(1);
  auto* vocab_train = vocab->add_subcommand("train", "Train a BPE vocabulary");
  std::size_t vocab_size = 300;
  std::string lines_path;
  vocab_train->add_option("--data", data_path, "Corpus file (prompts and reports are used)");
  vocab_train->add_option("--lines", lines_path, "Plain text file, one training line per line");
  vocab_train->add_option("--size", vocab_size, "Target vocabulary size")->capture_default_str();
  add_out(vocab_train, out_path);
  vocab_train->callback([&] {
    action = [&] {
      if (data_path.empty() == lines_path.empty()) throw ValidationError("give exactly one of --data, --lines");
      Vocabulary v;
      if (!data_path.empty()) {
        v = train_corpus_vocab(load_corpus(data_path), vocab_size);
      } else {
        auto in = open_input(lines_path);
        std::vector<std::string> lines;
        for (std::string line; std::getline(in, line);) lines.push_back(line);
        v = train_vocab(lines, vocab_size);
      }
      Sink sink(out, out_path);
      write_vocab(sink.stream(), v);
      sink.commit();
    };
  });

  // tokenize
  auto* tok = app.add_subcommand("tokenize", "Tokenize text; prints id, start, end, piece per token");
  tok->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  tok->add_option("--text", text, "Text to tokenize");
  tok->add_option("--input", input, "Read the text from a file");
  add_out(tok, out_path);
  tok->callback([&] {
    action = [&] {
      auto v = load_vocab(vocab_path);
      auto seq = tokenize(text_arg(text, input), v);
      Sink sink(out, out_path);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        sink.stream() << seq.ids[i] << '\t' << seq.spans[i].start << '\t' << seq.spans[i].end << '\t'
                      << escape_piece(v.piece(seq.ids[i])) << '\n';
      }
      sink.commit();
    };
  });

  // match
  auto* match = app.add_subcommand("match", "Find keyword matches; prints start, end, keyword, token indices");
  add_set(match, set);
  match->add_option("--lexicon", lexicon_file, "Lexicon file instead of --set");
  match->add_option("--text", text, "Text to search");
  match->add_option("--input", input, "Read the text from a file");
  match->add_option("--vocab", vocab_path, "Vocabulary for token indices (default: word chunks)");
  add_out(match, out_path);
  match->callback([&] {
    action = [&] {
      auto body = text_arg(text, input);
      auto ks = resolve_set(set, lexicon_file, err);
      Sink sink(out, out_path);
      if (ks) {
        auto seq = vocab_path.empty() ? chunk_tokens(body) : tokenize(body, load_vocab(vocab_path));
        for (const auto& m : match_keywords(seq, *ks)) {
          sink.stream() << m.span.start << '\t' << m.span.end << '\t' << m.keyword.surface << '\t';
          for (std::size_t i = 0; i < m.token_indices.size(); ++i) {
            sink.stream() << (i ? "," : "") << m.token_indices[i];
          }
          sink.stream() << '\n';
        }
      }
      sink.commit();
    };
  });

  // loss
  auto* loss = app.add_subcommand("loss", "Weighted cross-entropy of a text-matrix file");
  std::string loss_file;
  bool with_grad = false;
  loss->add_option("file", loss_file, "Matrix file: 'T V', T logit rows, targets row, weights row")->required();
  loss->add_flag("--grad", with_grad, "Also print the gradient matrix");
  add_out(loss, out_path);
  loss->callback([&] {
    action = [&] {
      auto in = open_input(loss_file);
      auto p = read_loss_problem(in);
      auto r = weighted_cross_entropy(p.logits, p.targets, p.weights, with_grad);
      Sink sink(out, out_path);
      sink.stream() << "value=" << num(r.value, "%.17g") << '\n';
      if (with_grad) {
        sink.stream() << "gradient " << r.gradient->rows << ' ' << r.gradient->cols << '\n';
        for (std::size_t i = 0; i < r.gradient->rows; ++i) {
          auto row = r.gradient->row(i);
          for (std::size_t j = 0; j < row.size(); ++j) sink.stream() << (j ? " " : "") << num(row[j], "%.17g");
          sink.stream() << '\n';
        }
      }
      sink.commit();
    };
  });

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic report corpus");
  std::size_t samples = 4000;
  double fraction = 1.0;
  gen->add_option("--samples", samples, "Number of samples")->capture_default_str();
  gen->add_option("--fraction", fraction, "Keep a stratified fraction (0.01, 0.03, 0.1, 0.3, 1)")
      ->capture_default_str();
  add_seed(gen, seed);
  add_out(gen, out_path);
  gen->callback([&] {
    action = [&] {
      if (!is_grid_fraction(fraction)) throw ValidationError("--fraction must be one of 0.01, 0.03, 0.1, 0.3, 1");
      auto corpus = generate_corpus(samples, seed);
      if (fraction < 1.0) corpus = subset_fraction(corpus, fraction, seed);
      Sink sink(out, out_path);
      write_corpus(sink.stream(), corpus);
      sink.commit();
    };
  });

  // train
  auto* trn = app.add_subcommand("train", "Train the report model; writes a checkpoint");
  TrainConfig tc;
  SweepGrid defaults;
  double lr = 2.15e-4;
  double lr_scale = defaults.lr_scale;
  trn->add_option("--data", data_path, "Training corpus file")->required();
  trn->add_option("--vocab", vocab_path, "Vocabulary file (default: train one on --data)");
  trn->add_option("--vocab-size", vocab_size, "Size of the vocabulary trained when --vocab is absent")
      ->capture_default_str();
  add_set(trn, set);
  trn->add_option("--lexicon", lexicon_file, "Lexicon file instead of --set");
  trn->add_option("--gamma", gamma, "Keyword weight factor")->capture_default_str();
  trn->add_option("--lr", lr, "Learning rate on the grid scale")->capture_default_str();
  trn->add_option("--lr-scale", lr_scale, "SGD step = lr * lr-scale")->capture_default_str();
  trn->add_option("--fraction", fraction, "Train on a stratified fraction of --data")->capture_default_str();
  trn->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
  trn->add_option("--batch-size", tc.batch_size, "Mini-batch size")->capture_default_str();
  add_seed(trn, seed);
  trn->add_option("--out", out_path, "Checkpoint path")->required();
  trn->callback([&] {
    action = [&] {
      if (!is_grid_fraction(fraction)) throw ValidationError("--fraction must be one of 0.01, 0.03, 0.1, 0.3, 1");
      auto corpus = load_corpus(data_path);
      if (fraction < 1.0) corpus = subset_fraction(corpus, fraction, seed);
      auto v = vocab_path.empty() ? train_corpus_vocab(corpus, vocab_size) : load_vocab(vocab_path);
      auto ks = resolve_set(set, lexicon_file, err);
      tc.learning_rate = lr * lr_scale;
      tc.gamma = gamma;
      tc.keyword_set = ks ? ks->name() : "none";
      tc.data_fraction = fraction;
      tc.seed = seed;
      auto result = train(corpus, v, ks.get(), tc);
      Sink sink(out, out_path);
      write_checkpoint(sink.stream(), result.model, v);
      sink.commit();
      for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        out << "epoch=" << e + 1 << "\tloss=" << num(result.epoch_losses[e], "%.6g") << '\n';
      }
    };
  });

  // generate
  auto* generate = app.add_subcommand("generate", "Generate reports with a trained model");
  std::string model_path, prompt;
  std::size_t max_len = kDefaultMaxReportTokens;
  generate->add_option("--model", model_path, "Checkpoint")->required();
  generate->add_option("--prompt", prompt, "Single prompt; prints the report");
  generate->add_option("--data", data_path, "Corpus file; writes it back with generated reports");
  generate->add_option("--max-len", max_len, "Maximum report tokens")->capture_default_str();
  add_out(generate, out_path);
  generate->callback([&] {
    action = [&] {
      if (prompt.empty() == data_path.empty()) throw ValidationError("give exactly one of --prompt, --data");
      auto in = open_input(model_path);
      auto ck = read_checkpoint(in);
      Sink sink(out, out_path);
      if (!prompt.empty()) {
        sink.stream() << generate_report(ck.model, ck.vocab, prompt, max_len) << '\n';
      } else {
        auto corpus = load_corpus(data_path);
        for (auto& s : corpus) s.report = generate_report(ck.model, ck.vocab, s.prompt, max_len);
        write_corpus(sink.stream(), corpus);
      }
      sink.commit();
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Score predicted reports against gold labels");
  std::string pred_path, gold_path;
  eval->add_option("--pred", pred_path, "Corpus file whose report column holds predictions")->required();
  eval->add_option("--gold", gold_path, "Gold corpus file (default: the labels of --pred)");
  add_out(eval, out_path);
  eval->callback([&] {
    action = [&] {
      auto preds = load_corpus(pred_path);
      auto golds = gold_path.empty() ? preds : load_corpus(gold_path);
      Sink sink(out, out_path);
      write_metrics(sink.stream(), score_predictions(preds, golds));
      sink.commit();
    };
  });

  // sweep / table share a config file
  std::string config_path, log_path;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;
  auto load_sweep = [&](SweepConfig& cfg, std::vector<SynthSample>& corpus) {
    if (!config_path.empty()) {
      auto in = open_input(config_path);
      cfg = parse_sweep_config(in);
    }
    if (seed_override) cfg.seed = *seed_override;
    corpus = data_path.empty() ? generate_corpus(cfg.samples, cfg.seed) : load_corpus(data_path);
  };
  auto add_sweep_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Sweep config file (key = value lines)");
    cmd->add_option("--data", data_path, "Corpus file (default: generate `samples` records)");
    cmd->add_option("--jobs", jobs, "Parallel training jobs")->capture_default_str();
    cmd->add_option("--seed", seed_override, "Override the config seed");
    cmd->add_option("--log", log_path, "Write the per-trial log here");
    add_out(cmd, out_path);
  };

  auto* sweep = app.add_subcommand("sweep", "Cross-validated hyperparameter sweep");
  add_sweep_options(sweep);
  sweep->callback([&] {
    action = [&] {
      SweepConfig cfg;
      std::vector<SynthSample> corpus;
      load_sweep(cfg, corpus);
      auto v = train_corpus_vocab(corpus, cfg.vocab_size);
      auto results = run_sweep(cfg.grid, corpus, v, cfg.seed, jobs);
      Sink sink(out, out_path);
      write_sweep_summary(sink.stream(), results);
      if (!log_path.empty()) {
        Sink log(out, log_path);
        write_trial_log(log.stream(), results);
        log.commit();
      }
      sink.commit();
    };
  });

  auto* table = app.add_subcommand("table", "Held-out standard vs weighted comparison per data fraction");
  add_sweep_options(table);
  table->add_option("--set", set, "Keyword set of the weighted method")
      ->check(CLI::IsMember({"diagnostic", "quantitative", "combined"}))
      ->capture_default_str();
  table->callback([&] {
    action = [&] {
      SweepConfig cfg;
      std::vector<SynthSample> corpus;
      load_sweep(cfg, corpus);
      TableOptions opts{cfg.grid, cfg.test_fraction, cfg.vocab_size, jobs};
      auto t = comparison_table(corpus, cfg.grid.fractions, set, cfg.seed, opts);
      Sink sink(out, out_path);
      write_table(sink.stream(), t);
      if (!log_path.empty()) {
        Sink log(out, log_path);
        write_trial_log(log.stream(), t.trials);
        log.commit();
      }
      sink.commit();
    };
  });

  // gain
  auto* gain = app.add_subcommand("gain", "Relative gain (weighted - baseline) / baseline");
  double weighted_score = 0.0, baseline_score = 0.0;
  gain->add_option("--weighted", weighted_score, "Weighted-model score")->required();
  gain->add_option("--baseline", baseline_score, "Baseline score")->required();
  gain->callback([&] {
    action = [&] {
      const double g = relative_gain(weighted_score, baseline_score);
      out << "gain=" << num(g) << '\n';
    };
  });

  const bool color = use_color(err);
  auto diag = [&](const std::string& msg) {
    if (color) {
      err << "\033[31merror:\033[0m " << msg << '\n';
    } else {
      err << "error: " << msg << '\n';
    }
  };

  // Innermost subcommand named on the command line, for help and usage.
  auto innermost = [&]() -> const CLI::App* {
    const CLI::App* where = &app;
    while (!where->get_subcommands().empty()) where = where->get_subcommands().front();
    return where;
  };

  if (!args.empty() && !args.front().empty() && args.front().front() != '-' &&
      app.get_subcommand_no_throw(args.front()) == nullptr) {
    print_usage_error(err, "unknown subcommand '" + args.front() + "'", app.help());
    return kUsage;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << innermost()->help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_usage_error(err, e.what(), innermost()->help());
    return kUsage;
  }

  if (!action) {
    err << app.help();
    return kUsage;
  }
  try {
    action();
  } catch (const ValidationError& e) {
    diag(e.what());
    return kDataError;
  } catch (const RuntimeFailure& e) {
    diag(e.what());
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    diag(e.what());
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace tokenweight::cli
