#include "tokenweight/sweep.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "tokenweight/error.hpp"
#include "tokenweight/lexicon.hpp"
#include "tokenweight/random.hpp"
#include "tokenweight/scoring.hpp"
#include "tokenweight/text.hpp"

namespace tokenweight {

namespace {

using text::trim;

// Seed streams derived from the sweep seed.
constexpr std::uint64_t kSubsetStream = 1;
constexpr std::uint64_t kFoldStream = 2;
constexpr std::uint64_t kTestStream = 3;
constexpr std::uint64_t kFinalStream = 4;
constexpr std::uint64_t kFoldModelStream = 100;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

const KeywordSet* lexicon_for(const std::string& name) {
  return name == "none" ? nullptr : &builtin_set(name);
}

// Runs task(i) for i in [0, count) on up to `jobs` threads. The first
// exception is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::size_t> fraction_subset(std::span<const SynthSample> corpus, double fraction,
                                         std::uint64_t seed) {
  auto stages = stages_of(corpus);
  return subset_indices(stages, fraction, mix_seed(seed, kSubsetStream));
}

std::vector<SynthSample> gather(std::span<const SynthSample> corpus, std::span<const std::size_t> indices) {
  std::vector<SynthSample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(corpus[i]);
  return out;
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    auto item = trim(value.substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view text, const std::string& key) {
  text = trim(text);
  bool percent = !text.empty() && text.back() == '%';
  if (percent) text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("'" + key + "': not a number: '" + std::string(text) + "'");
  }
  return percent ? v / 100.0 : v;
}

std::size_t parse_count(std::string_view text, const std::string& key) {
  text = trim(text);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("'" + key + "': not a non-negative integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::size_t SweepGrid::trial_count() const {
  std::size_t per_fraction = 0;
  for (const auto& set : keyword_sets) {
    per_fraction += learning_rates.size() * (set == "none" ? 1 : gammas.size());
  }
  return fractions.size() * per_fraction;
}

void SweepGrid::validate() const {
  if (learning_rates.empty() || keyword_sets.empty() || fractions.empty()) {
    throw ValidationError("sweep grid needs at least one learning rate, keyword set and fraction");
  }
  for (double lr : learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("learning rates must be positive");
  }
  if (!(lr_scale > 0.0) || !std::isfinite(lr_scale)) throw ValidationError("lr_scale must be positive");
  bool weighted = false;
  for (const auto& set : keyword_sets) {
    if (set == "none") continue;
    builtin_set(set);  // throws for unknown names
    weighted = true;
  }
  if (weighted && gammas.empty()) throw ValidationError("weighted keyword sets need at least one gamma");
  for (double g : gammas) {
    if (!(g >= 1.0) || !std::isfinite(g)) throw ValidationError("gammas must be finite and >= 1");
  }
  for (double f : fractions) {
    if (!is_grid_fraction(f)) {
      throw ValidationError("fraction " + fmt(f) + " is not one of 0.01, 0.03, 0.1, 0.3, 1");
    }
  }
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (epochs == 0 || batch_size == 0) throw ValidationError("epochs and batch_size must be positive");
}

CvSplit make_folds(std::size_t n, std::span<const AmdStage> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k must be at least 2");
  if (n < k) {
    throw ValidationError("cannot split " + std::to_string(n) + " items into " + std::to_string(k) + " folds");
  }
  if (labels.size() != n) throw ValidationError("label count does not match N");

  std::array<std::vector<std::size_t>, 5> by_stage;
  for (std::size_t i = 0; i < n; ++i) by_stage[static_cast<std::size_t>(labels[i])].push_back(i);

  // Deal each shuffled stage round-robin; the fold pointer carries over
  // between stages so sizes stay within one of each other.
  CvSplit split{k, std::vector<std::vector<std::size_t>>(k)};
  std::size_t fold = 0;
  for (std::size_t s = 0; s < by_stage.size(); ++s) {
    Rng rng(mix_seed(seed, s));
    std::shuffle(by_stage[s].begin(), by_stage[s].end(), rng);
    for (auto i : by_stage[s]) {
      split.folds[fold].push_back(i);
      fold = (fold + 1) % k;
    }
  }
  for (auto& f : split.folds) std::sort(f.begin(), f.end());
  return split;
}

bool ranks_before(const TrialResult& a, const TrialResult& b) {
  if (a.failed != b.failed) return !a.failed;
  if (a.combined != b.combined) return a.combined > b.combined;
  if (a.mean_amd != b.mean_amd) return a.mean_amd > b.mean_amd;
  return std::tie(a.config.keyword_set, a.config.data_fraction, a.grid_learning_rate, a.config.gamma) <
         std::tie(b.config.keyword_set, b.config.data_fraction, b.grid_learning_rate, b.config.gamma);
}

std::vector<TrialResult> run_sweep(const SweepGrid& grid, std::span<const SynthSample> corpus,
                                   const Vocabulary& vocab, std::uint64_t seed, std::size_t jobs) {
  grid.validate();
  if (corpus.empty()) throw ValidationError("cannot sweep over an empty corpus");

  // Per fraction: the subset and its folds, shared by all configs.
  struct FractionData {
    std::vector<SynthSample> samples;
    CvSplit split;
    std::vector<std::vector<SynthSample>> train, held_out;
  };
  std::vector<FractionData> data(grid.fractions.size());
  for (std::size_t f = 0; f < grid.fractions.size(); ++f) {
    auto& fd = data[f];
    fd.samples = gather(corpus, fraction_subset(corpus, grid.fractions[f], seed));
    auto stages = stages_of(fd.samples);
    fd.split = make_folds(fd.samples.size(), stages, grid.folds, mix_seed(seed, kFoldStream));
    for (std::size_t k = 0; k < grid.folds; ++k) {
      std::vector<SynthSample> train;
      for (std::size_t other = 0; other < grid.folds; ++other) {
        if (other == k) continue;
        for (auto i : fd.split.folds[other]) train.push_back(fd.samples[i]);
      }
      fd.train.push_back(std::move(train));
      fd.held_out.push_back(gather(fd.samples, fd.split.folds[k]));
    }
  }

  std::vector<TrialResult> trials;
  std::vector<std::size_t> trial_fraction;
  for (std::size_t f = 0; f < grid.fractions.size(); ++f) {
    for (const auto& set : grid.keyword_sets) {
      const std::vector<double> none_gamma{1.0};
      const auto& gammas = set == "none" ? none_gamma : grid.gammas;
      for (double lr : grid.learning_rates) {
        for (double gamma : gammas) {
          TrialResult t;
          t.config.learning_rate = lr * grid.lr_scale;
          t.config.gamma = gamma;
          t.config.keyword_set = set;
          t.config.data_fraction = grid.fractions[f];
          t.config.epochs = grid.epochs;
          t.config.batch_size = grid.batch_size;
          t.config.shape = grid.shape;
          t.grid_learning_rate = lr;
          t.fold_scores.resize(grid.folds);
          trials.push_back(std::move(t));
          trial_fraction.push_back(f);
        }
      }
    }
  }

  std::vector<std::string> fold_failures(trials.size() * grid.folds);
  parallel_for(trials.size() * grid.folds, jobs, [&](std::size_t job) {
    const auto t = job / grid.folds;
    const auto k = job % grid.folds;
    auto& trial = trials[t];
    const auto& fd = data[trial_fraction[t]];
    auto config = trial.config;
    config.seed = mix_seed(seed, kFoldModelStream + k);
    try {
      auto result = train(fd.train[k], vocab, lexicon_for(config.keyword_set), config);
      auto score = score_model(result.model, vocab, fd.held_out[k]);
      trial.fold_scores[k] = {score.amd_f1, score.biomarker_f1};
    } catch (const RuntimeFailure& e) {
      fold_failures[job] = "fold " + std::to_string(k + 1) + ": " + e.what();
    }
  });

  for (std::size_t t = 0; t < trials.size(); ++t) {
    auto& trial = trials[t];
    for (std::size_t k = 0; k < grid.folds; ++k) {
      const auto& reason = fold_failures[t * grid.folds + k];
      if (!reason.empty() && !trial.failed) {
        trial.failed = true;
        trial.failure = reason;
      }
    }
    if (trial.failed) continue;
    for (const auto& s : trial.fold_scores) {
      trial.mean_amd += s.amd_f1;
      trial.mean_bio += s.biomarker_f1;
    }
    trial.mean_amd /= static_cast<double>(grid.folds);
    trial.mean_bio /= static_cast<double>(grid.folds);
    trial.combined = (trial.mean_amd + trial.mean_bio) / 2.0;
  }
  std::stable_sort(trials.begin(), trials.end(), ranks_before);
  return trials;
}

const TrialResult& best_of(std::span<const TrialResult> results) {
  const TrialResult* best = nullptr;
  for (const auto& r : results) {
    if (r.failed) continue;
    if (best == nullptr || ranks_before(r, *best)) best = &r;
  }
  if (best == nullptr) throw ValidationError("no successful trial to select from");
  return *best;
}

ComparisonTable comparison_table(std::span<const SynthSample> corpus, std::span<const double> fractions,
                                 const std::string& keyword_set, std::uint64_t seed,
                                 const TableOptions& options) {
  if (keyword_set == "none") throw ValidationError("the weighted method needs a keyword set");
  const auto& lexicon = builtin_set(keyword_set);
  if (fractions.empty()) throw ValidationError("no fractions given");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in (0, 1)");
  }

  ComparisonTable table;
  auto stages = stages_of(corpus);
  table.test_indices = subset_indices(stages, options.test_fraction, mix_seed(seed, kTestStream));
  std::vector<std::size_t> train_indices;
  {
    std::vector<bool> is_test(corpus.size(), false);
    for (auto i : table.test_indices) is_test[i] = true;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!is_test[i]) train_indices.push_back(i);
    }
  }
  const auto train_portion = gather(corpus, train_indices);
  const auto test_set = gather(corpus, table.test_indices);
  const auto vocab = train_corpus_vocab(train_portion, options.vocab_size);

  for (double fraction : fractions) {
    SweepGrid grid = options.grid;
    grid.keyword_sets = {keyword_set, "none"};
    grid.fractions = {fraction};
    auto trials = run_sweep(grid, train_portion, vocab, seed, options.jobs);

    // Map the fraction subset back to corpus indices and check isolation.
    auto local = fraction_subset(train_portion, fraction, seed);
    std::vector<std::size_t> used;
    for (auto i : local) used.push_back(train_indices[i]);
    std::vector<std::size_t> overlap;
    std::set_intersection(used.begin(), used.end(), table.test_indices.begin(), table.test_indices.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) throw RuntimeFailure("test index " + std::to_string(overlap.front()) + " leaked into training");
    const auto fraction_train = gather(train_portion, local);

    std::vector<TrialResult> standard, weighted;
    for (const auto& t : trials) (t.config.keyword_set == "none" ? standard : weighted).push_back(t);
    std::array<TableRow, 2> rows;
    rows[0].method = "standard";
    rows[0].selected = best_of(standard);
    rows[1].method = "weighted";
    rows[1].selected = best_of(weighted);

    parallel_for(2, options.jobs, [&](std::size_t r) {
      auto& row = rows[r];
      auto config = row.selected.config;
      config.seed = mix_seed(seed, kFinalStream);
      auto result = train(fraction_train, vocab, lexicon_for(config.keyword_set), config);
      auto score = score_model(result.model, vocab, test_set);
      row.fraction = fraction;
      row.amd_f1 = score.amd_f1;
      row.biomarker_f1 = score.biomarker_f1;
      row.keyword_nll = keyword_nll(result.model, test_set, vocab, lexicon);
      row.train_size = fraction_train.size();
      row.test_size = test_set.size();
    });
    for (auto& row : rows) table.rows.push_back(std::move(row));
    for (auto& t : trials) table.trials.push_back(std::move(t));
  }
  return table;
}

double relative_gain(double weighted_score, double baseline_score) {
  if (!(baseline_score > 0.0)) {
    throw ValidationError("baseline score must be positive, got " + fmt(baseline_score));
  }
  return (weighted_score - baseline_score) / baseline_score;
}

SweepConfig parse_sweep_config(std::istream& in) {
  SweepConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    auto body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(body.substr(0, eq)));
    auto value = trim(body.substr(eq + 1));
    try {
      if (key == "lrs") {
        cfg.grid.learning_rates.clear();
        for (const auto& v : split_list(value)) cfg.grid.learning_rates.push_back(parse_number(v, key));
      } else if (key == "gammas") {
        cfg.grid.gammas.clear();
        for (const auto& v : split_list(value)) cfg.grid.gammas.push_back(parse_number(v, key));
      } else if (key == "sets") {
        cfg.grid.keyword_sets = split_list(value);
      } else if (key == "fractions") {
        cfg.grid.fractions.clear();
        for (const auto& v : split_list(value)) cfg.grid.fractions.push_back(parse_number(v, key));
      } else if (key == "folds") {
        cfg.grid.folds = parse_count(value, key);
      } else if (key == "seed") {
        cfg.seed = parse_count(value, key);
      } else if (key == "epochs") {
        cfg.grid.epochs = parse_count(value, key);
      } else if (key == "batch_size") {
        cfg.grid.batch_size = parse_count(value, key);
      } else if (key == "lr_scale") {
        cfg.grid.lr_scale = parse_number(value, key);
      } else if (key == "test_fraction") {
        cfg.test_fraction = parse_number(value, key);
      } else if (key == "vocab_size") {
        cfg.vocab_size = parse_count(value, key);
      } else if (key == "samples") {
        cfg.samples = parse_count(value, key);
      } else {
        throw ValidationError("unknown key '" + key + "'");
      }
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.grid.validate();
  return cfg;
}

void write_sweep_summary(std::ostream& out, std::span<const TrialResult> results) {
  out << "fraction\tmethod\tkeyword_set\tlr\tgamma\tmean_amd\tmean_bio\tcombined\n";
  // Results are ranked, so the first successful trial per cell is its best.
  std::vector<std::pair<double, std::string>> seen;
  std::vector<const TrialResult*> best;
  for (const auto& r : results) {
    if (r.failed) continue;
    std::pair<double, std::string> cell{r.config.data_fraction, r.config.keyword_set};
    if (std::find(seen.begin(), seen.end(), cell) != seen.end()) continue;
    seen.push_back(cell);
    best.push_back(&r);
  }
  std::stable_sort(best.begin(), best.end(), [](const TrialResult* a, const TrialResult* b) {
    return std::tie(a->config.data_fraction, a->config.keyword_set) <
           std::tie(b->config.data_fraction, b->config.keyword_set);
  });
  for (const auto* r : best) {
    out << fmt(r->config.data_fraction) << '\t' << (r->config.keyword_set == "none" ? "standard" : "weighted")
        << '\t' << r->config.keyword_set << '\t' << fmt(r->grid_learning_rate) << '\t' << fmt(r->config.gamma)
        << '\t' << fmt_score(r->mean_amd) << '\t' << fmt_score(r->mean_bio) << '\t' << fmt_score(r->combined)
        << '\n';
  }
}

void write_trial_log(std::ostream& out, std::span<const TrialResult> results) {
  for (const auto& r : results) {
    out << "fraction=" << fmt(r.config.data_fraction) << "\tset=" << r.config.keyword_set
        << "\tlr=" << fmt(r.grid_learning_rate) << "\tlr_effective=" << fmt(r.config.learning_rate)
        << "\tgamma=" << fmt(r.config.gamma) << "\tepochs=" << r.config.epochs;
    if (r.failed) {
      out << "\tstatus=failed\treason=" << sanitize(r.failure) << '\n';
      continue;
    }
    out << "\tstatus=ok\tmean_amd=" << fmt_score(r.mean_amd) << "\tmean_bio=" << fmt_score(r.mean_bio)
        << "\tcombined=" << fmt_score(r.combined) << "\tfolds=";
    for (std::size_t k = 0; k < r.fold_scores.size(); ++k) {
      if (k) out << ',';
      out << fmt_score(r.fold_scores[k].amd_f1) << '/' << fmt_score(r.fold_scores[k].biomarker_f1);
    }
    out << '\n';
  }
}

void write_table(std::ostream& out, const ComparisonTable& table) {
  out << "fraction\tmethod\tkeyword_set\tlr\tgamma\tamd_f1\tbiomarker_f1\tkeyword_nll\ttrain_size\ttest_size\n";
  for (const auto& row : table.rows) {
    out << fmt(row.fraction) << '\t' << row.method << '\t' << row.selected.config.keyword_set << '\t'
        << fmt(row.selected.grid_learning_rate) << '\t' << fmt(row.selected.config.gamma) << '\t'
        << fmt_score(row.amd_f1) << '\t' << fmt_score(row.biomarker_f1) << '\t' << fmt_score(row.keyword_nll)
        << '\t' << row.train_size << '\t' << row.test_size << '\n';
  }
}

}  // namespace tokenweight
