#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tokenweight/corpus.hpp"
#include "tokenweight/tinylm.hpp"
#include "tokenweight/tokenizer.hpp"
#include "tokenweight/trainer.hpp"

namespace tokenweight {

/// Hyperparameter grid. Learning rates are given on the reference scale and
/// multiplied by `lr_scale` before training (plain SGD on the small model
/// needs far larger steps than the reference values).
struct SweepGrid {
  std::vector<double> learning_rates{6.5e-5, 1e-4, 2.15e-4, 6.5e-4};
  std::vector<double> gammas{2.0, 3.5, 6.0};
  std::vector<std::string> keyword_sets{"combined", "none"};
  std::vector<double> fractions{0.10};
  std::size_t folds = 4;
  std::size_t epochs = 8;
  std::size_t batch_size = 8;
  double lr_scale = 1e4;
  ModelShape shape;

  /// Number of trials run_sweep will produce.
  std::size_t trial_count() const;
  /// Throws ValidationError for empty or out-of-domain entries.
  void validate() const;
};

struct CvSplit {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> folds;  // each sorted ascending
};

/// Stage-stratified partition of {0..N-1} into k folds whose sizes differ by
/// at most one. labels.size() must be N.
CvSplit make_folds(std::size_t n, std::span<const AmdStage> labels, std::size_t k,
                   std::uint64_t seed);

struct FoldScore {
  double amd_f1 = 0.0;
  double biomarker_f1 = 0.0;
};

struct TrialResult {
  TrainConfig config;          // learning_rate here is the effective (scaled) rate
  double grid_learning_rate = 0.0;
  std::vector<FoldScore> fold_scores;
  double mean_amd = 0.0;
  double mean_bio = 0.0;
  double combined = 0.0;
  bool failed = false;
  std::string failure;
};

/// Ranking used by run_sweep: successful before failed, then combined,
/// mean_amd descending, then (keyword_set, fraction, learning rate, gamma)
/// ascending.
bool ranks_before(const TrialResult& a, const TrialResult& b);

/// Runs every grid cell with k-fold cross-validation on `corpus` (subsetted
/// per fraction). Divergent trials are recorded as failed. `jobs` worker
/// threads; results do not depend on it.
std::vector<TrialResult> run_sweep(const SweepGrid& grid, std::span<const SynthSample> corpus,
                                   const Vocabulary& vocab, std::uint64_t seed,
                                   std::size_t jobs = 1);

/// First trial under the run_sweep ranking; throws ValidationError if there
/// are no successful trials.
const TrialResult& best_of(std::span<const TrialResult> results);

struct TableOptions {
  SweepGrid grid;              // keyword_sets and fractions are overridden
  double test_fraction = 0.2;
  std::size_t vocab_size = 300;
  std::size_t jobs = 1;
};

struct TableRow {
  double fraction = 0.0;
  std::string method;          // "standard" or "weighted"
  TrialResult selected;        // winning cross-validation trial
  double amd_f1 = 0.0;
  double biomarker_f1 = 0.0;
  double keyword_nll = 0.0;    // on the test split, keyword positions of the table's set
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct ComparisonTable {
  std::vector<TableRow> rows;
  std::vector<TrialResult> trials;  // every cross-validation trial, all fractions
  std::vector<std::size_t> test_indices;
};

/// Held-out comparison: a stratified test split is removed first; per
/// fraction the best standard and best weighted configs are picked by
/// run_sweep on the training portion, retrained on that fraction and scored
/// on the test split. Two rows per fraction, standard first.
ComparisonTable comparison_table(std::span<const SynthSample> corpus, std::span<const double> fractions,
                                 const std::string& keyword_set, std::uint64_t seed,
                                 const TableOptions& options = {});

/// (weighted - baseline) / baseline; throws ValidationError if baseline <= 0.
double relative_gain(double weighted_score, double baseline_score);

/// Sweep config: `key = value` lines, `#` comments. Keys: lrs, gammas, sets,
/// fractions (comma-separated lists), folds, seed, epochs, plus batch_size,
/// lr_scale, test_fraction, vocab_size, samples.
struct SweepConfig {
  SweepGrid grid;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t vocab_size = 300;
  std::size_t samples = 4000;  // corpus size when no data file is given
};
SweepConfig parse_sweep_config(std::istream& in);

/// Best trial per (fraction, method) as a TSV table with a header row.
void write_sweep_summary(std::ostream& out, std::span<const TrialResult> results);
/// One trial per line: tab-separated key=value fields.
void write_trial_log(std::ostream& out, std::span<const TrialResult> results);
void write_table(std::ostream& out, const ComparisonTable& table);

}  // namespace tokenweight
