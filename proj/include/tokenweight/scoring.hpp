#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "tokenweight/corpus.hpp"
#include "tokenweight/reporteval.hpp"
#include "tokenweight/tinylm.hpp"

namespace tokenweight {

struct ModelScore {
  double amd_f1 = 0.0;
  double biomarker_f1 = 0.0;
  F1Report stage_report;
  BiomarkerF1 biomarker_report;
};

using ReportGenerator = std::function<std::string(const SynthSample&)>;

/// Generates a report for every test sample, extracts labels from it and
/// scores them against the gold labels. Throws ValidationError on an empty
/// test set.
ModelScore score_reports(std::span<const SynthSample> test_set, const ReportGenerator& generate);

/// score_reports with greedy decoding from `model`.
ModelScore score_model(const TinyLM& model, const Vocabulary& vocab,
                       std::span<const SynthSample> test_set);

/// Scores already-written reports (the `report` field of each prediction)
/// against gold labels.
ModelScore score_predictions(std::span<const SynthSample> predictions,
                             std::span<const SynthSample> golds);

/// Metrics file: `amd_f1=`, `biomarker_f1=`, then one line per class,
/// `class<TAB>precision<TAB>recall<TAB>f1<TAB>support`. Stage classes come
/// first, then `<biomarker>:present` / `<biomarker>:absent`.
void write_metrics(std::ostream& out, const ModelScore& score);

}  // namespace tokenweight
