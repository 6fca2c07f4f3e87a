#include "tokenweight/scoring.hpp"

#include <cstdio>
#include <ostream>
#include <vector>

#include "tokenweight/error.hpp"
#include "tokenweight/trainer.hpp"

namespace tokenweight {

namespace {

ModelScore score_labels(std::span<const ReportLabels> predicted, std::span<const SynthSample> golds) {
  std::vector<AmdStage> pred_stages, gold_stages;
  std::vector<BiomarkerFindings> pred_findings, gold_findings;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    pred_stages.push_back(predicted[i].stage);
    pred_findings.push_back(predicted[i].findings);
    gold_stages.push_back(golds[i].labels.stage);
    gold_findings.push_back(golds[i].labels.findings);
  }
  ModelScore out;
  out.stage_report = stage_f1(pred_stages, gold_stages);
  out.biomarker_report = biomarker_f1(pred_findings, gold_findings);
  out.amd_f1 = out.stage_report.macro_f1;
  out.biomarker_f1 = out.biomarker_report.aggregate;
  return out;
}

}  // namespace

ModelScore score_reports(std::span<const SynthSample> test_set, const ReportGenerator& generate) {
  if (test_set.empty()) throw ValidationError("cannot score an empty test set");
  std::vector<ReportLabels> predicted;
  predicted.reserve(test_set.size());
  for (const auto& s : test_set) predicted.push_back(extract_labels(generate(s)));
  return score_labels(predicted, test_set);
}

ModelScore score_model(const TinyLM& model, const Vocabulary& vocab,
                       std::span<const SynthSample> test_set) {
  return score_reports(test_set, [&](const SynthSample& s) {
    return generate_report(model, vocab, s.prompt);
  });
}

ModelScore score_predictions(std::span<const SynthSample> predictions,
                             std::span<const SynthSample> golds) {
  if (predictions.size() != golds.size()) {
    throw ValidationError("prediction count " + std::to_string(predictions.size()) +
                          " does not match gold count " + std::to_string(golds.size()));
  }
  if (golds.empty()) throw ValidationError("cannot score an empty test set");
  std::vector<ReportLabels> predicted;
  predicted.reserve(predictions.size());
  for (const auto& p : predictions) predicted.push_back(extract_labels(p.report));
  return score_labels(predicted, golds);
}

void write_metrics(std::ostream& out, const ModelScore& score) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  out << "amd_f1=" << num(score.amd_f1) << '\n';
  out << "biomarker_f1=" << num(score.biomarker_f1) << '\n';
  auto line = [&](const std::string& name, const ClassScore& c) {
    out << name << '\t' << num(c.precision) << '\t' << num(c.recall) << '\t' << num(c.f1) << '\t'
        << c.support << '\n';
  };
  for (const auto& c : score.stage_report.per_class) line(c.name, c);
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    const auto prefix = std::string(to_string(static_cast<Biomarker>(b))) + ":";
    for (const auto& c : score.biomarker_report.per_biomarker[b].per_class) line(prefix + c.name, c);
  }
}

}  // namespace tokenweight
