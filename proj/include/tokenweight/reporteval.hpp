#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokenweight {

enum class AmdStage { healthy = 0, early_intermediate = 1, late_wet = 2, late_dry = 3, unknown = 4 };

/// The four graded stage classes; `unknown` is a prediction-only bucket.
inline constexpr std::size_t kStageClassCount = 4;
inline constexpr std::size_t kBiomarkerCount = 8;

enum class Biomarker {
  drusen = 0,
  rpe_irregularity,
  pigment_epithelial_detachment,
  hyperreflective_foci,
  hypertransmission,
  fibrosis,
  subretinal_fluid,
  intraretinal_fluid,
};

std::string_view to_string(AmdStage stage);
/// Parses the names produced by to_string(AmdStage); throws ValidationError.
AmdStage parse_stage(std::string_view name);
std::string_view to_string(Biomarker b);

/// Class names in index order, as used for F1 reports.
std::span<const std::string> stage_class_names();

struct BiomarkerFindings {
  std::array<bool, kBiomarkerCount> present{};

  bool operator[](Biomarker b) const { return present[static_cast<std::size_t>(b)]; }
  bool& operator[](Biomarker b) { return present[static_cast<std::size_t>(b)]; }
  friend bool operator==(const BiomarkerFindings&, const BiomarkerFindings&) = default;
};

struct ReportLabels {
  AmdStage stage = AmdStage::unknown;
  BiomarkerFindings findings;
  friend bool operator==(const ReportLabels&, const ReportLabels&) = default;
};

/// Rule-based label extraction from free report text. Never fails.
///
/// Text is lowercased and split into words and clauses. A negation cue
/// ("no", "without", "absence of", "free of") negates every term that
/// follows it up to the end of its clause: the next comma, period,
/// semicolon, colon, or a coordinating "and"/"but".
///
/// Stage rules, first match wins: late+wet -> late_wet; late+dry or
/// late+atrophy -> late_dry; early or intermediate -> early_intermediate;
/// healthy or normal -> healthy; otherwise unknown. Negated stage words are
/// ignored. A biomarker is present iff one of its terms occurs outside a
/// negation scope.
ReportLabels extract_labels(std::string_view report);

struct ClassScore {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct F1Report {
  std::vector<ClassScore> per_class;
  double macro_f1 = 0.0;
};

/// One-vs-rest precision/recall/F1 for every class in `classes` (labels are
/// indices into it) and their unweighted mean. Predictions outside
/// [0, |classes|) count as wrong for every class. Degenerate ratios (0/0)
/// are 0. Throws ValidationError on a length mismatch, empty input, or a gold
/// label outside the class set.
F1Report f1_macro(std::span<const int> predictions, std::span<const int> golds,
                  std::span<const std::string> classes);

struct BiomarkerF1 {
  std::array<F1Report, kBiomarkerCount> per_biomarker;  // classes {present, absent}
  double aggregate = 0.0;                                // mean of the 8 macro F1s
};

BiomarkerF1 biomarker_f1(std::span<const BiomarkerFindings> predictions,
                         std::span<const BiomarkerFindings> golds);

/// Stage F1 over the four classes, `unknown` predictions counted as wrong.
F1Report stage_f1(std::span<const AmdStage> predictions, std::span<const AmdStage> golds);

}  // namespace tokenweight
