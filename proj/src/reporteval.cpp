#include "tokenweight/reporteval.hpp"

#include <algorithm>

#include "tokenweight/error.hpp"
#include "tokenweight/text.hpp"

namespace tokenweight {

namespace {

constexpr std::array<std::string_view, 5> kStageNames = {"healthy", "early_intermediate", "late_wet",
                                                         "late_dry", "unknown"};

constexpr std::array<std::string_view, kBiomarkerCount> kBiomarkerNames = {
    "drusen",
    "retinal_pigment_epithelium",
    "pigment_epithelial_detachment",
    "hyperreflective_foci",
    "hypertransmission",
    "fibrosis",
    "subretinal_fluid",
    "intraretinal_fluid",
};

using Phrase = std::vector<std::string_view>;

const std::array<std::vector<Phrase>, kBiomarkerCount>& biomarker_terms() {
  static const std::array<std::vector<Phrase>, kBiomarkerCount> terms = {{
      {{"drusen"}},
      {{"retinal", "pigment", "epithelium"}, {"rpe"}},
      {{"pigment", "epithelial", "detachment"}, {"pigment", "epithelium", "detachment"}, {"ped"}},
      {{"hyperreflective", "foci"}, {"hyperreflective", "focus"}},
      {{"hypertransmission"}},
      {{"fibrosis"}, {"fibrotic"}},
      {{"subretinal", "fluid"}},
      {{"intraretinal", "fluid"}},
  }};
  return terms;
}

struct Word {
  std::string text;
  bool negated = false;
};

// Lowercased words with the negation state in force at each word.
std::vector<Word> scan_words(std::string_view report) {
  auto chars = text::to_lower(text::decode_utf8(report));
  std::vector<Word> words;
  bool negated = false;
  bool pending_of = false;  // saw "absence"/"free", waiting for "of"
  std::size_t i = 0;
  while (i < chars.size()) {
    char32_t ch = chars[i];
    if (text::is_alnum(ch)) {
      std::size_t j = i;
      while (j < chars.size() && text::is_alnum(chars[j])) ++j;
      auto word = text::encode_utf8(std::u32string_view(chars).substr(i, j - i));
      i = j;
      if (word == "and" || word == "but") {
        negated = false;
        pending_of = false;
        continue;
      }
      if (word == "no" || word == "without") {
        negated = true;
      } else if (word == "of" && pending_of) {
        negated = true;
      }
      pending_of = word == "absence" || word == "free";
      words.push_back({std::move(word), negated});
      continue;
    }
    if (ch == U',' || ch == U'.' || ch == U';' || ch == U':' || ch == U'!' || ch == U'?' ||
        ch == U'\n') {
      negated = false;
      pending_of = false;
    }
    ++i;
  }
  return words;
}

// True if `phrase` occurs starting at a non-negated word.
bool affirmed(const std::vector<Word>& words, const Phrase& phrase) {
  if (phrase.empty() || words.size() < phrase.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    if (words[i].negated) continue;
    bool match = true;
    for (std::size_t k = 0; k < phrase.size() && match; ++k) match = words[i + k].text == phrase[k];
    if (match) return true;
  }
  return false;
}

bool affirmed(const std::vector<Word>& words, std::string_view word) {
  return affirmed(words, Phrase{word});
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view to_string(AmdStage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

AmdStage parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<AmdStage>(i);
  }
  throw ValidationError("unknown AMD stage '" + std::string(name) + "'");
}

std::string_view to_string(Biomarker b) { return kBiomarkerNames[static_cast<std::size_t>(b)]; }

std::span<const std::string> stage_class_names() {
  static const std::vector<std::string> names(kStageNames.begin(),
                                              kStageNames.begin() + kStageClassCount);
  return names;
}

ReportLabels extract_labels(std::string_view report) {
  ReportLabels labels;
  auto words = scan_words(report);
  if (words.empty()) return labels;

  const bool late = affirmed(words, "late");
  if (late && affirmed(words, "wet")) {
    labels.stage = AmdStage::late_wet;
  } else if (late && (affirmed(words, "dry") || affirmed(words, "atrophy") ||
                      affirmed(words, "atrophic"))) {
    labels.stage = AmdStage::late_dry;
  } else if (affirmed(words, "early") || affirmed(words, "intermediate")) {
    labels.stage = AmdStage::early_intermediate;
  } else if (affirmed(words, "healthy") || affirmed(words, "normal")) {
    labels.stage = AmdStage::healthy;
  }

  const auto& terms = biomarker_terms();
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    labels.findings.present[b] = std::any_of(terms[b].begin(), terms[b].end(),
                                             [&](const Phrase& p) { return affirmed(words, p); });
  }
  return labels;
}

F1Report f1_macro(std::span<const int> predictions, std::span<const int> golds,
                  std::span<const std::string> classes) {
  if (predictions.size() != golds.size()) {
    throw ValidationError("prediction count " + std::to_string(predictions.size()) +
                          " does not match gold count " + std::to_string(golds.size()));
  }
  if (golds.empty()) throw ValidationError("F1 needs at least one sample");
  if (classes.empty()) throw ValidationError("F1 needs at least one class");
  const auto k = static_cast<int>(classes.size());
  for (int g : golds) {
    if (g < 0 || g >= k) throw ValidationError("gold label " + std::to_string(g) + " is not a class");
  }

  F1Report report;
  report.per_class.resize(classes.size());
  for (std::size_t n = 0; n < golds.size(); ++n) {
    const int p = predictions[n];
    const int g = golds[n];
    if (p == g) {
      ++report.per_class[static_cast<std::size_t>(g)].tp;
    } else {
      ++report.per_class[static_cast<std::size_t>(g)].fn;
      if (p >= 0 && p < k) ++report.per_class[static_cast<std::size_t>(p)].fp;
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& s = report.per_class[c];
    s.name = classes[c];
    s.support = s.tp + s.fn;
    s.precision = ratio(s.tp, s.tp + s.fp);
    s.recall = ratio(s.tp, s.tp + s.fn);
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    sum += s.f1;
  }
  report.macro_f1 = sum / static_cast<double>(classes.size());
  return report;
}

BiomarkerF1 biomarker_f1(std::span<const BiomarkerFindings> predictions,
                         std::span<const BiomarkerFindings> golds) {
  if (predictions.size() != golds.size()) {
    throw ValidationError("prediction count " + std::to_string(predictions.size()) +
                          " does not match gold count " + std::to_string(golds.size()));
  }
  static const std::vector<std::string> classes = {"present", "absent"};
  BiomarkerF1 out;
  std::vector<int> p(predictions.size());
  std::vector<int> g(golds.size());
  double sum = 0.0;
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    for (std::size_t n = 0; n < golds.size(); ++n) {
      p[n] = predictions[n].present[b] ? 0 : 1;
      g[n] = golds[n].present[b] ? 0 : 1;
    }
    out.per_biomarker[b] = f1_macro(p, g, classes);
    sum += out.per_biomarker[b].macro_f1;
  }
  out.aggregate = sum / static_cast<double>(kBiomarkerCount);
  return out;
}

F1Report stage_f1(std::span<const AmdStage> predictions, std::span<const AmdStage> golds) {
  std::vector<int> p;
  std::vector<int> g;
  p.reserve(predictions.size());
  g.reserve(golds.size());
  for (auto s : predictions) p.push_back(static_cast<int>(s));
  for (auto s : golds) {
    if (s == AmdStage::unknown) throw ValidationError("gold stage cannot be 'unknown'");
    g.push_back(static_cast<int>(s));
  }
  return f1_macro(p, g, stage_class_names());
}

}  // namespace tokenweight
