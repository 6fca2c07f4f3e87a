#include <doctest.h>

#include <sstream>

#include "tokenweight/corpus.hpp"
#include "tokenweight/error.hpp"
#include "tokenweight/reporteval.hpp"
#include "tokenweight/scoring.hpp"

using namespace tokenweight;

namespace {

BiomarkerFindings only(Biomarker b) {
  BiomarkerFindings f;
  f[b] = true;
  return f;
}

const std::vector<std::string> kBinary{"present", "absent"};

}  // namespace

TEST_CASE("label extraction: worked examples") {
  auto a = extract_labels("The scan shows late wet AMD with subretinal fluid.");
  CHECK(a.stage == AmdStage::late_wet);
  CHECK(a.findings == only(Biomarker::subretinal_fluid));

  auto b = extract_labels("Healthy retina. No drusen.");
  CHECK(b.stage == AmdStage::healthy);
  CHECK(b.findings == BiomarkerFindings{});

  auto c = extract_labels("");
  CHECK(c.stage == AmdStage::unknown);
  CHECK(c.findings == BiomarkerFindings{});
}

TEST_CASE("label extraction: stage rules") {
  CHECK(extract_labels("Late dry AMD.").stage == AmdStage::late_dry);
  CHECK(extract_labels("Late AMD with geographic atrophy.").stage == AmdStage::late_dry);
  CHECK(extract_labels("Intermediate AMD.").stage == AmdStage::early_intermediate);
  CHECK(extract_labels("Early AMD.").stage == AmdStage::early_intermediate);
  CHECK(extract_labels("The macula is normal.").stage == AmdStage::healthy);
  CHECK(extract_labels("No late AMD; the macula is normal.").stage == AmdStage::healthy);
  CHECK(extract_labels("Some text.").stage == AmdStage::unknown);
}

TEST_CASE("label extraction: negation scope") {
  auto a = extract_labels("No subretinal fluid and intraretinal fluid is present.");
  CHECK_FALSE(a.findings[Biomarker::subretinal_fluid]);
  CHECK(a.findings[Biomarker::intraretinal_fluid]);

  auto b = extract_labels("Without drusen, but with fibrosis.");
  CHECK_FALSE(b.findings[Biomarker::drusen]);
  CHECK(b.findings[Biomarker::fibrosis]);

  auto c = extract_labels("Absence of pigment epithelial detachment; hyperreflective foci seen.");
  CHECK_FALSE(c.findings[Biomarker::pigment_epithelial_detachment]);
  CHECK(c.findings[Biomarker::hyperreflective_foci]);

  auto d = extract_labels("Free of hypertransmission. RPE irregularity.");
  CHECK_FALSE(d.findings[Biomarker::hypertransmission]);
  CHECK(d.findings[Biomarker::rpe_irregularity]);

  // Multiple drusen vs no drusen.
  CHECK(extract_labels("Multiple drusen.").findings[Biomarker::drusen]);
  CHECK_FALSE(extract_labels("No drusen.").findings[Biomarker::drusen]);
}

TEST_CASE("f1_macro: hand-computed confusion matrices") {
  // Each class: TP=1, FP=1, FN=1 (and TN=1).
  std::vector<int> preds{0, 1, 0, 1};
  std::vector<int> golds{0, 0, 1, 1};
  auto r = f1_macro(preds, golds, kBinary);
  REQUIRE(r.per_class.size() == 2);
  for (const auto& c : r.per_class) {
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.precision == 0.5);
    CHECK(c.recall == 0.5);
    CHECK(c.f1 == 0.5);
  }
  CHECK(r.macro_f1 == 0.5);

  CHECK(f1_macro(golds, golds, kBinary).macro_f1 == 1.0);
  std::vector<int> swapped{1, 1, 0, 0};
  CHECK(f1_macro(swapped, golds, kBinary).macro_f1 == 0.0);
}

TEST_CASE("f1_macro: unsupported classes and invalid input") {
  std::vector<std::string> three{"a", "b", "c"};
  // Class c never occurs and is never predicted: its F1 is 0 (0/0 -> 0).
  std::vector<int> y{0, 1};
  CHECK(f1_macro(y, y, three).macro_f1 == doctest::Approx(2.0 / 3.0));
  // Out-of-range predictions are wrong for every class.
  std::vector<int> bad{5, 1};
  auto r = f1_macro(bad, y, three);
  CHECK(r.per_class[0].fn == 1);
  CHECK(r.per_class[0].fp == 0);

  CHECK_THROWS_AS(f1_macro(std::vector<int>{0}, y, three), ValidationError);
  CHECK_THROWS_AS(f1_macro(std::vector<int>{}, std::vector<int>{}, three), ValidationError);
  CHECK_THROWS_AS(f1_macro(y, std::vector<int>{0, 3}, three), ValidationError);
}

TEST_CASE("stage F1 counts unknown as wrong") {
  std::vector<AmdStage> golds{AmdStage::healthy, AmdStage::early_intermediate, AmdStage::late_wet,
                              AmdStage::late_dry};
  CHECK(stage_f1(golds, golds).macro_f1 == 1.0);
  std::vector<AmdStage> unknown(4, AmdStage::unknown);
  CHECK(stage_f1(unknown, golds).macro_f1 == 0.0);
  CHECK(stage_f1(golds, golds).per_class.size() == kStageClassCount);
}

TEST_CASE("biomarker F1: hand-computed values") {
  // Drusen always predicted present; gold present on half of 4 samples.
  std::vector<BiomarkerFindings> golds(4), preds(4);
  for (std::size_t i = 0; i < 4; ++i) {
    golds[i][Biomarker::drusen] = i < 2;
    preds[i][Biomarker::drusen] = true;
    // Other biomarkers: balanced and perfectly predicted.
    for (std::size_t b = 1; b < kBiomarkerCount; ++b) golds[i].present[b] = preds[i].present[b] = i % 2 == 0;
  }
  auto r = biomarker_f1(preds, golds);
  const auto& drusen = r.per_biomarker[0];
  CHECK(drusen.per_class[0].tp == 2);
  CHECK(drusen.per_class[0].fp == 2);
  CHECK(drusen.per_class[0].fn == 0);
  CHECK(drusen.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(drusen.per_class[1].f1 == 0.0);
  CHECK(drusen.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.aggregate == doctest::Approx((1.0 / 3.0 + 7.0) / 8.0).epsilon(1e-15));

  // Perfect predictions with both classes supported.
  CHECK(biomarker_f1(golds, golds).aggregate == 1.0);

  // One sample, all absent: present-class F1 is 0 by the 0/0 convention.
  std::vector<BiomarkerFindings> none(1);
  CHECK(biomarker_f1(none, none).aggregate == 0.5);
}

TEST_CASE("model scoring") {
  auto test = generate_corpus(40, 9);
  auto replay = score_reports(test, [](const SynthSample& s) { return s.report; });
  CHECK(replay.amd_f1 == 1.0);
  CHECK(replay.biomarker_f1 == 1.0);
  auto empty = score_reports(test, [](const SynthSample&) { return std::string(); });
  CHECK(empty.amd_f1 == 0.0);
  CHECK_THROWS_AS(score_reports({}, [](const SynthSample& s) { return s.report; }), ValidationError);

  std::ostringstream out;
  write_metrics(out, replay);
  auto text = out.str();
  CHECK(text.rfind("amd_f1=1.000000\nbiomarker_f1=1.000000\nhealthy\t1.000000\t", 0) == 0);
  CHECK(text.find("subretinal_fluid:present\t") != std::string::npos);
}
