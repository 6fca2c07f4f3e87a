#include "tokenweight/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tokenweight/error.hpp"
#include "tokenweight/random.hpp"
#include "tokenweight/text.hpp"

namespace tokenweight {

namespace {

using Choices = std::vector<std::string_view>;

constexpr std::array<std::string_view, 4> kStageCodes = {"HLT", "EIM", "LWT", "LDY"};
constexpr std::array<std::string_view, kBiomarkerCount> kBiomarkerCodes = {
    "DRU", "RPE", "PED", "HRF", "HTX", "FIB", "SRF", "IRF"};

// Presence rates per stage, biomarker order.
constexpr std::array<std::array<double, kBiomarkerCount>, 4> kPresenceRates = {{
    {0, 0, 0, 0, 0, 0, 0, 0},
    {0.90, 0.40, 0.20, 0.30, 0.10, 0.00, 0.00, 0.00},
    {0.50, 0.40, 0.50, 0.40, 0.10, 0.30, 0.60, 0.50},
    {0.50, 0.50, 0.10, 0.40, 0.90, 0.10, 0.05, 0.05},
}};

// Chance that an absent biomarker is still mentioned, negated.
constexpr double kNegatedMentionRate = 0.35;

const Choices kOpenings = {
    "",
    "OCT scan of the macula.",
    "The OCT image is of good quality.",
    "Image quality is sufficient for grading.",
};

const std::array<Choices, 4> kStageSentences = {{
    {"The retina appears healthy.", "Healthy retina with regular layers.", "The macula is normal.",
     "Findings are normal for this age."},
    {"The scan shows early AMD.", "Findings are consistent with intermediate AMD.",
     "Signs of early AMD are present.", "The scan shows intermediate AMD."},
    {"The scan shows late wet AMD.", "Findings are consistent with late wet AMD.",
     "Signs of active late wet AMD are present.", "There is late stage wet AMD."},
    {"The scan shows late dry AMD.", "Findings are consistent with late dry AMD.",
     "There is late dry AMD with atrophy.", "Signs of late stage dry AMD are present."},
}};

struct BiomarkerTemplates {
  Choices present;     // "{q}" / "{Q}" stand for a quantifier
  Choices quantifiers;
  Choices absent;
};

const std::array<BiomarkerTemplates, kBiomarkerCount> kBiomarkerTemplates = {{
    {{"{Q} drusen are visible.", "There are {q} drusen.", "{Q} drusen are seen."},
     {"multiple", "several", "some", "many", "large", "small"},
     {"No drusen are visible.", "There are no drusen."}},
    {{"There is {q} irregularity of the retinal pigment epithelium.",
      "The retinal pigment epithelium shows {q} irregularity."},
     {"slight", "minimal", "moderate", "significant", "some"},
     {"No irregularity of the retinal pigment epithelium.",
      "There is no irregularity of the retinal pigment epithelium."}},
    {{"A {q} pigment epithelial detachment is present.",
      "There is a {q} pigment epithelial detachment."},
     {"small", "large", "medium", "drusenoid"},
     {"There is no pigment epithelial detachment.", "No pigment epithelial detachment is seen."}},
    {{"{Q} hyperreflective foci are seen.", "There are {q} hyperreflective foci."},
     {"several", "multiple", "some", "many"},
     {"No hyperreflective foci are seen.", "There are no hyperreflective foci."}},
    {{"There is {q} hypertransmission.", "{Q} hypertransmission is visible."},
     {"increased", "slight", "significant", "extensive"},
     {"There is no hypertransmission.", "No hypertransmission is visible."}},
    {{"{Q} fibrosis is present.", "There is {q} subretinal fibrosis."},
     {"slight", "moderate", "extensive"},
     {"There is no fibrosis.", "No signs of fibrosis."}},
    {{"There is {q} subretinal fluid.", "{Q} subretinal fluid is present."},
     {"some", "minimal", "moderate", "significant"},
     {"There is no subretinal fluid.", "No subretinal fluid is present.",
      "Absence of subretinal fluid."}},
    {{"There is {q} intraretinal fluid.", "{Q} intraretinal fluid is visible."},
     {"some", "minimal", "moderate", "significant"},
     {"There is no intraretinal fluid.", "No intraretinal fluid is visible.",
      "The retina is free of intraretinal fluid."}},
}};

const Choices kBothFluidsAbsent = {
    "There is no subretinal fluid and no intraretinal fluid.",
    "No subretinal fluid and no intraretinal fluid are present.",
};

const Choices kClosings = {
    "",
    "Follow-up is recommended.",
    "The foveal contour is preserved.",
    "Compared to the previous visit the findings are stable.",
};

std::string_view pick(const Choices& choices, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, choices.size() - 1);
  return choices[dist(rng)];
}

bool coin(double p, Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng) < p;
}

std::string fill_quantifier(std::string_view tmpl, std::string_view q) {
  std::string out(tmpl);
  if (auto pos = out.find("{q}"); pos != std::string::npos) out.replace(pos, 3, q);
  if (auto pos = out.find("{Q}"); pos != std::string::npos) {
    std::string cap(q);
    cap[0] = static_cast<char>(cap[0] - 'a' + 'A');
    out.replace(pos, 3, cap);
  }
  return out;
}

void append_sentence(std::string& report, std::string_view sentence) {
  if (sentence.empty()) return;
  if (!report.empty()) report.push_back(' ');
  report += sentence;
}

SynthSample make_sample(std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  SynthSample s;
  s.seed = sample_seed;

  std::uniform_int_distribution<int> stage_dist(0, 3);
  const auto stage = static_cast<std::size_t>(stage_dist(rng));
  s.labels.stage = static_cast<AmdStage>(stage);
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    s.labels.findings.present[b] = coin(kPresenceRates[stage][b], rng);
  }

  std::string report;
  append_sentence(report, pick(kOpenings, rng));
  append_sentence(report, pick(kStageSentences[stage], rng));

  const auto& present = s.labels.findings.present;
  constexpr auto srf = static_cast<std::size_t>(Biomarker::subretinal_fluid);
  constexpr auto irf = static_cast<std::size_t>(Biomarker::intraretinal_fluid);
  const bool joint_fluid_negation = !present[srf] && !present[irf] && coin(0.25, rng);

  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    const auto& t = kBiomarkerTemplates[b];
    if (present[b]) {
      append_sentence(report, fill_quantifier(pick(t.present, rng), pick(t.quantifiers, rng)));
    } else if (joint_fluid_negation && (b == srf || b == irf)) {
      if (b == srf) append_sentence(report, pick(kBothFluidsAbsent, rng));
    } else if (coin(kNegatedMentionRate, rng)) {
      append_sentence(report, pick(t.absent, rng));
    }
  }
  append_sentence(report, pick(kClosings, rng));

  s.report = std::move(report);
  s.prompt = make_prompt(s.labels);
  return s;
}

}  // namespace

bool is_grid_fraction(double fraction) {
  return std::any_of(std::begin(kDataFractions), std::end(kDataFractions),
                     [&](double f) { return std::abs(f - fraction) < 1e-12; });
}

std::string make_prompt(const ReportLabels& labels) {
  std::string prompt = "scan:";
  if (labels.stage != AmdStage::unknown) {
    prompt += ' ';
    prompt += kStageCodes[static_cast<std::size_t>(labels.stage)];
  }
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    if (!labels.findings.present[b]) continue;
    prompt += ' ';
    prompt += kBiomarkerCodes[b];
  }
  return prompt;
}

std::vector<SynthSample> generate_corpus(std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 8) throw ValidationError("a corpus needs at least 8 samples");
  std::vector<SynthSample> corpus;
  corpus.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) corpus.push_back(make_sample(mix_seed(seed, i)));
  return corpus;
}

std::vector<std::size_t> subset_indices(std::span<const AmdStage> stages, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto n = stages.size();
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (take == 0) {
    throw ValidationError("fraction " + std::to_string(fraction) + " of " + std::to_string(n) +
                          " samples selects nothing");
  }

  // Shuffle each stage, then rank items by their quantile within the stage.
  // Any prefix of that ranking is stratified, so growing fractions nest.
  std::array<std::vector<std::size_t>, 5> by_stage;
  for (std::size_t i = 0; i < n; ++i) by_stage[static_cast<std::size_t>(stages[i])].push_back(i);

  struct Ranked {
    double key;
    std::size_t stage;
    std::size_t index;
  };
  std::vector<Ranked> ranking;
  ranking.reserve(n);
  for (std::size_t s = 0; s < by_stage.size(); ++s) {
    auto& members = by_stage[s];
    Rng rng(mix_seed(seed, s));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t r = 0; r < members.size(); ++r) {
      double key = (static_cast<double>(r) + 0.5) / static_cast<double>(members.size());
      ranking.push_back({key, s, members[r]});
    }
  }
  std::sort(ranking.begin(), ranking.end(), [](const Ranked& a, const Ranked& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.stage < b.stage;
  });

  std::vector<std::size_t> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(ranking[i].index);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SynthSample> subset_fraction(std::span<const SynthSample> corpus, double fraction,
                                         std::uint64_t seed) {
  auto stages = stages_of(corpus);
  std::vector<SynthSample> out;
  for (auto i : subset_indices(stages, fraction, seed)) out.push_back(corpus[i]);
  return out;
}

std::vector<AmdStage> stages_of(std::span<const SynthSample> corpus) {
  std::vector<AmdStage> stages;
  stages.reserve(corpus.size());
  for (const auto& s : corpus) stages.push_back(s.labels.stage);
  return stages;
}

void write_corpus(std::ostream& out, std::span<const SynthSample> corpus) {
  for (const auto& s : corpus) {
    out << s.prompt << '\t' << s.report << '\t' << to_string(s.labels.stage) << '\t';
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      if (b) out << ',';
      out << (s.labels.findings.present[b] ? '1' : '0');
    }
    out << '\n';
  }
}

std::vector<SynthSample> read_corpus(std::istream& in) {
  std::vector<SynthSample> corpus;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ValidationError("corpus line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (!line.empty() && line.back() == '\t') fields.emplace_back();
    if (fields.size() != 4) fail("expected 4 tab-separated fields, got " + std::to_string(fields.size()));

    SynthSample s;
    s.prompt = fields[0];
    s.report = fields[1];
    try {
      s.labels.stage = parse_stage(fields[2]);
    } catch (const ValidationError& e) {
      fail(e.what());
    }
    const auto& flags = fields[3];
    if (flags.size() != 2 * kBiomarkerCount - 1) fail("expected 8 comma-separated 0/1 flags");
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      char c = flags[2 * b];
      if ((c != '0' && c != '1') || (b + 1 < kBiomarkerCount && flags[2 * b + 1] != ',')) {
        fail("malformed biomarker flags '" + flags + "'");
      }
      s.labels.findings.present[b] = c == '1';
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace tokenweight
