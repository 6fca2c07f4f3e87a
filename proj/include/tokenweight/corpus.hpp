#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tokenweight/reporteval.hpp"

namespace tokenweight {

/// One synthetic question/answer pair. The prompt is a coded findings list
/// that plays the role of the image; the report is the reference answer.
struct SynthSample {
  std::string prompt;
  std::string report;
  ReportLabels labels;
  std::uint64_t seed = 0;
};

/// Data fractions accepted by training configs.
inline constexpr double kDataFractions[] = {0.01, 0.03, 0.10, 0.30, 1.00};
bool is_grid_fraction(double fraction);

/// Prompt codes, e.g. "scan: LWT DRU SRF" for late wet AMD with drusen and
/// subretinal fluid.
std::string make_prompt(const ReportLabels& labels);

/// Deterministic synthetic OCT report corpus. Stages are uniform over the
/// four classes; biomarkers follow stage-conditioned rates (none for healthy
/// retinas). Requires n_samples >= 8.
std::vector<SynthSample> generate_corpus(std::size_t n_samples, std::uint64_t seed);

/// Indices of a stage-stratified subset of round(fraction * N) items, in
/// ascending order. Subsets for the same seed are nested as the fraction
/// grows. Throws ValidationError for fraction outside (0, 1] or an empty
/// result.
std::vector<std::size_t> subset_indices(std::span<const AmdStage> stages, double fraction,
                                        std::uint64_t seed);

std::vector<SynthSample> subset_fraction(std::span<const SynthSample> corpus, double fraction,
                                         std::uint64_t seed);

std::vector<AmdStage> stages_of(std::span<const SynthSample> corpus);

/// Corpus file: one record per line,
/// `prompt<TAB>report<TAB>stage<TAB>f1,f2,...,f8` with 0/1 flags in
/// biomarker order. The report column may be empty.
void write_corpus(std::ostream& out, std::span<const SynthSample> corpus);
std::vector<SynthSample> read_corpus(std::istream& in);

}  // namespace tokenweight
