#include "tokenweight/lexicon.hpp"

#include <array>
#include <istream>
#include <ostream>

#include "tokenweight/error.hpp"
#include "tokenweight/text.hpp"

namespace tokenweight {

namespace {

constexpr std::array<std::string_view, 22> kDiagnosticWords = {
    "healthy",         "normal",      "early",        "intermediate", "late",
    "wet",             "dry",         "active",       "inactive",     "hyperreflective",
    "hyporeflective",  "drusen",      "drusenoid",    "elevation",    "irregularity",
    "intraretinal",    "subretinal",  "fluid",        "atrophy",      "atrophic",
    "transmission",    "hypertransmission",
};

constexpr std::array<std::string_view, 34> kQuantitativeWords = {
    "yes",         "no",         "small",    "large",      "thin",      "thick",
    "increase",    "increased",  "decrease", "decreased",  "one",       "two",
    "some",        "several",    "multiple", "many",       "minimal",   "slightly",
    "medium",      "moderate",   "moderately", "advanced", "extensive", "very",
    "significant", "thickened",  "thickening", "smaller",  "larger",    "largest",
    "thinned",     "thinning",   "slight",   "significantly",
};

template <std::size_t N>
KeywordSet make_set(std::string name, const std::array<std::string_view, N>& words,
                    KeywordCategory category) {
  std::vector<Keyword> entries;
  entries.reserve(N);
  for (auto w : words) entries.push_back({std::string(w), category});
  return KeywordSet(std::move(name), std::move(entries));
}

}  // namespace

std::string_view to_string(KeywordCategory c) {
  return c == KeywordCategory::diagnostic ? "diagnostic" : "quantitative";
}

std::optional<std::string> validate_surface(std::string_view surface) {
  if (surface.empty()) return "empty keyword";
  if (text::trim(surface).size() != surface.size()) return "keyword has surrounding whitespace";
  auto chars = text::decode_utf8(surface);
  char32_t prev = 0;
  for (char32_t ch : chars) {
    if (ch == U' ') {
      if (prev == U' ') return "keyword has repeated internal spaces";
    } else if (!text::is_word_char(ch)) {
      return "invalid character in keyword '" + std::string(surface) + "'";
    } else if (text::to_lower(ch) != ch) {
      return "keyword is not lowercase: '" + std::string(surface) + "'";
    }
    prev = ch;
  }
  return std::nullopt;
}

KeywordSet::KeywordSet(std::string name, std::vector<Keyword> entries) : name_(std::move(name)) {
  entries_.reserve(entries.size());
  for (auto& kw : entries) {
    if (auto err = validate_surface(kw.surface)) throw ValidationError(*err);
    if (index_.contains(kw.surface)) continue;
    index_.emplace(kw.surface, entries_.size());
    entries_.push_back(std::move(kw));
  }
}

bool KeywordSet::contains(std::string_view surface) const { return find(surface) != nullptr; }

const Keyword* KeywordSet::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const KeywordSet& builtin_set(std::string_view name) {
  static const KeywordSet diagnostic =
      make_set("diagnostic", kDiagnosticWords, KeywordCategory::diagnostic);
  static const KeywordSet quantitative =
      make_set("quantitative", kQuantitativeWords, KeywordCategory::quantitative);
  static const KeywordSet combined = merge(diagnostic, quantitative, "combined");

  if (name == "diagnostic") return diagnostic;
  if (name == "quantitative") return quantitative;
  if (name == "combined") return combined;
  throw ValidationError("unknown keyword set '" + std::string(name) +
                        "' (valid: diagnostic, quantitative, combined)");
}

KeywordSet merge(const KeywordSet& a, const KeywordSet& b, std::string name) {
  std::vector<Keyword> entries = a.entries();
  entries.insert(entries.end(), b.entries().begin(), b.entries().end());
  if (name.empty()) name = a.name() + "+" + b.name();
  return KeywordSet(std::move(name), std::move(entries));
}

LexiconLoad load_lexicon(std::istream& in, std::string name) {
  std::vector<Keyword> entries;
  std::vector<std::string> warnings;
  std::unordered_map<std::string, std::size_t> seen;  // surface -> line
  std::optional<KeywordCategory> section;

  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line == "[diagnostic]") {
        section = KeywordCategory::diagnostic;
      } else if (line == "[quantitative]") {
        section = KeywordCategory::quantitative;
      } else {
        fail("unknown section header '" + std::string(line) + "'");
      }
      continue;
    }
    if (!section) fail("keyword outside of a [diagnostic] or [quantitative] section");

    auto surface = text::to_lower(line);
    if (auto err = validate_surface(surface)) fail(*err);
    if (auto it = seen.find(surface); it != seen.end()) {
      warnings.push_back("line " + std::to_string(line_no) + ": duplicate keyword '" + surface +
                         "' (first seen on line " + std::to_string(it->second) + ")");
      continue;
    }
    seen.emplace(surface, line_no);
    entries.push_back({std::move(surface), *section});
  }
  if (entries.empty()) {
    line_no = std::max<std::size_t>(line_no, 1);
    fail("lexicon contains no keywords");
  }
  return {KeywordSet(std::move(name), std::move(entries)), std::move(warnings)};
}

void write_lexicon(std::ostream& out, const KeywordSet& set) {
  for (auto category : {KeywordCategory::diagnostic, KeywordCategory::quantitative}) {
    bool header = false;
    for (const auto& kw : set.entries()) {
      if (kw.category != category) continue;
      if (!header) {
        out << '[' << to_string(category) << "]\n";
        header = true;
      }
      out << kw.surface << '\n';
    }
  }
}

}  // namespace tokenweight
