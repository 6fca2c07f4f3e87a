#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokenweight {

enum class KeywordCategory { diagnostic, quantitative };

std::string_view to_string(KeywordCategory c);

struct Keyword {
  std::string surface;
  KeywordCategory category = KeywordCategory::diagnostic;

  friend bool operator==(const Keyword&, const Keyword&) = default;
};

/// Returns an error message if `surface` is not a valid keyword surface:
/// non-empty, lowercase, trimmed, made of letters/digits/hyphens with at most
/// single spaces between words.
std::optional<std::string> validate_surface(std::string_view surface);

/// An immutable, insertion-ordered set of keywords, unique by surface.
class KeywordSet {
 public:
  KeywordSet() = default;
  /// Throws ValidationError if a surface is invalid. Later duplicates of a
  /// surface are dropped.
  KeywordSet(std::string name, std::vector<Keyword> entries);

  const std::string& name() const { return name_; }
  const std::vector<Keyword>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool contains(std::string_view surface) const;
  const Keyword* find(std::string_view surface) const;

 private:
  std::string name_;
  std::vector<Keyword> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Names accepted by builtin_set().
inline constexpr std::string_view kBuiltinSetNames[] = {"diagnostic", "quantitative", "combined"};

/// The diagnostic (22), quantitative (34) and combined (56) keyword sets.
/// Throws ValidationError for any other name.
const KeywordSet& builtin_set(std::string_view name);

/// Union by surface; on a clash the entry (and category) from `a` wins.
KeywordSet merge(const KeywordSet& a, const KeywordSet& b, std::string name = {});

struct LexiconLoad {
  KeywordSet set;
  std::vector<std::string> warnings;
};

/// Parses the lexicon text format:
///
///     # comment
///     [diagnostic]
///     drusen
///     multi word phrase
///     [quantitative]
///     thick
///
/// Keywords are folded to lowercase. Duplicates are collapsed with a warning.
/// Throws ValidationError (message prefixed with "line N:") on malformed input.
LexiconLoad load_lexicon(std::istream& in, std::string name = "custom");

void write_lexicon(std::ostream& out, const KeywordSet& set);

}  // namespace tokenweight
