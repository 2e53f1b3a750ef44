#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fulfillkit/common.hpp"

namespace fulfillkit {

using TokenStream = std::vector<std::string>;
using StopWords = std::unordered_set<std::string>;
// Optional token normalizer applied after stop-word removal (e.g. a stemmer).
using Stemmer = std::function<std::string(std::string_view)>;

// Bundled English stop-word list.
const StopWords& default_stopwords();
// One word per line; blank lines and '#' comments ignored.
StopWords load_stopwords(const std::filesystem::path& path);

// Lowercases, splits on anything that is not a letter, digit, apostrophe or non-ASCII byte,
// drops apostrophes and removes stop words. Source order is preserved.
TokenStream tokenize(std::string_view text, const StopWords& stopwords, const Stemmer& stem = {});

// Vowel-group syllable heuristic: runs of [aeiouy], minus a silent trailing 'e', at least 1.
int count_syllables(std::string_view word);
// Segments between runs of '.', '!' or '?' that contain at least one word character.
int count_sentences(std::string_view text);

class UndefinedScore : public Error {
 public:
  explicit UndefinedScore(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// SMOG grade; throws UndefinedScore when the text has no sentence.
double smog_score(std::string_view text);
// SMOG grade or kMissing.
double smog_or_missing(std::string_view text);

// Category dictionary in the LIWC interchange shape.
class CategoryDictionary {
 public:
  struct Category {
    std::string name;
    std::unordered_set<std::string> exact;
    std::vector<std::string> prefixes;  // patterns written with a trailing '*'
  };

  CategoryDictionary() = default;
  explicit CategoryDictionary(std::vector<Category> categories);

  static CategoryDictionary parse(std::string_view content);
  static CategoryDictionary load(const std::filesystem::path& path);

  const std::vector<Category>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }
  std::vector<std::string> names() const;
  bool matches(std::size_t category, std::string_view token) const;

 private:
  std::vector<Category> categories_;
};

// Share of tokens matching each category, aligned with dict.categories(). Empty stream -> zeros.
Vector category_scores(const TokenStream& stream, const CategoryDictionary& dict);

struct CategorySelection {
  std::vector<std::size_t> selected;   // column indices, ascending
  std::vector<double> p_values;        // per column; NaN when skipped
  std::vector<std::size_t> skipped;    // zero variance in both groups
};

// Welch two-sample t-test per column (rows are samples); keeps columns with p < alpha.
// alpha <= 0 selects the Bonferroni default 0.05 / columns.
CategorySelection select_significant_categories(const Matrix& group_a, const Matrix& group_b, double alpha = 0.0);

}  // namespace fulfillkit
