#include "fulfillkit/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "fulfillkit/stats.hpp"

namespace fulfillkit {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
    default: return false;
  }
}

constexpr const char* kDefaultStopwords[] = {
    "a",       "about",   "above",  "after",   "again",   "against", "all",     "am",      "an",     "and",
    "any",     "are",     "as",     "at",      "be",      "because", "been",    "before",  "being",  "below",
    "between", "both",    "but",    "by",      "can",     "could",   "did",     "do",      "does",   "doing",
    "down",    "during",  "each",   "few",     "for",     "from",    "further", "had",     "has",    "have",
    "having",  "he",      "her",    "here",    "hers",    "herself", "him",     "himself", "his",    "how",
    "i",       "if",      "in",     "into",    "is",      "it",      "its",     "itself",  "just",   "me",
    "more",    "most",    "my",     "myself",  "no",      "nor",     "not",     "now",     "of",     "off",
    "on",      "once",    "only",   "or",      "other",   "ought",   "our",     "ours",    "ourselves", "out",
    "over",    "own",     "same",   "she",     "should",  "so",      "some",    "such",    "than",   "that",
    "the",     "their",   "theirs", "them",    "themselves", "then", "there",   "these",   "they",   "this",
    "those",   "through", "to",     "too",     "under",   "until",   "up",      "very",    "was",    "we",
    "were",    "what",    "where",  "which",   "while",   "who",     "whom",    "why",     "will",   "with",
    "would",   "you",     "your",   "yours",   "yourself", "yourselves", "s",   "t",       "don",    "dont",
    "im",      "ive",     "youre",  "its",     "also",    "us"};

}  // namespace

const StopWords& default_stopwords() {
  static const StopWords words(std::begin(kDefaultStopwords), std::end(kDefaultStopwords));
  return words;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open stopword file " + path.string());
  StopWords out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string w;
    if (ss >> w && w[0] != '#') {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      out.insert(w);
    }
  }
  return out;
}

TokenStream tokenize(std::string_view text, const StopWords& stopwords, const Stemmer& stem) {
  TokenStream out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords.count(cur)) out.push_back(stem ? stem(cur) : cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      if (c == '\'') continue;
      cur += c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    } else {
      flush();
    }
  }
  flush();
  if (stem) std::erase_if(out, [](const std::string& t) { return t.empty(); });
  return out;
}

int count_syllables(std::string_view word) {
  std::string w;
  for (unsigned char c : word)
    if (std::isalpha(c)) w += static_cast<char>(std::tolower(c));
  int groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (w.size() > 1 && w.back() == 'e' && !is_vowel(w[w.size() - 2]) && groups > 1) --groups;
  return std::max(1, groups);
}

int count_sentences(std::string_view text) {
  int n = 0;
  bool has_word = false;
  for (unsigned char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      if (has_word) ++n;
      has_word = false;
    } else if (std::isalnum(c)) {
      has_word = true;
    }
  }
  return n + (has_word ? 1 : 0);
}

double smog_score(std::string_view text) {
  const int sentences = count_sentences(text);
  if (sentences == 0) throw UndefinedScore("smog_score: text has no sentence");
  int poly = 0;
  for (const auto& w : tokenize(text, {}))
    if (count_syllables(w) >= 3) ++poly;
  return 1.0430 * std::sqrt(poly * 30.0 / sentences) + 3.1291;
}

double smog_or_missing(std::string_view text) {
  return count_sentences(text) == 0 ? kMissing : smog_score(text);
}

CategoryDictionary::CategoryDictionary(std::vector<Category> categories) : categories_(std::move(categories)) {
  std::unordered_set<std::string> names;
  for (const auto& c : categories_) {
    if (!names.insert(c.name).second) throw data_error("dictionary: duplicate category '" + c.name + "'");
    if (c.exact.empty() && c.prefixes.empty()) throw data_error("dictionary: category '" + c.name + "' has no patterns");
  }
}

CategoryDictionary CategoryDictionary::parse(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  int percent_lines = 0;
  std::map<std::string, std::size_t> id_to_slot;
  std::vector<Category> cats;
  auto fail = [&](const std::string& msg) { throw data_error("dictionary line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.find_first_not_of(" \t") == line.find('%') && line.find_first_not_of("% \t") == std::string::npos) {
      ++percent_lines;
      continue;
    }
    if (percent_lines == 0) fail("expected '%' header");
    std::istringstream ss(line);
    if (percent_lines == 1) {
      std::string id, name;
      if (!(ss >> id >> name)) fail("expected '<id> <name>'");
      if (id_to_slot.count(id)) fail("duplicate category id " + id);
      id_to_slot[id] = cats.size();
      cats.push_back({name, {}, {}});
      continue;
    }
    if (percent_lines > 2) fail("unexpected '%' section");
    std::string pattern;
    ss >> pattern;
    std::transform(pattern.begin(), pattern.end(), pattern.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::string rest;
    std::getline(ss, rest);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream ids(rest);
    int count = 0;
    for (std::string id; ids >> id; ++count) {
      auto it = id_to_slot.find(id);
      if (it == id_to_slot.end()) fail("unknown category id " + id);
      auto& cat = cats[it->second];
      if (pattern.size() > 1 && pattern.back() == '*') cat.prefixes.push_back(pattern.substr(0, pattern.size() - 1));
      else cat.exact.insert(pattern);
    }
    if (count == 0) fail("pattern '" + pattern + "' lists no category");
  }
  if (percent_lines < 2) throw data_error("dictionary: missing '%' delimited header");
  return CategoryDictionary(std::move(cats));
}

CategoryDictionary CategoryDictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open dictionary " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::string> CategoryDictionary::names() const {
  std::vector<std::string> out;
  for (const auto& c : categories_) out.push_back(c.name);
  return out;
}

bool CategoryDictionary::matches(std::size_t category, std::string_view token) const {
  const auto& c = categories_[category];
  if (c.exact.count(std::string(token))) return true;
  return std::any_of(c.prefixes.begin(), c.prefixes.end(),
                     [&](const std::string& p) { return token.substr(0, p.size()) == p; });
}

Vector category_scores(const TokenStream& stream, const CategoryDictionary& dict) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dict.size()));
  if (stream.empty()) return out;
  for (std::size_t c = 0; c < dict.size(); ++c) {
    std::size_t hits = 0;
    for (const auto& t : stream) hits += dict.matches(c, t);
    out(static_cast<Eigen::Index>(c)) = static_cast<double>(hits) / static_cast<double>(stream.size());
  }
  return out;
}

CategorySelection select_significant_categories(const Matrix& group_a, const Matrix& group_b, double alpha) {
  if (group_a.cols() != group_b.cols()) throw data_error("select_significant_categories: column mismatch");
  if (group_a.rows() < 2 || group_b.rows() < 2)
    throw data_error("select_significant_categories: each group needs at least 2 samples");
  const auto cols = static_cast<std::size_t>(group_a.cols());
  if (alpha <= 0) alpha = 0.05 / static_cast<double>(std::max<std::size_t>(cols, 1));
  CategorySelection out;
  out.p_values.assign(cols, kMissing);
  for (std::size_t c = 0; c < cols; ++c) {
    const Vector a = group_a.col(static_cast<Eigen::Index>(c));
    const Vector b = group_b.col(static_cast<Eigen::Index>(c));
    const bool flat_a = (a.array() == a(0)).all(), flat_b = (b.array() == b(0)).all();
    if (flat_a && flat_b) {
      out.skipped.push_back(c);
      continue;
    }
    const double p = welch_t_test({a.data(), static_cast<std::size_t>(a.size())},
                                  {b.data(), static_cast<std::size_t>(b.size())}).p_value;
    out.p_values[c] = p;
    if (p < alpha) out.selected.push_back(c);
  }
  return out;
}

}  // namespace fulfillkit
