#include <doctest.h>

#include <algorithm>

#include "fulfillkit/text.hpp"
#include "support.hpp"

using namespace fulfillkit;
using namespace testsupport;

namespace {

std::string repeat_sentence(const std::string& s, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += s + " ";
  return out;
}

const char* kDic =
    "%\n1\tshipping\n2\tpositive\n%\n"
    "ship*\t1\n"
    "deliver\t1\n"
    "great\t2\n"
    "good\t2\n";

}  // namespace

TEST_CASE("tokenize lowercases, strips punctuation and drops stop words") {
  CHECK(tokenize("Thank you!!", StopWords{"you"}) == TokenStream{"thank"});
  CHECK(tokenize("", StopWords{}).empty());
  CHECK(tokenize("Print, sign & SHIP", StopWords{}) == TokenStream{"print", "sign", "ship"});
  CHECK(tokenize("we'll ship", StopWords{}) == TokenStream{"well", "ship"});
}

TEST_CASE("tokenize applies an optional stemming hook") {
  const Stemmer chop = [](std::string_view w) { return std::string(w.substr(0, 4)); };
  CHECK(tokenize("shipping websites", StopWords{}, chop) == TokenStream{"ship", "webs"});
}

TEST_CASE("bundled and file stop-word lists agree") {
  const StopWords& builtin = default_stopwords();
  CHECK(builtin.count("the") == 1);
  const StopWords file = load_stopwords(FULFILLKIT_DATA_DIR "/stopwords_en.txt");
  CHECK(file == builtin);
}

TEST_CASE("syllables and sentences follow the vowel-group heuristic") {
  CHECK(count_syllables("beautiful") == 3);
  CHECK(count_syllables("make") == 1);
  CHECK(count_syllables("rhythm") == 1);
  CHECK(count_syllables("the") == 1);
  CHECK(count_sentences("One. Two!! Three?") == 3);
  CHECK(count_sentences("...") == 0);
}

TEST_CASE("smog_score evaluates the grade formula") {
  const std::string text = repeat_sentence("Beautiful day.", 30);
  CHECK(smog_score(text) == doctest::Approx(1.0430 * std::sqrt(30.0 * 30.0 / 30.0) + 3.1291).epsilon(1e-12));
  CHECK(smog_score(text) == doctest::Approx(8.842).epsilon(1e-3));
  CHECK(smog_score("Big dog. Red cat.") == doctest::Approx(3.1291));
  CHECK_THROWS_AS(smog_score(""), UndefinedScore);
  CHECK(is_missing(smog_or_missing("")));
}

TEST_CASE("property: smog_score is invariant under sentence reordering") {
  Gen gen(5);
  const std::vector<std::string> sentences = {"Fantastic engineering collaboration.", "We ship soon.",
                                              "Unbelievable manufacturing difficulties arose.", "Thanks!",
                                              "Everything is wonderful?"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> order = sentences;
    std::shuffle(order.begin(), order.end(), gen.engine());
    std::string a, b;
    for (const auto& s : sentences) a += s + " ";
    for (const auto& s : order) b += s + " ";
    CHECK(smog_score(a) == doctest::Approx(smog_score(b)).epsilon(1e-15));
  }
}

TEST_CASE("property: tokenize is idempotent on its own output") {
  Gen gen(9);
  const std::string alphabet = "abcdeXYZ '!,.?-0123";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int len = gen.integer(0, 40);
    for (int i = 0; i < len; ++i) text += alphabet[static_cast<std::size_t>(gen.integer(0, static_cast<int>(alphabet.size()) - 1))];
    const TokenStream once = tokenize(text, default_stopwords());
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined, default_stopwords()) == once);
  }
}

TEST_CASE("category_scores are match shares") {
  const CategoryDictionary dict = CategoryDictionary::parse(kDic);
  REQUIRE(dict.size() == 2);
  CHECK(dict.names() == std::vector<std::string>{"shipping", "positive"});
  Vector s = category_scores({"ship", "shipped"}, dict);
  CHECK(s(0) == doctest::Approx(1.0));
  s = category_scores({}, dict);
  CHECK(s.isZero());
  s = category_scores({"great", "good", "c", "d"}, dict);
  CHECK(s(1) == doctest::Approx(0.5));
  CHECK(s(0) == doctest::Approx(0.0));
}

TEST_CASE("dictionary parsing rejects malformed content") {
  CHECK_THROWS_AS(CategoryDictionary::parse("ship\t1\n"), Error);
  CHECK_THROWS_AS(CategoryDictionary::parse("%\n1\ta\n%\nword\t7\n"), Error);
}

TEST_CASE("property: category scores stay in [0,1] and shrink as unrelated tokens are appended") {
  const CategoryDictionary dict = CategoryDictionary::parse(kDic);
  Gen gen(3);
  const std::vector<std::string> vocab = {"ship", "shipping", "deliver", "great", "good", "box", "late"};
  for (int trial = 0; trial < 100; ++trial) {
    TokenStream t;
    const int n = gen.integer(1, 12);
    for (int i = 0; i < n; ++i) t.push_back(vocab[static_cast<std::size_t>(gen.integer(0, 6))]);
    Vector prev = category_scores(t, dict);
    CHECK((prev.array() >= 0).all());
    CHECK((prev.array() <= 1).all());
    for (int i = 0; i < 5; ++i) {
      t.push_back("unrelated");
      const Vector next = category_scores(t, dict);
      CHECK((next.array() <= prev.array() + 1e-15).all());
      prev = next;
    }
  }
}

TEST_CASE("select_significant_categories") {
  Gen gen(21);
  Matrix a = gen.matrix(100, 4), b = a;
  SUBCASE("identical groups select nothing") { CHECK(select_significant_categories(a, b, 0.05).selected.empty()); }
  SUBCASE("a shifted category is selected") {
    Matrix c = gen.matrix(100, 4);
    c.col(2).array() += 10.0;
    const auto sel = select_significant_categories(a, c, 0.00078);
    CHECK(sel.selected == std::vector<std::size_t>{2});
    CHECK(sel.p_values[2] < 1e-10);
  }
  SUBCASE("alpha one selects every testable category") {
    Matrix c = gen.matrix(100, 4);
    c.col(3).setZero();
    Matrix d = a;
    d.col(3).setZero();
    const auto sel = select_significant_categories(d, c, 1.0);
    CHECK(sel.selected == std::vector<std::size_t>{0, 1, 2});
    CHECK(sel.skipped == std::vector<std::size_t>{3});
  }
}
