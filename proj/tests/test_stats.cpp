#include <doctest.h>

#include "fulfillkit/stats.hpp"
#include "support.hpp"

using namespace fulfillkit;
using namespace testsupport;

TEST_CASE("welch_t_test matches a reference implementation") {
  const std::vector<double> a{1.2, 2.4, 3.1, 4.8, 5.0, 2.2}, b{2.9, 3.8, 4.4, 6.1, 5.5, 7.0, 6.6};
  const auto r = welch_t_test(a, b);
  CHECK(r.statistic == doctest::Approx(-2.449754144331599).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.032757776728963434).epsilon(1e-9));
}

TEST_CASE("welch_t_test edge cases") {
  Gen gen(1);
  const auto a = gen.values(100, 0.0, 1.0);
  const auto same = welch_t_test(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));
  const auto b = gen.values(100, 10.0, 1.0);
  CHECK(welch_t_test(a, b).p_value < 1e-10);
  CHECK(welch_t_test(a, b).p_value == welch_t_test(b, a).p_value);
  const std::vector<double> c{2, 2, 2}, d{2, 2}, e{3, 3};
  CHECK(welch_t_test(c, d).p_value == 1.0);
  CHECK(welch_t_test(c, e).p_value == 0.0);
}

TEST_CASE("wilcoxon exact path on all-positive differences") {
  for (int n = 1; n <= 10; ++n) {
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) a.push_back(i + 2.0), b.push_back(0.5 * i);
    const double p = wilcoxon_exact(a, b, Alternative::Greater).p_value;
    CHECK(p == doctest::Approx(std::ldexp(1.0, -n)).epsilon(1e-14));
    CHECK(p == doctest::Approx(wilcoxon_enumerate(a, b, 1)).epsilon(1e-14));
  }
  const std::vector<double> x{1, 2, 3, 4, 5}, y{0, 0, 0, 0, 0};
  CHECK(wilcoxon_signed_rank(x, y, Alternative::Greater).p_value == doctest::Approx(0.03125));
  CHECK(wilcoxon_signed_rank(x, x, Alternative::Greater).p_value == 1.0);
}

TEST_CASE("wilcoxon matches a reference value with a statistic") {
  const std::vector<double> a{3, 1, 4, 1.5, 5, 9, 2.6, 5.3}, b{1, 2, 0, 1, 2, 3, 1, 2};
  const auto r = wilcoxon_signed_rank(a, b, Alternative::Greater);
  CHECK(r.statistic == doctest::Approx(34.0));
  CHECK(r.p_value == doctest::Approx(0.01171875).epsilon(1e-12));
}

TEST_CASE("property: exact wilcoxon equals sign enumeration, ties included") {
  Gen gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = gen.integer(1, 12);
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = gen.integer(-3, 3);
      b[static_cast<std::size_t>(i)] = gen.integer(-3, 3);
    }
    for (auto [alt, code] : {std::pair{Alternative::Greater, 1}, {Alternative::Less, -1}, {Alternative::TwoSided, 0}})
      CHECK(wilcoxon_exact(a, b, alt).p_value == doctest::Approx(wilcoxon_enumerate(a, b, code)).epsilon(1e-12));
  }
}

TEST_CASE("exact and normal wilcoxon agree at n = 20") {
  Gen gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = gen.values(20, 0.3, 1.0), b = gen.values(20, 0.0, 1.0);
    for (auto alt : {Alternative::Greater, Alternative::Less, Alternative::TwoSided})
      CHECK(std::abs(wilcoxon_exact(a, b, alt).p_value - wilcoxon_normal(a, b, alt).p_value) < 0.01);
  }
}

TEST_CASE("binomial test against direct summation") {
  for (int n : {1, 5, 20, 50, 100})
    for (int k = 0; k <= n; k += std::max(1, n / 10))
      CHECK(binomial_two_sided_half(k, n) == doctest::Approx(binomial_two_sided_direct(k, n)).epsilon(1e-10));
  CHECK(binomial_two_sided_half(50, 50) == doctest::Approx(2.0 * std::ldexp(1.0, -50)));
}

TEST_CASE("normal_cdf reference points") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}
