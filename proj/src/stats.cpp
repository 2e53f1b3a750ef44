#include "fulfillkit/stats.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace fulfillkit {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

Moments moments(std::span<const double> x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

struct SignedRanks {
  std::vector<double> ranks;  // midranks of |d| over non-zero differences
  std::vector<bool> positive;
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

SignedRanks signed_ranks(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw data_error("wilcoxon: paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  SignedRanks out;
  out.ranks.assign(d.size(), 0.0);
  out.positive.assign(d.size(), false);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) out.ranks[order[k]] = midrank;
    const double t = static_cast<double>(j - i);
    out.tie_term += t * t * t - t;
    i = j;
  }
  for (std::size_t i = 0; i < d.size(); ++i) out.positive[i] = d[i] > 0;
  return out;
}

double w_plus(const SignedRanks& sr) {
  double w = 0.0;
  for (std::size_t i = 0; i < sr.ranks.size(); ++i)
    if (sr.positive[i]) w += sr.ranks[i];
  return w;
}

}  // namespace

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal_distribution<double>(), z); }

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw data_error("welch_t_test: each sample needs at least 2 values");
  const auto ma = moments(a), mb = moments(b);
  const double sa = ma.var / static_cast<double>(a.size());
  const double sb = mb.var / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (!(se2 > 0)) return {0.0, ma.mean == mb.mean ? 1.0 : 0.0};
  const double t = (ma.mean - mb.mean) / std::sqrt(se2);
  const double dof = se2 * se2 / (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  boost::math::students_t_distribution<double> dist(dof);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::min(1.0, p)};
}

TestResult wilcoxon_exact(std::span<const double> a, std::span<const double> b, Alternative alt) {
  const auto sr = signed_ranks(a, b);
  const std::size_t n = sr.ranks.size();
  if (n == 0) return {0.0, 1.0};
  if (n > 62) throw numeric_error("wilcoxon_exact: too many pairs for enumeration");
  // Doubled ranks are integers even with midranks; count sign assignments per doubled W+.
  std::vector<int> r2(n);
  int total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2[i] = static_cast<int>(std::lround(2.0 * sr.ranks[i]));
    total += r2[i];
  }
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  int reach = 0;
  for (int r : r2) {
    for (int s = reach; s >= 0; --s)
      if (ways[static_cast<std::size_t>(s)] != 0.0) ways[static_cast<std::size_t>(s + r)] += ways[static_cast<std::size_t>(s)];
    reach += r;
  }
  const double all = std::ldexp(1.0, static_cast<int>(n));
  const double w = w_plus(sr);
  const int w2 = static_cast<int>(std::lround(2.0 * w));
  double upper = 0.0, lower = 0.0;
  for (int s = 0; s <= total; ++s) {
    if (s >= w2) upper += ways[static_cast<std::size_t>(s)];
    if (s <= w2) lower += ways[static_cast<std::size_t>(s)];
  }
  upper /= all;
  lower /= all;
  double p = alt == Alternative::Greater ? upper : alt == Alternative::Less ? lower : std::min(1.0, 2.0 * std::min(upper, lower));
  return {w, p};
}

TestResult wilcoxon_normal(std::span<const double> a, std::span<const double> b, Alternative alt) {
  const auto sr = signed_ranks(a, b);
  const double n = static_cast<double>(sr.ranks.size());
  if (n == 0) return {0.0, 1.0};
  const double w = w_plus(sr);
  const double mean = n * (n + 1) / 4.0;
  const double var = n * (n + 1) * (2 * n + 1) / 24.0 - sr.tie_term / 48.0;
  if (!(var > 0)) return {w, 1.0};
  const double sd = std::sqrt(var);
  double p = 1.0;
  switch (alt) {
    case Alternative::Greater: p = 1.0 - normal_cdf((w - mean - 0.5) / sd); break;
    case Alternative::Less: p = normal_cdf((w - mean + 0.5) / sd); break;
    case Alternative::TwoSided: {
      const double z = std::max(0.0, std::abs(w - mean) - 0.5) / sd;
      p = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
      break;
    }
  }
  return {w, p};
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, Alternative alt, int exact_limit) {
  if (a.size() != b.size()) throw data_error("wilcoxon: paired samples differ in length");
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < a.size(); ++i) nonzero += (a[i] - b[i] != 0.0);
  if (static_cast<int>(nonzero) <= exact_limit) return wilcoxon_exact(a, b, alt);
  return wilcoxon_normal(a, b, alt);
}

double binomial_two_sided_half(int successes, int trials) {
  if (trials <= 0) return 1.0;
  boost::math::binomial_distribution<double> dist(trials, 0.5);
  const double lower = boost::math::cdf(dist, successes);
  const double upper = successes == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, successes - 1));
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

}  // namespace fulfillkit
