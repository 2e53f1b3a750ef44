#pragma once

#include <span>

#include "fulfillkit/common.hpp"

namespace fulfillkit {

enum class Alternative { Greater, Less, TwoSided };

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
// Both variances zero: p = 1 for equal means, 0 otherwise.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Wilcoxon signed-rank test on paired samples. Zero differences are dropped and
// tied magnitudes receive midranks. The statistic is W+ (sum of ranks of a - b > 0).
// Exact null distribution for up to `exact_limit` non-zero pairs, normal approximation
// with continuity and tie correction beyond.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, Alternative alt,
                                int exact_limit = 20);
// The two code paths, exposed for cross-checking.
TestResult wilcoxon_exact(std::span<const double> a, std::span<const double> b, Alternative alt);
TestResult wilcoxon_normal(std::span<const double> a, std::span<const double> b, Alternative alt);

// Two-sided exact binomial test of `successes` out of `trials` against probability 0.5.
double binomial_two_sided_half(int successes, int trials);

double normal_cdf(double z);

}  // namespace fulfillkit
