#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fulfillkit/selection.hpp"
#include "support.hpp"

using namespace fulfillkit;
using namespace testsupport;

namespace {

Matrix correlated_pair(Gen& gen, Eigen::Index n, double rho) {
  Matrix X(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = gen.normal(0, 1);
    X(i, 0) = a;
    X(i, 1) = rho * a + std::sqrt(1 - rho * rho) * gen.normal(0, 1);
  }
  return X;
}

// x1 equals the label; the other columns carry no in-sample association with it.
Matrix label_copy_design(Gen& gen, std::vector<int>& y, Eigen::Index half, Eigen::Index noise) {
  const Matrix N = class_mirrored_noise(gen, y, half, noise);
  Matrix X(2 * half, 1 + noise);
  for (Eigen::Index i = 0; i < 2 * half; ++i) X(i, 0) = y[static_cast<std::size_t>(i)];
  X.rightCols(noise) = N;
  return X;
}

BorutaParams quick_boruta(int runs) {
  BorutaParams p;
  p.n_runs = runs;
  p.forest.n_trees = 100;
  return p;
}

}  // namespace

TEST_CASE("orthogonal centered columns have unit VIF") {
  Matrix X(4, 2);
  X << 1, 1, -1, 1, 1, -1, -1, -1;
  const VifScores s = vif_scores(X);
  CHECK(s.vif[0] == doctest::Approx(1.0));
  CHECK(s.vif[1] == doctest::Approx(1.0));
  CHECK(vif_eliminate(X).eliminated.empty());
}

TEST_CASE("VIF of a correlated pair matches the direct regression") {
  Gen gen(1);
  const Matrix X = correlated_pair(gen, 5000, 0.8);
  const VifScores s = vif_scores(X);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(s.vif[static_cast<std::size_t>(j)] == doctest::Approx(vif_direct(X, j)).epsilon(1e-9));
  CHECK(s.vif[0] == doctest::Approx(1 / (1 - 0.64)).epsilon(0.05));
}

TEST_CASE("property: VIF agrees with the direct oracle on random designs") {
  Gen gen(2);
  for (int trial = 0; trial < 25; ++trial) {
    const auto p = gen.integer(2, 6);
    Matrix X = gen.matrix(60, p);
    X.col(p - 1) += 0.7 * X.col(0);
    const VifScores s = vif_scores(X);
    for (Eigen::Index j = 0; j < p; ++j) CHECK(s.vif[static_cast<std::size_t>(j)] == doctest::Approx(vif_direct(X, j)).epsilon(1e-9));
  }
}

TEST_CASE("a duplicated column is capped and one copy removed") {
  Gen gen(3);
  Matrix X = gen.matrix(50, 3);
  X.col(2) = X.col(0);
  const VifScores s = vif_scores(X);
  CHECK(s.capped[0]);
  CHECK(s.capped[2]);
  CHECK(s.vif[0] == kVifCap);
  const VifReport r = vif_eliminate(X);
  REQUIRE(r.eliminated.size() == 1);
  CHECK(r.eliminated[0] == 0);
  for (int c : r.retained) CHECK(r.final_vif[static_cast<std::size_t>(c)] < 10);
}

TEST_CASE("a near-exact linear combination loses one column") {
  Gen gen(4);
  Matrix X = gen.matrix(200, 3);
  X.col(2) = X.col(0) + X.col(1) + 1e-3 * gen.matrix(200, 1);
  const VifReport r = vif_eliminate(X);
  REQUIRE(r.eliminated.size() == 1);
  REQUIRE(r.retained.size() == 2);
  Matrix kept(200, 2);
  for (int k = 0; k < 2; ++k) kept.col(k) = X.col(r.retained[static_cast<std::size_t>(k)]);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(vif_direct(kept, j) < 10);
}

TEST_CASE("constant columns are removed as degenerate") {
  Gen gen(5);
  Matrix X = gen.matrix(30, 3);
  X.col(1).setConstant(2.0);
  const VifReport r = vif_eliminate(X);
  REQUIRE(r.eliminated.size() == 1);
  CHECK(r.eliminated[0] == 1);
  CHECK(r.degenerate[1]);
  CHECK(std::isnan(r.vif_at_removal[0]));
}

TEST_CASE("property: elimination terminates with every survivor under the threshold") {
  Gen gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = gen.integer(2, 8);
    Matrix X = gen.matrix(80, p);
    for (Eigen::Index j = 1; j < p; ++j)
      if (gen.coin(0.5)) X.col(j) = X.col(gen.integer(0, j - 1)) * gen.uniform(0.5, 2) + 0.05 * gen.matrix(80, 1);
    const VifReport r = vif_eliminate(X);
    CHECK(r.eliminated.size() <= static_cast<std::size_t>(p - 1));
    CHECK(r.retained.size() + r.eliminated.size() == static_cast<std::size_t>(p));
    for (int c : r.retained) {
      const double v = r.final_vif[static_cast<std::size_t>(c)];
      CHECK((v < 10 || r.capped[static_cast<std::size_t>(c)]));
    }
  }
}

TEST_CASE("Boruta confirms the label copy and rejects noise") {
  Gen gen(42);
  std::vector<int> y;
  const Matrix X = label_copy_design(gen, y, 100, 4);
  const BorutaResult r = boruta_select(X, y, quick_boruta(50), 42);
  CHECK(r.status[0] == BorutaStatus::Confirmed);
  CHECK(r.hits[0] == 50);
  for (std::size_t j = 1; j < 5; ++j) CHECK(r.status[j] == BorutaStatus::Rejected);
  CHECK(r.confirmed() == std::vector<int>{0});
}

TEST_CASE("Boruta results do not depend on the thread count") {
  Gen gen(8);
  const std::vector<int> y = gen.labels(120);
  Matrix X = gen.matrix(120, 3);
  for (Eigen::Index i = 0; i < 120; ++i) X(i, 0) += 2.0 * y[static_cast<std::size_t>(i)];
  const BorutaResult a = boruta_select(X, y, quick_boruta(20), 3, 1);
  const BorutaResult b = boruta_select(X, y, quick_boruta(20), 3, 4);
  CHECK(a.hits == b.hits);
  CHECK(a.status == b.status);
  CHECK(a.z_mean == b.z_mean);
}

TEST_CASE("Boruta rejects fewer than twenty runs and a single class") {
  Gen gen(9);
  const Matrix X = gen.matrix(40, 2);
  const std::vector<int> y = gen.labels(40);
  CHECK_THROWS_AS(boruta_select(X, y, quick_boruta(10), 1), Error);
  CHECK_THROWS_AS(boruta_select(X, std::vector<int>(40, 1), quick_boruta(20), 1), Error);
}

TEST_CASE("an unreachable alpha leaves every feature tentative") {
  for (int hits = 0; hits <= 50; ++hits) CHECK(boruta_status(hits, 50, 1e-300) == BorutaStatus::Tentative);
}

TEST_CASE("boruta status follows the exact binomial test") {
  for (int hits = 0; hits <= 30; ++hits) {
    double p = 0;
    const BorutaStatus s = boruta_status(hits, 30, 0.05, &p);
    CHECK(p == doctest::Approx(binomial_two_sided_direct(hits, 30)));
    if (p >= 0.05) CHECK(s == BorutaStatus::Tentative);
    else CHECK(s == (2 * hits > 30 ? BorutaStatus::Confirmed : BorutaStatus::Rejected));
  }
}

TEST_CASE("property: raising alpha never turns confirmed into rejected") {
  const double alphas[] = {1e-6, 1e-3, 0.01, 0.05, 0.1, 0.3, 0.9};
  for (int n = 20; n <= 60; n += 10)
    for (int hits = 0; hits <= n; ++hits)
      for (std::size_t a = 1; a < std::size(alphas); ++a) {
        const BorutaStatus lo = boruta_status(hits, n, alphas[a - 1]);
        const BorutaStatus hi = boruta_status(hits, n, alphas[a]);
        if (lo == BorutaStatus::Confirmed) CHECK(hi == BorutaStatus::Confirmed);
        if (lo == BorutaStatus::Rejected) CHECK(hi == BorutaStatus::Rejected);
      }
}

TEST_CASE("stepwise AIC drops a noise regressor") {
  Gen gen(10);
  const Matrix X = gen.matrix(200, 2);
  Vector y = 3.0 * X.col(0);
  for (Eigen::Index i = 0; i < 200; ++i) y(i) += gen.normal(0, 1);
  const StepwiseResult r = stepwise_aic(X, y);
  CHECK(r.retained == std::vector<int>{0});
  const auto sse = [&](const Matrix& D) {
    const Vector beta = ols_normal_equations(D, y);
    return (y - (D * beta.tail(D.cols())).array().matrix() - Vector::Constant(200, beta(0))).squaredNorm();
  };
  CHECK(aic_value(sse(X.leftCols(1)), 200, 1) < aic_value(sse(X), 200, 2));
}

TEST_CASE("stepwise AIC mostly keeps the intercept alone on pure noise") {
  int empty = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Gen gen(seed);
    const Matrix X = gen.matrix(200, 1);
    const Vector y = gen.matrix(200, 1).col(0);
    empty += stepwise_aic(X, y).retained.empty();
  }
  MESSAGE("intercept-only in " << empty << "/20 seeds");
  CHECK(empty >= 14);
}

TEST_CASE("a perfect predictor is retained with a finite AIC") {
  Gen gen(11);
  const Matrix X = gen.matrix(50, 2);
  const Vector y = 2.0 * X.col(1);
  const StepwiseResult r = stepwise_aic(X, y);
  CHECK(std::find(r.retained.begin(), r.retained.end(), 1) != r.retained.end());
  for (double a : r.aic_path) CHECK(std::isfinite(a));
}

TEST_CASE("a singular full model starts forward from the intercept") {
  Gen gen(12);
  Matrix X = gen.matrix(60, 3);
  X.col(2) = X.col(0);
  Vector y = X.col(1);
  for (Eigen::Index i = 0; i < 60; ++i) y(i) += gen.normal(0, 0.5);
  const StepwiseResult r = stepwise_aic(X, y);
  CHECK(r.forward_start);
  CHECK(r.retained == std::vector<int>{1});
}

TEST_CASE("property: the stepwise AIC path strictly decreases") {
  Gen gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = gen.integer(1, 6);
    const Matrix X = gen.matrix(100, p);
    Vector y = Vector::Zero(100);
    for (Eigen::Index j = 0; j < p; ++j)
      if (gen.coin(0.5)) y += gen.uniform(-1, 1) * X.col(j);
    for (Eigen::Index i = 0; i < 100; ++i) y(i) += gen.normal(0, 1);
    const StepwiseResult r = stepwise_aic(X, y);
    REQUIRE_FALSE(r.aic_path.empty());
    for (std::size_t i = 1; i < r.aic_path.size(); ++i) CHECK(r.aic_path[i] < r.aic_path[i - 1]);
  }
}

TEST_CASE("selection CSVs list one row per feature") {
  Gen gen(14);
  const Matrix X = gen.matrix(40, 2);
  std::ostringstream out;
  write_vif_csv(out, vif_eliminate(X), {"a", "b"}, "test");
  const std::string s = out.str();
  CHECK(s.find("\na,") != std::string::npos);
  CHECK(s.find("\nb,") != std::string::npos);
}
