#include <doctest.h>

#include "fulfillkit/features.hpp"
#include "fulfillkit/forest.hpp"
#include "fulfillkit/gbt.hpp"
#include "support.hpp"

using namespace fulfillkit;
using namespace testsupport;

namespace {

struct Labeled {
  Matrix X;
  std::vector<int> y;
};

Labeled separable(Gen& gen, int n, int noise_cols) {
  Labeled d{gen.matrix(n, 1 + noise_cols), {}};
  for (int i = 0; i < n; ++i) d.y.push_back(d.X(i, 0) > 0.2 ? 1 : 0);
  return d;
}

Labeled planted_corpus_features() {
  SynthConfig cfg = SynthConfig::defaults();
  const Corpus c = generate_synthetic(cfg, 21);
  FeatureContext ctx;
  std::vector<std::string> ids;
  std::vector<int> y;
  for (const auto& p : c.projects()) {
    ids.push_back(p.id);
    y.push_back(c.label_for(p.id)->status == DeliveryStatus::Late ? 1 : 0);
  }
  return {log1p_matrix(build_feature_matrix(c, ctx, TimePoint::TP4, ids)).values, y};
}

}  // namespace

TEST_CASE("a single split separates two classes") {
  Gen gen(1);
  const Labeled d = separable(gen, 200, 0);
  GbtParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  const TreeEnsemble m = gbt_fit(d.X, d.y, p, 3);
  REQUIRE(m.trees.size() == 1);
  CHECK(m.trees[0].depth() == 1);
  for (int i = 0; i < 200; ++i) CHECK((gbt_predict(m, d.X.row(i)) > 0.5) == (d.y[static_cast<std::size_t>(i)] == 1));
}

TEST_CASE("infinite gamma yields the base rate") {
  Gen gen(2);
  const Labeled d = separable(gen, 100, 2);
  GbtParams p;
  p.gamma = std::numeric_limits<double>::infinity();
  const TreeEnsemble m = gbt_fit(d.X, d.y, p, 1);
  const double rate = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 100.0;
  for (int i = 0; i < 10; ++i) CHECK(gbt_predict(m, d.X.row(i)) == doctest::Approx(rate));
  for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
}

TEST_CASE("an empty ensemble predicts the sigmoid of its base score") {
  TreeEnsemble m;
  m.base_score = 0.7;
  m.n_features = 2;
  CHECK(gbt_predict(m, Eigen::RowVector2d(1, 2)) == doctest::Approx(sigmoid(0.7)));
}

TEST_CASE("training log-loss falls every round on the planted corpus") {
  const Labeled d = planted_corpus_features();
  GbtTrace trace;
  gbt_fit(d.X, d.y, GbtParams{}, 5, &trace);
  REQUIRE(trace.log_loss.size() == 201);
  for (std::size_t i = 1; i < trace.log_loss.size(); ++i) CHECK(trace.log_loss[i] < trace.log_loss[i - 1]);
}

TEST_CASE("property: predictions ignore columns no tree splits on") {
  Gen gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Labeled d = separable(gen, 150, 3);
    GbtParams p;
    p.n_trees = 20;
    const TreeEnsemble m = gbt_fit(d.X, d.y, p, static_cast<std::uint64_t>(trial));
    std::vector<bool> used(4, false);
    for (const auto& t : m.trees)
      for (int f = 0; f < 4; ++f) used[static_cast<std::size_t>(f)] = used[static_cast<std::size_t>(f)] || t.uses_feature(f);
    for (int i = 0; i < 20; ++i) {
      Eigen::RowVectorXd x = d.X.row(i);
      const double base = gbt_predict(m, x);
      for (int f = 0; f < 4; ++f)
        if (!used[static_cast<std::size_t>(f)]) x(f) = gen.normal(0, 100);
      CHECK(gbt_predict(m, x) == base);
    }
  }
}

TEST_CASE("missing values route and infinities are rejected") {
  Gen gen(4);
  Labeled d = separable(gen, 200, 1);
  for (int i = 0; i < 200; i += 7) d.X(i, 0) = kMissing;
  const TreeEnsemble m = gbt_fit(d.X, d.y, GbtParams{}, 1);
  const double p = gbt_predict(m, Eigen::RowVector2d(kMissing, 0.0));
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  d.X(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(gbt_fit(d.X, d.y, GbtParams{}, 1), Error);
}

TEST_CASE("ensembles round-trip through JSON") {
  Gen gen(5);
  const Labeled d = separable(gen, 120, 2);
  const TreeEnsemble m = gbt_fit(d.X, d.y, GbtParams{}, 8);
  const TreeEnsemble back = gbt_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back == m);
  CHECK(gbt_predict_all(back, d.X) == gbt_predict_all(m, d.X));
  CHECK(gbt_fit(d.X, d.y, GbtParams{}, 8) == m);
}

TEST_CASE("random forest on a separable feature") {
  Gen gen(6);
  const Labeled d = separable(gen, 200, 0);
  RfParams p;
  p.n_trees = 50;
  const RandomForestModel m = rf_fit(d.X, d.y, p, 1);
  int correct = 0;
  for (int i = 0; i < 200; ++i) correct += m.predict(d.X.row(i)) == d.y[static_cast<std::size_t>(i)];
  CHECK(correct == 200);
  const RandomForestModel again = rf_fit(d.X, d.y, p, 1);
  for (int i = 0; i < 50; ++i) CHECK(again.vote(d.X.row(i)) == m.vote(d.X.row(i)));
  CHECK(again.oob == m.oob);
}

TEST_CASE("permutation importance of unrelated features stays near zero") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Gen gen(seed);
    const Matrix X = gen.matrix(200, 4);
    const std::vector<int> y = gen.labels(200);
    RfParams p;
    p.n_trees = 100;
    const RandomForestModel m = rf_fit(X, y, p, seed);
    const Vector z = importance_z(rf_permutation_importance(m, X, y, seed));
    CHECK(z.cwiseAbs().maxCoeff() < 3.0);
  }
}

TEST_CASE("permutation importance ranks the signal feature first") {
  Gen gen(12);
  const Labeled d = separable(gen, 300, 4);
  RfParams p;
  p.n_trees = 100;
  const RandomForestModel m = rf_fit(d.X, d.y, p, 2);
  const Vector z = importance_z(rf_permutation_importance(m, d.X, d.y, 2));
  Eigen::Index best;
  z.maxCoeff(&best);
  CHECK(best == 0);
}
