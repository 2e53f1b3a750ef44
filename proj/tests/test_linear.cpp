#include <doctest.h>

#include "fulfillkit/linear.hpp"
#include "support.hpp"

using namespace fulfillkit;
using namespace testsupport;

namespace {

// Well-conditioned design with a planted linear response.
struct System {
  Matrix X;
  Vector y;
};

System random_system(Gen& gen, int n, int p, double noise) {
  System s{gen.matrix(n, p), Vector()};
  for (Eigen::Index j = 0; j < s.X.cols(); ++j) s.X.col(j).array() = s.X.col(j).array() * gen.uniform(0.5, 3.0) + gen.uniform(-5, 5);
  const Vector beta = gen.vector(p);
  s.y = (s.X * beta).array() + 1.5;
  s.y += gen.vector(n, noise);
  return s;
}

Vector planted_days(Gen& gen, const Matrix& X, double lambda, double noise) {
  Vector days(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double z = 0.8 + 0.3 * X(i, 0) - 0.2 * X(i, 1) + gen.normal(0.0, noise);
    days(i) = lambda == 0.0 ? std::exp(z) : std::pow(lambda * z + 1.0, 1.0 / lambda);
  }
  return days;
}

}  // namespace

TEST_CASE("Imputer fills missing values with training medians") {
  Matrix X(4, 2);
  X << 1, kMissing, 2, 5, 9, 7, kMissing, 6;
  const Imputer imp = Imputer::fit(X);
  CHECK(imp.medians(0) == 2.0);
  CHECK(imp.medians(1) == 6.0);
  const Matrix F = imp.apply(X);
  CHECK(F(3, 0) == 2.0);
  CHECK(F(0, 1) == 6.0);
  Matrix empty = Matrix::Constant(2, 1, kMissing);
  CHECK(Imputer::fit(empty).medians(0) == 0.0);
}

TEST_CASE("property: ols_fit agrees with the normal equations") {
  Gen gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const System s = random_system(gen, gen.integer(20, 80), gen.integer(1, 6), 0.3);
    const OlsFit fit = ols_fit(s.X, s.y);
    const Vector ref = ols_normal_equations(s.X, s.y);
    CHECK(std::abs(fit.intercept - ref(0)) < 1e-8);
    CHECK((fit.coef - ref.tail(s.X.cols())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("Box-Cox apply") {
  BoxCoxTransform t{1.0, 37.0};
  CHECK(boxcox_apply(12.0, t) == doctest::Approx(11.0));
  t = {0.0, 1.0};
  CHECK(boxcox_apply(12.0, t) == doctest::Approx(std::log(12.0)));
  for (double y : {0.5, 2.0, 100.0})
    CHECK(std::abs(boxcox_apply(y, BoxCoxTransform{1e-8, 2.0}) - boxcox_apply(y, BoxCoxTransform{0.0, 2.0})) < 1e-6);
  t = {0.0, 5.0, true};
  CHECK(boxcox_apply(12.0, t) == doctest::Approx(std::log(12.0)));
  CHECK_THROWS_AS(boxcox_apply(0.0, BoxCoxTransform{}), Error);
}

TEST_CASE("Box-Cox invert") {
  const BoxCoxTransform t{0.11, 180.0};
  CHECK(boxcox_invert(boxcox_apply(365.0, t), t) == doctest::Approx(365.0).epsilon(1e-12));
  CHECK(std::abs(boxcox_invert(boxcox_apply(365.0, t), t) - 365.0) < 1e-6);
  const BoxCoxTransform one{1.0, 4.0};
  CHECK(boxcox_invert(41.0, one) == doctest::Approx(42.0));
  bool clamped = false;
  CHECK(boxcox_invert(-1e6, BoxCoxTransform{0.5, 10.0}, &clamped) == 1.0);
  CHECK(clamped);
}

TEST_CASE("property: Box-Cox apply then invert is the identity") {
  Gen gen(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const BoxCoxTransform t{std::round(gen.uniform(-1, 1) * 100) / 100, gen.uniform(0.5, 500), gen.coin(0.2)};
    const double y = std::exp(gen.uniform(-3, 7));
    const double back = boxcox_invert(boxcox_apply(y, t), t);
    CHECK(std::abs(back - y) / y < 1e-9);
  }
}

TEST_CASE("boxcox_grid spans the interval exactly") {
  const auto g = boxcox_grid(BoxCoxOptions{});
  REQUIRE(g.size() == 201);
  CHECK(g.front() == -1.0);
  CHECK(g[100] == 0.0);
  CHECK(g[111] == 0.11);
  CHECK(g.back() == 1.0);
}

TEST_CASE("boxcox_fit recovers planted transforms") {
  Gen gen(5);
  const Matrix X = gen.matrix(2000, 2, 0.5);
  CHECK(std::abs(boxcox_fit(X, planted_days(gen, X, 0.5, 0.01)).lambda - 0.5) <= 0.05);
  CHECK(std::abs(boxcox_fit(X, planted_days(gen, X, 0.0, 0.01)).lambda) <= 0.05);
  BoxCoxProfile profile;
  const Vector y = planted_days(gen, X, 0.5, 0.01);
  const auto t = boxcox_fit(X, y, {}, &profile);
  CHECK(t.geometric_mean == doctest::Approx(geometric_mean(y)));
  CHECK(profile.lambdas.size() == 201);
}

TEST_CASE("enet_fit without penalty is ordinary least squares") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(2);
  y << 1, 2;
  const ElasticNetModel m = enet_fit(X, y, 0.0, 0.0);
  CHECK(m.intercept == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.coef(0) == doctest::Approx(1.0));
}

TEST_CASE("property: enet matches OLS and ridge oracles and satisfies KKT") {
  Gen gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const System s = random_system(gen, gen.integer(30, 100), gen.integer(1, 6), 0.5);
    const ElasticNetModel ols = enet_fit(s.X, s.y, 0.0, 0.0);
    const Vector ref = ols_normal_equations(s.X, s.y);
    CHECK(std::abs(ols.intercept - ref(0)) < 1e-6);
    CHECK((ols.coef - ref.tail(s.X.cols())).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(ols.converged);
    CHECK(ols.kkt_residual < 1e-6);

    const double l2 = gen.uniform(0.01, 10.0);
    const ElasticNetModel ridge = enet_fit(s.X, s.y, 0.0, l2);
    const Matrix Z = standardize(s.X);
    const Vector yc = s.y.array() - s.y.mean();
    const Vector direct = (Z.transpose() * Z + 2.0 * l2 * Matrix::Identity(Z.cols(), Z.cols())).ldlt().solve(Z.transpose() * yc);
    CHECK((ridge.coef_std - direct).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(ridge.kkt_residual < 1e-6);

    const ElasticNetModel lasso = enet_fit(s.X, s.y, gen.uniform(0.1, 20.0), gen.uniform(0.0, 1.0));
    CHECK(lasso.converged);
    CHECK(lasso.kkt_residual < 1e-6);
  }
}

TEST_CASE("property: the elastic-net objective never rises between sweeps") {
  Gen gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    const System s = random_system(gen, 60, 5, 1.0);
    ElasticNetTrace trace;
    const ElasticNetModel m = enet_fit(s.X, s.y, gen.uniform(0, 5), gen.uniform(0, 5), {}, &trace);
    for (std::size_t i = 1; i < trace.objective.size(); ++i) CHECK(trace.objective[i] <= trace.objective[i - 1] + 1e-9);
    CHECK(enet_objective(m, s.X, s.y) == doctest::Approx(trace.objective.back()).epsilon(1e-9));
  }
}

TEST_CASE("property: the L1 norm shrinks along the lambda1 path") {
  Gen gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    const System s = random_system(gen, 80, 6, 1.0);
    const double l2 = gen.uniform(0, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double l1 : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1000.0}) {
      const double norm = enet_fit(s.X, s.y, l1, l2).coef_std.lpNorm<1>();
      CHECK(norm <= prev + 1e-7);
      prev = norm;
    }
    CHECK(enet_fit(s.X, s.y, 1e9, l2).coef.isZero());
  }
}

TEST_CASE("enet_predict") {
  const BoxCoxTransform t{0.2, 60.0};
  ElasticNetModel m;
  m.coef = Vector::Zero(3);
  m.coef_std = Vector::Zero(3);
  m.means = Vector::Zero(3);
  m.scales = Vector::Ones(3);
  m.intercept = boxcox_apply(100.0, t);
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(3, 7.0);
  CHECK(enet_predict(m, t, x) == doctest::Approx(100.0));
  m.intercept = -1e9;
  CHECK(enet_predict(m, t, x) >= 1.0);

  Gen gen(2);
  const Matrix X = gen.matrix(50, 2);
  const Vector days = planted_days(gen, X, 0.0, 0.0);
  const BoxCoxTransform fitted{0.0, geometric_mean(days)};
  const ElasticNetModel exact = enet_fit(X, boxcox_apply(days, fitted), 0.0, 0.0);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(enet_predict(exact, fitted, X.row(i)) - days(i)) < 1e-4);
}

TEST_CASE("enet_grid_search is deterministic and prefers light penalties on clean data") {
  Gen gen(4);
  const System s = random_system(gen, 120, 4, 0.01);
  const std::vector<double> grid{0.0, 1e-3, 1e-2, 1e-1, 1.0};
  const EnetChoice a = enet_grid_search(s.X, s.y, grid, 5, 9), b = enet_grid_search(s.X, s.y, grid, 5, 9);
  CHECK(a.lambda1 == b.lambda1);
  CHECK(a.lambda2 == b.lambda2);
  CHECK(a.cv_mse == b.cv_mse);
  CHECK(a.lambda1 <= 1e-1);
  CHECK(a.lambda2 <= 1e-1);
}

TEST_CASE("linear models round-trip through JSON") {
  Gen gen(6);
  const System s = random_system(gen, 40, 3, 0.5);
  const ElasticNetModel m = enet_fit(s.X, s.y, 0.1, 0.1);
  const ElasticNetModel back = enet_from_json(nlohmann::json::parse(to_json(m).dump()));
  for (int i = 0; i < 10; ++i) CHECK(back.predict(s.X.row(i)) == m.predict(s.X.row(i)));
  const BoxCoxTransform t{0.11, 180.0, true};
  const BoxCoxTransform tb = boxcox_from_json(nlohmann::json::parse(to_json(t).dump()));
  CHECK(tb.lambda == t.lambda);
  CHECK(tb.geometric_mean == t.geometric_mean);
  CHECK(tb.plain_log_at_zero);
}
