#include "fulfillkit/linear.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fulfillkit {

Imputer Imputer::fit(const Matrix& X) {
  Imputer m;
  m.medians = Vector::Zero(X.cols());
  std::vector<double> vals;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    vals.clear();
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (!is_missing(X(i, j))) vals.push_back(X(i, j));
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    const auto h = vals.size() / 2;
    m.medians(j) = vals.size() % 2 ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);
  }
  return m;
}

Matrix Imputer::apply(const Matrix& X) const {
  if (X.cols() != medians.size()) throw data_error("imputer: column count mismatch");
  Matrix out = X;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      if (is_missing(out(i, j))) out(i, j) = medians(j);
  return out;
}

OlsFit ols_fit(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw data_error("ols_fit: row mismatch");
  Matrix A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  const Vector beta = qr.solve(y);
  OlsFit out;
  out.intercept = beta(0);
  out.coef = beta.tail(X.cols());
  out.sse = (y - A * beta).squaredNorm();
  out.rank = static_cast<int>(qr.rank());
  return out;
}

// ---- Box-Cox ----

double geometric_mean(const Vector& y) {
  if (y.size() == 0) throw data_error("geometric_mean: empty input");
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y(i) > 0)) throw data_error("Box-Cox: targets must be positive");
    s += std::log(y(i));
  }
  return std::exp(s / static_cast<double>(y.size()));
}

double boxcox_apply(double y, const BoxCoxTransform& t) {
  if (!(y > 0)) throw data_error("boxcox_apply: y must be positive");
  const double ly = std::log(y);
  if (t.lambda == 0.0) return t.plain_log_at_zero ? ly : t.geometric_mean * ly;
  return std::expm1(t.lambda * ly) / (t.lambda * std::pow(t.geometric_mean, t.lambda - 1.0));
}

Vector boxcox_apply(const Vector& y, const BoxCoxTransform& t) {
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = boxcox_apply(y(i), t);
  return out;
}

double boxcox_invert(double y_new, const BoxCoxTransform& t, bool* clamped) {
  if (clamped) *clamped = false;
  if (t.lambda == 0.0) return std::exp(t.plain_log_at_zero ? y_new : y_new / t.geometric_mean);
  const double u = t.lambda * y_new * std::pow(t.geometric_mean, t.lambda - 1.0);
  if (!(u > -1.0) || !std::isfinite(u)) {
    if (clamped) *clamped = true;
    return 1.0;
  }
  return std::exp(std::log1p(u) / t.lambda);
}

std::vector<double> boxcox_grid(const BoxCoxOptions& opts) {
  if (!(opts.step > 0) || opts.grid_max < opts.grid_min) throw config_error("boxcox: invalid grid");
  const auto n = static_cast<long>(std::floor((opts.grid_max - opts.grid_min) / opts.step + 1e-9));
  std::vector<double> out;
  for (long i = 0; i <= n; ++i) out.push_back(std::round((opts.grid_min + static_cast<double>(i) * opts.step) * 1e9) / 1e9);
  return out;
}

BoxCoxTransform boxcox_fit(const Matrix& X, const Vector& y, const BoxCoxOptions& opts, BoxCoxProfile* profile) {
  if (X.rows() != y.size()) throw data_error("boxcox_fit: row mismatch");
  const double gm = geometric_mean(y);
  const auto n = static_cast<double>(y.size());
  // Design without enough rows for the full model falls back to intercept only.
  const bool full = X.rows() > X.cols() + 1;
  Matrix A(X.rows(), full ? X.cols() + 1 : 1);
  A.col(0).setOnes();
  if (full) A.rightCols(X.cols()) = X;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);

  BoxCoxTransform best{0.0, gm, opts.plain_log_at_zero};
  double best_ll = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (double lam : boxcox_grid(opts)) {
    // Likelihood is always evaluated on the normalized transform so SSE is comparable across lambda.
    const BoxCoxTransform t{lam, gm, false};
    const Vector z = boxcox_apply(y, t);
    const Vector resid = z - A * qr.solve(z);
    const double sse = std::max(resid.squaredNorm(), 1e-300);
    const double ll = -n / 2.0 * std::log(sse / n);
    if (profile) {
      profile->lambdas.push_back(lam);
      profile->log_likelihood.push_back(ll);
    }
    if (!have || ll > best_ll || (ll == best_ll && std::abs(lam) < std::abs(best.lambda))) {
      best.lambda = lam;
      best_ll = ll;
      have = true;
    }
  }
  return best;
}

// ---- Elastic net ----

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

struct Standardized {
  Vector means, scales;
  std::vector<bool> active;  // non-constant columns
  double y_mean = 0.0;
  Matrix G;  // Xs' Xs
  Vector b;  // Xs' (y - y_mean)
  double yy = 0.0;
};

Standardized standardize(const Matrix& X, const Vector& y) {
  Standardized s;
  const auto n = static_cast<double>(X.rows());
  s.means = X.colwise().mean();
  s.scales = Vector::Ones(X.cols());
  s.active.assign(static_cast<std::size_t>(X.cols()), true);
  Matrix Xs = X.rowwise() - s.means.transpose();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(Xs.col(j).squaredNorm() / n);
    if (sd > 1e-12 * std::max(1.0, std::abs(s.means(j)))) {
      s.scales(j) = sd;
      Xs.col(j) /= sd;
    } else {
      s.active[static_cast<std::size_t>(j)] = false;
      Xs.col(j).setZero();
    }
  }
  s.y_mean = y.mean();
  const Vector yc = y.array() - s.y_mean;
  s.G = Xs.transpose() * Xs;
  s.b = Xs.transpose() * yc;
  s.yy = yc.squaredNorm();
  return s;
}

struct SolveResult {
  int sweeps = 0;
  double kkt = 0.0;
  bool converged = false;
};

double kkt_residual(const Vector& c, const Vector& theta, const std::vector<bool>& active, double l1, double l2) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (!active[static_cast<std::size_t>(j)]) continue;
    // c_j = x_j' r; stationarity: -c_j + 2 l2 theta_j + l1 * sign(theta_j) = 0
    double r;
    if (theta(j) != 0.0) r = std::abs(-c(j) + 2.0 * l2 * theta(j) + (theta(j) > 0 ? l1 : -l1));
    else r = std::max(0.0, std::abs(c(j)) - l1);
    worst = std::max(worst, r);
  }
  return worst;
}

double standardized_objective(const Standardized& s, const Vector& theta, double l1, double l2) {
  const double rss = s.yy - 2.0 * theta.dot(s.b) + theta.dot(s.G * theta);
  return 0.5 * std::max(rss, 0.0) + l1 * theta.lpNorm<1>() + l2 * theta.squaredNorm();
}

SolveResult solve_gram(const Standardized& s, double l1, double l2, Vector& theta, const ElasticNetOptions& opts,
                       ElasticNetTrace* trace) {
  const auto p = theta.size();
  Vector c = s.b - s.G * theta;
  SolveResult res;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!s.active[static_cast<std::size_t>(j)]) continue;
      const double gjj = s.G(j, j);
      const double rho = c(j) + gjj * theta(j);
      const double next = soft_threshold(rho, l1) / (gjj + 2.0 * l2);
      const double delta = next - theta(j);
      if (delta != 0.0) {
        c.noalias() -= s.G.col(j) * delta;
        theta(j) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (sweep % 50 == 0) c = s.b - s.G * theta;
    if (trace) trace->objective.push_back(standardized_objective(s, theta, l1, l2));
    res.sweeps = sweep;
    if (max_change < opts.tol) {
      c = s.b - s.G * theta;
      res.kkt = kkt_residual(c, theta, s.active, l1, l2);
      if (res.kkt < opts.kkt_tol) {
        res.converged = true;
        return res;
      }
    }
  }
  c = s.b - s.G * theta;
  res.kkt = kkt_residual(c, theta, s.active, l1, l2);
  return res;
}

ElasticNetModel finish_model(const Standardized& s, const Vector& theta, double l1, double l2, const SolveResult& r) {
  ElasticNetModel m;
  m.lambda1 = l1;
  m.lambda2 = l2;
  m.means = s.means;
  m.scales = s.scales;
  m.coef_std = theta;
  m.y_mean = s.y_mean;
  m.coef = theta.array() / s.scales.array();
  m.intercept = s.y_mean - m.coef.dot(s.means);
  m.sweeps = r.sweeps;
  m.kkt_residual = r.kkt;
  m.converged = r.converged;
  return m;
}

}  // namespace

double ElasticNetModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != coef.size()) throw data_error("enet predict: schema mismatch");
  return intercept + x.dot(coef);
}

Vector ElasticNetModel::predict_all(const Matrix& X) const {
  if (X.cols() != coef.size()) throw data_error("enet predict: schema mismatch");
  return (X * coef).array() + intercept;
}

ElasticNetModel enet_fit(const Matrix& X, const Vector& y, double lambda1, double lambda2, const ElasticNetOptions& opts,
                         ElasticNetTrace* trace) {
  if (X.rows() != y.size() || X.rows() == 0) throw data_error("enet_fit: shape mismatch");
  if (!X.allFinite() || !y.allFinite()) throw data_error("enet_fit: non-finite input");
  if (lambda1 < 0 || lambda2 < 0) throw config_error("enet_fit: penalties must be non-negative");
  const auto s = standardize(X, y);
  Vector theta = Vector::Zero(X.cols());
  const auto r = solve_gram(s, lambda1, lambda2, theta, opts, trace);
  return finish_model(s, theta, lambda1, lambda2, r);
}

double enet_objective(const ElasticNetModel& m, const Matrix& X, const Vector& y) {
  Matrix Xs = (X.rowwise() - m.means.transpose()).array().rowwise() / m.scales.transpose().array();
  const Vector r = (y.array() - m.y_mean).matrix() - Xs * m.coef_std;
  return 0.5 * r.squaredNorm() + m.lambda1 * m.coef_std.lpNorm<1>() + m.lambda2 * m.coef_std.squaredNorm();
}

double enet_predict(const ElasticNetModel& model, const BoxCoxTransform& t, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return std::max(1.0, boxcox_invert(model.predict(x), t));
}

EnetChoice enet_grid_search(const Matrix& X, const Vector& y, const std::vector<double>& grid, int folds,
                            std::uint64_t seed) {
  if (grid.empty()) throw config_error("enet_grid_search: empty grid");
  const auto n = X.rows();
  folds = static_cast<int>(std::min<Eigen::Index>(folds, n));
  if (folds < 2) return {grid.front(), grid.front(), 0.0};
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));

  const std::size_t G = grid.size();
  std::vector<double> sse(G * G, 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    const Matrix Xt = X(tr, Eigen::all), Xv = X(va, Eigen::all);
    const Vector yt = y(tr), yv = y(va);
    const auto s = standardize(Xt, yt);
    for (std::size_t a = 0; a < G; ++a) {
      Vector theta = Vector::Zero(X.cols());  // warm start along lambda2 for fixed lambda1
      for (std::size_t b = 0; b < G; ++b) {
        const auto r = solve_gram(s, grid[a], grid[b], theta, {}, nullptr);
        const auto m = finish_model(s, theta, grid[a], grid[b], r);
        sse[a * G + b] += (m.predict_all(Xv) - yv).squaredNorm();
      }
    }
  }
  EnetChoice best{grid[0], grid[0], std::numeric_limits<double>::infinity()};
  for (std::size_t a = 0; a < G; ++a)
    for (std::size_t b = 0; b < G; ++b)
      if (sse[a * G + b] / static_cast<double>(n) < best.cv_mse) best = {grid[a], grid[b], sse[a * G + b] / static_cast<double>(n)};
  return best;
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json to_json(const Imputer& m) { return {{"medians", vector_json(m.medians)}}; }
Imputer imputer_from_json(const nlohmann::json& j) { return {vector_from_json(j.at("medians"))}; }

nlohmann::json to_json(const BoxCoxTransform& t) {
  return {{"lambda", t.lambda}, {"geometric_mean", t.geometric_mean}, {"plain_log_at_zero", t.plain_log_at_zero}};
}
BoxCoxTransform boxcox_from_json(const nlohmann::json& j) {
  return {j.at("lambda").get<double>(), j.at("geometric_mean").get<double>(), j.value("plain_log_at_zero", false)};
}

nlohmann::json to_json(const ElasticNetModel& m) {
  return {{"lambda1", m.lambda1},          {"lambda2", m.lambda2},     {"intercept", m.intercept},
          {"coef", vector_json(m.coef)},   {"means", vector_json(m.means)}, {"scales", vector_json(m.scales)},
          {"coef_std", vector_json(m.coef_std)}, {"y_mean", m.y_mean}, {"sweeps", m.sweeps},
          {"kkt_residual", m.kkt_residual}, {"converged", m.converged}};
}

ElasticNetModel enet_from_json(const nlohmann::json& j) {
  ElasticNetModel m;
  m.lambda1 = j.at("lambda1").get<double>();
  m.lambda2 = j.at("lambda2").get<double>();
  m.intercept = j.at("intercept").get<double>();
  m.coef = vector_from_json(j.at("coef"));
  m.means = vector_from_json(j.at("means"));
  m.scales = vector_from_json(j.at("scales"));
  m.coef_std = vector_from_json(j.at("coef_std"));
  m.y_mean = j.at("y_mean").get<double>();
  m.sweeps = j.at("sweeps").get<int>();
  m.kkt_residual = j.at("kkt_residual").get<double>();
  m.converged = j.at("converged").get<bool>();
  return m;
}

}  // namespace fulfillkit
