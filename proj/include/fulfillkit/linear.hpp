#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fulfillkit/common.hpp"

namespace fulfillkit {

// Column medians over non-missing training values; applied to fill missing entries.
struct Imputer {
  Vector medians;

  static Imputer fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;
};

struct OlsFit {
  double intercept = 0.0;
  Vector coef;
  double sse = 0.0;
  int rank = 0;  // rank of [1 X]
};

// Least squares with intercept via column-pivoting QR; rank-deficient designs get a basic solution.
OlsFit ols_fit(const Matrix& X, const Vector& y);

// ---- Box-Cox ----

struct BoxCoxTransform {
  double lambda = 1.0;
  double geometric_mean = 1.0;
  bool plain_log_at_zero = false;  // unnormalized log(y) when lambda == 0
};

double boxcox_apply(double y, const BoxCoxTransform& t);
Vector boxcox_apply(const Vector& y, const BoxCoxTransform& t);

// Inverse of boxcox_apply. Outside the transform's range the result is floored at 1 and
// `clamped` (when given) is set.
double boxcox_invert(double y_new, const BoxCoxTransform& t, bool* clamped = nullptr);

double geometric_mean(const Vector& y);

struct BoxCoxOptions {
  double grid_min = -1.0;
  double grid_max = 1.0;
  double step = 0.01;
  bool plain_log_at_zero = false;
};

struct BoxCoxProfile {
  std::vector<double> lambdas;
  std::vector<double> log_likelihood;
};

std::vector<double> boxcox_grid(const BoxCoxOptions& opts);

// Profile log-likelihood -n/2 log(SSE/n) of the geometric-mean normalized transform under an
// OLS fit on X; the grid argmax wins, ties going to the lambda nearest 0.
BoxCoxTransform boxcox_fit(const Matrix& X, const Vector& y, const BoxCoxOptions& opts = {},
                           BoxCoxProfile* profile = nullptr);

// ---- Elastic net ----

struct ElasticNetOptions {
  double tol = 1e-8;       // max coefficient change per sweep
  double kkt_tol = 1e-7;   // subgradient residual required before stopping
  int max_sweeps = 100000;
};

struct ElasticNetModel {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double intercept = 0.0;      // original feature scale
  Vector coef;                 // original feature scale
  Vector means, scales;        // standardization statistics
  Vector coef_std;             // standardized-space coefficients
  double y_mean = 0.0;
  int sweeps = 0;
  double kkt_residual = 0.0;
  bool converged = false;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_all(const Matrix& X) const;
};

struct ElasticNetTrace {
  std::vector<double> objective;  // standardized-space objective after each sweep
};

// Minimizes 1/2 sum (theta'x_i - y_i)^2 + l1 |theta|_1 + l2 |theta|_2^2 over standardized
// columns with an unpenalized intercept, by cyclic coordinate descent with soft-thresholding.
ElasticNetModel enet_fit(const Matrix& X, const Vector& y, double lambda1, double lambda2,
                         const ElasticNetOptions& opts = {}, ElasticNetTrace* trace = nullptr);

// Elastic-net objective evaluated in the standardized space of `model`.
double enet_objective(const ElasticNetModel& model, const Matrix& X, const Vector& y);

// Days predicted through the inverse transform, floored at 1.
double enet_predict(const ElasticNetModel& model, const BoxCoxTransform& t, const Eigen::Ref<const Eigen::RowVectorXd>& x);

struct EnetChoice {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double cv_mse = 0.0;
};

// Inner k-fold grid search over grid x grid; lowest mean squared error wins (first in grid order on ties).
EnetChoice enet_grid_search(const Matrix& X, const Vector& y, const std::vector<double>& grid, int folds,
                            std::uint64_t seed);

nlohmann::json to_json(const Imputer& m);
Imputer imputer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoxCoxTransform& t);
BoxCoxTransform boxcox_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ElasticNetModel& m);
ElasticNetModel enet_from_json(const nlohmann::json& j);
nlohmann::json vector_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace fulfillkit
