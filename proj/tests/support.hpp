#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

namespace testsupport {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform() < p; }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(0.0, sd);
    return m;
  }
  Vector vector(Eigen::Index n, double sd = 1.0) { return matrix(n, 1, sd).col(0); }
  std::vector<double> values(std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(mean, sd);
    return v;
  }
  std::vector<int> labels(std::size_t n, double p = 0.5) {
    std::vector<int> y(n);
    for (auto& v : y) v = coin(p) ? 1 : 0;
    return y;
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---- Oracles: direct evaluations written independently of the library ----

// Within-cluster squared distance of a labeling, each cluster at its centroid.
inline double partition_distortion(const Matrix& X, const std::vector<int>& label, int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(X.cols());
    int count = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (label[static_cast<std::size_t>(i)] == c) mean += X.row(i), ++count;
    if (count == 0) continue;
    mean /= count;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (label[static_cast<std::size_t>(i)] == c) total += (X.row(i) - mean).squaredNorm();
  }
  return total;
}

// Optimal k-means distortion by enumerating all k^n labelings with no empty cluster.
inline double brute_force_kmeans(const Matrix& X, int k) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<int> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> used(static_cast<std::size_t>(k), 0);
    for (int l : label) used[static_cast<std::size_t>(l)] = 1;
    if (std::count(used.begin(), used.end(), 1) == k) best = std::min(best, partition_distortion(X, label, k));
    std::size_t i = 0;
    while (i < n && ++label[i] == k) label[i++] = 0;
    if (i == n) break;
  }
  return best;
}

// Sum of Euclidean distances to the nearest center plus log(n) * m * K.
inline double bic_direct(const Matrix& X, const Matrix& centers, double n) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < X.cols(); ++j) s += (X(i, j) - centers(c, j)) * (X(i, j) - centers(c, j));
      best = std::min(best, std::sqrt(s));
    }
    sum += best;
  }
  return sum + std::log(n) * static_cast<double>(X.cols()) * static_cast<double>(centers.rows());
}

// Signed-rank p-value by enumerating all sign assignments of the midranks.
inline double wilcoxon_enumerate(const std::vector<double>& a, const std::vector<double>& b, int alternative) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = (static_cast<double>(i + j) + 2.0) / 2.0;
    i = j + 1;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) observed += rank[i];
  const std::uint64_t count = 1ULL << n;
  std::uint64_t ge = 0, le = 0;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1ULL) w += rank[i];
    if (w >= observed - 1e-9) ++ge;
    if (w <= observed + 1e-9) ++le;
  }
  const double pg = static_cast<double>(ge) / static_cast<double>(count);
  const double pl = static_cast<double>(le) / static_cast<double>(count);
  if (alternative > 0) return pg;
  if (alternative < 0) return pl;
  return std::min(1.0, 2.0 * std::min(pg, pl));
}

// Least squares with intercept by solving the normal equations; returns (intercept, coef...).
inline Vector ols_normal_equations(const Matrix& X, const Vector& y) {
  Matrix A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  return (A.transpose() * A).llt().solve(A.transpose() * y);
}

// 1 / (1 - R^2) of column j regressed on the rest with an intercept.
inline double vif_direct(const Matrix& X, Eigen::Index j) {
  Matrix rest(X.rows(), X.cols() - 1);
  for (Eigen::Index c = 0, k = 0; c < X.cols(); ++c)
    if (c != j) rest.col(k++) = X.col(c);
  const Vector y = X.col(j);
  const Vector beta = ols_normal_equations(rest, y);
  const Vector fit = (rest * beta.tail(rest.cols())).array() + beta(0);
  const double sse = (y - fit).squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  return 1.0 / (sse / sst);
}

// Population-sd standardization used by the elastic net.
inline Matrix standardize(const Matrix& X) {
  Matrix Z = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mu = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mu).square().mean());
    Z.col(j) = (X.col(j).array() - mu) / sd;
  }
  return Z;
}

inline double binomial_two_sided_direct(int k, int n) {
  // P(|X - n/2| >= |k - n/2|) under Binomial(n, 1/2).
  const double dev = std::abs(k - n / 2.0);
  double p = 0.0;
  for (int i = 0; i <= n; ++i)
    if (std::abs(i - n / 2.0) >= dev - 1e-12) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  return std::min(1.0, p);
}

// Balanced labels plus noise columns that take the same values in both classes, so the noise
// has no in-sample association with the labels.
inline Matrix class_mirrored_noise(Gen& gen, std::vector<int>& labels, Eigen::Index half, Eigen::Index cols) {
  labels.assign(static_cast<std::size_t>(2 * half), 0);
  std::fill(labels.begin() + half, labels.end(), 1);
  std::shuffle(labels.begin(), labels.end(), gen.engine());
  std::vector<Eigen::Index> rows0, rows1;
  for (Eigen::Index i = 0; i < 2 * half; ++i) (labels[static_cast<std::size_t>(i)] ? rows1 : rows0).push_back(i);
  Matrix X(2 * half, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const std::vector<double> v = gen.values(static_cast<std::size_t>(half));
    for (auto* rows : {&rows0, &rows1}) {
      std::shuffle(rows->begin(), rows->end(), gen.engine());
      for (Eigen::Index k = 0; k < half; ++k) X((*rows)[static_cast<std::size_t>(k)], j) = v[static_cast<std::size_t>(k)];
    }
  }
  return X;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fulfillkit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
