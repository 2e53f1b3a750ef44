#include "fulfillkit/forest.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fulfillkit {

double RandomForestModel::vote(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != n_features) throw data_error("forest: schema mismatch");
  double s = 0;
  for (const auto& t : trees) s += t.predict(x) > 0.5 ? 1.0 : 0.0;
  return trees.empty() ? 0.0 : s / static_cast<double>(trees.size());
}

namespace {

// Dense per-column ranks of the non-missing values (-1 for missing) and the value of each rank.
class ColumnRanks {
 public:
  explicit ColumnRanks(const Matrix& X) : ranks_(X.rows(), X.cols()), values_(static_cast<std::size_t>(X.cols())) {
    std::vector<Eigen::Index> order;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      order.clear();
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (is_missing(X(i, j))) ranks_(i, j) = -1;
        else order.push_back(i);
      }
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return X(a, j) < X(b, j); });
      auto& vals = values_[static_cast<std::size_t>(j)];
      for (auto i : order) {
        if (vals.empty() || X(i, j) > vals.back()) vals.push_back(X(i, j));
        ranks_(i, j) = static_cast<std::int32_t>(vals.size() - 1);
      }
    }
  }
  std::int32_t rank(Eigen::Index i, Eigen::Index j) const { return ranks_(i, j); }
  double value(Eigen::Index j, std::uint64_t r) const { return values_[static_cast<std::size_t>(j)][r]; }
  std::size_t distinct(Eigen::Index j) const { return values_[static_cast<std::size_t>(j)].size(); }
  Eigen::Index cols() const { return ranks_.cols(); }
  std::size_t max_distinct() const {
    std::size_t m = 0;
    for (const auto& v : values_) m = std::max(m, v.size());
    return m;
  }

 private:
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> ranks_;
  std::vector<std::vector<double>> values_;
};

class CartBuilder {
 public:
  CartBuilder(const ColumnRanks& ranks, const std::vector<int>& y, int mtry, int min_node, std::mt19937_64& rng)
      : ranks_(ranks), y_(y), mtry_(mtry), min_node_(min_node), rng_(rng), features_(static_cast<std::size_t>(ranks.cols())),
        cnt0_(ranks.max_distinct()), cnt1_(ranks.max_distinct()) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  // `rows` are the distinct in-bag rows, `weight` their bootstrap multiplicities (indexed by row).
  DecisionTree build(std::vector<int> rows, const std::vector<int>& weight) {
    w_ = &weight;
    DecisionTree t;
    t.nodes.emplace_back();
    grow(t, 0, rows, 0, rows.size());
    return t;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    std::int32_t rank = 0;  // rows with rank <= this go left
    double score = -1.0;
  };

  double w(int r) const { return (*w_)[static_cast<std::size_t>(r)]; }

  void grow(DecisionTree& t, int id, std::vector<int>& rows, std::size_t lo, std::size_t hi) {
    double tot = 0, ones = 0;
    for (auto k = lo; k < hi; ++k) {
      tot += w(rows[k]);
      ones += w(rows[k]) * y_[static_cast<std::size_t>(rows[k])];
    }
    t.nodes[static_cast<std::size_t>(id)].value = ones / tot;
    if (ones == 0 || ones == tot || tot <= min_node_ || hi - lo < 2) return;

    const Split s = best_split(rows, lo, hi);
    if (s.feature < 0) return;

    // Partition present values, then send missing rows to the heavier side.
    std::vector<int> left, right, miss;
    double wl = 0, wr = 0;
    for (auto k = lo; k < hi; ++k) {
      const int r = rows[k];
      const auto rk = ranks_.rank(r, s.feature);
      if (rk < 0) miss.push_back(r);
      else if (rk <= s.rank) {
        left.push_back(r);
        wl += w(r);
      } else {
        right.push_back(r);
        wr += w(r);
      }
    }
    const bool missing_left = wl >= wr;
    (missing_left ? left : right).insert((missing_left ? left : right).end(), miss.begin(), miss.end());
    std::copy(left.begin(), left.end(), rows.begin() + static_cast<std::ptrdiff_t>(lo));
    std::copy(right.begin(), right.end(), rows.begin() + static_cast<std::ptrdiff_t>(lo + left.size()));
    const auto mid = lo + left.size();

    const int l = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    t.nodes.emplace_back();
    auto& nd = t.nodes[static_cast<std::size_t>(id)];
    nd.feature = s.feature;
    nd.threshold = s.threshold;
    nd.missing_left = missing_left;
    nd.left = l;
    nd.right = l + 1;
    grow(t, l, rows, lo, mid);
    grow(t, l + 1, rows, mid, hi);
  }

  // Weighted children score; maximizing it minimizes the weighted Gini impurity.
  static double score(double l0, double l1, double r0, double r1) {
    return (l0 * l0 + l1 * l1) / (l0 + l1) + (r0 * r0 + r1 * r1) / (r0 + r1);
  }

  void consider(Split& best, int j, std::int32_t ra, std::int32_t rb, double sc) const {
    if (sc > best.score + 1e-12) {
      const double a = ranks_.value(j, static_cast<std::uint64_t>(ra)), b = ranks_.value(j, static_cast<std::uint64_t>(rb));
      double thr = a + (b - a) / 2.0;
      if (!(thr > a)) thr = b;
      best = {j, thr, ra, sc};
    }
  }

  Split best_split(const std::vector<int>& rows, std::size_t lo, std::size_t hi) {
    // Partial Fisher-Yates draw of mtry candidate features.
    const auto p = features_.size();
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(mtry_), p);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, p - 1);
      std::swap(features_[i], features_[d(rng_)]);
    }
    const auto m = hi - lo;
    Split best;
    for (std::size_t fi = 0; fi < k; ++fi) {
      const int j = features_[fi];
      const auto D = ranks_.distinct(j);
      if (D < 2) continue;
      if (D <= 2 * m) {
        // Class weights per rank, scanned in rank order.
        std::fill_n(cnt0_.begin(), D, 0.0);
        std::fill_n(cnt1_.begin(), D, 0.0);
        double t0 = 0, t1 = 0;
        for (auto r = lo; r < hi; ++r) {
          const auto rk = ranks_.rank(rows[r], j);
          if (rk < 0) continue;
          const double wt = w(rows[r]);
          if (y_[static_cast<std::size_t>(rows[r])]) {
            cnt1_[static_cast<std::size_t>(rk)] += wt;
            t1 += wt;
          } else {
            cnt0_[static_cast<std::size_t>(rk)] += wt;
            t0 += wt;
          }
        }
        double l0 = 0, l1 = 0;
        std::int32_t prev = -1;
        for (std::size_t r = 0; r < D; ++r) {
          if (cnt0_[r] == 0 && cnt1_[r] == 0) continue;
          if (prev >= 0) consider(best, j, prev, static_cast<std::int32_t>(r), score(l0, l1, t0 - l0, t1 - l1));
          l0 += cnt0_[r];
          l1 += cnt1_[r];
          prev = static_cast<std::int32_t>(r);
        }
      } else {
        // Packed (rank, label, weight) keys; equal ranks sort together.
        keys_.clear();
        for (auto r = lo; r < hi; ++r) {
          const std::int32_t rk = ranks_.rank(rows[r], j);
          if (rk < 0) continue;
          keys_.push_back((static_cast<std::uint64_t>(rk) << 32) |
                          (static_cast<std::uint64_t>(y_[static_cast<std::size_t>(rows[r])]) << 31) |
                          static_cast<std::uint64_t>((*w_)[static_cast<std::size_t>(rows[r])]));
        }
        if (keys_.size() < 2) continue;
        std::sort(keys_.begin(), keys_.end());
        double t0 = 0, t1 = 0;
        for (auto key : keys_) ((key >> 31) & 1U ? t1 : t0) += static_cast<double>(key & 0x7fffffffU);
        double l0 = 0, l1 = 0;
        for (std::size_t i = 0; i + 1 < keys_.size(); ++i) {
          ((keys_[i] >> 31) & 1U ? l1 : l0) += static_cast<double>(keys_[i] & 0x7fffffffU);
          const auto ra = static_cast<std::int32_t>(keys_[i] >> 32), rb = static_cast<std::int32_t>(keys_[i + 1] >> 32);
          if (ra != rb) consider(best, j, ra, rb, score(l0, l1, t0 - l0, t1 - l1));
        }
      }
    }
    return best;
  }

  const ColumnRanks& ranks_;
  const std::vector<int>& y_;
  const std::vector<int>* w_ = nullptr;
  int mtry_;
  int min_node_;
  std::mt19937_64& rng_;
  std::vector<int> features_;
  std::vector<double> cnt0_, cnt1_;
  std::vector<std::uint64_t> keys_;
};

}  // namespace

RandomForestModel rf_fit(const Matrix& X, const std::vector<int>& y, const RfParams& params, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (y.size() != n || n == 0) throw data_error("rf_fit: label count does not match rows");
  if (params.n_trees < 1) throw config_error("rf_fit: n_trees must be >= 1");
  const auto ones = std::count(y.begin(), y.end(), 1);
  if (static_cast<std::size_t>(ones + std::count(y.begin(), y.end(), 0)) != n) throw data_error("rf_fit: labels must be 0/1");
  if (ones == 0 || static_cast<std::size_t>(ones) == n) throw data_error("rf_fit: single-class labels");
  const int p = static_cast<int>(X.cols());
  const int mtry = params.mtry > 0 ? params.mtry : std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p)))));

  RandomForestModel model;
  model.n_features = p;
  const ColumnRanks ranks(X);
  for (int t = 0; t < params.n_trees; ++t) {
    std::mt19937_64 rng(derive_seed(seed, 0x7266, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<int> weight(n, 0);
    for (std::size_t draw = 0; draw < n; ++draw) ++weight[pick(rng)];
    std::vector<int> in_bag, oob;
    for (std::size_t i = 0; i < n; ++i) (weight[i] ? in_bag : oob).push_back(static_cast<int>(i));
    CartBuilder builder(ranks, y, mtry, params.min_node_size, rng);
    model.trees.push_back(builder.build(std::move(in_bag), weight));
    model.oob.push_back(std::move(oob));
  }
  return model;
}

namespace {

// Leaf value for row `i` with column `j` read from row `swap` instead.
double predict_swapped(const DecisionTree& t, const Matrix& X, Eigen::Index i, Eigen::Index j, Eigen::Index swap) {
  int k = 0;
  while (!t.nodes[static_cast<std::size_t>(k)].is_leaf()) {
    const auto& nd = t.nodes[static_cast<std::size_t>(k)];
    const double v = nd.feature == j ? X(swap, j) : X(i, nd.feature);
    const bool left = is_missing(v) ? nd.missing_left : v < nd.threshold;
    k = left ? nd.left : nd.right;
  }
  return t.nodes[static_cast<std::size_t>(k)].value;
}

}  // namespace

Matrix rf_permutation_importance(const RandomForestModel& model, const Matrix& X, const std::vector<int>& y,
                                 std::uint64_t seed) {
  if (X.cols() != model.n_features) throw data_error("forest importance: schema mismatch");
  const auto T = model.trees.size();
  Matrix imp = Matrix::Zero(static_cast<Eigen::Index>(T), X.cols());
  for (std::size_t t = 0; t < T; ++t) {
    const auto& tree = model.trees[t];
    const auto& oob = model.oob[t];
    if (oob.empty()) continue;
    std::mt19937_64 rng(derive_seed(seed, 0x696d70, t));
    double base = 0;
    for (int i : oob) base += (tree.predict(X.row(i)) > 0.5 ? 1 : 0) == y[static_cast<std::size_t>(i)];
    // Trees that never split on a feature are unaffected by permuting it.
    std::vector<char> used(static_cast<std::size_t>(X.cols()), 0);
    for (const auto& nd : tree.nodes)
      if (!nd.is_leaf()) used[static_cast<std::size_t>(nd.feature)] = 1;
    std::vector<int> perm(oob);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (!used[static_cast<std::size_t>(j)]) continue;
      std::shuffle(perm.begin(), perm.end(), rng);
      double acc = 0;
      for (std::size_t k = 0; k < oob.size(); ++k)
        acc += (predict_swapped(tree, X, oob[k], j, perm[k]) > 0.5 ? 1 : 0) == y[static_cast<std::size_t>(oob[k])];
      imp(static_cast<Eigen::Index>(t), j) = (base - acc) / static_cast<double>(oob.size());
    }
  }
  return imp;
}

Vector importance_z(const Matrix& per_tree) {
  const auto T = static_cast<double>(per_tree.rows());
  Vector z(per_tree.cols());
  for (Eigen::Index j = 0; j < per_tree.cols(); ++j) {
    const double mean = per_tree.col(j).mean();
    const double var = T > 1 ? (per_tree.col(j).array() - mean).square().sum() / (T - 1) : 0.0;
    const double sd = std::sqrt(var);
    if (sd > 0) z(j) = mean / sd;
    else z(j) = mean == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::max(), mean);
  }
  return z;
}

}  // namespace fulfillkit
