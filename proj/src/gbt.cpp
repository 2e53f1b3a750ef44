#include "fulfillkit/gbt.hpp"

#include <algorithm>
#include <numeric>

namespace fulfillkit {

void GbtParams::validate() const {
  if (n_trees < 0) throw config_error("gbt: n_trees must be >= 0");
  if (max_depth < 0) throw config_error("gbt: max_depth must be >= 0");
  if (!(eta > 0)) throw config_error("gbt: eta must be positive");
  if (lambda < 0) throw config_error("gbt: lambda must be >= 0");
  if (std::isnan(gamma) || gamma < 0) throw config_error("gbt: gamma must be >= 0");
  if (min_child_weight < 0) throw config_error("gbt: min_child_weight must be >= 0");
}

double TreeEnsemble::margin(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return base_score + eta * s;
}

double log_loss(const std::vector<int>& y, const Vector& margin) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = margin(static_cast<Eigen::Index>(i));
    const double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    s += softplus - y[i] * m;
  }
  return s / static_cast<double>(y.size());
}

namespace {

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = false;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<std::vector<int>>& sorted, const std::vector<std::vector<int>>& missing,
              const GbtParams& params)
      : X_(X), sorted_(sorted), missing_(missing), params_(params) {}

  DecisionTree build(const std::vector<double>& g, const std::vector<double>& h, std::vector<int>& node_of) {
    const auto n = static_cast<std::size_t>(X_.rows());
    DecisionTree tree;
    tree.nodes.emplace_back();
    node_of.assign(n, 0);
    std::vector<int> frontier{0};
    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      std::vector<int> slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      const auto S = frontier.size();
      std::vector<double> G(S, 0.0), H(S, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const int s = slot_of[static_cast<std::size_t>(node_of[i])];
        if (s < 0) continue;
        G[static_cast<std::size_t>(s)] += g[i];
        H[static_cast<std::size_t>(s)] += h[i];
      }
      std::vector<Candidate> best(S);
      std::vector<double> GL(S), HL(S), Gm(S), Hm(S), last(S);
      std::vector<char> seen(S);
      for (int j = 0; j < static_cast<int>(X_.cols()); ++j) {
        std::fill(GL.begin(), GL.end(), 0.0);
        std::fill(HL.begin(), HL.end(), 0.0);
        std::fill(Gm.begin(), Gm.end(), 0.0);
        std::fill(Hm.begin(), Hm.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        for (int i : missing_[static_cast<std::size_t>(j)]) {
          const int s = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
          if (s < 0) continue;
          Gm[static_cast<std::size_t>(s)] += g[static_cast<std::size_t>(i)];
          Hm[static_cast<std::size_t>(s)] += h[static_cast<std::size_t>(i)];
        }
        for (int i : sorted_[static_cast<std::size_t>(j)]) {
          const int si = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
          if (si < 0) continue;
          const auto s = static_cast<std::size_t>(si);
          const double v = X_(i, j);
          if (seen[s] && v > last[s]) {
            double thr = last[s] + (v - last[s]) / 2.0;
            if (!(thr > last[s])) thr = v;
            consider(best[s], j, thr, G[s], H[s], GL[s], HL[s], Gm[s], Hm[s]);
          }
          GL[s] += g[static_cast<std::size_t>(i)];
          HL[s] += h[static_cast<std::size_t>(i)];
          last[s] = v;
          seen[s] = 1;
        }
      }
      std::vector<int> next;
      std::vector<int> split_left(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < S; ++s) {
        if (best[s].feature < 0) continue;
        const int id = frontier[s];
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        nd.feature = best[s].feature;
        nd.threshold = best[s].threshold;
        nd.missing_left = best[s].missing_left;
        nd.left = l;
        nd.right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node_of[i])];
        if (nd.is_leaf()) continue;
        const double v = X_(static_cast<Eigen::Index>(i), nd.feature);
        const bool left = is_missing(v) ? nd.missing_left : v < nd.threshold;
        node_of[i] = left ? nd.left : nd.right;
      }
      frontier = std::move(next);
    }
    std::vector<double> G(tree.nodes.size(), 0.0), H(tree.nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      G[static_cast<std::size_t>(node_of[i])] += g[i];
      H[static_cast<std::size_t>(node_of[i])] += h[i];
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (tree.nodes[k].is_leaf()) tree.nodes[k].value = -G[k] / (H[k] + params_.lambda);
    return tree;
  }

 private:
  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  void consider(Candidate& best, int j, double thr, double G, double H, double GL, double HL, double Gm, double Hm) const {
    const double GR = G - GL - Gm, HR = H - HL - Hm;
    const double parent = score(G, H);
    auto eval = [&](double gl, double hl, double gr, double hr, bool miss_left) {
      if (hl < params_.min_child_weight || hr < params_.min_child_weight) return;
      const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent) - params_.gamma;
      if (gain > best.gain) best = {gain, j, thr, miss_left};
    };
    eval(GL, HL, GR + Gm, HR + Hm, false);
    if (Hm > 0) eval(GL + Gm, HL + Hm, GR, HR, true);
  }

  const Matrix& X_;
  const std::vector<std::vector<int>>& sorted_;
  const std::vector<std::vector<int>>& missing_;
  const GbtParams& params_;
};

}  // namespace

TreeEnsemble gbt_fit(const Matrix& X, const std::vector<int>& y, const GbtParams& params, std::uint64_t /*seed*/,
                     GbtTrace* trace) {
  params.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  if (y.size() != n || n == 0) throw data_error("gbt_fit: label count does not match rows");
  double pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw data_error("gbt_fit: labels must be 0/1");
    pos += v;
  }
  if (pos == 0 || pos == static_cast<double>(n)) throw data_error("gbt_fit: single-class labels");
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (std::isinf(X(i, j))) throw data_error("gbt_fit: infinite feature value in column " + std::to_string(j));

  std::vector<std::vector<int>> sorted(static_cast<std::size_t>(X.cols())), missing(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    auto& s = sorted[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < X.rows(); ++i) (is_missing(X(i, j)) ? missing[static_cast<std::size_t>(j)] : s).push_back(static_cast<int>(i));
    std::stable_sort(s.begin(), s.end(), [&](int a, int b) { return X(a, j) < X(b, j); });
  }

  TreeEnsemble model;
  model.eta = params.eta;
  model.n_features = static_cast<int>(X.cols());
  const double rate = pos / static_cast<double>(n);
  model.base_score = std::log(rate / (1.0 - rate));

  Vector margin = Vector::Constant(static_cast<Eigen::Index>(n), model.base_score);
  if (trace) trace->log_loss.push_back(log_loss(y, margin));
  std::vector<double> g(n), h(n);
  std::vector<int> node_of;
  TreeBuilder builder(X, sorted, missing, params);
  for (int t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin(static_cast<Eigen::Index>(i)));
      g[i] = p - y[i];
      h[i] = p * (1.0 - p);
    }
    auto tree = builder.build(g, h, node_of);
    for (std::size_t i = 0; i < n; ++i)
      margin(static_cast<Eigen::Index>(i)) += params.eta * tree.nodes[static_cast<std::size_t>(node_of[i])].value;
    for (const auto& nd : tree.nodes)
      if (!std::isfinite(nd.value)) throw numeric_error("gbt_fit: non-finite leaf weight in round " + std::to_string(t));
    model.trees.push_back(std::move(tree));
    if (trace) trace->log_loss.push_back(log_loss(y, margin));
  }
  return model;
}

double gbt_predict(const TreeEnsemble& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != model.n_features) throw data_error("gbt_predict: schema mismatch");
  return sigmoid(model.margin(x));
}

Vector gbt_predict_all(const TreeEnsemble& model, const Matrix& X) {
  if (X.cols() != model.n_features) throw data_error("gbt_predict: schema mismatch");
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = sigmoid(model.margin(X.row(i)));
  return out;
}

nlohmann::json to_json(const TreeEnsemble& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(to_json(t));
  return {{"kind", "tree_ensemble"}, {"version", 1},          {"eta", m.eta},
          {"base_score", m.base_score}, {"n_features", m.n_features}, {"trees", trees}};
}

TreeEnsemble gbt_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "tree_ensemble") throw data_error("model document is not a tree_ensemble");
  TreeEnsemble m;
  m.eta = j.at("eta").get<double>();
  m.base_score = j.at("base_score").get<double>();
  m.n_features = j.at("n_features").get<int>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  for (const auto& t : m.trees)
    for (const auto& nd : t.nodes)
      if (!nd.is_leaf() && nd.feature >= m.n_features) throw data_error("tree_ensemble: split feature out of range");
  return m;
}

}  // namespace fulfillkit
