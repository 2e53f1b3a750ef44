#include "fulfillkit/tree.hpp"

#include <algorithm>

namespace fulfillkit {

namespace {
int depth_from(const DecisionTree& t, int i) {
  const auto& nd = t.nodes[static_cast<std::size_t>(i)];
  if (nd.is_leaf()) return 0;
  return 1 + std::max(depth_from(t, nd.left), depth_from(t, nd.right));
}
}  // namespace

int DecisionTree::depth() const { return nodes.empty() ? 0 : depth_from(*this, 0); }

bool DecisionTree::uses_feature(int f) const {
  return std::any_of(nodes.begin(), nodes.end(), [f](const TreeNode& n) { return n.feature == f; });
}

nlohmann::json to_json(const DecisionTree& t) {
  // Column arrays keep the serialized form compact.
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 missing_left = nlohmann::json::array(), left = nlohmann::json::array(),
                 right = nlohmann::json::array(), value = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    missing_left.push_back(n.missing_left ? 1 : 0);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"missing_left", missing_left},
          {"left", left},       {"right", right},         {"value", value}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = f.at(i).get<int>();
    n.threshold = j.at("threshold").at(i).get<double>();
    n.missing_left = j.at("missing_left").at(i).get<int>() != 0;
    n.left = j.at("left").at(i).get<int>();
    n.right = j.at("right").at(i).get<int>();
    n.value = j.at("value").at(i).get<double>();
    const int sz = static_cast<int>(f.size());
    if (!n.is_leaf() && (n.left <= 0 || n.left >= sz || n.right <= 0 || n.right >= sz))
      throw data_error("tree: child index out of range");
    if (!std::isfinite(n.value)) throw data_error("tree: non-finite leaf value");
  }
  if (t.nodes.empty()) throw data_error("tree: no nodes");
  return t;
}

}  // namespace fulfillkit
