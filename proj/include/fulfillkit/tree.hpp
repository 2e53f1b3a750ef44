#pragma once

#include <vector>

#include <json.hpp>

#include "fulfillkit/common.hpp"

namespace fulfillkit {

// Binary decision tree stored as a flat node array; node 0 is the root.
// Rows with x[feature] < threshold go left, missing values follow `missing_left`.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool missing_left = false;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf weight (boosting) or class-1 share (forest)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  template <typename Row>
  int leaf_index(const Row& x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& nd = nodes[static_cast<std::size_t>(i)];
      const double v = x(nd.feature);
      const bool left = is_missing(v) ? nd.missing_left : v < nd.threshold;
      i = left ? nd.left : nd.right;
    }
    return i;
  }

  template <typename Row>
  double predict(const Row& x) const {
    return nodes[static_cast<std::size_t>(leaf_index(x))].value;
  }

  int depth() const;
  bool uses_feature(int f) const;
  bool operator==(const DecisionTree&) const = default;
};

nlohmann::json to_json(const DecisionTree& t);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace fulfillkit
