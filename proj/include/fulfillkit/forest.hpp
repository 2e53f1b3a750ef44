#pragma once

#include <vector>

#include "fulfillkit/common.hpp"
#include "fulfillkit/tree.hpp"

namespace fulfillkit {

struct RfParams {
  int n_trees = 300;
  int mtry = 0;  // 0 selects ceil(sqrt(p))
  int min_node_size = 1;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::vector<int>> oob;  // out-of-bag rows per tree
  int n_features = 0;

  // Share of trees voting class 1.
  double vote(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return vote(x) > 0.5 ? 1 : 0; }
};

// CART with Gini splits on bootstrap samples; missing values follow the larger child.
RandomForestModel rf_fit(const Matrix& X, const std::vector<int>& y, const RfParams& params, std::uint64_t seed);

// trees x features matrix of out-of-bag accuracy loss after permuting one column.
Matrix rf_permutation_importance(const RandomForestModel& model, const Matrix& X, const std::vector<int>& y,
                                 std::uint64_t seed);

// Mean over trees divided by the standard deviation over trees, per feature.
Vector importance_z(const Matrix& per_tree);

}  // namespace fulfillkit
