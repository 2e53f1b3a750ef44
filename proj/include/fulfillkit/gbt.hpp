#pragma once

#include <vector>

#include <json.hpp>

#include "fulfillkit/common.hpp"
#include "fulfillkit/tree.hpp"

namespace fulfillkit {

struct GbtParams {
  int n_trees = 200;
  int max_depth = 4;
  double eta = 0.1;
  double lambda = 1.0;  // L2 penalty on leaf weights
  double gamma = 0.0;   // minimum split gain
  double min_child_weight = 1.0;

  void validate() const;
};

struct TreeEnsemble {
  std::vector<DecisionTree> trees;
  double eta = 0.1;
  double base_score = 0.0;  // margin before the first tree
  int n_features = 0;

  double margin(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  bool operator==(const TreeEnsemble&) const = default;
};

struct GbtTrace {
  std::vector<double> log_loss;  // mean training log-loss; entry 0 is the base score alone
};

// Binary logistic boosting with second-order leaf weights and exact greedy splits.
// Labels are 0/1; NaN features are missing, infinities are rejected.
TreeEnsemble gbt_fit(const Matrix& X, const std::vector<int>& y, const GbtParams& params, std::uint64_t seed,
                     GbtTrace* trace = nullptr);

double gbt_predict(const TreeEnsemble& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);
Vector gbt_predict_all(const TreeEnsemble& model, const Matrix& X);

nlohmann::json to_json(const TreeEnsemble& m);
TreeEnsemble gbt_from_json(const nlohmann::json& j);

double log_loss(const std::vector<int>& y, const Vector& margin);

}  // namespace fulfillkit
