#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fulfillkit/features.hpp"
#include "fulfillkit/gbt.hpp"
#include "fulfillkit/linear.hpp"
#include "fulfillkit/selection.hpp"

namespace fulfillkit {

// Preprocessing, selection and model settings shared by training commands and the CV harness.
struct PipelineOptions {
  bool liwc_filter = true;
  double liwc_alpha = 0.0;  // <= 0: 0.05 divided by the number of categories
  bool use_vif = true;
  double vif_threshold = 10.0;
  bool use_boruta = true;
  BorutaParams boruta{};
  GbtParams gbt{};
  BoxCoxOptions boxcox{};
  bool use_stepaic = true;
  std::vector<double> enet_grid{0.0, 1e-3, 1e-2, 1e-1, 1.0};
  int enet_folds = 5;
  ElasticNetOptions enet{};
  int jobs = 1;
};

// Columns kept after dropping dictionary categories whose training-row means do not differ
// between late and on-time projects.
std::vector<Eigen::Index> liwc_filter_columns(const FeatureMatrix& X, const std::vector<int>& labels, double alpha);

struct ClassifierPipeline {
  FeatureSchema input_schema;            // schema the pipeline expects (already log-transformed)
  std::vector<Eigen::Index> columns;     // selected input columns, ascending
  Imputer imputer;                       // over `columns`
  TreeEnsemble model;
  VifReport vif;                         // indices relative to the post-filter columns
  BorutaResult boruta;                   // indices relative to the VIF survivors
  std::vector<std::string> vif_input, boruta_input;  // feature names of those stages

  double predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_proba_all(const Matrix& X) const;
};

ClassifierPipeline fit_classifier(const FeatureMatrix& X, const std::vector<int>& labels, const PipelineOptions& opts,
                                  std::uint64_t seed);

struct RegressorPipeline {
  FeatureSchema input_schema;
  std::vector<Eigen::Index> columns;     // input columns entering the elastic net
  Imputer imputer;                       // over `columns`
  BoxCoxTransform boxcox;
  StepwiseResult stepwise;               // indices relative to the post-filter columns
  EnetChoice choice;
  ElasticNetModel model;

  double predict_days(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_days_all(const Matrix& X) const;
};

// `days` must be positive and finite for every row.
RegressorPipeline fit_regressor(const FeatureMatrix& X, const std::vector<int>& labels, const Vector& days,
                                const PipelineOptions& opts, std::uint64_t seed);

nlohmann::json to_json(const ClassifierPipeline& p);
ClassifierPipeline classifier_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RegressorPipeline& p);
RegressorPipeline regressor_from_json(const nlohmann::json& j);

}  // namespace fulfillkit
