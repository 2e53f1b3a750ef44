#include "fulfillkit/pipeline.hpp"

#include <algorithm>

namespace fulfillkit {

namespace {

std::vector<Eigen::Index> all_columns(Eigen::Index p) {
  std::vector<Eigen::Index> c(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) c[static_cast<std::size_t>(j)] = j;
  return c;
}

Eigen::RowVectorXd gather(const Eigen::Ref<const Eigen::RowVectorXd>& x, const std::vector<Eigen::Index>& cols,
                          const Imputer& imp) {
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double v = x(cols[k]);
    out(static_cast<Eigen::Index>(k)) = is_missing(v) ? imp.medians(static_cast<Eigen::Index>(k)) : v;
  }
  return out;
}

void check_schema(const FeatureSchema& expected, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(expected.size()) != cols)
    throw data_error("model expects " + std::to_string(expected.size()) + " features, got " + std::to_string(cols));
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<int>& idx) {
  std::vector<T> out;
  for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<std::string> names_of(const FeatureSchema& s, const std::vector<Eigen::Index>& cols) {
  std::vector<std::string> out;
  for (auto c : cols) out.push_back(s[static_cast<std::size_t>(c)].name);
  return out;
}

}  // namespace

std::vector<Eigen::Index> liwc_filter_columns(const FeatureMatrix& X, const std::vector<int>& labels, double alpha) {
  std::vector<Eigen::Index> keep, creator, backer;
  for (std::size_t j = 0; j < X.schema.size(); ++j) {
    const auto& s = X.schema[j];
    if (s.group != FeatureGroup::Linguistic) keep.push_back(static_cast<Eigen::Index>(j));
    else if (s.name.starts_with("liwc_creator_")) creator.push_back(static_cast<Eigen::Index>(j));
    else backer.push_back(static_cast<Eigen::Index>(j));
  }
  std::vector<Eigen::Index> late, on_time;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? late : on_time).push_back(static_cast<Eigen::Index>(i));
  auto run = [&](const std::vector<Eigen::Index>& cols) {
    if (cols.empty() || late.size() < 2 || on_time.size() < 2) return;
    Matrix a = X.values(late, cols), b = X.values(on_time, cols);
    a = Imputer::fit(a).apply(a);  // category scores are never missing in practice
    b = Imputer::fit(b).apply(b);
    for (auto c : select_significant_categories(a, b, alpha).selected) keep.push_back(cols[c]);
  };
  run(creator);
  run(backer);
  std::sort(keep.begin(), keep.end());
  return keep;
}

double ClassifierPipeline::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  check_schema(input_schema, x.size());
  return gbt_predict(model, gather(x, columns, imputer));
}

Vector ClassifierPipeline::predict_proba_all(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_proba(X.row(i));
  return out;
}

ClassifierPipeline fit_classifier(const FeatureMatrix& X, const std::vector<int>& labels, const PipelineOptions& opts,
                                  std::uint64_t seed) {
  if (static_cast<Eigen::Index>(labels.size()) != X.values.rows()) throw data_error("fit_classifier: label count mismatch");
  ClassifierPipeline p;
  p.input_schema = X.schema;
  std::vector<Eigen::Index> cols = opts.liwc_filter ? liwc_filter_columns(X, labels, opts.liwc_alpha) : all_columns(X.values.cols());
  Matrix filled = Imputer::fit(X.values(Eigen::all, cols)).apply(X.values(Eigen::all, cols));

  if (opts.use_vif && cols.size() >= 2 && filled.rows() > static_cast<Eigen::Index>(cols.size())) {
    p.vif_input = names_of(X.schema, cols);
    p.vif = vif_eliminate(filled, opts.vif_threshold);
    std::vector<Eigen::Index> kept;
    for (int r : p.vif.retained) kept.push_back(cols[static_cast<std::size_t>(r)]);
    filled = filled(Eigen::all, std::vector<int>(p.vif.retained)).eval();
    cols = kept;
  }
  if (opts.use_boruta && !cols.empty()) {
    p.boruta_input = names_of(X.schema, cols);
    p.boruta = boruta_select(filled, labels, opts.boruta, derive_seed(seed, 0x62), opts.jobs);
    std::vector<int> chosen = p.boruta.confirmed();
    // An empty confirmed set widens to tentative features, then to every candidate.
    if (chosen.empty())
      for (std::size_t j = 0; j < p.boruta.status.size(); ++j)
        if (p.boruta.status[j] != BorutaStatus::Rejected) chosen.push_back(static_cast<int>(j));
    if (chosen.empty())
      for (std::size_t j = 0; j < cols.size(); ++j) chosen.push_back(static_cast<int>(j));
    cols = pick(cols, chosen);
  }
  p.columns = cols;
  const Matrix sub = X.values(Eigen::all, cols);
  p.imputer = Imputer::fit(sub);
  p.model = gbt_fit(p.imputer.apply(sub), labels, opts.gbt, derive_seed(seed, 0x67));
  return p;
}

double RegressorPipeline::predict_days(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  check_schema(input_schema, x.size());
  return enet_predict(model, boxcox, gather(x, columns, imputer));
}

Vector RegressorPipeline::predict_days_all(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_days(X.row(i));
  return out;
}

RegressorPipeline fit_regressor(const FeatureMatrix& X, const std::vector<int>& labels, const Vector& days,
                                const PipelineOptions& opts, std::uint64_t seed) {
  if (days.size() != X.values.rows()) throw data_error("fit_regressor: target count mismatch");
  if (!(days.array() > 0).all() || !days.allFinite()) throw data_error("fit_regressor: durations must be positive");
  RegressorPipeline p;
  p.input_schema = X.schema;
  std::vector<Eigen::Index> cols = opts.liwc_filter ? liwc_filter_columns(X, labels, opts.liwc_alpha) : all_columns(X.values.cols());
  Matrix filled = Imputer::fit(X.values(Eigen::all, cols)).apply(X.values(Eigen::all, cols));

  p.boxcox = boxcox_fit(filled, days, opts.boxcox);
  const Vector y_new = boxcox_apply(days, p.boxcox);
  if (opts.use_stepaic) {
    p.stepwise = stepwise_aic(filled, y_new);
    cols = pick(cols, p.stepwise.retained);
  }
  p.columns = cols;
  const Matrix sub = X.values(Eigen::all, cols);
  p.imputer = Imputer::fit(sub);
  const Matrix Z = p.imputer.apply(sub);
  if (cols.empty()) {
    p.choice = {0.0, 0.0, 0.0};
  } else {
    p.choice = enet_grid_search(Z, y_new, opts.enet_grid, opts.enet_folds, derive_seed(seed, 0x65));
  }
  p.model = enet_fit(Z, y_new, p.choice.lambda1, p.choice.lambda2, opts.enet);
  return p;
}

namespace {

nlohmann::json index_json(const std::vector<Eigen::Index>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (auto i : v) a.push_back(i);
  return a;
}

std::vector<Eigen::Index> index_from_json(const nlohmann::json& j, std::size_t bound) {
  std::vector<Eigen::Index> out;
  for (const auto& e : j) {
    const auto i = e.get<Eigen::Index>();
    if (i < 0 || static_cast<std::size_t>(i) >= bound) throw data_error("model column index out of range");
    out.push_back(i);
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const ClassifierPipeline& p) {
  return {{"kind", "classifier_pipeline"}, {"version", 1},
          {"input_schema", schema_to_json(p.input_schema)}, {"columns", index_json(p.columns)},
          {"imputer", to_json(p.imputer)}, {"model", to_json(p.model)}};
}

ClassifierPipeline classifier_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "classifier_pipeline") throw data_error("model document is not a classifier_pipeline");
  ClassifierPipeline p;
  p.input_schema = schema_from_json(j.at("input_schema"));
  p.columns = index_from_json(j.at("columns"), p.input_schema.size());
  p.imputer = imputer_from_json(j.at("imputer"));
  p.model = gbt_from_json(j.at("model"));
  if (static_cast<std::size_t>(p.model.n_features) != p.columns.size()) throw data_error("classifier: column count mismatch");
  return p;
}

nlohmann::json to_json(const RegressorPipeline& p) {
  return {{"kind", "regressor_pipeline"}, {"version", 1},
          {"input_schema", schema_to_json(p.input_schema)}, {"columns", index_json(p.columns)},
          {"imputer", to_json(p.imputer)}, {"boxcox", to_json(p.boxcox)},
          {"lambda1", p.choice.lambda1}, {"lambda2", p.choice.lambda2}, {"cv_mse", p.choice.cv_mse},
          {"model", to_json(p.model)}};
}

RegressorPipeline regressor_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "regressor_pipeline") throw data_error("model document is not a regressor_pipeline");
  RegressorPipeline p;
  p.input_schema = schema_from_json(j.at("input_schema"));
  p.columns = index_from_json(j.at("columns"), p.input_schema.size());
  p.imputer = imputer_from_json(j.at("imputer"));
  p.boxcox = boxcox_from_json(j.at("boxcox"));
  p.choice = {j.at("lambda1").get<double>(), j.at("lambda2").get<double>(), j.at("cv_mse").get<double>()};
  p.model = enet_from_json(j.at("model"));
  if (static_cast<std::size_t>(p.model.coef.size()) != p.columns.size()) throw data_error("regressor: column count mismatch");
  return p;
}

}  // namespace fulfillkit
