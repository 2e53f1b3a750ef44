#include "fulfillkit/models.hpp"

#include <algorithm>

namespace fulfillkit {

MajorityClassifier majority_baseline(const std::vector<int>& labels) {
  if (labels.empty()) throw data_error("majority_baseline: no labels");
  const auto late = std::count(labels.begin(), labels.end(), kLate);
  const auto on_time = static_cast<std::ptrdiff_t>(labels.size()) - late;
  return {late >= on_time ? kLate : kOnTime};
}

std::vector<Eigen::Index> baseline8_columns(const FeatureSchema& schema, TimePoint tp) {
  static const char* const kNames[] = {"rewards", "goal", "fundraising_days", "baseline_backers",
                                       "percent_raised", "backed_projects", "created_projects"};
  std::vector<Eigen::Index> out;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& s = schema[j];
    if (s.availability > tp) continue;
    const bool named = std::find(std::begin(kNames), std::end(kNames), s.name) != std::end(kNames);
    if (named || s.name.starts_with("category=")) out.push_back(static_cast<Eigen::Index>(j));
  }
  return out;
}

int baseline8_feature_count(TimePoint tp) { return tp >= TimePoint::TP3 ? 8 : 6; }

double Baseline8Model::predict(const Eigen::Ref<const Eigen::RowVectorXd>& full_row) const {
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const double v = full_row(columns[k]);
    x(static_cast<Eigen::Index>(k)) = is_missing(v) ? imputer.medians(static_cast<Eigen::Index>(k)) : v;
  }
  if (task == Task::Classify) return gbt_predict(classifier, x);
  return std::max(1.0, regression.intercept + x.dot(regression.coef));
}

Baseline8Model baseline8_fit(const FeatureMatrix& X, const std::vector<int>& labels, const Vector& days, Task task,
                             TimePoint tp, const GbtParams& gbt, std::uint64_t seed) {
  Baseline8Model m;
  m.task = task;
  m.columns = baseline8_columns(X.schema, tp);
  if (m.columns.empty()) throw data_error("baseline8: no baseline columns in schema");
  const Matrix sub = X.values(Eigen::all, m.columns);
  m.imputer = Imputer::fit(sub);
  const Matrix filled = m.imputer.apply(sub);
  if (task == Task::Classify) m.classifier = gbt_fit(filled, labels, gbt, seed);
  else m.regression = ols_fit(filled, days);
  return m;
}

double recommend_duration(double predicted_days, TimePoint tp, const BufferTable& buffers) {
  const auto it = buffers.find(tp);
  if (it == buffers.end()) throw config_error("no buffer configured for " + to_string(tp));
  return std::ceil(predicted_days + it->second);
}

}  // namespace fulfillkit
