#pragma once

#include <map>
#include <string>
#include <vector>

#include "fulfillkit/features.hpp"
#include "fulfillkit/gbt.hpp"
#include "fulfillkit/linear.hpp"

namespace fulfillkit {

// Class labels: 1 = late, 0 = on time.
inline constexpr int kLate = 1;
inline constexpr int kOnTime = 0;

struct MajorityClassifier {
  int label = kLate;
  int predict() const { return label; }
};

// Modal class; ties predict late.
MajorityClassifier majority_baseline(const std::vector<int>& labels);

// Columns of the eight-feature baseline available at `tp`: rewards, goal, fundraising days,
// backers and percent raised (TP3 on), backed and created projects, and the category one-hot.
std::vector<Eigen::Index> baseline8_columns(const FeatureSchema& schema, TimePoint tp);

// Number of logical baseline features at `tp` (the category one-hot counts once).
int baseline8_feature_count(TimePoint tp);

enum class Task { Classify, Regress };

struct Baseline8Model {
  Task task = Task::Classify;
  std::vector<Eigen::Index> columns;
  Imputer imputer;
  TreeEnsemble classifier;  // Classify
  OlsFit regression;        // Regress

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& full_row) const;  // probability or days
};

// `X` is the full feature matrix; only the baseline columns are used. Regression targets are days.
Baseline8Model baseline8_fit(const FeatureMatrix& X, const std::vector<int>& labels, const Vector& days, Task task,
                             TimePoint tp, const GbtParams& gbt, std::uint64_t seed);

using BufferTable = std::map<TimePoint, double>;

// ceil(predicted + buffer(tp)); a missing tp entry is a config error.
double recommend_duration(double predicted_days, TimePoint tp, const BufferTable& buffers);

}  // namespace fulfillkit
