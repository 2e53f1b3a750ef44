#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "fulfillkit/features.hpp"
#include "fulfillkit/models.hpp"
#include "fulfillkit/pipeline.hpp"
#include "fulfillkit/stats.hpp"

namespace fulfillkit {

using Folds = std::vector<std::vector<int>>;  // row indices per fold, ascending

// Partition of 0..n-1 into k folds. With labels, each class is dealt round-robin after a
// seeded shuffle, so fold sizes differ by at most one overall and per class.
Folds kfold_split(int n, int k, const std::vector<int>* stratify_on, std::uint64_t seed);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

struct RegressionMetrics {
  double rmse = 0.0;
  double nrmse_a = 0.0;  // RMSE over the truth range; NaN when undefined
  double nrmse_b = 0.0;  // RMSE over the truth mean; NaN when undefined
};

RegressionMetrics regression_metrics(const Vector& pred, const Vector& truth);

enum class Pairing { PerFold, PerProject };

struct EvalOptions {
  int folds = 10;
  std::vector<TimePoint> time_points{TimePoint::TP1, TimePoint::TP2, TimePoint::TP3, TimePoint::TP4};
  bool classify = true;
  bool regress = true;
  Pairing pairing = Pairing::PerFold;
  PipelineOptions pipeline{};
  int jobs = 1;  // folds evaluated concurrently
};

struct ClassificationRow {
  TimePoint tp = TimePoint::TP1;
  std::vector<double> model, majority, baseline8;  // per-fold accuracy
  double model_mean = 0, majority_mean = 0, baseline8_mean = 0;
  double p_vs_majority = 1, p_vs_baseline8 = 1;     // one-sided, model better
};

struct RegressionRow {
  TimePoint tp = TimePoint::TP1;
  std::vector<RegressionMetrics> model, baseline;  // per fold
  RegressionMetrics model_mean, baseline_mean;     // means over folds (NaN folds skipped)
  double p_vs_baseline = 1;                        // one-sided on RMSE, model lower
};

struct PredictionRecord {
  std::string id;
  TimePoint tp = TimePoint::TP1;
  int fold = 0;
  int label = 0;
  double prob_late = kMissing, baseline_prob_late = kMissing;
  double days = kMissing, pred_days = kMissing, baseline_days = kMissing;
};

struct AblationRow {
  std::string excluded;
  double accuracy = 0.0;
  double delta = 0.0;  // against the all-features accuracy
  std::vector<double> folds;
};

struct EvalReport {
  std::vector<ClassificationRow> classification;
  std::vector<RegressionRow> regression;
  std::vector<PredictionRecord> predictions;
  std::vector<AblationRow> ablation;
  TimePoint ablation_tp = TimePoint::TP4;

  BufferTable buffers() const;  // per-TP mean RMSE of the regression model
};

// Labels aligned with the matrix rows; durations NaN where unknown. Matrices are untransformed
// feature matrices for the same ids; log1p is applied here.
struct EvalData {
  std::map<TimePoint, FeatureMatrix> features;
  std::vector<int> labels;
  Vector days;
};

EvalReport evaluate(const EvalData& data, const EvalOptions& opts, std::uint64_t seed);

// Classification CV at `tp` with each named group removed in turn; identical folds throughout.
std::vector<AblationRow> ablation(const EvalData& data, const std::vector<FeatureGroup>& groups, TimePoint tp,
                                  const EvalOptions& opts, std::uint64_t seed);

inline const std::vector<FeatureGroup> kAblationGroups{FeatureGroup::Creator, FeatureGroup::Backer,
                                                       FeatureGroup::Linguistic, FeatureGroup::Semantic};

void write_report_csv(std::ostream& out, const EvalReport& r, const std::string& provenance);
void write_report_markdown(std::ostream& out, const EvalReport& r, const std::string& provenance);
void write_predictions_csv(std::ostream& out, const EvalReport& r, const std::string& provenance);
void write_ablation_csv(std::ostream& out, const EvalReport& r, const std::string& provenance);

}  // namespace fulfillkit
