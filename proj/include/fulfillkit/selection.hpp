#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fulfillkit/common.hpp"
#include "fulfillkit/forest.hpp"

namespace fulfillkit {

inline constexpr double kVifCap = 1e12;

struct VifScores {
  std::vector<double> vif;        // NaN for degenerate columns
  std::vector<bool> capped;       // R^2 at or above 1 - 1e-12
  std::vector<bool> degenerate;   // constant column
};

// VIF of each column regressed on all others plus an intercept.
VifScores vif_scores(const Matrix& X);

struct VifReport {
  std::vector<int> retained;            // original column indices, ascending
  std::vector<int> eliminated;          // in removal order
  std::vector<double> vif_at_removal;   // NaN for degenerate removals
  std::vector<double> final_vif;        // per original column; NaN if eliminated
  std::vector<bool> capped;             // per original column, flag at its last computation
  std::vector<bool> degenerate;
};

// Constant columns are removed first; then the largest VIF (lowest index on ties) is
// removed while the maximum is at or above `threshold`.
VifReport vif_eliminate(const Matrix& X, double threshold = 10.0);

enum class BorutaStatus { Confirmed, Tentative, Rejected };
std::string to_string(BorutaStatus s);

struct BorutaParams {
  int n_runs = 100;
  double alpha = 0.05;
  RfParams forest{};

  void validate() const;
};

struct BorutaResult {
  std::vector<BorutaStatus> status;
  std::vector<int> hits;
  std::vector<double> p_value;
  std::vector<double> z_mean, z_max, z_min, z_median;  // over runs
  int n_runs = 0;

  std::vector<int> confirmed() const;
};

// Labels are 0/1. Runs are independent given the seed and may be spread over `jobs` threads.
BorutaResult boruta_select(const Matrix& X, const std::vector<int>& y, const BorutaParams& params, std::uint64_t seed,
                           int jobs = 1);

// Status from hit counts alone; shared by boruta_select and its alpha sweeps.
BorutaStatus boruta_status(int hits, int n_runs, double alpha, double* p_value = nullptr);

struct StepwiseResult {
  std::vector<int> retained;     // ascending column indices
  std::vector<double> aic_path;  // AIC after each accepted move, starting with the initial model
  bool forward_start = false;    // full model was singular
};

// Bidirectional stepwise least squares on AIC = n log(SSE/n) + 2(k+1).
StepwiseResult stepwise_aic(const Matrix& X, const Vector& y);

double aic_value(double sse, Eigen::Index n, Eigen::Index k);

void write_vif_csv(std::ostream& out, const VifReport& r, const std::vector<std::string>& names,
                   const std::string& provenance);
void write_boruta_csv(std::ostream& out, const BorutaResult& r, const std::vector<std::string>& names,
                      const std::string& provenance);

}  // namespace fulfillkit
