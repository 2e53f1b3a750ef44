#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fulfillkit/clustering.hpp"
#include "fulfillkit/common.hpp"
#include "fulfillkit/corpus.hpp"
#include "fulfillkit/text.hpp"

namespace fulfillkit {

enum class TimePoint { TP1 = 1, TP2 = 2, TP3 = 3, TP4 = 4 };

inline constexpr TimePoint kTimePoints[] = {TimePoint::TP1, TimePoint::TP2, TimePoint::TP3, TimePoint::TP4};

std::string to_string(TimePoint tp);
TimePoint parse_time_point(std::string_view s);  // "TP1".."TP4"; throws config_error otherwise

// Cutoff timestamp (epoch seconds, possibly fractional) of a time point for one project.
double cutoff(const ProjectRecord& project, TimePoint tp);

enum class FeatureGroup { Project, Creator, Backer, Temporal, Linguistic, Semantic, Baseline };

std::string to_string(FeatureGroup g);
FeatureGroup parse_feature_group(std::string_view s);

struct FeatureSpec {
  std::string name;
  TimePoint availability = TimePoint::TP1;
  FeatureGroup group = FeatureGroup::Project;
  bool log1p = true;  // eligible for the log(1+x) transform

  bool operator==(const FeatureSpec&) const = default;
};

using FeatureSchema = std::vector<FeatureSpec>;

struct FeatureVector {
  FeatureSchema schema;
  std::vector<double> values;

  std::optional<double> get(std::string_view name) const;
};

struct FeatureContext {
  const SemanticModel* semantic = nullptr;  // no semantic features when null
  const StopWords* stopwords = nullptr;     // defaults to the bundled list
  const CategoryDictionary* dictionary = nullptr;  // no linguistic features when null
  // Selected dictionary categories per author role; nullopt keeps every category.
  std::optional<std::vector<std::size_t>> creator_categories;
  std::optional<std::vector<std::size_t>> backer_categories;
  int n_slots = 20;
  SemanticMode early_mode = SemanticMode::RewardCount;  // TP1, TP2
  SemanticMode late_mode = SemanticMode::Backers;       // TP3, TP4
};

// Schema emitted at `tp` (every feature with availability <= tp), in column order.
FeatureSchema feature_schema(const FeatureContext& ctx, TimePoint tp);

// Events must be sorted by timestamp; only events at or before the time point's cutoff are used.
FeatureVector extract_features(const ProjectRecord& project, const std::vector<ActivityEvent>& events,
                               const FeatureContext& ctx, TimePoint tp);

// Comment counts per slot of the fundraising window; comments after `cutoff_ts` are ignored.
std::vector<double> temporal_slots(const std::vector<ActivityEvent>& events, std::int64_t launch_ts,
                                   std::int64_t deadline_ts, double cutoff_ts, int n_slots);

// Mean seconds between a backer question ('?' in a backer comment) and the earliest later
// creator comment; kMissing when no question was answered.
double response_latency(const std::vector<ActivityEvent>& events);

// Mean gap in days between consecutive creator updates; kMissing with fewer than two.
double average_update_interval(const std::vector<ActivityEvent>& events);

struct FeatureMatrix {
  std::vector<std::string> ids;
  FeatureSchema schema;
  Matrix values;  // rows follow ids, columns follow schema
  bool log_transformed = false;

  Eigen::Index column(std::string_view name) const;  // -1 when absent
  std::vector<Eigen::Index> columns_in(FeatureGroup g) const;
  FeatureMatrix select_columns(const std::vector<Eigen::Index>& cols) const;
  FeatureMatrix select_rows(const std::vector<Eigen::Index>& rows) const;
};

FeatureMatrix build_feature_matrix(const Corpus& corpus, const FeatureContext& ctx, TimePoint tp,
                                   const std::vector<std::string>& ids);

// log(1+x) on columns flagged log1p; missing propagates. Rejects negative values in flagged
// columns and a second application.
FeatureMatrix log1p_matrix(const FeatureMatrix& X);

void save_feature_matrix(const FeatureMatrix& X, const std::filesystem::path& csv, const std::filesystem::path& schema,
                         const std::string& provenance, TimePoint tp);
FeatureMatrix load_feature_matrix(const std::filesystem::path& csv, const std::filesystem::path& schema);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

}  // namespace fulfillkit
