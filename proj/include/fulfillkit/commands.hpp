#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fulfillkit/config.hpp"

namespace fulfillkit {

inline const std::vector<std::string> kCommands{"synth",        "embed",          "cluster",         "featurize",
                                                "select",       "train-classifier", "train-regressor", "evaluate",
                                                "predict",      "ablate"};

struct PredictRequest {
  std::filesystem::path project;  // JSONL or single JSON object
  std::filesystem::path events;   // optional
  std::optional<std::string> id;  // project id when the file holds several
  std::optional<double> now;      // epoch seconds; defaults to the latest known activity
};

// Artifact locations below the output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path embeddings() const { return root / "embeddings.txt"; }
  std::filesystem::path semantic_model() const { return root / "semantic_model.json"; }
  std::filesystem::path difficulty() const { return root / "difficulty.csv"; }
  std::filesystem::path features_csv(TimePoint tp) const;
  std::filesystem::path features_schema(TimePoint tp) const;
  std::filesystem::path labels() const { return root / "features" / "labels.csv"; }
  std::filesystem::path vif_csv(TimePoint tp) const;
  std::filesystem::path boruta_csv(TimePoint tp) const;
  std::filesystem::path classifier(TimePoint tp) const;
  std::filesystem::path regressor(TimePoint tp) const;
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path prediction() const { return root / "prediction.json"; }
};

// Writes `content` unless the file already holds exactly those bytes; returns true when written.
bool write_if_changed(const std::filesystem::path& path, const std::string& content);

void cmd_synth(const RunConfig& cfg);
void cmd_embed(const RunConfig& cfg);
void cmd_cluster(const RunConfig& cfg);
void cmd_featurize(const RunConfig& cfg);
void cmd_select(const RunConfig& cfg);
void cmd_train_classifier(const RunConfig& cfg);
void cmd_train_regressor(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg);
nlohmann::json cmd_predict(const RunConfig& cfg, const PredictRequest& req);

// Dispatches one of kCommands other than predict.
void run_command(const std::string& command, const RunConfig& cfg);

}  // namespace fulfillkit
