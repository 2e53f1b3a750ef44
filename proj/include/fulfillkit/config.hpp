#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fulfillkit/clustering.hpp"
#include "fulfillkit/corpus.hpp"
#include "fulfillkit/embeddings.hpp"
#include "fulfillkit/evaluation.hpp"
#include "fulfillkit/features.hpp"
#include "fulfillkit/pipeline.hpp"

namespace fulfillkit {

// Effective settings of one CLI invocation: defaults, then the INI file, then
// FULFILLKIT_<SECTION>_<KEY> environment variables, then command-line overrides.
struct RunConfig {
  std::filesystem::path base_dir = ".";  // relative paths resolve against this

  // [paths]
  std::string corpus, events, labels, stopwords, dictionary, embeddings;
  std::string out = "out";

  // [run]
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<TimePoint> time_points{TimePoint::TP1, TimePoint::TP2, TimePoint::TP3, TimePoint::TP4};

  SynthConfig synth = SynthConfig::defaults();

  // [embed]
  int window = 15;
  int min_count = 5;
  GloveParams glove{};

  // [cluster]
  SemanticOptions semantic{};
  SemanticMode early_mode = SemanticMode::RewardCount;
  SemanticMode late_mode = SemanticMode::Backers;

  // [features]
  int n_slots = 20;
  double min_goal = 100.0;

  // [select], [gbt], [enet], [boxcox]
  PipelineOptions pipeline{};

  // [evaluate]
  int folds = 10;
  Pairing pairing = Pairing::PerFold;
  int eval_boruta_runs = 20;
  int eval_boruta_trees = 50;
  bool eval_classify = true;
  bool eval_regress = true;
  TimePoint ablation_tp = TimePoint::TP4;

  std::map<std::string, std::string> effective;  // "section.key" -> value
  std::uint64_t hash = 0;

  std::uint64_t master_seed() const;  // config_error when unset
  std::string provenance() const;
  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path out_dir() const { return resolve(out); }
  PipelineOptions evaluation_pipeline() const;
};

using Environment = std::map<std::string, std::string>;

// FULFILLKIT_* variables of the current process.
Environment process_environment();

// Errors for every invalid field; empty when the configuration is usable.
std::vector<std::string> validate_config(const std::optional<std::filesystem::path>& path, const Environment& env,
                                         const std::map<std::string, std::string>& overrides = {});

// Throws config_error listing every problem found by validate_config.
RunConfig load_config(const std::optional<std::filesystem::path>& path, const Environment& env,
                      const std::map<std::string, std::string>& overrides = {});

// Canonical INI text of the defaults (seed included), as shipped in configs/default.ini.
std::string default_config_text();

std::uint64_t fnv1a64(const std::string& s);

}  // namespace fulfillkit
