#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fulfillkit/common.hpp"

namespace fulfillkit {

// Kickstarter top-level categories.
inline constexpr std::array<std::string_view, 15> kCategories = {
    "Art",   "Comics",     "Crafts",      "Dance",      "Design",     "Fashion", "Film & Video", "Food",
    "Games", "Journalism", "Music",       "Photography", "Publishing", "Technology", "Theater"};

int category_index(std::string_view name);  // -1 when unknown

struct RewardRecord {
  std::string id;
  std::string description;
  double pledge_amount = 0.0;
  std::int64_t estimated_delivery_ts = 0;
  std::int64_t backer_count = 0;

  bool operator==(const RewardRecord&) const = default;
};

struct ProjectRecord {
  std::string id;
  std::string category;
  double goal = 0.0;
  double pledged = 0.0;
  bool successful = false;
  std::int64_t launch_ts = 0;
  std::int64_t deadline_ts = 0;
  std::int64_t images_count = 0;
  std::int64_t faqs_count = 0;
  std::string project_description;
  std::string bio_description;
  std::vector<RewardRecord> rewards;
  std::int64_t creator_backed_count = 0;
  std::int64_t creator_created_count = 0;

  // Longest estimated delivery date over all rewards.
  std::int64_t ledd() const;

  bool operator==(const ProjectRecord&) const = default;
};

enum class AuthorRole { Creator, Backer };
enum class EventKind { Update, Comment };

struct ActivityEvent {
  std::string project_id;
  AuthorRole author_role = AuthorRole::Backer;
  std::string author_id;  // optional in files; needed for distinct-backer counts
  EventKind kind = EventKind::Comment;
  std::int64_t ts = 0;
  std::string text;

  bool operator==(const ActivityEvent&) const = default;
};

enum class DeliveryStatus { OnTime, Late };

struct DeliveryLabel {
  std::string project_id;
  DeliveryStatus status = DeliveryStatus::OnTime;
  std::optional<double> actual_duration_days;

  bool operator==(const DeliveryLabel&) const = default;
};

// Validated, cross-referenced dataset. Events are kept sorted by (project order, ts).
class Corpus {
 public:
  Corpus() = default;
  // Validates every record invariant and cross-reference; throws data_error on the first failure.
  Corpus(std::vector<ProjectRecord> projects, std::vector<ActivityEvent> events, std::vector<DeliveryLabel> labels);

  const std::vector<ProjectRecord>& projects() const { return projects_; }
  const std::vector<ActivityEvent>& events() const { return events_; }
  const std::vector<DeliveryLabel>& labels() const { return labels_; }

  std::size_t size() const { return projects_.size(); }
  std::optional<std::size_t> find(const std::string& project_id) const;
  const DeliveryLabel* label_for(const std::string& project_id) const;
  // Events of one project, sorted by timestamp.
  std::vector<ActivityEvent> events_for(const std::string& project_id) const;

  bool operator==(const Corpus& other) const {
    return projects_ == other.projects_ && events_ == other.events_ && labels_ == other.labels_;
  }

 private:
  std::vector<ProjectRecord> projects_;
  std::vector<ActivityEvent> events_;
  std::vector<DeliveryLabel> labels_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> label_index_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> event_ranges_;
};

struct CorpusPaths {
  std::filesystem::path projects;  // corpus.jsonl
  std::filesystem::path events;    // events.jsonl (optional: may be empty path)
  std::filesystem::path labels;    // labels.jsonl (optional: may be empty path)

  static CorpusPaths in_directory(const std::filesystem::path& dir);
};

Corpus load_corpus(const CorpusPaths& paths);
inline Corpus load_corpus(const std::filesystem::path& dir) { return load_corpus(CorpusPaths::in_directory(dir)); }

// Parses a projects file only (used by `predict` for single projects).
std::vector<ProjectRecord> load_projects(const std::filesystem::path& path);
std::vector<ActivityEvent> load_events(const std::filesystem::path& path);

// Lines starting with '#' are comments in every JSONL input; `provenance` becomes the first line.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir, const std::string& provenance = "");

// Keeps projects with goal >= min_goal and the stored successful flag set.
Corpus filter_successful(const Corpus& corpus, double min_goal);

// Synthetic corpora with a planted difficulty/diligence signal.
struct SynthConfig {
  int n_projects = 2000;
  double late_rate = 0.54;
  double noise = 0.1;            // label flip probability
  double duration_fraction = 0.73;  // share of projects with ground-truth duration
  // Difficulty tier (0 easy, 1 medium, 2 hard) -> word pool.
  std::array<std::vector<std::string>, 3> pools;
  // Sampling weights of the three tiers when drawing reward pools.
  std::array<double, 3> pool_mix = {1.0, 1.0, 1.0};

  static SynthConfig defaults();
  static std::array<std::vector<std::string>, 3> default_pools();
  void validate() const;
};

// Reads `[synth]` keys (n_projects, late_rate, noise, duration_fraction, seed_pools, pool_mix).
SynthConfig load_synth_config(const std::filesystem::path& path);
// seed_pools file: one line per tier, `easy|medium|hard word word ...`.
std::array<std::vector<std::string>, 3> load_seed_pools(const std::filesystem::path& path);

Corpus generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace fulfillkit
