#include "fulfillkit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fulfillkit {

using nlohmann::json;
namespace fs = std::filesystem;

int category_index(std::string_view name) {
  for (std::size_t i = 0; i < kCategories.size(); ++i)
    if (kCategories[i] == name) return static_cast<int>(i);
  return -1;
}

std::int64_t ProjectRecord::ledd() const {
  std::int64_t out = deadline_ts;
  for (const auto& r : rewards) out = std::max(out, r.estimated_delivery_ts);
  return out;
}

namespace {

std::string where(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

// Field readers that name the offending field in their error.
class RecordReader {
 public:
  RecordReader(const json& obj, std::string loc) : obj_(obj), loc_(std::move(loc)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw data_error(loc_ + ": field '" + field + "': " + msg);
  }

  const json& require(const std::string& field) const {
    auto it = obj_.find(field);
    if (it == obj_.end()) fail(field, "missing");
    return *it;
  }

  std::string str(const std::string& field, bool optional = false) const {
    auto it = obj_.find(field);
    if (it == obj_.end() || it->is_null()) {
      if (optional) return {};
      fail(field, "missing");
    }
    if (!it->is_string()) fail(field, "expected string");
    return it->get<std::string>();
  }

  std::int64_t integer(const std::string& field, bool optional = false) const {
    auto it = obj_.find(field);
    if (it == obj_.end()) {
      if (optional) return 0;
      fail(field, "missing");
    }
    if (!it->is_number_integer()) fail(field, "expected integer");
    return it->get<std::int64_t>();
  }

  std::int64_t count(const std::string& field, bool optional = false) const {
    const auto v = integer(field, optional);
    if (v < 0) fail(field, "must be non-negative");
    return v;
  }

  double real(const std::string& field) const {
    const auto& v = require(field);
    if (!v.is_number()) fail(field, "expected number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(field, "not finite");
    return d;
  }

  bool boolean(const std::string& field) const {
    const auto& v = require(field);
    if (!v.is_boolean()) fail(field, "expected boolean");
    return v.get<bool>();
  }

  const std::string& loc() const { return loc_; }

 private:
  const json& obj_;
  std::string loc_;
};

template <class Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw data_error(where(path, lineno) + ": malformed record: " + e.what());
    }
    if (!obj.is_object()) throw data_error(where(path, lineno) + ": record is not an object");
    fn(RecordReader(obj, where(path, lineno)), obj);
  }
}

ProjectRecord parse_project(const RecordReader& r, const json& obj) {
  ProjectRecord p;
  p.id = r.str("id");
  if (p.id.empty()) r.fail("id", "empty");
  p.category = r.str("category");
  if (category_index(p.category) < 0) r.fail("category", "unknown category '" + p.category + "'");
  p.goal = r.real("goal");
  if (p.goal <= 0) r.fail("goal", "must be > 0");
  p.pledged = r.real("pledged");
  if (p.pledged < 0) r.fail("pledged", "must be >= 0");
  p.successful = r.boolean("successful");
  p.launch_ts = r.integer("launch_ts");
  p.deadline_ts = r.integer("deadline_ts");
  if (p.deadline_ts <= p.launch_ts) r.fail("deadline_ts", "project " + p.id + ": deadline_ts must exceed launch_ts");
  p.images_count = r.count("images_count");
  p.faqs_count = r.count("faqs_count");
  p.project_description = r.str("project_description", true);
  p.bio_description = r.str("bio_description", true);
  p.creator_backed_count = r.count("creator_backed_count", true);
  p.creator_created_count = r.count("creator_created_count", true);

  const auto& rewards = r.require("rewards");
  if (!rewards.is_array()) r.fail("rewards", "expected array");
  if (rewards.empty()) r.fail("rewards", "project " + p.id + " has no rewards");
  std::set<std::string> seen;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    if (!rewards[k].is_object()) r.fail("rewards[" + std::to_string(k) + "]", "expected object");
    RecordReader rr(rewards[k], r.loc() + ": rewards[" + std::to_string(k) + "]");
    RewardRecord w;
    w.id = rr.str("id");
    if (!seen.insert(w.id).second) rr.fail("id", "duplicate reward id '" + w.id + "'");
    w.description = rr.str("description", true);
    w.pledge_amount = rr.real("pledge_amount");
    w.estimated_delivery_ts = rr.integer("estimated_delivery_ts");
    if (w.estimated_delivery_ts < p.deadline_ts)
      rr.fail("estimated_delivery_ts", "precedes deadline of project " + p.id);
    w.backer_count = rr.count("backer_count");
    p.rewards.push_back(std::move(w));
  }
  (void)obj;
  return p;
}

ActivityEvent parse_event(const RecordReader& r) {
  ActivityEvent e;
  e.project_id = r.str("project_id");
  const auto role = r.str("author_role");
  if (role == "creator") e.author_role = AuthorRole::Creator;
  else if (role == "backer") e.author_role = AuthorRole::Backer;
  else r.fail("author_role", "expected 'creator' or 'backer'");
  e.author_id = r.str("author_id", true);
  const auto kind = r.str("kind");
  if (kind == "update") e.kind = EventKind::Update;
  else if (kind == "comment") e.kind = EventKind::Comment;
  else r.fail("kind", "expected 'update' or 'comment'");
  e.ts = r.integer("ts");
  e.text = r.str("text", true);
  return e;
}

DeliveryLabel parse_label(const RecordReader& r, const json& obj) {
  DeliveryLabel l;
  l.project_id = r.str("project_id");
  const auto status = r.str("status");
  if (status == "on_time") l.status = DeliveryStatus::OnTime;
  else if (status == "late") l.status = DeliveryStatus::Late;
  else r.fail("status", "expected 'on_time' or 'late'");
  auto it = obj.find("actual_duration_days");
  if (it != obj.end() && !it->is_null()) {
    const double d = r.real("actual_duration_days");
    if (d <= 0) r.fail("actual_duration_days", "must be positive");
    l.actual_duration_days = d;
  }
  return l;
}

json to_json(const ProjectRecord& p) {
  json rewards = json::array();
  for (const auto& w : p.rewards)
    rewards.push_back({{"id", w.id},
                       {"description", w.description},
                       {"pledge_amount", w.pledge_amount},
                       {"estimated_delivery_ts", w.estimated_delivery_ts},
                       {"backer_count", w.backer_count}});
  return {{"id", p.id},
          {"category", p.category},
          {"goal", p.goal},
          {"pledged", p.pledged},
          {"successful", p.successful},
          {"launch_ts", p.launch_ts},
          {"deadline_ts", p.deadline_ts},
          {"images_count", p.images_count},
          {"faqs_count", p.faqs_count},
          {"project_description", p.project_description},
          {"bio_description", p.bio_description},
          {"creator_backed_count", p.creator_backed_count},
          {"creator_created_count", p.creator_created_count},
          {"rewards", std::move(rewards)}};
}

json to_json(const ActivityEvent& e) {
  return {{"project_id", e.project_id},
          {"author_role", e.author_role == AuthorRole::Creator ? "creator" : "backer"},
          {"author_id", e.author_id},
          {"kind", e.kind == EventKind::Update ? "update" : "comment"},
          {"ts", e.ts},
          {"text", e.text}};
}

json to_json(const DeliveryLabel& l) {
  json j = {{"project_id", l.project_id}, {"status", l.status == DeliveryStatus::OnTime ? "on_time" : "late"}};
  if (l.actual_duration_days) j["actual_duration_days"] = *l.actual_duration_days;
  return j;
}

}  // namespace

Corpus::Corpus(std::vector<ProjectRecord> projects, std::vector<ActivityEvent> events,
               std::vector<DeliveryLabel> labels)
    : projects_(std::move(projects)), events_(std::move(events)), labels_(std::move(labels)) {
  for (std::size_t i = 0; i < projects_.size(); ++i) {
    const auto& p = projects_[i];
    if (!index_.emplace(p.id, i).second) throw data_error("duplicate project id '" + p.id + "'");
    if (p.deadline_ts <= p.launch_ts) throw data_error("project " + p.id + ": deadline_ts must exceed launch_ts");
    if (p.rewards.empty()) throw data_error("project " + p.id + " has no rewards");
    if (!(p.goal > 0)) throw data_error("project " + p.id + ": goal must be > 0");
    for (const auto& w : p.rewards)
      if (w.estimated_delivery_ts < p.deadline_ts)
        throw data_error("project " + p.id + ": reward " + w.id + " delivery precedes deadline");
  }
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    auto it = index_.find(e.project_id);
    if (it == index_.end())
      throw data_error("event #" + std::to_string(i + 1) + " references unknown project '" + e.project_id + "'");
    if (e.ts < projects_[it->second].launch_ts)
      throw data_error("event #" + std::to_string(i + 1) + " of project " + e.project_id + " precedes launch");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& l = labels_[i];
    if (!index_.count(l.project_id))
      throw data_error("label #" + std::to_string(i + 1) + " references unknown project '" + l.project_id + "'");
    if (!label_index_.emplace(l.project_id, i).second)
      throw data_error("duplicate label for project '" + l.project_id + "'");
    if (l.actual_duration_days && !(*l.actual_duration_days > 0))
      throw data_error("label for " + l.project_id + ": actual_duration_days must be positive");
  }
  std::stable_sort(events_.begin(), events_.end(), [this](const ActivityEvent& a, const ActivityEvent& b) {
    const auto ia = index_.at(a.project_id), ib = index_.at(b.project_id);
    return ia != ib ? ia < ib : a.ts < b.ts;
  });
  for (std::size_t i = 0; i < events_.size();) {
    std::size_t j = i;
    while (j < events_.size() && events_[j].project_id == events_[i].project_id) ++j;
    event_ranges_[events_[i].project_id] = {i, j};
    i = j;
  }
}

std::optional<std::size_t> Corpus::find(const std::string& project_id) const {
  auto it = index_.find(project_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const DeliveryLabel* Corpus::label_for(const std::string& project_id) const {
  auto it = label_index_.find(project_id);
  return it == label_index_.end() ? nullptr : &labels_[it->second];
}

std::vector<ActivityEvent> Corpus::events_for(const std::string& project_id) const {
  auto it = event_ranges_.find(project_id);
  if (it == event_ranges_.end()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(it->second.first),
          events_.begin() + static_cast<std::ptrdiff_t>(it->second.second)};
}

CorpusPaths CorpusPaths::in_directory(const fs::path& dir) {
  CorpusPaths p{dir / "corpus.jsonl", dir / "events.jsonl", dir / "labels.jsonl"};
  if (!fs::exists(p.events)) p.events.clear();
  if (!fs::exists(p.labels)) p.labels.clear();
  return p;
}

std::vector<ProjectRecord> load_projects(const fs::path& path) {
  std::vector<ProjectRecord> out;
  for_each_line(path, [&](const RecordReader& r, const json& obj) { out.push_back(parse_project(r, obj)); });
  return out;
}

std::vector<ActivityEvent> load_events(const fs::path& path) {
  std::vector<ActivityEvent> out;
  for_each_line(path, [&](const RecordReader& r, const json&) { out.push_back(parse_event(r)); });
  return out;
}

Corpus load_corpus(const CorpusPaths& paths) {
  auto projects = load_projects(paths.projects);
  std::vector<ActivityEvent> events;
  std::vector<DeliveryLabel> labels;
  if (!paths.events.empty()) events = load_events(paths.events);
  if (!paths.labels.empty())
    for_each_line(paths.labels, [&](const RecordReader& r, const json& obj) { labels.push_back(parse_label(r, obj)); });
  return Corpus(std::move(projects), std::move(events), std::move(labels));
}

void save_corpus(const Corpus& corpus, const fs::path& dir, const std::string& provenance) {
  fs::create_directories(dir);
  auto write = [&](const fs::path& file, const auto& records) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw data_error("cannot write " + (dir / file).string());
    if (!provenance.empty()) out << "# " << provenance << '\n';
    for (const auto& r : records) out << to_json(r).dump() << '\n';
  };
  write("corpus.jsonl", corpus.projects());
  write("events.jsonl", corpus.events());
  write("labels.jsonl", corpus.labels());
}

Corpus filter_successful(const Corpus& corpus, double min_goal) {
  std::vector<ProjectRecord> kept;
  std::set<std::string> ids;
  for (const auto& p : corpus.projects())
    if (p.successful && p.goal >= min_goal) {
      kept.push_back(p);
      ids.insert(p.id);
    }
  std::vector<ActivityEvent> events;
  for (const auto& e : corpus.events())
    if (ids.count(e.project_id)) events.push_back(e);
  std::vector<DeliveryLabel> labels;
  for (const auto& l : corpus.labels())
    if (ids.count(l.project_id)) labels.push_back(l);
  return Corpus(std::move(kept), std::move(events), std::move(labels));
}

}  // namespace fulfillkit
