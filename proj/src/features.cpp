#include "fulfillkit/features.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fulfillkit {

namespace {

constexpr double kDaySeconds = 86400.0;

std::string slot_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "temporal_slot_%02d", i + 1);
  return buf;
}

std::string semantic_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "semantic_%02d", i + 1);
  return buf;
}

const StopWords& stopwords_of(const FeatureContext& ctx) {
  return ctx.stopwords ? *ctx.stopwords : default_stopwords();
}

std::vector<std::size_t> categories_of(const FeatureContext& ctx, const std::optional<std::vector<std::size_t>>& sel) {
  if (sel) return *sel;
  std::vector<std::size_t> all(ctx.dictionary ? ctx.dictionary->size() : 0);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

// Builds schema and values together so the two can never drift apart.
class Emitter {
 public:
  Emitter(TimePoint tp, FeatureVector* out) : tp_(tp), out_(out) {}

  template <class Fn>
  void add(std::string name, TimePoint avail, FeatureGroup group, bool log1p, Fn&& value) {
    if (static_cast<int>(avail) > static_cast<int>(tp_)) return;
    out_->schema.push_back({std::move(name), avail, group, log1p});
    if (compute_) out_->values.push_back(value());
  }

  void set_compute(bool on) { compute_ = on; }

 private:
  TimePoint tp_;
  FeatureVector* out_;
  bool compute_ = true;
};

void check_sorted(const std::vector<ActivityEvent>& events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].ts < events[i - 1].ts) throw data_error("extract_features: events are not sorted by timestamp");
}

std::string join_text(const std::vector<RewardRecord>& rewards) {
  std::string out;
  for (const auto& r : rewards) {
    if (!out.empty()) out += ' ';
    out += r.description;
    // Unterminated descriptions still end a sentence.
    if (!r.description.empty() && r.description.find_last_of(".!?") != r.description.size() - 1) out += '.';
  }
  return out;
}

void emit_all(Emitter& em, const ProjectRecord* p, const std::vector<ActivityEvent>* events,
              const FeatureContext& ctx, TimePoint tp) {
  using G = FeatureGroup;
  using T = TimePoint;
  const double launch = p ? static_cast<double>(p->launch_ts) : 0.0;
  const double deadline = p ? static_cast<double>(p->deadline_ts) : 0.0;

  em.add("images", T::TP1, G::Project, true, [&] { return static_cast<double>(p->images_count); });
  em.add("faqs", T::TP1, G::Project, true, [&] { return static_cast<double>(p->faqs_count); });
  em.add("goal", T::TP1, G::Project, true, [&] { return p->goal; });
  for (const auto& cat : kCategories)
    em.add("category=" + std::string(cat), T::TP1, G::Project, false, [&] { return p->category == cat ? 1.0 : 0.0; });
  em.add("rewards", T::TP1, G::Project, true, [&] { return static_cast<double>(p->rewards.size()); });
  em.add("reward_sentences", T::TP1, G::Project, true, [&] {
    double n = 0;
    for (const auto& r : p->rewards) n += count_sentences(r.description);
    return n;
  });
  em.add("bio_sentences", T::TP1, G::Project, true, [&] { return static_cast<double>(count_sentences(p->bio_description)); });
  em.add("fundraising_days", T::TP1, G::Project, true, [&] { return (deadline - launch) / kDaySeconds; });
  em.add("longest_delivery_days", T::TP1, G::Project, true,
         [&] { return static_cast<double>(p->ledd() - p->deadline_ts) / kDaySeconds; });
  em.add("smog_project", T::TP1, G::Project, false, [&] { return smog_or_missing(p->project_description); });
  em.add("smog_reward", T::TP1, G::Project, false, [&] { return smog_or_missing(join_text(p->rewards)); });
  em.add("smog_bio", T::TP1, G::Project, false, [&] { return smog_or_missing(p->bio_description); });
  if (ctx.semantic) {
    const bool late = static_cast<int>(tp) >= static_cast<int>(T::TP3);
    Vector sem;
    if (p) sem = project_semantic_features(*p, *ctx.semantic, late ? ctx.late_mode : ctx.early_mode, stopwords_of(ctx));
    for (int i = 0; i < ctx.semantic->k2(); ++i)
      em.add(semantic_name(i), T::TP1, G::Semantic, true, [&] { return sem(i); });
  }
  em.add("backed_projects", T::TP1, G::Baseline, true, [&] { return static_cast<double>(p->creator_backed_count); });
  em.add("created_projects", T::TP1, G::Baseline, true, [&] { return static_cast<double>(p->creator_created_count); });

  // Fundraising-phase activity: cutoff TP2 at TP2, the deadline from TP3 on.
  const double fund_cut = p ? cutoff(*p, tp == T::TP2 ? T::TP2 : T::TP3) : 0.0;
  auto count_until = [&](double cut, auto&& pred) {
    double n = 0;
    for (const auto& e : *events)
      if (static_cast<double>(e.ts) <= cut && pred(e)) n += 1;
    return n;
  };
  auto is_comment = [](const ActivityEvent& e) { return e.kind == EventKind::Comment; };
  auto is_update = [](const ActivityEvent& e) { return e.kind == EventKind::Update; };
  auto creator = [](const ActivityEvent& e) { return e.author_role == AuthorRole::Creator; };
  auto backer = [](const ActivityEvent& e) { return e.author_role == AuthorRole::Backer; };

  em.add("backers", T::TP2, G::Project, true, [&] {
    std::set<std::string> ids;
    for (const auto& e : *events)
      if (static_cast<double>(e.ts) <= fund_cut && backer(e)) ids.insert(e.author_id);
    return static_cast<double>(ids.size());
  });
  em.add("comments", T::TP2, G::Project, true, [&] { return count_until(fund_cut, is_comment); });
  em.add("updates", T::TP2, G::Project, true, [&] { return count_until(fund_cut, is_update); });
  em.add("creator_comments", T::TP2, G::Creator, true,
         [&] { return count_until(fund_cut, [&](const ActivityEvent& e) { return creator(e) && is_comment(e); }); });
  em.add("creator_updates", T::TP2, G::Creator, true,
         [&] { return count_until(fund_cut, [&](const ActivityEvent& e) { return creator(e) && is_update(e); }); });
  std::vector<double> slots;
  if (p && static_cast<int>(tp) >= 2) slots = temporal_slots(*events, p->launch_ts, p->deadline_ts, fund_cut, ctx.n_slots);
  for (int i = 0; i < ctx.n_slots; ++i)
    em.add(slot_name(i), T::TP2, G::Temporal, true, [&] { return slots[static_cast<std::size_t>(i)]; });

  em.add("baseline_backers", T::TP3, G::Baseline, true, [&] {
    double n = 0;
    for (const auto& r : p->rewards) n += static_cast<double>(r.backer_count);
    return n;
  });
  em.add("percent_raised", T::TP3, G::Baseline, true, [&] { return 100.0 * p->pledged / p->goal; });

  // Early delivery phase.
  const double tp3 = p ? cutoff(*p, T::TP3) : 0.0;
  const double tp4 = p ? cutoff(*p, T::TP4) : 0.0;
  std::vector<ActivityEvent> upto4;
  if (p && tp == T::TP4)
    for (const auto& e : *events)
      if (static_cast<double>(e.ts) <= tp4) upto4.push_back(e);
  auto window_count = [&](auto&& pred) {
    double n = 0;
    for (const auto& e : upto4)
      if (static_cast<double>(e.ts) > tp3 && pred(e)) n += 1;
    return n;
  };
  em.add("creator_comments_tp4", T::TP4, G::Creator, true,
         [&] { return window_count([&](const ActivityEvent& e) { return creator(e) && is_comment(e); }); });
  em.add("creator_updates_tp4", T::TP4, G::Creator, true,
         [&] { return window_count([&](const ActivityEvent& e) { return creator(e) && is_update(e); }); });
  em.add("avg_update_interval_days", T::TP4, G::Creator, true, [&] { return average_update_interval(upto4); });
  em.add("avg_response_latency_s", T::TP4, G::Creator, true, [&] { return response_latency(upto4); });
  em.add("backer_comments", T::TP4, G::Backer, true, [&] {
    double n = 0;
    for (const auto& e : upto4) n += backer(e) && is_comment(e);
    return n;
  });
  em.add("commenting_backers", T::TP4, G::Backer, true, [&] {
    std::set<std::string> ids;
    for (const auto& e : upto4)
      if (backer(e) && is_comment(e)) ids.insert(e.author_id);
    return static_cast<double>(ids.size());
  });
  em.add("backer_questions", T::TP4, G::Backer, true, [&] {
    double n = 0;
    for (const auto& e : upto4) n += backer(e) && is_comment(e) && e.text.find('?') != std::string::npos;
    return n;
  });

  if (ctx.dictionary) {
    Vector creator_scores, backer_scores;
    if (p && tp == T::TP4) {
      // Dictionary categories include function words, so no stop-word removal here.
      TokenStream ct, bt;
      for (const auto& e : upto4) {
        if (creator(e) && is_update(e)) {
          auto t = tokenize(e.text, {});
          ct.insert(ct.end(), t.begin(), t.end());
        } else if (backer(e) && is_comment(e)) {
          auto t = tokenize(e.text, {});
          bt.insert(bt.end(), t.begin(), t.end());
        }
      }
      creator_scores = category_scores(ct, *ctx.dictionary);
      backer_scores = category_scores(bt, *ctx.dictionary);
    }
    const auto names = ctx.dictionary->names();
    for (auto c : categories_of(ctx, ctx.creator_categories))
      em.add("liwc_creator_" + names[c], T::TP4, G::Linguistic, false,
             [&] { return creator_scores(static_cast<Eigen::Index>(c)); });
    for (auto c : categories_of(ctx, ctx.backer_categories))
      em.add("liwc_backer_" + names[c], T::TP4, G::Linguistic, false,
             [&] { return backer_scores(static_cast<Eigen::Index>(c)); });
  }
}

}  // namespace

std::string to_string(TimePoint tp) { return "TP" + std::to_string(static_cast<int>(tp)); }

TimePoint parse_time_point(std::string_view s) {
  if (s == "TP1") return TimePoint::TP1;
  if (s == "TP2") return TimePoint::TP2;
  if (s == "TP3") return TimePoint::TP3;
  if (s == "TP4") return TimePoint::TP4;
  throw config_error("unknown time point '" + std::string(s) + "' (expected TP1..TP4)");
}

double cutoff(const ProjectRecord& p, TimePoint tp) {
  const double launch = static_cast<double>(p.launch_ts), deadline = static_cast<double>(p.deadline_ts);
  switch (tp) {
    case TimePoint::TP1: return launch;
    case TimePoint::TP2: return launch + (deadline - launch) / 2.0;
    case TimePoint::TP3: return deadline;
    case TimePoint::TP4: return deadline + 0.05 * static_cast<double>(p.ledd() - p.deadline_ts);
  }
  throw config_error("unknown time point");
}

std::string to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::Project: return "project";
    case FeatureGroup::Creator: return "creator";
    case FeatureGroup::Backer: return "backer";
    case FeatureGroup::Temporal: return "temporal";
    case FeatureGroup::Linguistic: return "linguistic";
    case FeatureGroup::Semantic: return "semantic";
    case FeatureGroup::Baseline: return "baseline";
  }
  return "?";
}

FeatureGroup parse_feature_group(std::string_view s) {
  for (auto g : {FeatureGroup::Project, FeatureGroup::Creator, FeatureGroup::Backer, FeatureGroup::Temporal,
                 FeatureGroup::Linguistic, FeatureGroup::Semantic, FeatureGroup::Baseline})
    if (to_string(g) == s) return g;
  throw config_error("unknown feature group '" + std::string(s) + "'");
}

std::optional<double> FeatureVector::get(std::string_view name) const {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return values[i];
  return std::nullopt;
}

FeatureSchema feature_schema(const FeatureContext& ctx, TimePoint tp) {
  FeatureVector out;
  Emitter em(tp, &out);
  em.set_compute(false);
  emit_all(em, nullptr, nullptr, ctx, tp);
  return out.schema;
}

FeatureVector extract_features(const ProjectRecord& project, const std::vector<ActivityEvent>& events,
                               const FeatureContext& ctx, TimePoint tp) {
  check_sorted(events);
  for (const auto& e : events)
    if (e.project_id != project.id) throw data_error("extract_features: event of another project");
  FeatureVector out;
  Emitter em(tp, &out);
  emit_all(em, &project, &events, ctx, tp);
  return out;
}

std::vector<double> temporal_slots(const std::vector<ActivityEvent>& events, std::int64_t launch_ts,
                                   std::int64_t deadline_ts, double cutoff_ts, int n_slots) {
  if (deadline_ts <= launch_ts) throw data_error("temporal_slots: deadline must exceed launch");
  if (n_slots < 1) throw config_error("temporal_slots: n_slots must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n_slots), 0.0);
  const std::int64_t span = deadline_ts - launch_ts;
  for (const auto& e : events) {
    if (e.kind != EventKind::Comment || e.ts < launch_ts || e.ts >= deadline_ts) continue;
    if (static_cast<double>(e.ts) > cutoff_ts) continue;
    const auto slot = static_cast<std::size_t>((e.ts - launch_ts) * n_slots / span);
    out[slot] += 1.0;
  }
  return out;
}

double response_latency(const std::vector<ActivityEvent>& events) {
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& q = events[i];
    if (q.author_role != AuthorRole::Backer || q.kind != EventKind::Comment || q.text.find('?') == std::string::npos)
      continue;
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      const auto& r = events[j];
      if (r.ts > q.ts && r.author_role == AuthorRole::Creator && r.kind == EventKind::Comment) {
        total += static_cast<double>(r.ts - q.ts);
        ++pairs;
        break;
      }
    }
  }
  return pairs ? total / pairs : kMissing;
}

double average_update_interval(const std::vector<ActivityEvent>& events) {
  std::vector<std::int64_t> ts;
  for (const auto& e : events)
    if (e.author_role == AuthorRole::Creator && e.kind == EventKind::Update) ts.push_back(e.ts);
  if (ts.size() < 2) return kMissing;
  std::sort(ts.begin(), ts.end());
  return static_cast<double>(ts.back() - ts.front()) / static_cast<double>(ts.size() - 1) / kDaySeconds;
}

Eigen::Index FeatureMatrix::column(std::string_view name) const {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return static_cast<Eigen::Index>(i);
  return -1;
}

std::vector<Eigen::Index> FeatureMatrix::columns_in(FeatureGroup g) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].group == g) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<Eigen::Index>& cols) const {
  FeatureMatrix out{ids, {}, Matrix(values.rows(), static_cast<Eigen::Index>(cols.size())), log_transformed};
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.schema.push_back(schema[static_cast<std::size_t>(cols[j])]);
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(cols[j]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<Eigen::Index>& rows) const {
  FeatureMatrix out{{}, schema, Matrix(static_cast<Eigen::Index>(rows.size()), values.cols()), log_transformed};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.ids.push_back(ids[static_cast<std::size_t>(rows[i])]);
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
  }
  return out;
}

FeatureMatrix build_feature_matrix(const Corpus& corpus, const FeatureContext& ctx, TimePoint tp,
                                   const std::vector<std::string>& ids) {
  FeatureMatrix out;
  out.ids = ids;
  out.schema = feature_schema(ctx, tp);
  out.values.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(out.schema.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto idx = corpus.find(ids[i]);
    if (!idx) throw data_error("build_feature_matrix: unknown project " + ids[i]);
    const auto fv = extract_features(corpus.projects()[*idx], corpus.events_for(ids[i]), ctx, tp);
    for (std::size_t j = 0; j < fv.values.size(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fv.values[j];
  }
  return out;
}

FeatureMatrix log1p_matrix(const FeatureMatrix& X) {
  if (X.log_transformed) throw data_error("log1p_matrix: matrix is already log-transformed");
  FeatureMatrix out = X;
  for (std::size_t j = 0; j < X.schema.size(); ++j) {
    if (!X.schema[j].log1p) continue;
    auto col = out.values.col(static_cast<Eigen::Index>(j));
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (is_missing(col(i))) continue;
      if (col(i) < 0) throw data_error("log1p_matrix: negative value in column '" + X.schema[j].name + "'");
      col(i) = std::log1p(col(i));
    }
  }
  out.log_transformed = true;
  return out;
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  auto arr = nlohmann::json::array();
  for (const auto& s : schema)
    arr.push_back({{"name", s.name}, {"availability", to_string(s.availability)}, {"group", to_string(s.group)},
                   {"log1p", s.log1p}});
  return arr;
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema out;
  for (const auto& s : j)
    out.push_back({s.at("name").get<std::string>(), parse_time_point(s.at("availability").get<std::string>()),
                   parse_feature_group(s.at("group").get<std::string>()), s.at("log1p").get<bool>()});
  return out;
}

void save_feature_matrix(const FeatureMatrix& X, const std::filesystem::path& csv, const std::filesystem::path& schema,
                         const std::string& provenance, TimePoint tp) {
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw data_error("cannot write " + csv.string());
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "id";
    for (const auto& s : X.schema) out << ',' << s.name;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < X.values.rows(); ++i) {
      out << X.ids[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < X.values.cols(); ++j) {
        out << ',';
        if (is_missing(X.values(i, j))) out << "NA";
        else out << X.values(i, j);
      }
      out << '\n';
    }
  }
  nlohmann::json doc = {{"kind", "feature_schema"}, {"version", 1}, {"provenance", provenance},
                        {"time_point", to_string(tp)}, {"log_transformed", X.log_transformed},
                        {"features", schema_to_json(X.schema)}};
  std::ofstream out(schema, std::ios::binary);
  if (!out) throw data_error("cannot write " + schema.string());
  out << doc.dump(2) << '\n';
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& csv, const std::filesystem::path& schema_path) {
  std::ifstream sin(schema_path);
  if (!sin) throw data_error("cannot open " + schema_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(sin);
  } catch (const std::exception& e) {
    throw data_error(schema_path.string() + ": " + e.what());
  }
  FeatureMatrix X;
  X.schema = schema_from_json(doc.at("features"));
  X.log_transformed = doc.value("log_transformed", false);
  std::ifstream in(csv);
  if (!in) throw data_error("cannot open " + csv.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!header) {
      header = true;
      if (cells.size() != X.schema.size() + 1) throw data_error(csv.string() + ": header does not match schema");
      for (std::size_t j = 0; j < X.schema.size(); ++j)
        if (cells[j + 1] != X.schema[j].name) throw data_error(csv.string() + ": column '" + cells[j + 1] + "' not in schema");
      continue;
    }
    if (cells.size() != X.schema.size() + 1) throw data_error(csv.string() + ":" + std::to_string(lineno) + ": ragged row");
    X.ids.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j] == "NA") {
        row.push_back(kMissing);
        continue;
      }
      char* end = nullptr;
      row.push_back(std::strtod(cells[j].c_str(), &end));
      if (end != cells[j].c_str() + cells[j].size())
        throw data_error(csv.string() + ":" + std::to_string(lineno) + ": non-numeric cell '" + cells[j] + "'");
    }
    rows.push_back(std::move(row));
  }
  X.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(X.schema.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      X.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return X;
}

}  // namespace fulfillkit
