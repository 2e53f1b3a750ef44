#include "fulfillkit/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fulfillkit/bundled_dictionary.hpp"
#include "fulfillkit/models.hpp"

namespace fulfillkit {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSynthStream = 0x73796e;
constexpr std::uint64_t kEmbedStream = 0x656d62;
constexpr std::uint64_t kClusterStream = 0x636c75;
constexpr std::uint64_t kClassifierStream = 0x636c66;
constexpr std::uint64_t kRegressorStream = 0x726567;
constexpr std::uint64_t kEvaluateStream = 0x657661;

std::string tp_name(TimePoint tp) { return to_string(tp); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Moves a freshly written temporary over `dst` unless the bytes already match.
void commit(const fs::path& tmp, const fs::path& dst) {
  if (fs::exists(dst) && read_file(dst) == read_file(tmp)) {
    fs::remove(tmp);
    return;
  }
  fs::rename(tmp, dst);
}

fs::path temp_of(const fs::path& p) { return p.string() + ".tmp"; }

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw data_error("missing artifact " + path.string() + " (produced by `fulfillkit " + producer + "`)");
}

Layout layout_of(const RunConfig& cfg) {
  Layout l{cfg.out_dir()};
  fs::create_directories(l.root);
  return l;
}

StopWords stopwords_of(const RunConfig& cfg) {
  return cfg.stopwords.empty() ? default_stopwords() : load_stopwords(cfg.resolve(cfg.stopwords));
}

CategoryDictionary dictionary_of(const RunConfig& cfg) {
  return cfg.dictionary.empty() ? CategoryDictionary::parse(kBundledDictionary)
                                : CategoryDictionary::load(cfg.resolve(cfg.dictionary));
}

Corpus corpus_of(const RunConfig& cfg, const Layout& l) {
  if (!cfg.corpus.empty()) {
    CorpusPaths paths{cfg.resolve(cfg.corpus), {}, {}};
    if (!cfg.events.empty()) paths.events = cfg.resolve(cfg.events);
    if (!cfg.labels.empty()) paths.labels = cfg.resolve(cfg.labels);
    return load_corpus(paths);
  }
  require(l.corpus_dir() / "corpus.jsonl", "synth");
  return load_corpus(l.corpus_dir());
}

fs::path embeddings_path(const RunConfig& cfg, const Layout& l) {
  if (!cfg.embeddings.empty()) return cfg.resolve(cfg.embeddings);
  require(l.embeddings(), "embed");
  return l.embeddings();
}

nlohmann::json read_json(const fs::path& path, const std::string& producer) {
  require(path, producer);
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, nlohmann::json doc, const std::string& provenance) {
  doc["provenance"] = provenance;
  write_if_changed(path, doc.dump(2) + "\n");
}

struct Semantic {
  EmbeddingTable table;
  SemanticModel model;
};

Semantic semantic_of(const RunConfig& cfg, const Layout& l) {
  Semantic s;
  s.table = load_embeddings(embeddings_path(cfg, l));
  s.model = semantic_model_from_json(read_json(l.semantic_model(), "cluster"), s.table);
  return s;
}

struct LabelTable {
  std::vector<std::string> ids;
  std::vector<std::optional<int>> status;
  std::vector<double> days;
};

LabelTable load_label_table(const fs::path& path) {
  require(path, "featurize");
  std::ifstream in(path);
  LabelTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "id,status,days") throw data_error(path.string() + ": unexpected header");
      header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string id, status, days;
    if (!std::getline(ss, id, ',') || !std::getline(ss, status, ',') || !std::getline(ss, days))
      throw data_error(path.string() + ":" + std::to_string(lineno) + ": expected three fields");
    t.ids.push_back(id);
    if (status == "late") t.status.emplace_back(kLate);
    else if (status == "on_time") t.status.emplace_back(kOnTime);
    else if (status == "NA") t.status.emplace_back();
    else throw data_error(path.string() + ":" + std::to_string(lineno) + ": bad status '" + status + "'");
    try {
      t.days.push_back(days == "NA" ? kMissing : std::stod(days));
    } catch (const std::exception&) {
      throw data_error(path.string() + ":" + std::to_string(lineno) + ": bad days '" + days + "'");
    }
  }
  return t;
}

FeatureMatrix load_features(const Layout& l, TimePoint tp) {
  require(l.features_csv(tp), "featurize");
  require(l.features_schema(tp), "featurize");
  return load_feature_matrix(l.features_csv(tp), l.features_schema(tp));
}

// Labeled rows of every configured time point, log-transformed.
EvalData eval_data_of(const RunConfig& cfg, const Layout& l) {
  const LabelTable labels = load_label_table(l.labels());
  std::vector<Eigen::Index> rows;
  EvalData data;
  for (std::size_t i = 0; i < labels.ids.size(); ++i)
    if (labels.status[i]) rows.push_back(static_cast<Eigen::Index>(i));
  if (rows.empty()) throw data_error("no labeled projects in " + l.labels().string());
  data.days = Vector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    data.labels.push_back(*labels.status[static_cast<std::size_t>(rows[r])]);
    data.days(static_cast<Eigen::Index>(r)) = labels.days[static_cast<std::size_t>(rows[r])];
  }
  for (auto tp : cfg.time_points) {
    const FeatureMatrix X = load_features(l, tp);
    if (X.ids != labels.ids) throw data_error(l.features_csv(tp).string() + ": rows do not match labels.csv");
    data.features[tp] = log1p_matrix(X.select_rows(rows));
  }
  return data;
}

EvalOptions eval_options_of(const RunConfig& cfg) {
  EvalOptions o;
  o.folds = cfg.folds;
  o.time_points = cfg.time_points;
  o.classify = cfg.eval_classify;
  o.regress = cfg.eval_regress;
  o.pairing = cfg.pairing;
  o.pipeline = cfg.evaluation_pipeline();
  o.jobs = cfg.jobs;
  return o;
}

std::string csv_number(double v) {
  if (is_missing(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

FeatureContext context_of(const RunConfig& cfg, const Semantic& s, const StopWords& sw, const CategoryDictionary& dict) {
  FeatureContext ctx;
  ctx.semantic = &s.model;
  ctx.stopwords = &sw;
  ctx.dictionary = &dict;
  ctx.n_slots = cfg.n_slots;
  ctx.early_mode = cfg.early_mode;
  ctx.late_mode = cfg.late_mode;
  return ctx;
}

BufferTable load_buffers(const fs::path& path) {
  const auto doc = read_json(path, "evaluate");
  BufferTable b;
  for (const auto& [k, v] : doc.at("buffers").items()) b[parse_time_point(k)] = v.get<double>();
  return b;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

fs::path Layout::features_csv(TimePoint tp) const { return root / "features" / (tp_name(tp) + ".csv"); }
fs::path Layout::features_schema(TimePoint tp) const { return root / "features" / (tp_name(tp) + ".schema.json"); }
fs::path Layout::vif_csv(TimePoint tp) const { return root / "selection" / (tp_name(tp) + ".vif.csv"); }
fs::path Layout::boruta_csv(TimePoint tp) const { return root / "selection" / (tp_name(tp) + ".boruta.csv"); }
fs::path Layout::classifier(TimePoint tp) const { return root / "models" / ("classifier_" + tp_name(tp) + ".json"); }
fs::path Layout::regressor(TimePoint tp) const { return root / "models" / ("regressor_" + tp_name(tp) + ".json"); }

bool write_if_changed(const fs::path& path, const std::string& content) {
  if (fs::exists(path) && read_file(path) == content) return false;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = temp_of(path);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw data_error("cannot write " + path.string());
    out << content;
    if (!out) throw data_error("short write to " + path.string());
  }
  fs::rename(tmp, path);
  return true;
}

void cmd_synth(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const Corpus corpus = generate_synthetic(cfg.synth, derive_seed(cfg.master_seed(), kSynthStream));
  const fs::path tmp = l.root / "corpus.tmp";
  fs::create_directories(tmp);
  fs::create_directories(l.corpus_dir());
  save_corpus(corpus, tmp, cfg.provenance());
  for (const char* name : {"corpus.jsonl", "events.jsonl", "labels.jsonl"})
    if (fs::exists(tmp / name)) commit(tmp / name, l.corpus_dir() / name);
  fs::remove_all(tmp);
}

void cmd_embed(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const Corpus corpus = corpus_of(cfg, l);
  const StopWords sw = stopwords_of(cfg);
  std::vector<TokenStream> streams;
  for (const auto& p : corpus.projects())
    for (const auto& r : p.rewards) streams.push_back(tokenize(r.description, sw));
  const CoocMatrix cooc = build_cooccurrence(streams, cfg.window, cfg.min_count);
  const EmbeddingTable table = train_embeddings(cooc, cfg.glove, derive_seed(cfg.master_seed(), kEmbedStream));
  save_embeddings(table, temp_of(l.embeddings()), cfg.provenance());
  commit(temp_of(l.embeddings()), l.embeddings());
}

void cmd_cluster(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const Corpus corpus = corpus_of(cfg, l);
  const StopWords sw = stopwords_of(cfg);
  const EmbeddingTable table = load_embeddings(embeddings_path(cfg, l));
  const SemanticModel model =
      build_semantic_model(corpus, table, derive_seed(cfg.master_seed(), kClusterStream), cfg.semantic, sw);
  write_json(l.semantic_model(), to_json(model), cfg.provenance());

  const DifficultyReport d = cluster_difficulty(corpus, model, sw);
  std::ostringstream os;
  os << "# " << cfg.provenance() << "\ncluster,projects,on_time,prior,p_on_time\n" << std::setprecision(17);
  for (std::size_t c = 0; c < d.projects.size(); ++c)
    os << c << ',' << d.projects[c] << ',' << d.on_time[c] << ',' << d.prior[c] << ','
       << (std::isnan(d.p_on_time[c]) ? std::string("NA") : csv_number(d.p_on_time[c])) << '\n';
  write_if_changed(l.difficulty(), os.str());
}

void cmd_featurize(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const Corpus corpus = filter_successful(corpus_of(cfg, l), cfg.min_goal);
  if (corpus.size() == 0) throw data_error("no successful projects with goal >= " + csv_number(cfg.min_goal));
  const StopWords sw = stopwords_of(cfg);
  const CategoryDictionary dict = dictionary_of(cfg);
  const Semantic s = semantic_of(cfg, l);
  const FeatureContext ctx = context_of(cfg, s, sw, dict);
  std::vector<std::string> ids;
  for (const auto& p : corpus.projects()) ids.push_back(p.id);

  fs::create_directories(l.root / "features");
  for (auto tp : cfg.time_points) {
    const FeatureMatrix X = build_feature_matrix(corpus, ctx, tp, ids);
    save_feature_matrix(X, temp_of(l.features_csv(tp)), temp_of(l.features_schema(tp)), cfg.provenance(), tp);
    commit(temp_of(l.features_csv(tp)), l.features_csv(tp));
    commit(temp_of(l.features_schema(tp)), l.features_schema(tp));
  }
  std::ostringstream os;
  os << "# " << cfg.provenance() << "\nid,status,days\n";
  for (const auto& id : ids) {
    const DeliveryLabel* label = corpus.label_for(id);
    os << id << ',';
    if (!label) {
      os << "NA,NA\n";
      continue;
    }
    os << (label->status == DeliveryStatus::Late ? "late" : "on_time") << ','
       << (label->actual_duration_days ? csv_number(*label->actual_duration_days) : "NA") << '\n';
  }
  write_if_changed(l.labels(), os.str());
}

void cmd_select(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const EvalData data = eval_data_of(cfg, l);
  PipelineOptions opts = cfg.pipeline;
  opts.gbt.n_trees = 0;
  opts.jobs = cfg.jobs;
  for (auto tp : cfg.time_points) {
    const auto seed = derive_seed(cfg.master_seed(), kClassifierStream, static_cast<std::uint64_t>(tp));
    const ClassifierPipeline p = fit_classifier(data.features.at(tp), data.labels, opts, seed);
    if (!p.vif_input.empty()) {
      std::ostringstream os;
      write_vif_csv(os, p.vif, p.vif_input, cfg.provenance());
      write_if_changed(l.vif_csv(tp), os.str());
    }
    if (!p.boruta_input.empty()) {
      std::ostringstream os;
      write_boruta_csv(os, p.boruta, p.boruta_input, cfg.provenance());
      write_if_changed(l.boruta_csv(tp), os.str());
    }
  }
}

void cmd_train_classifier(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const EvalData data = eval_data_of(cfg, l);
  PipelineOptions opts = cfg.pipeline;
  opts.jobs = cfg.jobs;
  for (auto tp : cfg.time_points) {
    const auto seed = derive_seed(cfg.master_seed(), kClassifierStream, static_cast<std::uint64_t>(tp));
    write_json(l.classifier(tp), to_json(fit_classifier(data.features.at(tp), data.labels, opts, seed)),
               cfg.provenance());
  }
}

void cmd_train_regressor(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const EvalData data = eval_data_of(cfg, l);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.days.size(); ++i)
    if (!is_missing(data.days(i))) rows.push_back(i);
  if (rows.empty()) throw data_error("no projects with a delivery duration");
  std::vector<int> labels;
  for (auto r : rows) labels.push_back(data.labels[static_cast<std::size_t>(r)]);
  const Vector days = data.days(rows);
  for (auto tp : cfg.time_points) {
    const auto seed = derive_seed(cfg.master_seed(), kRegressorStream, static_cast<std::uint64_t>(tp));
    const FeatureMatrix X = data.features.at(tp).select_rows(rows);
    write_json(l.regressor(tp), to_json(fit_regressor(X, labels, days, cfg.pipeline, seed)), cfg.provenance());
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  const EvalData data = eval_data_of(cfg, l);
  const EvalReport report = evaluate(data, eval_options_of(cfg), derive_seed(cfg.master_seed(), kEvaluateStream));
  const std::string prov = cfg.provenance();
  std::ostringstream csv, md, pred;
  write_report_csv(csv, report, prov);
  write_report_markdown(md, report, prov);
  write_predictions_csv(pred, report, prov);
  write_if_changed(l.report_dir() / "report.csv", csv.str());
  write_if_changed(l.report_dir() / "report.md", md.str());
  write_if_changed(l.report_dir() / "predictions.csv", pred.str());
  if (cfg.eval_regress) {
    nlohmann::json buffers = nlohmann::json::object();
    for (const auto& [tp, v] : report.buffers()) buffers[to_string(tp)] = finite_or_null(v);
    write_json(l.report_dir() / "buffers.json", {{"kind", "buffers"}, {"version", 1}, {"buffers", buffers}}, prov);
  }
}

void cmd_ablate(const RunConfig& cfg) {
  const Layout l = layout_of(cfg);
  RunConfig sub = cfg;
  sub.time_points = {cfg.ablation_tp};
  const EvalData data = eval_data_of(sub, l);
  EvalReport report;
  report.ablation_tp = cfg.ablation_tp;
  report.ablation = ablation(data, kAblationGroups, cfg.ablation_tp, eval_options_of(sub),
                             derive_seed(cfg.master_seed(), kEvaluateStream));
  const std::string prov = cfg.provenance();
  std::ostringstream csv, md;
  write_ablation_csv(csv, report, prov);
  md << "<!-- " << prov << " -->\n\n## Feature group ablation at " << to_string(cfg.ablation_tp)
     << "\n\n| Excluded | Accuracy | Change |\n|---|---|---|\n"
     << std::fixed << std::setprecision(2);
  for (const auto& row : report.ablation)
    md << "| " << row.excluded << " | " << 100.0 * row.accuracy << "% | " << std::showpos << 100.0 * row.delta
       << std::noshowpos << " |\n";
  write_if_changed(l.report_dir() / "ablation.csv", csv.str());
  write_if_changed(l.report_dir() / "ablation.md", md.str());
}

nlohmann::json cmd_predict(const RunConfig& cfg, const PredictRequest& req) {
  const Layout l = layout_of(cfg);
  if (!fs::exists(req.project)) throw data_error("project file " + req.project.string() + " does not exist");
  std::vector<ProjectRecord> projects = load_projects(req.project);
  if (projects.empty()) throw data_error(req.project.string() + ": no project records");
  const ProjectRecord* project = &projects.front();
  if (req.id) {
    project = nullptr;
    for (const auto& p : projects)
      if (p.id == *req.id) project = &p;
    if (!project) throw data_error("project " + *req.id + " not found in " + req.project.string());
  } else if (projects.size() > 1) {
    throw config_error(req.project.string() + " holds several projects; pass --id");
  }
  std::vector<ActivityEvent> events;
  if (!req.events.empty()) {
    if (!fs::exists(req.events)) throw data_error("events file " + req.events.string() + " does not exist");
    for (auto& e : load_events(req.events))
      if (e.project_id == project->id) events.push_back(std::move(e));
  }
  const Corpus single({*project}, events, {});
  events = single.events_for(project->id);

  double now = static_cast<double>(project->launch_ts);
  for (const auto& e : events) now = std::max(now, static_cast<double>(e.ts));
  if (req.now) now = *req.now;

  const StopWords sw = stopwords_of(cfg);
  const CategoryDictionary dict = dictionary_of(cfg);
  const Semantic s = semantic_of(cfg, l);
  const FeatureContext ctx = context_of(cfg, s, sw, dict);
  const BufferTable buffers = load_buffers(l.report_dir() / "buffers.json");

  nlohmann::json out = {{"kind", "prediction"}, {"version", 1}, {"project_id", project->id}, {"now", now}};
  nlohmann::json tps = nlohmann::json::object();
  for (auto tp : cfg.time_points) {
    const double cut = cutoff(*project, tp);
    nlohmann::json entry = {{"cutoff", cut}};
    if (cut > now) {
      entry["available"] = false;
      tps[to_string(tp)] = entry;
      continue;
    }
    entry["available"] = true;
    const FeatureVector fv = extract_features(*project, events, ctx, tp);
    FeatureMatrix X;
    X.ids = {project->id};
    X.schema = fv.schema;
    X.values = Eigen::Map<const Eigen::RowVectorXd>(fv.values.data(), static_cast<Eigen::Index>(fv.values.size()));
    X = log1p_matrix(X);
    nlohmann::json features = nlohmann::json::object();
    for (std::size_t j = 0; j < fv.schema.size(); ++j) features[fv.schema[j].name] = finite_or_null(fv.values[j]);
    entry["features"] = features;

    const ClassifierPipeline clf = classifier_from_json(read_json(l.classifier(tp), "train-classifier"));
    const RegressorPipeline reg = regressor_from_json(read_json(l.regressor(tp), "train-regressor"));
    if (clf.input_schema != X.schema || reg.input_schema != X.schema)
      throw data_error("model schema for " + to_string(tp) + " does not match the current feature configuration");
    const double p_late = clf.predict_proba(X.values.row(0));
    const double days = reg.predict_days(X.values.row(0));
    entry["prob_late"] = p_late;
    entry["status"] = p_late >= 0.5 ? "late" : "on_time";
    entry["estimated_days"] = days;
    const auto b = buffers.find(tp);
    entry["recommended_days"] =
        b != buffers.end() && std::isfinite(b->second) ? nlohmann::json(recommend_duration(days, tp, buffers))
                                                       : nlohmann::json(nullptr);
    tps[to_string(tp)] = entry;
  }
  out["time_points"] = tps;
  write_json(l.prediction(), out, cfg.provenance());
  out["provenance"] = cfg.provenance();
  return out;
}

void run_command(const std::string& command, const RunConfig& cfg) {
  if (command == "synth") cmd_synth(cfg);
  else if (command == "embed") cmd_embed(cfg);
  else if (command == "cluster") cmd_cluster(cfg);
  else if (command == "featurize") cmd_featurize(cfg);
  else if (command == "select") cmd_select(cfg);
  else if (command == "train-classifier") cmd_train_classifier(cfg);
  else if (command == "train-regressor") cmd_train_regressor(cfg);
  else if (command == "evaluate") cmd_evaluate(cfg);
  else if (command == "ablate") cmd_ablate(cfg);
  else throw config_error("unknown command '" + command + "'");
}

}  // namespace fulfillkit
