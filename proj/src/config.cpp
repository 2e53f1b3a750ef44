#include "fulfillkit/config.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

extern char** environ;

namespace fulfillkit {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RunConfig::master_seed() const {
  if (!seed) throw config_error("run.seed: master seed is required (set [run] seed or pass --seed)");
  return *seed;
}

std::string RunConfig::provenance() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return std::string("fulfillkit ") + kVersion + " config=" + buf + " seed=" + (seed ? std::to_string(*seed) : "unset");
}

fs::path RunConfig::resolve(const std::string& p) const {
  fs::path path(p);
  return path.is_relative() ? base_dir / path : path;
}

PipelineOptions RunConfig::evaluation_pipeline() const {
  PipelineOptions o = pipeline;
  o.boruta.n_runs = eval_boruta_runs;
  o.boruta.forest.n_trees = eval_boruta_trees;
  o.jobs = 1;
  return o;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

long long to_int(const std::string& v) {
  std::size_t pos = 0;
  const long long x = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer");
  return x;
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("not a finite number");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true or false");
}

int int_in(const std::string& v, long long lo, long long hi) {
  const auto x = to_int(v);
  if (x < lo || x > hi) throw std::invalid_argument("must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

double double_in(const std::string& v, double lo, double hi, bool open_lo = false) {
  const double x = to_double(v);
  if (x < lo || x > hi || (open_lo && x == lo)) {
    std::ostringstream os;
    os << "must be in " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
    throw std::invalid_argument(os.str());
  }
  return x;
}

SemanticMode to_mode(const std::string& v) {
  if (v == "backers") return SemanticMode::Backers;
  if (v == "reward_count") return SemanticMode::RewardCount;
  throw std::invalid_argument("expected backers or reward_count");
}

std::vector<TimePoint> to_tps(const std::string& v) {
  std::vector<TimePoint> out;
  for (const auto& t : split_list(v)) {
    const auto tp = parse_time_point(t);
    if (std::find(out.begin(), out.end(), tp) != out.end()) throw std::invalid_argument("duplicate " + t);
    out.push_back(tp);
  }
  if (out.empty()) throw std::invalid_argument("at least one time point required");
  std::sort(out.begin(), out.end());
  return out;
}

struct Key {
  const char* section;
  const char* key;
  const char* fallback;  // nullptr: no default
  std::function<void(RunConfig&, const std::string&)> apply;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"paths", "corpus", "", [](RunConfig& c, const std::string& v) { c.corpus = v; }},
      {"paths", "events", "", [](RunConfig& c, const std::string& v) { c.events = v; }},
      {"paths", "labels", "", [](RunConfig& c, const std::string& v) { c.labels = v; }},
      {"paths", "stopwords", "", [](RunConfig& c, const std::string& v) { c.stopwords = v; }},
      {"paths", "dictionary", "", [](RunConfig& c, const std::string& v) { c.dictionary = v; }},
      {"paths", "embeddings", "", [](RunConfig& c, const std::string& v) { c.embeddings = v; }},
      {"paths", "out", "out", [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw std::invalid_argument("must not be empty");
         c.out = v;
       }},
      {"run", "seed", nullptr, [](RunConfig& c, const std::string& v) {
         const auto x = to_int(v);
         if (x < 0) throw std::invalid_argument("must be non-negative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
      {"run", "jobs", "1", [](RunConfig& c, const std::string& v) { c.jobs = int_in(v, 1, 1024); }},
      {"run", "time_points", "TP1,TP2,TP3,TP4", [](RunConfig& c, const std::string& v) { c.time_points = to_tps(v); }},
      {"synth", "n_projects", "2000", [](RunConfig& c, const std::string& v) { c.synth.n_projects = int_in(v, 1, 10000000); }},
      {"synth", "late_rate", "0.54", [](RunConfig& c, const std::string& v) { c.synth.late_rate = double_in(v, 0, 1); }},
      {"synth", "noise", "0.1", [](RunConfig& c, const std::string& v) { c.synth.noise = double_in(v, 0, 0.5); }},
      {"synth", "duration_fraction", "0.73",
       [](RunConfig& c, const std::string& v) { c.synth.duration_fraction = double_in(v, 0, 1); }},
      {"synth", "seed_pools", "default", [](RunConfig& c, const std::string& v) {
         if (v != "default") c.synth.pools = load_seed_pools(c.resolve(v));
       }},
      {"synth", "pool_mix", "1,1,1", [](RunConfig& c, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 3) throw std::invalid_argument("needs three weights");
         for (std::size_t i = 0; i < 3; ++i) c.synth.pool_mix[i] = double_in(parts[i], 0, 1e9);
       }},
      {"embed", "window", "15", [](RunConfig& c, const std::string& v) { c.window = int_in(v, 1, 1000); }},
      {"embed", "min_count", "5", [](RunConfig& c, const std::string& v) { c.min_count = int_in(v, 1, 1000000); }},
      {"embed", "dim", "50", [](RunConfig& c, const std::string& v) { c.glove.dim = int_in(v, 1, 4096); }},
      {"embed", "iters", "20", [](RunConfig& c, const std::string& v) { c.glove.iters = int_in(v, 1, 100000); }},
      {"embed", "x_max", "100", [](RunConfig& c, const std::string& v) { c.glove.x_max = double_in(v, 0, 1e12, true); }},
      {"embed", "alpha", "0.75", [](RunConfig& c, const std::string& v) { c.glove.alpha = double_in(v, 0, 10, true); }},
      {"embed", "learning_rate", "0.05", [](RunConfig& c, const std::string& v) { c.glove.learning_rate = double_in(v, 0, 10, true); }},
      {"cluster", "word_k_min", "1", [](RunConfig& c, const std::string& v) { c.semantic.word_k_min = int_in(v, 1, 100000); }},
      {"cluster", "word_k_max", "100", [](RunConfig& c, const std::string& v) { c.semantic.word_k_max = int_in(v, 1, 100000); }},
      {"cluster", "reward_k_min", "1", [](RunConfig& c, const std::string& v) { c.semantic.reward_k_min = int_in(v, 1, 100000); }},
      {"cluster", "reward_k_max", "30", [](RunConfig& c, const std::string& v) { c.semantic.reward_k_max = int_in(v, 1, 100000); }},
      {"cluster", "max_iter", "100", [](RunConfig& c, const std::string& v) { c.semantic.kmeans.max_iter = int_in(v, 1, 1000000); }},
      {"cluster", "n_override", "", [](RunConfig& c, const std::string& v) {
         if (!v.empty()) c.semantic.n_override = double_in(v, 1, 1e15);
       }},
      {"cluster", "early_mode", "reward_count", [](RunConfig& c, const std::string& v) { c.early_mode = to_mode(v); }},
      {"cluster", "late_mode", "backers", [](RunConfig& c, const std::string& v) { c.late_mode = to_mode(v); }},
      {"features", "n_slots", "20", [](RunConfig& c, const std::string& v) { c.n_slots = int_in(v, 1, 10000); }},
      {"features", "min_goal", "100", [](RunConfig& c, const std::string& v) { c.min_goal = double_in(v, 0, 1e15); }},
      {"select", "order", "vif,boruta", [](RunConfig& c, const std::string& v) {
         const auto parts = split_list(v);
         const bool vif = std::find(parts.begin(), parts.end(), "vif") != parts.end();
         const bool bor = std::find(parts.begin(), parts.end(), "boruta") != parts.end();
         const bool none = parts.size() == 1 && parts[0] == "none";
         if (!none && (parts.size() != static_cast<std::size_t>(vif) + static_cast<std::size_t>(bor) ||
                       (vif && bor && parts[0] != "vif")))
           throw std::invalid_argument("expected vif,boruta | vif | boruta | none");
         c.pipeline.use_vif = vif;
         c.pipeline.use_boruta = bor;
       }},
      {"select", "vif_threshold", "10", [](RunConfig& c, const std::string& v) { c.pipeline.vif_threshold = double_in(v, 1, 1e12, true); }},
      {"select", "boruta_runs", "100", [](RunConfig& c, const std::string& v) { c.pipeline.boruta.n_runs = int_in(v, 20, 1000000); }},
      {"select", "boruta_alpha", "0.05", [](RunConfig& c, const std::string& v) { c.pipeline.boruta.alpha = double_in(v, 0, 1, true); }},
      {"select", "boruta_trees", "300", [](RunConfig& c, const std::string& v) { c.pipeline.boruta.forest.n_trees = int_in(v, 1, 1000000); }},
      {"select", "liwc_filter", "true", [](RunConfig& c, const std::string& v) { c.pipeline.liwc_filter = to_bool(v); }},
      {"select", "liwc_alpha", "0", [](RunConfig& c, const std::string& v) { c.pipeline.liwc_alpha = double_in(v, 0, 1); }},
      {"select", "stepaic", "true", [](RunConfig& c, const std::string& v) { c.pipeline.use_stepaic = to_bool(v); }},
      {"gbt", "n_trees", "200", [](RunConfig& c, const std::string& v) { c.pipeline.gbt.n_trees = int_in(v, 0, 1000000); }},
      {"gbt", "max_depth", "4", [](RunConfig& c, const std::string& v) { c.pipeline.gbt.max_depth = int_in(v, 0, 64); }},
      {"gbt", "eta", "0.1", [](RunConfig& c, const std::string& v) { c.pipeline.gbt.eta = double_in(v, 0, 1, true); }},
      {"gbt", "lambda", "1", [](RunConfig& c, const std::string& v) { c.pipeline.gbt.lambda = double_in(v, 0, 1e12); }},
      {"gbt", "gamma", "0", [](RunConfig& c, const std::string& v) { c.pipeline.gbt.gamma = double_in(v, 0, 1e300); }},
      {"gbt", "min_child_weight", "1", [](RunConfig& c, const std::string& v) { c.pipeline.gbt.min_child_weight = double_in(v, 0, 1e12); }},
      {"enet", "grid", "0,0.001,0.01,0.1,1", [](RunConfig& c, const std::string& v) {
         c.pipeline.enet_grid.clear();
         for (const auto& p : split_list(v)) c.pipeline.enet_grid.push_back(double_in(p, 0, 1e12));
         if (c.pipeline.enet_grid.empty()) throw std::invalid_argument("grid must not be empty");
       }},
      {"enet", "folds", "5", [](RunConfig& c, const std::string& v) { c.pipeline.enet_folds = int_in(v, 2, 1000); }},
      {"enet", "tol", "1e-8", [](RunConfig& c, const std::string& v) { c.pipeline.enet.tol = double_in(v, 0, 1, true); }},
      {"enet", "max_sweeps", "100000", [](RunConfig& c, const std::string& v) { c.pipeline.enet.max_sweeps = int_in(v, 1, 100000000); }},
      {"boxcox", "grid_min", "-1", [](RunConfig& c, const std::string& v) { c.pipeline.boxcox.grid_min = double_in(v, -10, 10); }},
      {"boxcox", "grid_max", "1", [](RunConfig& c, const std::string& v) { c.pipeline.boxcox.grid_max = double_in(v, -10, 10); }},
      {"boxcox", "step", "0.01", [](RunConfig& c, const std::string& v) { c.pipeline.boxcox.step = double_in(v, 0, 10, true); }},
      {"boxcox", "plain_log_at_zero", "false",
       [](RunConfig& c, const std::string& v) { c.pipeline.boxcox.plain_log_at_zero = to_bool(v); }},
      {"evaluate", "folds", "10", [](RunConfig& c, const std::string& v) { c.folds = int_in(v, 2, 1000); }},
      {"evaluate", "pairing", "per_fold", [](RunConfig& c, const std::string& v) {
         if (v == "per_fold") c.pairing = Pairing::PerFold;
         else if (v == "per_project") c.pairing = Pairing::PerProject;
         else throw std::invalid_argument("expected per_fold or per_project");
       }},
      {"evaluate", "boruta_runs", "20", [](RunConfig& c, const std::string& v) { c.eval_boruta_runs = int_in(v, 20, 1000000); }},
      {"evaluate", "boruta_trees", "50", [](RunConfig& c, const std::string& v) { c.eval_boruta_trees = int_in(v, 1, 1000000); }},
      {"evaluate", "classify", "true", [](RunConfig& c, const std::string& v) { c.eval_classify = to_bool(v); }},
      {"evaluate", "regress", "true", [](RunConfig& c, const std::string& v) { c.eval_regress = to_bool(v); }},
      {"evaluate", "ablation_tp", "TP4", [](RunConfig& c, const std::string& v) { c.ablation_tp = parse_time_point(v); }},
  };
  return k;
}

// Keys that do not influence any artifact content stay out of the provenance hash.
bool hashed(const std::string& full) { return full != "paths.out" && full != "run.jobs"; }

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

struct Parsed {
  RunConfig config;
  std::vector<std::string> errors;
};

Parsed parse(const std::optional<fs::path>& path, const Environment& env, const std::map<std::string, std::string>& overrides) {
  Parsed out;
  RunConfig& c = out.config;
  std::map<std::string, std::string> values;
  std::set<std::string> known;
  for (const auto& k : keys()) {
    const std::string full = std::string(k.section) + "." + k.key;
    known.insert(full);
    if (k.fallback) values[full] = k.fallback;
  }

  if (path) {
    c.base_dir = path->parent_path().empty() ? fs::path(".") : path->parent_path();
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path->string(), tree);
    } catch (const std::exception& e) {
      out.errors.push_back(std::string("config file: ") + e.what());
      return out;
    }
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty()) {
        out.errors.push_back(section + ": key outside of a section");
        continue;
      }
      for (const auto& [key, node] : body) {
        const std::string full = section + "." + key;
        if (!known.count(full)) out.errors.push_back(full + ": unknown key");
        else values[full] = trim(node.data());
      }
    }
  }
  for (const auto& [name, value] : env) {
    if (name.rfind("FULFILLKIT_", 0) != 0) continue;
    const std::string rest = name.substr(11);
    bool matched = false;
    for (const auto& full : known) {
      std::string flat = full;
      std::replace(flat.begin(), flat.end(), '.', '_');
      if (upper(flat) == rest) {
        values[full] = trim(value);
        matched = true;
        break;
      }
    }
    if (!matched) out.errors.push_back(name + ": environment override names no known key");
  }
  for (const auto& [full, value] : overrides) {
    if (!known.count(full)) out.errors.push_back(full + ": unknown key");
    else values[full] = value;
  }

  for (const auto& k : keys()) {
    const std::string full = std::string(k.section) + "." + k.key;
    const auto it = values.find(full);
    if (it == values.end()) continue;
    try {
      k.apply(c, it->second);
    } catch (const Error& e) {
      out.errors.push_back(full + ": " + e.what());
    } catch (const std::exception& e) {
      const std::string what = e.what();
      out.errors.push_back(full + ": invalid value '" + it->second + "'" +
                           (what.rfind("sto", 0) == 0 ? "" : " (" + what + ")"));
    }
  }

  if (!values.count("run.seed")) out.errors.push_back("run.seed: master seed is required");
  auto range = [&](const char* lo_key, int lo, const char* hi_key, int hi) {
    if (lo > hi)
      out.errors.push_back(std::string(lo_key) + " (" + std::to_string(lo) + ") exceeds " + hi_key + " (" +
                           std::to_string(hi) + ")");
  };
  range("cluster.word_k_min", c.semantic.word_k_min, "cluster.word_k_max", c.semantic.word_k_max);
  range("cluster.reward_k_min", c.semantic.reward_k_min, "cluster.reward_k_max", c.semantic.reward_k_max);
  if (c.pipeline.boxcox.grid_min > c.pipeline.boxcox.grid_max)
    out.errors.push_back("boxcox.grid_min exceeds boxcox.grid_max");
  try {
    c.synth.validate();
  } catch (const std::exception& e) {
    out.errors.push_back(std::string("synth: ") + e.what());
  }
  for (const char* key : {"corpus", "events", "labels", "stopwords", "dictionary", "embeddings"}) {
    const std::string& v = values["paths." + std::string(key)];
    if (!v.empty() && !fs::exists(c.resolve(v)))
      out.errors.push_back("paths." + std::string(key) + ": " + c.resolve(v).string() + " does not exist");
  }

  std::string canonical;
  for (const auto& [full, v] : values) {
    c.effective[full] = v;
    if (hashed(full)) canonical += full + "=" + v + "\n";
  }
  c.hash = fnv1a64(canonical);
  return out;
}

}  // namespace

Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    const auto eq = kv.find('=');
    if (eq != std::string::npos && kv.rfind("FULFILLKIT_", 0) == 0) env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return env;
}

std::vector<std::string> validate_config(const std::optional<fs::path>& path, const Environment& env,
                                         const std::map<std::string, std::string>& overrides) {
  return parse(path, env, overrides).errors;
}

RunConfig load_config(const std::optional<fs::path>& path, const Environment& env,
                      const std::map<std::string, std::string>& overrides) {
  auto parsed = parse(path, env, overrides);
  if (!parsed.errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : parsed.errors) msg += "\n  " + e;
    throw config_error(msg);
  }
  return std::move(parsed.config);
}

std::string default_config_text() {
  std::ostringstream os;
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) os << "\n";
      section = k.section;
      os << "[" << section << "]\n";
    }
    if (std::string(k.key) == "seed") os << "seed = 42\n";
    else os << k.key << " = " << k.fallback << "\n";
  }
  return os.str();
}

}  // namespace fulfillkit
