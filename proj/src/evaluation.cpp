#include "fulfillkit/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fulfillkit/parallel.hpp"

namespace fulfillkit {

Folds kfold_split(int n, int k, const std::vector<int>* stratify_on, std::uint64_t seed) {
  if (k < 1) throw config_error("kfold_split: k must be >= 1");
  if (k > n) throw config_error("kfold_split: k (" + std::to_string(k) + ") exceeds n (" + std::to_string(n) + ")");
  if (stratify_on && static_cast<int>(stratify_on->size()) != n) throw data_error("kfold_split: label count mismatch");
  std::mt19937_64 rng(derive_seed(seed, 0x666f6c64));
  std::vector<int> order;
  if (stratify_on) {
    const std::set<int> classes(stratify_on->begin(), stratify_on->end());
    for (int c : classes) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if ((*stratify_on)[static_cast<std::size_t>(i)] == c) members.push_back(i);
      std::shuffle(members.begin(), members.end(), rng);
      order.insert(order.end(), members.begin(), members.end());
    }
  } else {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
  }
  Folds folds(static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < order.size(); ++pos) folds[pos % static_cast<std::size_t>(k)].push_back(order[pos]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw data_error("accuracy: length mismatch");
  if (pred.empty()) throw data_error("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

RegressionMetrics regression_metrics(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size()) throw data_error("regression_metrics: length mismatch");
  if (pred.size() == 0) throw data_error("regression_metrics: empty input");
  RegressionMetrics m;
  m.rmse = std::sqrt((pred - truth).squaredNorm() / static_cast<double>(truth.size()));
  const double range = truth.maxCoeff() - truth.minCoeff();
  const double mean = truth.mean();
  m.nrmse_a = range > 0 ? m.rmse / range : std::numeric_limits<double>::quiet_NaN();
  m.nrmse_b = mean != 0 ? m.rmse / mean : std::numeric_limits<double>::quiet_NaN();
  return m;
}

BufferTable EvalReport::buffers() const {
  BufferTable out;
  for (const auto& r : regression) out[r.tp] = r.model_mean.rmse;
  return out;
}

namespace {

std::vector<Eigen::Index> as_index(const std::vector<int>& v) { return {v.begin(), v.end()}; }

template <typename T>
std::vector<T> subset(const std::vector<T>& v, const std::vector<int>& idx) {
  std::vector<T> out;
  for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  std::size_t c = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      s += x;
      ++c;
    }
  return c ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN();
}

double paired_p(const std::vector<double>& a, const std::vector<double>& b, Alternative alt) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isnan(a[i]) && !std::isnan(b[i])) {
      x.push_back(a[i]);
      y.push_back(b[i]);
    }
  if (x.empty()) return 1.0;
  return wilcoxon_signed_rank(x, y, alt).p_value;
}

struct FoldOutcome {
  double acc = kMissing, maj = kMissing, base = kMissing;
  RegressionMetrics reg{kMissing, kMissing, kMissing}, reg_base{kMissing, kMissing, kMissing};
  std::vector<PredictionRecord> preds;
};

int to_label(double prob) { return prob > 0.5 ? kLate : kOnTime; }

std::uint64_t fold_seed(std::uint64_t seed, TimePoint tp, int fold) {
  return derive_seed(seed, static_cast<std::uint64_t>(tp), static_cast<std::uint64_t>(fold));
}

FoldOutcome run_fold(const FeatureMatrix& X, const EvalData& data, const Folds& folds, int f, TimePoint tp,
                     const EvalOptions& opts, std::uint64_t seed, bool baselines) {
  FoldOutcome out;
  std::vector<int> train, test = folds[static_cast<std::size_t>(f)];
  for (std::size_t g = 0; g < folds.size(); ++g)
    if (static_cast<int>(g) != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
  std::sort(train.begin(), train.end());
  const auto fs = fold_seed(seed, tp, f);
  const FeatureMatrix Xtr = X.select_rows(as_index(train));
  const FeatureMatrix Xte = X.select_rows(as_index(test));
  const auto ytr = subset(data.labels, train), yte = subset(data.labels, test);

  std::map<int, PredictionRecord> recs;
  for (int i : test) {
    auto& r = recs[i];
    r.id = X.ids[static_cast<std::size_t>(i)];
    r.tp = tp;
    r.fold = f + 1;
    r.label = data.labels[static_cast<std::size_t>(i)];
    r.days = data.days(i);
  }

  if (opts.classify) {
    const auto pipe = fit_classifier(Xtr, ytr, opts.pipeline, derive_seed(fs, 1));
    const Vector prob = pipe.predict_proba_all(Xte.values);
    std::vector<int> pred;
    for (Eigen::Index k = 0; k < prob.size(); ++k) {
      pred.push_back(to_label(prob(k)));
      recs[test[static_cast<std::size_t>(k)]].prob_late = prob(k);
    }
    out.acc = accuracy(pred, yte);
    if (baselines) {
      const auto maj = majority_baseline(ytr);
      out.maj = accuracy(std::vector<int>(yte.size(), maj.label), yte);
      const auto b8 = baseline8_fit(Xtr, ytr, Vector(), Task::Classify, tp, opts.pipeline.gbt, derive_seed(fs, 2));
      std::vector<int> bpred;
      for (std::size_t k = 0; k < test.size(); ++k) {
        const double p = b8.predict(Xte.values.row(static_cast<Eigen::Index>(k)));
        bpred.push_back(to_label(p));
        recs[test[k]].baseline_prob_late = p;
      }
      out.base = accuracy(bpred, yte);
    }
  }

  if (opts.regress) {
    std::vector<int> rtr, rte;
    for (int i : train)
      if (!is_missing(data.days(i))) rtr.push_back(i);
    for (int i : test)
      if (!is_missing(data.days(i))) rte.push_back(i);
    if (rtr.size() >= 10 && !rte.empty()) {
      const FeatureMatrix Rtr = X.select_rows(as_index(rtr));
      const FeatureMatrix Rte = X.select_rows(as_index(rte));
      const Vector dtr = data.days(as_index(rtr)), dte = data.days(as_index(rte));
      const auto pipe = fit_regressor(Rtr, subset(data.labels, rtr), dtr, opts.pipeline, derive_seed(fs, 3));
      const Vector pd = pipe.predict_days_all(Rte.values);
      out.reg = regression_metrics(pd, dte);
      const auto b8 = baseline8_fit(Rtr, {}, dtr, Task::Regress, tp, opts.pipeline.gbt, derive_seed(fs, 4));
      Vector bd(static_cast<Eigen::Index>(rte.size()));
      for (std::size_t k = 0; k < rte.size(); ++k) {
        bd(static_cast<Eigen::Index>(k)) = b8.predict(Rte.values.row(static_cast<Eigen::Index>(k)));
        recs[rte[k]].pred_days = pd(static_cast<Eigen::Index>(k));
        recs[rte[k]].baseline_days = bd(static_cast<Eigen::Index>(k));
      }
      out.reg_base = regression_metrics(bd, dte);
    }
  }
  for (auto& [i, r] : recs) out.preds.push_back(r);
  return out;
}

std::vector<FoldOutcome> run_cv(const FeatureMatrix& X, const EvalData& data, const Folds& folds, TimePoint tp,
                                const EvalOptions& opts, std::uint64_t seed, bool baselines) {
  std::vector<FoldOutcome> outs(folds.size());
  parallel_for(static_cast<int>(folds.size()), opts.jobs, [&](int f) {
    outs[static_cast<std::size_t>(f)] = run_fold(X, data, folds, f, tp, opts, seed, baselines);
  });
  return outs;
}

void check_data(const EvalData& data) {
  const auto n = data.labels.size();
  if (static_cast<std::size_t>(data.days.size()) != n) throw data_error("evaluate: duration count does not match labels");
  for (const auto& [tp, X] : data.features)
    if (static_cast<std::size_t>(X.values.rows()) != n) throw data_error("evaluate: " + to_string(tp) + " row count mismatch");
}

const FeatureMatrix& matrix_at(const EvalData& data, TimePoint tp) {
  const auto it = data.features.find(tp);
  if (it == data.features.end()) throw data_error("evaluate: no feature matrix for " + to_string(tp));
  return it->second;
}

FeatureMatrix prepared(const FeatureMatrix& X) { return X.log_transformed ? X : log1p_matrix(X); }

}  // namespace

EvalReport evaluate(const EvalData& data, const EvalOptions& opts, std::uint64_t seed) {
  check_data(data);
  const Folds folds = kfold_split(static_cast<int>(data.labels.size()), opts.folds, &data.labels, seed);
  EvalReport rep;
  for (TimePoint tp : opts.time_points) {
    const FeatureMatrix X = prepared(matrix_at(data, tp));
    const auto outs = run_cv(X, data, folds, tp, opts, seed, true);
    if (opts.classify) {
      ClassificationRow row;
      row.tp = tp;
      for (const auto& o : outs) {
        row.model.push_back(o.acc);
        row.majority.push_back(o.maj);
        row.baseline8.push_back(o.base);
      }
      row.model_mean = mean_of(row.model);
      row.majority_mean = mean_of(row.majority);
      row.baseline8_mean = mean_of(row.baseline8);
      if (opts.pairing == Pairing::PerFold) {
        row.p_vs_majority = paired_p(row.model, row.majority, Alternative::Greater);
        row.p_vs_baseline8 = paired_p(row.model, row.baseline8, Alternative::Greater);
      } else {
        std::vector<double> m, b, j;
        for (const auto& o : outs)
          for (const auto& p : o.preds) {
            m.push_back(to_label(p.prob_late) == p.label ? 1.0 : 0.0);
            b.push_back(to_label(p.baseline_prob_late) == p.label ? 1.0 : 0.0);
            j.push_back(p.label == majority_baseline(data.labels).label ? 1.0 : 0.0);
          }
        row.p_vs_majority = paired_p(m, j, Alternative::Greater);
        row.p_vs_baseline8 = paired_p(m, b, Alternative::Greater);
      }
      rep.classification.push_back(row);
    }
    if (opts.regress) {
      RegressionRow row;
      row.tp = tp;
      std::vector<double> a, b;
      for (const auto& o : outs) {
        row.model.push_back(o.reg);
        row.baseline.push_back(o.reg_base);
      }
      auto mean_metrics = [](const std::vector<RegressionMetrics>& v) {
        std::vector<double> r, na, nb;
        for (const auto& m : v) {
          r.push_back(m.rmse);
          na.push_back(m.nrmse_a);
          nb.push_back(m.nrmse_b);
        }
        return RegressionMetrics{mean_of(r), mean_of(na), mean_of(nb)};
      };
      row.model_mean = mean_metrics(row.model);
      row.baseline_mean = mean_metrics(row.baseline);
      if (opts.pairing == Pairing::PerFold) {
        for (std::size_t f = 0; f < outs.size(); ++f) {
          a.push_back(row.model[f].rmse);
          b.push_back(row.baseline[f].rmse);
        }
      } else {
        for (const auto& o : outs)
          for (const auto& p : o.preds)
            if (!is_missing(p.days) && !is_missing(p.pred_days)) {
              a.push_back((p.pred_days - p.days) * (p.pred_days - p.days));
              b.push_back((p.baseline_days - p.days) * (p.baseline_days - p.days));
            }
      }
      row.p_vs_baseline = paired_p(a, b, Alternative::Less);
      rep.regression.push_back(row);
    }
    for (const auto& o : outs) rep.predictions.insert(rep.predictions.end(), o.preds.begin(), o.preds.end());
  }
  return rep;
}

std::vector<AblationRow> ablation(const EvalData& data, const std::vector<FeatureGroup>& groups, TimePoint tp,
                                  const EvalOptions& opts, std::uint64_t seed) {
  check_data(data);
  if (groups.empty()) throw config_error("ablation: no groups given");
  const Folds folds = kfold_split(static_cast<int>(data.labels.size()), opts.folds, &data.labels, seed);
  const FeatureMatrix X = prepared(matrix_at(data, tp));
  EvalOptions o = opts;
  o.classify = true;
  o.regress = false;

  auto run = [&](const std::string& name, const std::vector<FeatureGroup>& drop) {
    std::vector<Eigen::Index> keep;
    for (std::size_t j = 0; j < X.schema.size(); ++j)
      if (std::find(drop.begin(), drop.end(), X.schema[j].group) == drop.end()) keep.push_back(static_cast<Eigen::Index>(j));
    const FeatureMatrix Xk = X.select_columns(keep);
    AblationRow row;
    row.excluded = name;
    for (const auto& out : run_cv(Xk, data, folds, tp, o, seed, false)) row.folds.push_back(out.acc);
    row.accuracy = mean_of(row.folds);
    return row;
  };
  std::vector<AblationRow> rows;
  rows.push_back(run("none", {}));
  for (auto g : groups) rows.push_back(run(to_string(g), {g}));
  if (groups.size() > 1) rows.push_back(run("all", groups));
  for (auto& r : rows) r.delta = r.accuracy - rows.front().accuracy;
  return rows;
}

namespace {

std::string num(double v, int prec = 6) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string pval(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& r, const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "task,tp,metric,fold,model,majority,baseline,p_vs_majority,p_vs_baseline\n";
  for (const auto& c : r.classification) {
    const auto tp = to_string(c.tp);
    out << "classification," << tp << ",accuracy,mean," << num(c.model_mean) << "," << num(c.majority_mean) << ","
        << num(c.baseline8_mean) << "," << pval(c.p_vs_majority) << "," << pval(c.p_vs_baseline8) << "\n";
    for (std::size_t f = 0; f < c.model.size(); ++f)
      out << "classification," << tp << ",accuracy," << f + 1 << "," << num(c.model[f]) << "," << num(c.majority[f])
          << "," << num(c.baseline8[f]) << ",,\n";
  }
  for (const auto& g : r.regression) {
    const auto tp = to_string(g.tp);
    auto emit = [&](const std::string& metric, auto get) {
      out << "regression," << tp << "," << metric << ",mean," << num(get(g.model_mean)) << ",," << num(get(g.baseline_mean))
          << ",," << (metric == "rmse" ? pval(g.p_vs_baseline) : "") << "\n";
      for (std::size_t f = 0; f < g.model.size(); ++f)
        out << "regression," << tp << "," << metric << "," << f + 1 << "," << num(get(g.model[f])) << ",,"
            << num(get(g.baseline[f])) << ",,\n";
    };
    emit("rmse", [](const RegressionMetrics& m) { return m.rmse; });
    emit("nrmse_a", [](const RegressionMetrics& m) { return m.nrmse_a; });
    emit("nrmse_b", [](const RegressionMetrics& m) { return m.nrmse_b; });
  }
}

void write_report_markdown(std::ostream& out, const EvalReport& r, const std::string& provenance) {
  out << "<!-- " << provenance << " -->\n\n";
  if (!r.classification.empty()) {
    out << "## Delivery status accuracy\n\n";
    out << "| Time point | Model | Majority | 8-feature baseline | p (vs majority) | p (vs baseline) |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& c : r.classification)
      out << "| " << to_string(c.tp) << " | " << num(100 * c.model_mean, 2) << "% | " << num(100 * c.majority_mean, 2)
          << "% | " << num(100 * c.baseline8_mean, 2) << "% | " << pval(c.p_vs_majority) << " | " << pval(c.p_vs_baseline8)
          << " |\n";
    out << "\n";
  }
  if (!r.regression.empty()) {
    out << "## Delivery duration error\n\n";
    out << "| Time point | RMSE | NRMSE@A | NRMSE@B | Baseline RMSE | Baseline NRMSE@A | Baseline NRMSE@B | p (vs baseline) |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& g : r.regression)
      out << "| " << to_string(g.tp) << " | " << num(g.model_mean.rmse, 2) << " | " << num(g.model_mean.nrmse_a, 4) << " | "
          << num(g.model_mean.nrmse_b, 4) << " | " << num(g.baseline_mean.rmse, 2) << " | " << num(g.baseline_mean.nrmse_a, 4)
          << " | " << num(g.baseline_mean.nrmse_b, 4) << " | " << pval(g.p_vs_baseline) << " |\n";
    out << "\n";
  }
  if (!r.ablation.empty()) {
    out << "## Ablation at " << to_string(r.ablation_tp) << "\n\n";
    out << "| Excluded group | Accuracy | Delta |\n|---|---|---|\n";
    for (const auto& a : r.ablation)
      out << "| " << a.excluded << " | " << num(100 * a.accuracy, 2) << "% | " << num(100 * a.delta, 2) << " |\n";
    out << "\n";
  }
}

void write_predictions_csv(std::ostream& out, const EvalReport& r, const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "id,tp,fold,label,prob_late,baseline_prob_late,days,pred_days,baseline_days\n";
  for (const auto& p : r.predictions)
    out << p.id << "," << to_string(p.tp) << "," << p.fold << "," << (p.label == kLate ? "late" : "on_time") << ","
        << num(p.prob_late) << "," << num(p.baseline_prob_late) << "," << num(p.days) << "," << num(p.pred_days) << ","
        << num(p.baseline_days) << "\n";
}

void write_ablation_csv(std::ostream& out, const EvalReport& r, const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "tp,excluded,accuracy,delta\n";
  for (const auto& a : r.ablation)
    out << to_string(r.ablation_tp) << "," << a.excluded << "," << num(a.accuracy) << "," << num(a.delta) << "\n";
}

}  // namespace fulfillkit
