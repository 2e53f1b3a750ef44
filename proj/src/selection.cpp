#include "fulfillkit/selection.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "fulfillkit/parallel.hpp"
#include "fulfillkit/stats.hpp"

namespace fulfillkit {

namespace {

Matrix centered(const Matrix& X) { return X.rowwise() - X.colwise().mean(); }

bool is_constant(const Matrix& Xc, Eigen::Index j, const Matrix& X) {
  const double scale = std::max(1.0, X.col(j).cwiseAbs().maxCoeff());
  return Xc.col(j).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

VifScores vif_scores(const Matrix& X) {
  const auto p = X.cols();
  if (p < 2) throw data_error("vif_scores: need at least two features");
  if (X.rows() < p + 1) throw data_error("vif_scores: need at least p+1 rows");
  if (!X.allFinite()) throw data_error("vif_scores: non-finite values");
  VifScores out;
  out.vif.assign(static_cast<std::size_t>(p), 0.0);
  out.capped.assign(static_cast<std::size_t>(p), false);
  out.degenerate.assign(static_cast<std::size_t>(p), false);

  Matrix Xc = centered(X);
  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (is_constant(Xc, j, X)) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      out.vif[static_cast<std::size_t>(j)] = std::numeric_limits<double>::quiet_NaN();
    } else {
      Xc.col(j) /= Xc.col(j).norm();
      live.push_back(j);
    }
  }
  if (live.size() == 1) {
    out.vif[static_cast<std::size_t>(live[0])] = 1.0;
    return out;
  }
  const Matrix C = Xc(Eigen::all, live).transpose() * Xc(Eigen::all, live);  // correlation matrix
  // 1 - R^2 of column a equals 1 / (C^+)_aa when a takes no part in an exact collinearity.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  const Vector& lam = eig.eigenvalues();
  const Matrix& V = eig.eigenvectors();
  const double null_tol = 1e-14 * std::max(1.0, lam.maxCoeff());
  for (Eigen::Index a = 0; a < V.rows(); ++a) {
    double inv_diag = 0.0, null_weight = 0.0;
    for (Eigen::Index e = 0; e < lam.size(); ++e) {
      const double v2 = V(a, e) * V(a, e);
      if (lam(e) <= null_tol) null_weight += v2;
      else inv_diag += v2 / lam(e);
    }
    const auto j = static_cast<std::size_t>(live[static_cast<std::size_t>(a)]);
    if (null_weight > 1e-10 || inv_diag >= kVifCap) {
      out.vif[j] = kVifCap;
      out.capped[j] = true;
    } else {
      out.vif[j] = std::max(1.0, inv_diag);
    }
  }
  return out;
}

VifReport vif_eliminate(const Matrix& X, double threshold) {
  if (!(threshold > 1.0)) throw config_error("vif threshold must exceed 1");
  const auto p = static_cast<std::size_t>(X.cols());
  VifReport rep;
  rep.final_vif.assign(p, std::numeric_limits<double>::quiet_NaN());
  rep.capped.assign(p, false);
  rep.degenerate.assign(p, false);
  std::vector<int> cols(p);
  std::iota(cols.begin(), cols.end(), 0);

  auto first = vif_scores(X);
  for (std::size_t j = 0; j < p; ++j)
    if (first.degenerate[j]) {
      rep.degenerate[j] = true;
      rep.eliminated.push_back(static_cast<int>(j));
      rep.vif_at_removal.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  std::erase_if(cols, [&](int c) { return rep.degenerate[static_cast<std::size_t>(c)]; });

  while (!cols.empty()) {
    VifScores s;
    if (cols.size() == 1) {
      s.vif = {1.0};
      s.capped = {false};
      s.degenerate = {false};
    } else {
      s = vif_scores(X(Eigen::all, cols));
    }
    std::size_t arg = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      rep.final_vif[static_cast<std::size_t>(cols[k])] = s.vif[k];
      rep.capped[static_cast<std::size_t>(cols[k])] = s.capped[k];
      if (s.vif[k] > s.vif[arg]) arg = k;
    }
    if (s.vif[arg] < threshold) break;
    rep.eliminated.push_back(cols[arg]);
    rep.vif_at_removal.push_back(s.vif[arg]);
    rep.final_vif[static_cast<std::size_t>(cols[arg])] = std::numeric_limits<double>::quiet_NaN();
    cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(arg));
  }
  rep.retained = cols;
  return rep;
}

std::string to_string(BorutaStatus s) {
  switch (s) {
    case BorutaStatus::Confirmed: return "confirmed";
    case BorutaStatus::Tentative: return "tentative";
    case BorutaStatus::Rejected: return "rejected";
  }
  return "?";
}

void BorutaParams::validate() const {
  if (n_runs < 20) throw config_error("boruta: n_runs must be >= 20");
  if (!(alpha > 0) || alpha > 1) throw config_error("boruta: alpha must be in (0, 1]");
  if (forest.n_trees < 1) throw config_error("boruta: forest needs at least one tree");
}

std::vector<int> BorutaResult::confirmed() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < status.size(); ++j)
    if (status[j] == BorutaStatus::Confirmed) out.push_back(static_cast<int>(j));
  return out;
}

BorutaStatus boruta_status(int hits, int n_runs, double alpha, double* p_value) {
  const double p = binomial_two_sided_half(hits, n_runs);
  if (p_value) *p_value = p;
  if (p < alpha && 2 * hits > n_runs) return BorutaStatus::Confirmed;
  if (p < alpha && 2 * hits < n_runs) return BorutaStatus::Rejected;
  return BorutaStatus::Tentative;
}

BorutaResult boruta_select(const Matrix& X, const std::vector<int>& y, const BorutaParams& params, std::uint64_t seed,
                           int jobs) {
  params.validate();
  const auto p = X.cols();
  const auto n = X.rows();
  if (p == 0) throw data_error("boruta: no features");
  if (static_cast<Eigen::Index>(y.size()) != n) throw data_error("boruta: label count does not match rows");
  const auto ones = std::count(y.begin(), y.end(), 1);
  if (ones == 0 || ones == n) throw data_error("boruta: single-class labels");

  const auto R = static_cast<std::size_t>(params.n_runs);
  Matrix z_runs(static_cast<Eigen::Index>(R), p);
  std::vector<double> shadow_max(R);
  parallel_for(params.n_runs, jobs, [&](int r) {
    std::mt19937_64 rng(derive_seed(seed, 0x626f72, static_cast<std::uint64_t>(r)));
    Matrix XS(n, 2 * p);
    XS.leftCols(p) = X;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < p; ++j) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Eigen::Index i = 0; i < n; ++i) XS(i, p + j) = X(perm[static_cast<std::size_t>(i)], j);
    }
    const auto forest = rf_fit(XS, y, params.forest, rng());
    const Vector z = importance_z(rf_permutation_importance(forest, XS, y, rng()));
    z_runs.row(r) = z.head(p).transpose();
    shadow_max[static_cast<std::size_t>(r)] = z.tail(p).maxCoeff();
  });

  BorutaResult res;
  res.n_runs = params.n_runs;
  for (Eigen::Index j = 0; j < p; ++j) {
    int hits = 0;
    std::vector<double> col(R);
    for (std::size_t r = 0; r < R; ++r) {
      col[r] = z_runs(static_cast<Eigen::Index>(r), j);
      hits += col[r] > shadow_max[r] ? 1 : 0;
    }
    double pv = 1.0;
    res.status.push_back(boruta_status(hits, params.n_runs, params.alpha, &pv));
    res.hits.push_back(hits);
    res.p_value.push_back(pv);
    std::sort(col.begin(), col.end());
    res.z_mean.push_back(std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(R));
    res.z_min.push_back(col.front());
    res.z_max.push_back(col.back());
    res.z_median.push_back(R % 2 ? col[R / 2] : 0.5 * (col[R / 2 - 1] + col[R / 2]));
  }
  return res;
}

double aic_value(double sse, Eigen::Index n, Eigen::Index k) {
  const auto nn = static_cast<double>(n);
  return nn * std::log(std::max(sse, 1e-12) / nn) + 2.0 * static_cast<double>(k + 1);
}

namespace {

// Least-squares state for a column subset, computed from the standardized Gram matrix.
struct SubsetFit {
  double sse = 0.0;
  Matrix inv;  // inverse of the subset Gram
  Vector beta;
  bool ok = false;
};

SubsetFit subset_fit(const Matrix& G, const Vector& b, double yy, const std::vector<Eigen::Index>& S) {
  SubsetFit f;
  if (S.empty()) {
    f.sse = yy;
    f.ok = true;
    return f;
  }
  const Matrix GS = G(S, S);
  Eigen::LDLT<Matrix> ldlt(GS);
  const Vector d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-10 * std::max(1.0, d.maxCoeff())) return f;
  f.inv = ldlt.solve(Matrix::Identity(GS.rows(), GS.cols()));
  f.beta = f.inv * b(S);
  f.sse = std::max(0.0, yy - b(S).dot(f.beta));
  f.ok = true;
  return f;
}

}  // namespace

StepwiseResult stepwise_aic(const Matrix& X, const Vector& y) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n || n == 0) throw data_error("stepwise_aic: row mismatch");
  if (!X.allFinite() || !y.allFinite()) throw data_error("stepwise_aic: non-finite input");

  Matrix Z = centered(X);
  std::vector<bool> usable(static_cast<std::size_t>(p), true);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double nrm = Z.col(j).norm();
    if (is_constant(Z, j, X)) {
      usable[static_cast<std::size_t>(j)] = false;
      Z.col(j).setZero();
    } else {
      Z.col(j) /= nrm;
    }
  }
  const Vector yc = y.array() - y.mean();
  const Matrix G = Z.transpose() * Z;
  const Vector b = Z.transpose() * yc;
  const double yy = yc.squaredNorm();

  StepwiseResult res;
  std::vector<Eigen::Index> S;
  for (Eigen::Index j = 0; j < p; ++j)
    if (usable[static_cast<std::size_t>(j)]) S.push_back(j);
  SubsetFit fit = subset_fit(G, b, yy, S);
  if (!fit.ok || static_cast<Eigen::Index>(S.size()) + 1 >= n) {
    res.forward_start = true;
    S.clear();
    fit = subset_fit(G, b, yy, S);
  }
  double aic = aic_value(fit.sse, n, static_cast<Eigen::Index>(S.size()));
  res.aic_path.push_back(aic);

  for (;;) {
    const auto k = static_cast<Eigen::Index>(S.size());
    double best_aic = aic;
    Eigen::Index best_j = -1;
    std::vector<int> pos_in_S(static_cast<std::size_t>(p), -1);
    for (std::size_t a = 0; a < S.size(); ++a) pos_in_S[static_cast<std::size_t>(S[a])] = static_cast<int>(a);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!usable[static_cast<std::size_t>(j)]) continue;
      double cand;
      const int a = pos_in_S[static_cast<std::size_t>(j)];
      if (a >= 0) {
        const double bj = fit.beta(a);
        cand = aic_value(fit.sse + bj * bj / fit.inv(a, a), n, k - 1);
      } else {
        if (k + 2 >= n) continue;
        double d = G(j, j), c = b(j);
        if (k > 0) {
          const Vector gSj = G(S, j);
          d -= gSj.dot(fit.inv * gSj);
          c -= gSj.dot(fit.beta);
        }
        if (d <= 1e-10 * G(j, j)) continue;  // collinear with the current model
        cand = aic_value(std::max(0.0, fit.sse - c * c / d), n, k + 1);
      }
      if (cand < best_aic) {
        best_aic = cand;
        best_j = j;
      }
    }
    if (best_j < 0) break;
    if (pos_in_S[static_cast<std::size_t>(best_j)] >= 0) std::erase(S, best_j);
    else S.insert(std::upper_bound(S.begin(), S.end(), best_j), best_j);
    SubsetFit next = subset_fit(G, b, yy, S);
    if (!next.ok) break;
    const double next_aic = aic_value(next.sse, n, static_cast<Eigen::Index>(S.size()));
    if (!(next_aic < aic)) break;  // guards against rank-update round-off
    fit = std::move(next);
    aic = next_aic;
    res.aic_path.push_back(aic);
  }
  for (auto j : S) res.retained.push_back(static_cast<int>(j));
  return res;
}

namespace {
std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
}  // namespace

void write_vif_csv(std::ostream& out, const VifReport& r, const std::vector<std::string>& names,
                   const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "feature,statistic,status\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const bool kept = std::find(r.retained.begin(), r.retained.end(), static_cast<int>(j)) != r.retained.end();
    std::string status = kept ? (r.capped[j] ? "retained_capped" : "retained") : (r.degenerate[j] ? "degenerate" : "eliminated");
    double stat = r.final_vif[j];
    if (!kept) {
      const auto it = std::find(r.eliminated.begin(), r.eliminated.end(), static_cast<int>(j));
      stat = r.vif_at_removal[static_cast<std::size_t>(it - r.eliminated.begin())];
    }
    out << names[j] << "," << fmt(stat) << "," << status << "\n";
  }
}

void write_boruta_csv(std::ostream& out, const BorutaResult& r, const std::vector<std::string>& names,
                      const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "feature,statistic,status,hits,p_value,z_max,z_min,z_median\n";
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return r.z_mean[a] > r.z_mean[b]; });
  for (auto j : order)
    out << names[j] << "," << fmt(r.z_mean[j]) << "," << to_string(r.status[j]) << "," << r.hits[j] << ","
        << fmt(r.p_value[j]) << "," << fmt(r.z_max[j]) << "," << fmt(r.z_min[j]) << "," << fmt(r.z_median[j]) << "\n";
}

}  // namespace fulfillkit
