#include "fulfillkit/clustering.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fulfillkit {

int ClusterModel::assign(const Eigen::Ref<const Eigen::RowVectorXd>& point) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

IndexVector ClusterModel::assign_all(const Matrix& points) const {
  IndexVector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = assign(points.row(i));
  return out;
}

namespace {

struct WeightedPoints {
  Matrix points;
  Vector weights;
};

WeightedPoints fold_duplicates(const Matrix& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c)
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<Eigen::Index> reps;
  std::vector<double> w;
  for (auto i : order) {
    if (!reps.empty() && points.row(reps.back()) == points.row(i)) {
      w.back() += 1.0;
    } else {
      reps.push_back(i);
      w.push_back(1.0);
    }
  }
  // Keep first-occurrence order so seeding does not depend on the sort above.
  std::vector<std::size_t> by_first(reps.size());
  std::iota(by_first.begin(), by_first.end(), 0);
  std::sort(by_first.begin(), by_first.end(), [&](std::size_t a, std::size_t b) { return reps[a] < reps[b]; });
  WeightedPoints out{Matrix(static_cast<Eigen::Index>(reps.size()), points.cols()),
                     Vector(static_cast<Eigen::Index>(reps.size()))};
  for (std::size_t r = 0; r < by_first.size(); ++r) {
    out.points.row(static_cast<Eigen::Index>(r)) = points.row(reps[by_first[r]]);
    out.weights(static_cast<Eigen::Index>(r)) = w[by_first[r]];
  }
  return out;
}

// Single-point transfers after Lloyd: move a point to another cluster whenever that lowers the
// weighted within-cluster sum of squares. Returns true when any point moved.
bool hartigan_refine(const WeightedPoints& wp, ClusterModel& model) {
  const auto u = wp.points.rows();
  const auto k = model.centers.rows();
  if (k < 2) return false;
  std::vector<int> assign(static_cast<std::size_t>(u));
  Vector mass = Vector::Zero(k);
  Matrix sums = Matrix::Zero(k, wp.points.cols());
  for (Eigen::Index i = 0; i < u; ++i) {
    const int a = model.assign(wp.points.row(i));
    assign[static_cast<std::size_t>(i)] = a;
    mass(a) += wp.weights(i);
    sums.row(a) += wp.weights(i) * wp.points.row(i);
  }
  for (Eigen::Index c = 0; c < k; ++c)
    if (mass(c) > 0) model.centers.row(c) = sums.row(c) / mass(c);
  bool moved_any = false;
  for (int pass = 0; pass < 1000; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i < u; ++i) {
      const int a = assign[static_cast<std::size_t>(i)];
      const double w = wp.weights(i);
      if (mass(a) <= w) continue;
      const double removal = w * mass(a) / (mass(a) - w) * (wp.points.row(i) - model.centers.row(a)).squaredNorm();
      int best = a;
      double best_add = removal;
      for (Eigen::Index b = 0; b < k; ++b) {
        if (b == a) continue;
        const double add = w * mass(b) / (mass(b) + w) * (wp.points.row(i) - model.centers.row(b)).squaredNorm();
        if (add < best_add - 1e-12 * (1.0 + removal)) {
          best_add = add;
          best = static_cast<int>(b);
        }
      }
      if (best == a) continue;
      sums.row(a) -= w * wp.points.row(i);
      mass(a) -= w;
      sums.row(best) += w * wp.points.row(i);
      mass(best) += w;
      model.centers.row(a) = sums.row(a) / mass(a);
      model.centers.row(best) = sums.row(best) / mass(best);
      assign[static_cast<std::size_t>(i)] = best;
      moved = moved_any = true;
    }
    if (!moved) break;
  }
  return moved_any;
}

template <class Rng>
Eigen::Index sample_index(Rng& rng, const Vector& mass) {
  const double total = mass.sum();
  if (!(total > 0)) return -1;
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass(i) <= 0) continue;
    if (u < mass(i)) return i;
    u -= mass(i);
  }
  for (Eigen::Index i = mass.size() - 1; i >= 0; --i)
    if (mass(i) > 0) return i;
  return -1;
}

Matrix kmeanspp(const WeightedPoints& wp, int k, std::mt19937_64& rng) {
  const auto n = wp.points.rows();
  Matrix centers(k, wp.points.cols());
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  Eigen::Index first = sample_index(rng, wp.weights);
  centers.row(0) = wp.points.row(first);
  used[static_cast<std::size_t>(first)] = true;
  Vector d2 = (wp.points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index pick = sample_index(rng, (d2.array() * wp.weights.array()).matrix());
    if (pick < 0) {
      // Every point coincides with a center; reuse the first unused point, else any.
      pick = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!used[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
    }
    used[static_cast<std::size_t>(pick)] = true;
    centers.row(c) = wp.points.row(pick);
    d2 = d2.cwiseMin((wp.points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts,
                        KMeansTrace* trace) {
  const auto n = points.rows();
  if (k < 1) throw config_error("kmeans_fit: k must be >= 1");
  if (k > n) throw data_error("kmeans_fit: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (!points.allFinite()) throw data_error("kmeans_fit: non-finite input");

  const auto wp = fold_duplicates(points);
  const auto u = wp.points.rows();
  std::mt19937_64 rng(mix_seed(seed));
  ClusterModel model{kmeanspp(wp, k, rng)};

  std::vector<int> assign(static_cast<std::size_t>(u), -1);
  Vector d2(u);
  for (int iter = 0; iter < std::max(1, opts.max_iter); ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < u; ++i) {
      const int a = model.assign(wp.points.row(i));
      d2(i) = (model.centers.row(a) - wp.points.row(i)).squaredNorm();
      if (a != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = a;
        changed = true;
      }
    }
    if (trace) {
      trace->distortion.push_back(wp.weights.dot(d2));
      trace->iterations = iter + 1;
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    Vector mass = Vector::Zero(k);
    for (Eigen::Index i = 0; i < u; ++i) {
      const int a = assign[static_cast<std::size_t>(i)];
      sums.row(a) += wp.weights(i) * wp.points.row(i);
      mass(a) += wp.weights(i);
    }
    // Empty clusters take over the point currently farthest from its center.
    for (int c = 0; c < k; ++c) {
      if (mass(c) > 0) continue;
      Eigen::Index far = -1;
      double far_d = 0.0;
      for (Eigen::Index i = 0; i < u; ++i) {
        const int a = assign[static_cast<std::size_t>(i)];
        if (d2(i) > far_d && mass(a) > wp.weights(i)) {
          far_d = d2(i);
          far = i;
        }
      }
      if (far < 0) continue;
      const int old = assign[static_cast<std::size_t>(far)];
      sums.row(old) -= wp.weights(far) * wp.points.row(far);
      mass(old) -= wp.weights(far);
      sums.row(c) = wp.weights(far) * wp.points.row(far);
      mass(c) = wp.weights(far);
      assign[static_cast<std::size_t>(far)] = c;
      d2(far) = 0.0;
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (!(mass(c) > 0)) continue;
      const Eigen::RowVectorXd next = sums.row(c) / mass(c);
      shift = std::max(shift, (next - model.centers.row(c)).norm());
      model.centers.row(c) = next;
    }
    if (opts.tol > 0 && shift <= opts.tol) {
      if (trace) {
        for (Eigen::Index i = 0; i < u; ++i)
          d2(i) = (model.centers.row(model.assign(wp.points.row(i))) - wp.points.row(i)).squaredNorm();
        trace->distortion.push_back(wp.weights.dot(d2));
      }
      break;
    }
  }
  if (hartigan_refine(wp, model) && trace) {
    for (Eigen::Index i = 0; i < u; ++i)
      d2(i) = (model.centers.row(model.assign(wp.points.row(i))) - wp.points.row(i)).squaredNorm();
    trace->distortion.push_back(wp.weights.dot(d2));
  }
  return model;
}

double kmeans_distortion(const ClusterModel& model, const Matrix& points) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += (model.centers.row(model.assign(points.row(i))) - points.row(i)).squaredNorm();
  return total;
}

double bic_score(const ClusterModel& model, const Matrix& points, std::optional<double> n_override) {
  if (points.cols() != model.dim())
    throw data_error("bic_score: dimension mismatch (" + std::to_string(points.cols()) + " vs " +
                     std::to_string(model.dim()) + ")");
  double dist = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    dist += (model.centers.row(model.assign(points.row(i))) - points.row(i)).norm();
  const double n = n_override.value_or(static_cast<double>(points.rows()));
  return dist + std::log(n) * static_cast<double>(points.cols()) * model.k();
}

KSelection select_k(const Matrix& points, int k_min, int k_max, std::uint64_t seed, const KMeansOptions& opts,
                    std::optional<double> n_override) {
  if (k_min < 1 || k_max < k_min) throw config_error("select_k: need 1 <= k_min <= k_max");
  if (k_max > points.rows()) throw data_error("select_k: k_max exceeds number of points");
  KSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    auto model = kmeans_fit(points, k, derive_seed(seed, 0x6b, static_cast<std::uint64_t>(k)), opts);
    const double b = bic_score(model, points, n_override);
    out.bic.push_back(b);
    if (b < best) {
      best = b;
      out.k_star = k;
      out.model = std::move(model);
    }
  }
  return out;
}

int SemanticModel::cluster_of(const std::string& word) const {
  auto idx = vocab.find(word);
  return idx ? word_cluster[static_cast<std::size_t>(*idx)] : -1;
}

Vector reward_to_cluster_vector(const TokenStream& stream, const ClusterModel& word_model, const EmbeddingTable& table) {
  Vector out = Vector::Zero(word_model.k());
  for (const auto& t : stream)
    if (auto row = table.find(t)) out(word_model.assign(table.vectors.row(*row))) += 1.0;
  return out;
}

Vector reward_to_cluster_vector(const TokenStream& stream, const SemanticModel& model) {
  Vector out = Vector::Zero(model.k1());
  for (const auto& t : stream)
    if (int c = model.cluster_of(t); c >= 0) out(c) += 1.0;
  return out;
}

namespace {

std::vector<int> cache_word_clusters(const ClusterModel& word_model, const EmbeddingTable& table) {
  std::vector<int> out(static_cast<std::size_t>(table.vectors.rows()));
  for (Eigen::Index r = 0; r < table.vectors.rows(); ++r) out[static_cast<std::size_t>(r)] = word_model.assign(table.vectors.row(r));
  return out;
}

}  // namespace

SemanticModel build_semantic_model(const Corpus& corpus, const EmbeddingTable& table, std::uint64_t seed,
                                   const SemanticOptions& opts, const StopWords& stopwords) {
  if (table.vectors.rows() == 0) throw data_error("build_semantic_model: empty embedding table");
  SemanticModel model;
  model.vocab = table.vocab;
  const int wmax = std::min<int>(opts.word_k_max, static_cast<int>(table.vectors.rows()));
  const int wmin = std::min(opts.word_k_min, wmax);
  model.word_model = select_k(table.vectors, wmin, wmax, derive_seed(seed, 0x77), opts.kmeans, opts.n_override).model;
  model.word_cluster = cache_word_clusters(model.word_model, table);

  std::vector<Vector> rows;
  for (const auto& p : corpus.projects())
    for (const auto& r : p.rewards) rows.push_back(reward_to_cluster_vector(tokenize(r.description, stopwords), model));
  if (rows.empty()) throw data_error("build_semantic_model: corpus has no rewards");
  Matrix reward_points(static_cast<Eigen::Index>(rows.size()), model.k1());
  for (std::size_t i = 0; i < rows.size(); ++i) reward_points.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  const int rmax = std::min<int>(opts.reward_k_max, static_cast<int>(reward_points.rows()));
  const int rmin = std::min(opts.reward_k_min, rmax);
  model.reward_model = select_k(reward_points, rmin, rmax, derive_seed(seed, 0x72), opts.kmeans, opts.n_override).model;
  return model;
}

std::vector<int> reward_clusters(const ProjectRecord& project, const SemanticModel& model, const StopWords& stopwords) {
  std::vector<int> out;
  for (const auto& r : project.rewards)
    out.push_back(model.reward_model.assign(reward_to_cluster_vector(tokenize(r.description, stopwords), model).transpose()));
  return out;
}

Vector project_semantic_features(const ProjectRecord& project, const SemanticModel& model, SemanticMode mode,
                                 const StopWords& stopwords) {
  Vector out = Vector::Zero(model.k2());
  const auto ids = reward_clusters(project, model, stopwords);
  for (std::size_t r = 0; r < ids.size(); ++r)
    out(ids[r]) += mode == SemanticMode::Backers ? static_cast<double>(project.rewards[r].backer_count) : 1.0;
  return out;
}

int major_cluster(const std::vector<int>& reward_cluster_ids, int k2) {
  std::vector<int> counts(static_cast<std::size_t>(k2), 0);
  for (int c : reward_cluster_ids) ++counts[static_cast<std::size_t>(c)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

DifficultyReport cluster_difficulty(const std::vector<int>& majors, const std::vector<bool>& on_time, int k2) {
  if (majors.size() != on_time.size()) throw data_error("cluster_difficulty: length mismatch");
  if (majors.empty()) throw data_error("cluster_difficulty: no labeled projects");
  const auto K = static_cast<std::size_t>(k2);
  DifficultyReport rep{std::vector<long>(K, 0), std::vector<long>(K, 0), std::vector<double>(K, 0.0),
                       std::vector<double>(K, kMissing)};
  long total_on = 0;
  for (std::size_t i = 0; i < majors.size(); ++i) {
    ++rep.projects[static_cast<std::size_t>(majors[i])];
    if (on_time[i]) {
      ++rep.on_time[static_cast<std::size_t>(majors[i])];
      ++total_on;
    }
  }
  const double n = static_cast<double>(majors.size());
  const double p_on = static_cast<double>(total_on) / n;
  for (std::size_t c = 0; c < K; ++c) {
    rep.prior[c] = static_cast<double>(rep.projects[c]) / n;
    if (rep.projects[c] == 0) continue;
    // P(on | M=c) = P(M=c | on) P(on) / P(M=c)
    const double likelihood = total_on > 0 ? static_cast<double>(rep.on_time[c]) / static_cast<double>(total_on) : 0.0;
    rep.p_on_time[c] = likelihood * p_on / rep.prior[c];
  }
  return rep;
}

DifficultyReport cluster_difficulty(const Corpus& corpus, const SemanticModel& model, const StopWords& stopwords) {
  std::vector<int> majors;
  std::vector<bool> on_time;
  for (const auto& p : corpus.projects()) {
    const auto* label = corpus.label_for(p.id);
    if (!label) continue;
    majors.push_back(major_cluster(reward_clusters(p, model, stopwords), model.k2()));
    on_time.push_back(label->status == DeliveryStatus::OnTime);
  }
  return cluster_difficulty(majors, on_time, model.k2());
}

namespace {

nlohmann::json centers_json(const ClusterModel& m) {
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < m.centers.rows(); ++r)
    for (Eigen::Index c = 0; c < m.centers.cols(); ++c) flat.push_back(m.centers(r, c));
  return {{"k", m.k()}, {"dim", m.dim()}, {"centers", flat}};
}

ClusterModel centers_from_json(const nlohmann::json& j) {
  const auto k = j.at("k").get<Eigen::Index>();
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto flat = j.at("centers").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != k * dim) throw data_error("semantic model: center array size mismatch");
  ClusterModel m{Matrix(k, dim)};
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) m.centers(r, c) = flat[static_cast<std::size_t>(r * dim + c)];
  return m;
}

}  // namespace

nlohmann::json to_json(const SemanticModel& model) {
  return {{"kind", "semantic_model"},
          {"version", 1},
          {"word_model", centers_json(model.word_model)},
          {"reward_model", centers_json(model.reward_model)}};
}

SemanticModel semantic_model_from_json(const nlohmann::json& doc, const EmbeddingTable& table) {
  try {
    if (doc.at("kind") != "semantic_model" || doc.at("version") != 1)
      throw data_error("semantic model: unsupported document kind/version");
    SemanticModel m;
    m.word_model = centers_from_json(doc.at("word_model"));
    m.reward_model = centers_from_json(doc.at("reward_model"));
    if (m.word_model.dim() != table.dim()) throw data_error("semantic model: embedding dimension mismatch");
    if (m.reward_model.dim() != m.word_model.k()) throw data_error("semantic model: reward model dimension != K1");
    m.vocab = table.vocab;
    m.word_cluster = cache_word_clusters(m.word_model, table);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("semantic model: ") + e.what());
  }
}

}  // namespace fulfillkit
