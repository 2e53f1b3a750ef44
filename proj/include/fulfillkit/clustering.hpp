#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fulfillkit/common.hpp"
#include "fulfillkit/corpus.hpp"
#include "fulfillkit/embeddings.hpp"
#include "fulfillkit/text.hpp"

namespace fulfillkit {

// k centers in m dimensions; points belong to the nearest center (ties -> lowest index).
struct ClusterModel {
  Matrix centers;  // k x m

  int k() const { return static_cast<int>(centers.rows()); }
  Eigen::Index dim() const { return centers.cols(); }
  int assign(const Eigen::Ref<const Eigen::RowVectorXd>& point) const;
  IndexVector assign_all(const Matrix& points) const;
};

struct KMeansOptions {
  int max_iter = 100;
  double tol = 0.0;  // stop early once no center moves farther than tol
};

struct KMeansTrace {
  std::vector<double> distortion;  // squared-distance objective after each Lloyd step
  int iterations = 0;
};

// Lloyd iterations from k-means++ seeding, then single-point transfers while any lowers the
// distortion. Identical rows are folded into weights first, which leaves the objective unchanged.
ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts = {},
                        KMeansTrace* trace = nullptr);

// Sum of squared distances to the assigned center.
double kmeans_distortion(const ClusterModel& model, const Matrix& points);

// Sum of (unsquared) Euclidean distances to the nearest center plus log(n) * m * K.
// n defaults to the number of points.
double bic_score(const ClusterModel& model, const Matrix& points, std::optional<double> n_override = std::nullopt);

struct KSelection {
  int k_star = 1;
  ClusterModel model;
  std::vector<double> bic;  // indexed by k - k_min
};

// Fits every k in [k_min, k_max] with per-k derived seeds; argmin BIC, ties to smaller k.
KSelection select_k(const Matrix& points, int k_min, int k_max, std::uint64_t seed, const KMeansOptions& opts = {},
                    std::optional<double> n_override = std::nullopt);

struct SemanticOptions {
  int word_k_min = 1;
  int word_k_max = 100;
  int reward_k_min = 1;
  int reward_k_max = 30;
  KMeansOptions kmeans;
  std::optional<double> n_override;
};

struct SemanticModel {
  ClusterModel word_model;    // K1 clusters over embedding rows
  ClusterModel reward_model;  // K2 clusters over K1-dim word-cluster count vectors
  Vocabulary vocab;           // table vocabulary the word model was fitted on
  std::vector<int> word_cluster;  // per vocabulary row

  int k1() const { return word_model.k(); }
  int k2() const { return reward_model.k(); }
  // Cluster of a vocabulary word, or -1 when out of vocabulary.
  int cluster_of(const std::string& word) const;
};

// Component j counts tokens whose embedding lies nearest to word cluster j; OOV tokens ignored.
Vector reward_to_cluster_vector(const TokenStream& stream, const ClusterModel& word_model, const EmbeddingTable& table);
Vector reward_to_cluster_vector(const TokenStream& stream, const SemanticModel& model);

SemanticModel build_semantic_model(const Corpus& corpus, const EmbeddingTable& table, std::uint64_t seed,
                                   const SemanticOptions& opts, const StopWords& stopwords);

// Reward-cluster index of every reward of a project.
std::vector<int> reward_clusters(const ProjectRecord& project, const SemanticModel& model, const StopWords& stopwords);

enum class SemanticMode { Backers, RewardCount };

Vector project_semantic_features(const ProjectRecord& project, const SemanticModel& model, SemanticMode mode,
                                 const StopWords& stopwords);

// Reward cluster holding most of the project's rewards; ties -> lowest index.
int major_cluster(const std::vector<int>& reward_cluster_ids, int k2);

struct DifficultyReport {
  std::vector<long> projects;        // projects whose major cluster is c
  std::vector<long> on_time;         // of those, delivered on time
  std::vector<double> prior;         // P(c)
  std::vector<double> p_on_time;     // P(on time | M = c) via Bayes; NaN when undefined
};

// `majors[i]` is the major cluster of project i, `on_time[i]` its label.
DifficultyReport cluster_difficulty(const std::vector<int>& majors, const std::vector<bool>& on_time, int k2);
DifficultyReport cluster_difficulty(const Corpus& corpus, const SemanticModel& model, const StopWords& stopwords);

nlohmann::json to_json(const SemanticModel& model);
SemanticModel semantic_model_from_json(const nlohmann::json& doc, const EmbeddingTable& table);

}  // namespace fulfillkit
