#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "fulfillkit/common.hpp"
#include "fulfillkit/text.hpp"

namespace fulfillkit {

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::optional<Eigen::Index> find(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(words_.size()); }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

// Weighted co-occurrence counts; symmetric, zero entries not stored.
struct CoocMatrix {
  Vocabulary vocab;
  Eigen::SparseMatrix<double> counts;
};

// Pairs at distance d (1 <= d <= window) add 1/d to both X(i,j) and X(j,i).
// Tokens with corpus frequency below min_count are removed before counting.
CoocMatrix build_cooccurrence(const std::vector<TokenStream>& streams, int window, int min_count);

struct EmbeddingTable {
  Vocabulary vocab;
  Matrix vectors;  // one row per vocabulary word

  Eigen::Index dim() const { return vectors.cols(); }
  std::optional<Eigen::Index> find(const std::string& word) const { return vocab.find(word); }
};

struct GloveParams {
  int dim = 50;
  int iters = 20;
  double x_max = 100.0;
  double alpha = 0.75;
  double learning_rate = 0.05;
};

struct GloveTrace {
  std::vector<double> objective;  // objective before training, then after each pass
};

// Weighted least-squares factorization of log co-occurrence with per-coordinate adaptive
// (AdaGrad) steps; the output table holds main + context vectors summed.
EmbeddingTable train_embeddings(const CoocMatrix& cooc, const GloveParams& params, std::uint64_t seed,
                                GloveTrace* trace = nullptr);

// Vector text format: `<vocab_size> <dim>` then `word v1 ... vdim`. Leading '#' lines are provenance.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path, const std::string& header = {});

double cosine_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

}  // namespace fulfillkit
