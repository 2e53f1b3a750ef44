#include "fulfillkit/embeddings.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

namespace fulfillkit {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (!index_.emplace(words_[i], static_cast<Eigen::Index>(i)).second)
      throw data_error("vocabulary: duplicate word '" + words_[i] + "'");
}

std::optional<Eigen::Index> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CoocMatrix build_cooccurrence(const std::vector<TokenStream>& streams, int window, int min_count) {
  if (window < 1) throw config_error("build_cooccurrence: window must be >= 1");
  if (min_count < 1) throw config_error("build_cooccurrence: min_count must be >= 1");
  std::map<std::string, long> freq;
  for (const auto& s : streams)
    for (const auto& t : s) ++freq[t];
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [w, f] : freq)
    if (f >= min_count) kept.emplace_back(w, f);
  if (kept.empty()) throw data_error("build_cooccurrence: empty vocabulary after min_count filtering");
  // Most frequent first; ties alphabetical.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [w, f] : kept) words.push_back(w);

  CoocMatrix out{Vocabulary(std::move(words)), {}};
  const auto V = out.vocab.size();
  std::map<std::pair<Eigen::Index, Eigen::Index>, double> acc;
  std::vector<Eigen::Index> ids;
  for (const auto& s : streams) {
    ids.clear();
    for (const auto& t : s)
      if (auto id = out.vocab.find(t)) ids.push_back(*id);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t d = 1; d <= static_cast<std::size_t>(window) && i + d < ids.size(); ++d) {
        const double w = 1.0 / static_cast<double>(d);
        acc[{ids[i], ids[i + d]}] += w;
        acc[{ids[i + d], ids[i]}] += w;
      }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(acc.size());
  for (const auto& [ij, v] : acc) triplets.emplace_back(ij.first, ij.second, v);
  out.counts.resize(V, V);
  out.counts.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

namespace {

struct Entry {
  Eigen::Index i, j;
  double log_x, weight;
};

}  // namespace

EmbeddingTable train_embeddings(const CoocMatrix& cooc, const GloveParams& params, std::uint64_t seed,
                                GloveTrace* trace) {
  const auto V = cooc.vocab.size();
  if (V == 0) throw data_error("train_embeddings: empty co-occurrence matrix");
  if (params.dim < 1 || params.iters < 0) throw config_error("train_embeddings: invalid dim/iters");
  const int d = params.dim;

  std::vector<Entry> entries;
  for (int k = 0; k < cooc.counts.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(cooc.counts, k); it; ++it)
      if (it.value() > 0)
        entries.push_back({it.row(), it.col(), std::log(it.value()),
                           std::min(1.0, std::pow(it.value() / params.x_max, params.alpha))});

  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> init(-0.5, 0.5);
  Matrix W(V, d), C(V, d);
  Vector bw(V), bc(V);
  for (Eigen::Index r = 0; r < V; ++r) {
    for (int c = 0; c < d; ++c) W(r, c) = init(rng) / d;
    for (int c = 0; c < d; ++c) C(r, c) = init(rng) / d;
    bw(r) = init(rng) / d;
    bc(r) = init(rng) / d;
  }
  Matrix gW = Matrix::Ones(V, d), gC = Matrix::Ones(V, d);
  Vector gbw = Vector::Ones(V), gbc = Vector::Ones(V);

  auto objective = [&] {
    double J = 0.0;
    for (const auto& e : entries) {
      const double diff = W.row(e.i).dot(C.row(e.j)) + bw(e.i) + bc(e.j) - e.log_x;
      J += e.weight * diff * diff;
    }
    return J;
  };

  if (trace) trace->objective.push_back(objective());
  const double lr = params.learning_rate;
  Eigen::RowVectorXd tmp(d);
  for (int iter = 0; iter < params.iters; ++iter) {
    std::shuffle(entries.begin(), entries.end(), rng);
    for (const auto& e : entries) {
      const double diff = W.row(e.i).dot(C.row(e.j)) + bw(e.i) + bc(e.j) - e.log_x;
      const double fdiff = e.weight * diff;
      if (!std::isfinite(fdiff))
        throw numeric_error("train_embeddings: non-finite loss at iteration " + std::to_string(iter + 1));
      for (int c = 0; c < d; ++c) {
        const double gw = fdiff * C(e.j, c);
        const double gc = fdiff * W(e.i, c);
        W(e.i, c) -= lr * gw / std::sqrt(gW(e.i, c));
        C(e.j, c) -= lr * gc / std::sqrt(gC(e.j, c));
        gW(e.i, c) += gw * gw;
        gC(e.j, c) += gc * gc;
      }
      bw(e.i) -= lr * fdiff / std::sqrt(gbw(e.i));
      bc(e.j) -= lr * fdiff / std::sqrt(gbc(e.j));
      gbw(e.i) += fdiff * fdiff;
      gbc(e.j) += fdiff * fdiff;
    }
    if (trace || iter + 1 == params.iters) {
      const double J = objective();
      if (!std::isfinite(J))
        throw numeric_error("train_embeddings: non-finite loss at iteration " + std::to_string(iter + 1));
      if (trace) trace->objective.push_back(J);
    }
  }
  return {cooc.vocab, W + C};
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open embeddings " + path.string());
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw data_error(path.filename().string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] != '#') break;
  }
  long n = 0, dim = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> n >> dim) || n < 0 || dim < 1) fail("expected '<vocab_size> <dim>' header");
  }
  std::vector<std::string> words;
  Matrix vectors(n, dim);
  for (long r = 0; r < n; ++r) {
    if (!std::getline(in, line)) fail("expected " + std::to_string(n) + " rows, found " + std::to_string(r));
    ++lineno;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vals;
    for (std::string tok; ss >> tok;) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) fail("non-numeric field '" + tok + "'");
      if (!std::isfinite(v)) fail("non-finite value");
      vals.push_back(v);
    }
    if (static_cast<long>(vals.size()) != dim)
      fail("ragged row for '" + word + "': " + std::to_string(vals.size()) + " values, expected " + std::to_string(dim));
    for (long c = 0; c < dim; ++c) vectors(r, c) = vals[static_cast<std::size_t>(c)];
    words.push_back(word);
  }
  return {Vocabulary(std::move(words)), std::move(vectors)};
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  if (!header.empty()) out << "# " << header << '\n';
  out << table.vocab.size() << ' ' << table.dim() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < table.vocab.size(); ++r) {
    out << table.vocab.words()[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < table.dim(); ++c) out << ' ' << table.vectors(r, c);
    out << '\n';
  }
}

double cosine_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace fulfillkit
