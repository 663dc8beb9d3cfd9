#ifndef RAGPOISON_RETRIEVAL_HPP_
#define RAGPOISON_RETRIEVAL_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ragpoison/corpus.hpp"
#include "ragpoison/embedder.hpp"

namespace ragpoison {

// dot(u, v) / (|u| |v|). Symmetric and invariant under positive scaling of
// either argument. Throws std::domain_error on a dimension mismatch or a zero
// vector.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size()) throw std::domain_error("cosine_similarity: dimension mismatch");
  const Scalar nu = u.norm();
  const Scalar nv = v.template cast<Scalar>().norm();
  if (nu == Scalar(0) || nv == Scalar(0)) throw std::domain_error("cosine_similarity: zero vector");
  return u.dot(v.template cast<Scalar>()) / (nu * nv);
}

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  // Throws std::invalid_argument unless k1 > 0 and 0 <= b <= 1.
  void validate() const;
};

// Document frequencies and average length over a tokenized collection.
class Bm25Stats {
 public:
  Bm25Stats() = default;
  explicit Bm25Stats(std::span<const std::vector<std::string>> docs);

  // Statistics over kb passage texts under text::normalize_tokens.
  static Bm25Stats from_kb(const KnowledgeBase& kb);

  std::size_t doc_count() const { return doc_count_; }
  double avg_doc_len() const { return avg_doc_len_; }
  std::size_t doc_freq(const std::string& term) const;

  // ln(1 + (N - df + 0.5) / (df + 0.5)); positive for every df <= N.
  double idf(const std::string& term) const;

 private:
  std::size_t doc_count_ = 0;
  double avg_doc_len_ = 0.0;
  std::unordered_map<std::string, std::size_t> df_;
};

// Okapi BM25 summed over query tokens (repeats count). Zero when no query
// token occurs in doc. Throws std::domain_error on an empty query.
double bm25_score(std::span<const std::string> query, std::span<const std::string> doc,
                  const Bm25Stats& stats, const Bm25Params& params = {});

// Bigram-overlap F1 with clipped counts; 0 when either side has < 2 tokens.
double rouge2_score(std::span<const std::string> a, std::span<const std::string> b);

enum class SimilarityKind { retriever_cosine, proxy_embedding_cosine, bm25, rouge2 };

std::string_view to_string(SimilarityKind k);
SimilarityKind similarity_kind_from_string(std::string_view s);

class SimilarityBackend;

// A query bound to a backend, with the query-side work done once.
class PreparedQuery {
 public:
  double score(std::string_view passage_text) const;
  // Uses the stored embedding for retriever_cosine when the passage has one.
  double score(const Passage& passage) const;

 private:
  friend class SimilarityBackend;
  const SimilarityBackend* backend_ = nullptr;
  Embedding query_embedding_;
  std::vector<std::string> query_tokens_;
};

// Scoring function s(q, d) for one attack run: the retriever's own encoder,
// a substitute encoder, BM25, or ROUGE-2.
class SimilarityBackend {
 public:
  static SimilarityBackend retriever_cosine(std::shared_ptr<const Embedder> embedder);
  static SimilarityBackend proxy_cosine(std::shared_ptr<const Embedder> embedder);
  static SimilarityBackend bm25(std::shared_ptr<const Bm25Stats> stats, Bm25Params params = {});
  static SimilarityBackend rouge2();

  SimilarityKind kind() const { return kind_; }
  const Embedder* embedder() const { return embedder_.get(); }
  const Bm25Params& bm25_params() const { return params_; }
  std::string describe() const;

  PreparedQuery prepare(std::string_view query) const;
  double score(std::string_view query, std::string_view passage) const {
    return prepare(query).score(passage);
  }

 private:
  friend class PreparedQuery;
  SimilarityBackend() = default;

  SimilarityKind kind_ = SimilarityKind::rouge2;
  std::shared_ptr<const Embedder> embedder_;
  std::shared_ptr<const Bm25Stats> stats_;
  Bm25Params params_;
};

struct RetrievedPassage {
  std::size_t index;  // position in the knowledge base
  double score;
};

// Exactly min(m, |kb|) passages, score descending, ties to the earlier
// passage. An empty kb gives an empty result.
std::vector<RetrievedPassage> retrieve_top_m(const KnowledgeBase& kb, std::string_view query,
                                             const SimilarityBackend& backend, std::size_t m);

}  // namespace ragpoison

#endif  // RAGPOISON_RETRIEVAL_HPP_
