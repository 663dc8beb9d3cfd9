#include "ragpoison/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ragpoison/error.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

void Bm25Params::validate() const {
  if (!(k1 > 0.0)) throw std::invalid_argument("bm25: k1 must be positive");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("bm25: b must lie in [0, 1]");
}

Bm25Stats::Bm25Stats(std::span<const std::vector<std::string>> docs) : doc_count_(docs.size()) {
  std::size_t total = 0;
  for (const auto& d : docs) {
    total += d.size();
    std::vector<std::string> uniq(d.begin(), d.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++df_[t];
  }
  avg_doc_len_ = doc_count_ ? static_cast<double>(total) / static_cast<double>(doc_count_) : 0.0;
}

Bm25Stats Bm25Stats::from_kb(const KnowledgeBase& kb) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(kb.size());
  for (const auto& p : kb.passages()) docs.push_back(text::normalize_tokens(p.text));
  return Bm25Stats(docs);
}

std::size_t Bm25Stats::doc_freq(const std::string& term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

double Bm25Stats::idf(const std::string& term) const {
  const double n = static_cast<double>(doc_count_);
  const double df = static_cast<double>(doc_freq(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(std::span<const std::string> query, std::span<const std::string> doc,
                  const Bm25Stats& stats, const Bm25Params& params) {
  if (query.empty()) throw std::domain_error("bm25_score: empty query");
  std::unordered_map<std::string_view, std::size_t> tf;
  for (const auto& t : doc) ++tf[t];
  const double len = static_cast<double>(doc.size());
  const double avg = stats.avg_doc_len() > 0.0 ? stats.avg_doc_len() : std::max(len, 1.0);
  double score = 0.0;
  for (const auto& term : query) {
    auto it = tf.find(term);
    if (it == tf.end()) continue;
    const double f = static_cast<double>(it->second);
    const double norm = params.k1 * (1.0 - params.b + params.b * len / avg);
    score += stats.idf(term) * f * (params.k1 + 1.0) / (f + norm);
  }
  return score;
}

double rouge2_score(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < 2 || b.size() < 2) return 0.0;
  std::map<std::pair<std::string_view, std::string_view>, std::size_t> grams;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) ++grams[{a[i], a[i + 1]}];
  std::size_t overlap = 0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    auto it = grams.find({b[i], b[i + 1]});
    if (it != grams.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(b.size() - 1);
  const double recall = static_cast<double>(overlap) / static_cast<double>(a.size() - 1);
  return 2.0 * precision * recall / (precision + recall);
}

std::string_view to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::retriever_cosine: return "retriever_cosine";
    case SimilarityKind::proxy_embedding_cosine: return "proxy_embedding_cosine";
    case SimilarityKind::bm25: return "bm25";
    case SimilarityKind::rouge2: return "rouge2";
  }
  return "unknown";
}

SimilarityKind similarity_kind_from_string(std::string_view s) {
  if (s == "retriever_cosine") return SimilarityKind::retriever_cosine;
  if (s == "proxy_embedding_cosine" || s == "proxy_cosine") return SimilarityKind::proxy_embedding_cosine;
  if (s == "bm25") return SimilarityKind::bm25;
  if (s == "rouge2") return SimilarityKind::rouge2;
  throw ConfigError("unknown similarity kind \"" + std::string(s) + "\"");
}

SimilarityBackend SimilarityBackend::retriever_cosine(std::shared_ptr<const Embedder> embedder) {
  if (!embedder) throw std::invalid_argument("retriever_cosine needs an embedder");
  SimilarityBackend b;
  b.kind_ = SimilarityKind::retriever_cosine;
  b.embedder_ = std::move(embedder);
  return b;
}

SimilarityBackend SimilarityBackend::proxy_cosine(std::shared_ptr<const Embedder> embedder) {
  if (!embedder) throw std::invalid_argument("proxy_cosine needs an embedder");
  SimilarityBackend b;
  b.kind_ = SimilarityKind::proxy_embedding_cosine;
  b.embedder_ = std::move(embedder);
  return b;
}

SimilarityBackend SimilarityBackend::bm25(std::shared_ptr<const Bm25Stats> stats, Bm25Params params) {
  if (!stats) throw std::invalid_argument("bm25 needs corpus statistics");
  params.validate();
  SimilarityBackend b;
  b.kind_ = SimilarityKind::bm25;
  b.stats_ = std::move(stats);
  b.params_ = params;
  return b;
}

SimilarityBackend SimilarityBackend::rouge2() {
  SimilarityBackend b;
  b.kind_ = SimilarityKind::rouge2;
  return b;
}

std::string SimilarityBackend::describe() const {
  std::string out(to_string(kind_));
  if (embedder_) out += "(" + embedder_->id() + ")";
  if (kind_ == SimilarityKind::bm25)
    out += "(k1=" + std::to_string(params_.k1) + ",b=" + std::to_string(params_.b) + ")";
  return out;
}

PreparedQuery SimilarityBackend::prepare(std::string_view query) const {
  PreparedQuery q;
  q.backend_ = this;
  if (embedder_) {
    q.query_embedding_ = embedder_->embed(query);
  } else {
    q.query_tokens_ = text::normalize_tokens(query);
  }
  return q;
}

double PreparedQuery::score(std::string_view passage_text) const {
  const SimilarityBackend& b = *backend_;
  switch (b.kind_) {
    case SimilarityKind::retriever_cosine:
    case SimilarityKind::proxy_embedding_cosine: {
      const Embedding e = b.embedder_->embed(passage_text);
      return static_cast<double>(cosine_similarity(query_embedding_, e));
    }
    case SimilarityKind::bm25: {
      const auto doc = text::normalize_tokens(passage_text);
      return bm25_score(query_tokens_, doc, *b.stats_, b.params_);
    }
    case SimilarityKind::rouge2: {
      const auto doc = text::normalize_tokens(passage_text);
      return rouge2_score(query_tokens_, doc);
    }
  }
  return 0.0;
}

double PreparedQuery::score(const Passage& passage) const {
  if (backend_->kind_ == SimilarityKind::retriever_cosine && passage.embedding &&
      passage.embedding->size() == query_embedding_.size()) {
    return static_cast<double>(cosine_similarity(query_embedding_, *passage.embedding));
  }
  return score(passage.text);
}

std::vector<RetrievedPassage> retrieve_top_m(const KnowledgeBase& kb, std::string_view query,
                                             const SimilarityBackend& backend, std::size_t m) {
  if (kb.empty() || m == 0) return {};
  std::vector<double> scores(kb.size());
  const PreparedQuery prepared = backend.prepare(query);
  if (backend.kind() == SimilarityKind::retriever_cosine && !kb.fully_embedded())
    throw ValidationError("retrieval needs an embedded knowledge base");
  for (std::size_t i = 0; i < kb.size(); ++i) scores[i] = prepared.score(kb[i]);

  std::vector<std::size_t> order(kb.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(m, kb.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  std::vector<RetrievedPassage> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({order[i], scores[order[i]]});
  return out;
}

}  // namespace ragpoison
