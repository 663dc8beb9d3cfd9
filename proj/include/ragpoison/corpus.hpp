#ifndef RAGPOISON_CORPUS_HPP_
#define RAGPOISON_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragpoison/embedder.hpp"

namespace ragpoison {

inline constexpr std::size_t kDefaultMaxPassageLen = 128;
inline constexpr double kUnitNormTolerance = 1e-6;

enum class Provenance { benign, malicious };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct Passage {
  std::string id;
  std::string text;
  std::optional<std::string> title;
  std::optional<Embedding> embedding;
  Provenance provenance = Provenance::benign;
  // Set for malicious passages: the query they were crafted against.
  std::optional<std::string> parent_query_id;

  bool is_malicious() const { return provenance == Provenance::malicious; }
};

bool operator==(const Passage& a, const Passage& b);

struct QueryRecord {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
};

// The poisonable external database. Passages keep insertion order, which is
// also the retrieval tie-break order.
class KnowledgeBase {
 public:
  // dim == 0 means "fixed by the first embedded passage".
  explicit KnowledgeBase(std::size_t dim = 0) : dim_(dim) {}

  // Throws ValidationError on a duplicate id, a dimension mismatch, a
  // non-unit embedding, or a malicious passage without a parent query.
  void add(Passage p);

  std::span<const Passage> passages() const { return passages_; }
  const Passage& operator[](std::size_t i) const { return passages_[i]; }
  std::size_t size() const { return passages_.size(); }
  bool empty() const { return passages_.empty(); }
  std::size_t dim() const { return dim_; }

  const Passage* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  bool fully_embedded() const;
  std::size_t malicious_count() const;

  // One row per passage. Requires fully_embedded().
  Matrix<float> embedding_matrix() const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.dim_ == b.dim_ && a.passages_ == b.passages_;
  }

 private:
  std::size_t dim_;
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Corpus JSONL: {"id": str, "text": str, "title": optional str} per line.
// Texts longer than max_passage_len whitespace tokens are truncated (with a
// warning on std::clog). Blank lines are skipped.
KnowledgeBase load_corpus(const std::filesystem::path& path,
                          std::size_t max_passage_len = kDefaultMaxPassageLen);

// Queries JSONL: {"id": str, "question": str, "answers": [str, ...]}.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);

// Returns a copy where every passage carries embedder.embed(text). Passages
// that already hold an embedding of the right dimension are re-embedded too,
// so the result is identical either way. Any failure leaves nothing behind.
KnowledgeBase embed_corpus(const KnowledgeBase& kb, const Embedder& embedder);

// Appends malicious passages after the existing ones.
KnowledgeBase inject_passages(const KnowledgeBase& kb, std::span<const Passage> malicious);

// Store layout: passages.jsonl, embeddings.f32 (little-endian float32 rows for
// the embedded passages, in order) and header.json {dim, count, sha256, ...}.
void persist_store(const KnowledgeBase& kb, const std::filesystem::path& dir);
KnowledgeBase load_store(const std::filesystem::path& dir);

// Hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const unsigned char> bytes);

}  // namespace ragpoison

#endif  // RAGPOISON_CORPUS_HPP_
