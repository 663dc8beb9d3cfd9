#ifndef RAGPOISON_EMBEDDER_HPP_
#define RAGPOISON_EMBEDDER_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ragpoison {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Stored passage embeddings are float32 on disk and in memory.
using Embedding = Vector<float>;

// Text encoder producing unit-norm vectors of a fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dim() const = 0;

  // Identifies the encoder in transcripts and store headers.
  virtual std::string id() const = 0;

  // Throws std::domain_error when text normalizes to nothing and
  // BackendError when a remote encoder fails.
  virtual Embedding embed(std::string_view text) const = 0;
};

// Hashed bag-of-words encoder: every normalized token adds 1 to the
// coordinate fnv1a64(salt + "\x1f" + token) mod dim, then the vector is
// scaled to unit length. Order-insensitive and fully deterministic.
class MockHashEmbedder final : public Embedder {
 public:
  explicit MockHashEmbedder(std::size_t dim = 64, std::string salt = "retriever");

  std::size_t dim() const override { return dim_; }
  std::string id() const override;
  Embedding embed(std::string_view text) const override;

  // Coordinate a normalized token lands on.
  std::size_t bucket(std::string_view token) const;

 private:
  std::size_t dim_;
  std::string salt_;
};

}  // namespace ragpoison

#endif  // RAGPOISON_EMBEDDER_HPP_
