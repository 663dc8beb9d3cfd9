#include "ragpoison/embedder.hpp"

#include <stdexcept>

#include "ragpoison/hash.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

MockHashEmbedder::MockHashEmbedder(std::size_t dim, std::string salt)
    : dim_(dim), salt_(std::move(salt)) {
  if (dim_ == 0) throw std::invalid_argument("embedder dimension must be positive");
}

std::string MockHashEmbedder::id() const {
  return "mock_hash:" + salt_ + ":" + std::to_string(dim_);
}

std::size_t MockHashEmbedder::bucket(std::string_view token) const {
  std::string key = salt_;
  key.push_back('\x1f');
  key.append(token);
  return static_cast<std::size_t>(fnv1a64(key) % dim_);
}

Embedding MockHashEmbedder::embed(std::string_view text) const {
  const auto tokens = text::normalize_tokens(text);
  if (tokens.empty()) throw std::domain_error("cannot embed empty text");
  Embedding v = Embedding::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& t : tokens) v[static_cast<Eigen::Index>(bucket(t))] += 1.0f;
  v.normalize();
  return v;
}

}  // namespace ragpoison
