#ifndef RAGPOISON_HTTP_BACKEND_HPP_
#define RAGPOISON_HTTP_BACKEND_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragpoison/embedder.hpp"
#include "ragpoison/models.hpp"

namespace ragpoison {

// Base URL split into origin ("http://host:port") and path prefix ("/v1").
struct HttpEndpoint {
  std::string origin;
  std::string prefix;
  std::string api_key;  // sent as "Authorization: Bearer ..." when non-empty
  std::chrono::seconds timeout{60};

  // A URL without a path gets default_prefix.
  static HttpEndpoint parse(std::string_view base_url, std::string api_key = {},
                            std::string_view default_prefix = "/v1");
  std::string url(std::string_view path) const { return origin + prefix + std::string(path); }

  // POST a JSON body to prefix + path and return the parsed response. Throws
  // BackendError on transport failure, non-2xx status or non-JSON body.
  nlohmann::json post(std::string_view path, const nlohmann::json& body) const;
  nlohmann::json get(std::string_view path) const;
};

enum class LikelihoodNormalization {
  mean,     // exp(mean token log-probability)
  product,  // exp(sum of token log-probabilities)
};

std::string_view to_string(LikelihoodNormalization n);
LikelihoodNormalization likelihood_normalization_from_string(std::string_view s);

// Attacker/reader over an OpenAI-compatible completions endpoint.
//
// generate:   POST {prefix}/completions {model, prompt, max_tokens, logprobs: k,
//             temperature: 0, seed} and read choices[0].logprobs.{tokens,
//             token_logprobs, top_logprobs}.
// likelihood: POST {prefix}/completions {model, prompt: reader_prompt + " " + answer,
//             max_tokens: 0, echo: true, logprobs: 0, temperature: 0} and
//             aggregate token_logprobs of the tokens whose text_offset falls in
//             the answer.
// answer:     POST {prefix}/completions {model, prompt: reader_prompt,
//             max_tokens: 32, temperature: 0, seed: 0}; first line of the text.
// ready:      GET {prefix}/models.
class HttpAttackerModel final : public AttackerModel {
 public:
  HttpAttackerModel(HttpEndpoint endpoint, std::string model_id, std::size_t top_k = kDefaultTopK,
                    LikelihoodNormalization normalization = LikelihoodNormalization::mean);

  std::string id() const override { return "http:" + model_id_; }
  std::size_t top_k() const override { return top_k_; }
  RawGeneration generate(std::string_view prompt, std::size_t max_tokens,
                         std::uint64_t seed) const override;
  double answer_likelihood(std::string_view question, std::string_view passage,
                           std::string_view answer) const override;
  std::string answer(std::string_view question,
                     std::span<const std::string> passages) const override;
  void check_ready() const override;

 private:
  HttpEndpoint endpoint_;
  std::string model_id_;
  std::size_t top_k_;
  LikelihoodNormalization normalization_;
};

// Embedder over POST {prefix}/embeddings {model, input} -> {data: [{embedding}]}.
// Vectors are re-normalized to unit length; a dimension other than dim() is a
// BackendError.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(HttpEndpoint endpoint, std::string model_id, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "http:" + model_id_ + ":" + std::to_string(dim_); }
  Embedding embed(std::string_view text) const override;
  void check_ready() const;

 private:
  HttpEndpoint endpoint_;
  std::string model_id_;
  std::size_t dim_;
};

// Embedder over the sidecar: POST {prefix}/embed {"texts": [text]} ->
// {"vectors": [[float]], "dim": int}. Health is GET {prefix}/healthz.
class SidecarEmbedder final : public Embedder {
 public:
  SidecarEmbedder(HttpEndpoint endpoint, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "sidecar:" + std::to_string(dim_); }
  Embedding embed(std::string_view text) const override;
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;
  void check_ready() const;

 private:
  HttpEndpoint endpoint_;
  std::size_t dim_;
};

}  // namespace ragpoison

#endif  // RAGPOISON_HTTP_BACKEND_HPP_
