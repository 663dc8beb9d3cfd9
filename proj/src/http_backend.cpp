#include "ragpoison/http_backend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <httplib.h>

#include "ragpoison/error.hpp"
#include "ragpoison/hash.hpp"
#include "ragpoison/prompt.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

using nlohmann::json;

namespace {

httplib::Client make_client(const HttpEndpoint& ep) {
  httplib::Client cli(ep.origin);
  cli.set_connection_timeout(ep.timeout);
  cli.set_read_timeout(ep.timeout);
  cli.set_write_timeout(ep.timeout);
  if (!ep.api_key.empty()) cli.set_bearer_token_auth(ep.api_key);
  return cli;
}

json parse_response(const httplib::Result& res, const std::string& url) {
  if (!res) throw BackendError("request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw BackendError("request to " + url + " returned HTTP " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 200));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw BackendError("response from " + url + " is not JSON: " + e.what());
  }
}

const json& completion_logprobs(const json& response, const char* capability) {
  const json* choice = nullptr;
  if (response.contains("choices") && response["choices"].is_array() && !response["choices"].empty())
    choice = &response["choices"][0];
  if (!choice) throw BackendError("completion response has no choices");
  if (!choice->contains("logprobs") || (*choice)["logprobs"].is_null())
    throw BackendError(std::string("completion response lacks logprobs; the endpoint must support ") +
                       capability);
  return (*choice)["logprobs"];
}

}  // namespace

HttpEndpoint HttpEndpoint::parse(std::string_view base_url, std::string api_key,
                                 std::string_view default_prefix) {
  HttpEndpoint ep;
  ep.api_key = std::move(api_key);
  std::string url(text::trim(base_url));
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) {
    ep.origin = url;
    ep.prefix = std::string(default_prefix);
  } else {
    ep.origin = url.substr(0, path);
    ep.prefix = url.substr(path);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  }
  return ep;
}

json HttpEndpoint::post(std::string_view path, const json& body) const {
  auto cli = make_client(*this);
  const std::string p = prefix + std::string(path);
  return parse_response(cli.Post(p, body.dump(), "application/json"), url(path));
}

json HttpEndpoint::get(std::string_view path) const {
  auto cli = make_client(*this);
  return parse_response(cli.Get(prefix + std::string(path)), url(path));
}

std::string_view to_string(LikelihoodNormalization n) {
  return n == LikelihoodNormalization::mean ? "mean" : "product";
}

LikelihoodNormalization likelihood_normalization_from_string(std::string_view s) {
  if (s == "mean") return LikelihoodNormalization::mean;
  if (s == "product") return LikelihoodNormalization::product;
  throw ConfigError("unknown likelihood normalization \"" + std::string(s) + "\"");
}

HttpAttackerModel::HttpAttackerModel(HttpEndpoint endpoint, std::string model_id, std::size_t top_k,
                                     LikelihoodNormalization normalization)
    : endpoint_(std::move(endpoint)),
      model_id_(std::move(model_id)),
      top_k_(top_k),
      normalization_(normalization) {
  if (model_id_.empty()) throw ConfigError("http attacker needs a model id");
  if (top_k_ == 0) throw ConfigError("top_k must be >= 1");
}

RawGeneration HttpAttackerModel::generate(std::string_view prompt, std::size_t max_tokens,
                                          std::uint64_t seed) const {
  const json body = {{"model", model_id_},     {"prompt", prompt},  {"max_tokens", max_tokens},
                     {"logprobs", top_k_},     {"temperature", 0},  {"seed", seed}};
  const json response = endpoint_.post("/completions", body);
  const json& lp = completion_logprobs(response, "top-k log-probabilities (logprobs)");
  if (!lp.contains("tokens") || !lp.contains("top_logprobs") || !lp["top_logprobs"].is_array())
    throw BackendError("completion logprobs lack tokens/top_logprobs");
  const json& tokens = lp["tokens"];
  const json& tops = lp["top_logprobs"];
  const json* chosen = lp.contains("token_logprobs") ? &lp["token_logprobs"] : nullptr;
  if (tokens.size() != tops.size()) throw BackendError("tokens and top_logprobs differ in length");

  RawGeneration out;
  out.trace.prompt_fingerprint = fnv1a64(prompt);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const std::string tok = tokens[j].get<std::string>();
    std::vector<TokenAlternative> alts;
    if (tops[j].is_object()) {
      for (const auto& [t, v] : tops[j].items())
        if (v.is_number()) alts.push_back({t, v.get<double>()});
    }
    const bool has_emitted = std::any_of(alts.begin(), alts.end(),
                                         [&](const TokenAlternative& a) { return a.token == tok; });
    if (!has_emitted) {
      double s = alts.empty() ? 0.0 : alts.back().score;
      if (chosen && j < chosen->size() && (*chosen)[j].is_number()) s = (*chosen)[j].get<double>();
      alts.push_back({tok, s});
    }
    std::sort(alts.begin(), alts.end(), [](const TokenAlternative& a, const TokenAlternative& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.token < b.token;
    });
    if (alts.size() > top_k_) {
      // Keep the emitted token even when it ranks below the cut.
      auto it = std::find_if(alts.begin(), alts.end(), [&](const auto& a) { return a.token == tok; });
      if (static_cast<std::size_t>(it - alts.begin()) >= top_k_) {
        TokenAlternative emitted = *it;
        alts.resize(top_k_ - 1);
        alts.push_back(emitted);
      } else {
        alts.resize(top_k_);
      }
    }
    out.trace.tokens.push_back(tok);
    out.trace.alternatives.push_back(std::move(alts));
  }
  out.text = out.trace.concatenated();
  return out;
}

double HttpAttackerModel::answer_likelihood(std::string_view question, std::string_view passage,
                                            std::string_view answer) const {
  const std::string passages[] = {std::string(passage)};
  std::string prompt = build_reader_prompt(question, passages);
  prompt += " ";
  const std::size_t answer_start = prompt.size();
  prompt += answer;
  const json body = {{"model", model_id_}, {"prompt", prompt}, {"max_tokens", 0},
                     {"echo", true},       {"logprobs", 0},    {"temperature", 0}};
  const json response = endpoint_.post("/completions", body);
  const json& lp = completion_logprobs(response, "teacher-forced scoring (echo with logprobs)");
  if (!lp.contains("token_logprobs") || !lp.contains("text_offset"))
    throw BackendError("echo response lacks token_logprobs/text_offset; teacher-forced scoring unsupported");
  const json& lps = lp["token_logprobs"];
  const json& offsets = lp["text_offset"];
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < offsets.size() && j < lps.size(); ++j) {
    const auto off = offsets[j].get<std::size_t>();
    if (off + 1 < answer_start || !lps[j].is_number()) continue;
    sum += lps[j].get<double>();
    ++count;
  }
  if (count == 0) throw BackendError("echo response covers no answer tokens");
  const double logp = normalization_ == LikelihoodNormalization::mean ? sum / static_cast<double>(count) : sum;
  return std::clamp(std::exp(logp), 0.0, 1.0);
}

std::string HttpAttackerModel::answer(std::string_view question,
                                      std::span<const std::string> passages) const {
  const json body = {{"model", model_id_},
                     {"prompt", build_reader_prompt(question, passages)},
                     {"max_tokens", 32},
                     {"temperature", 0},
                     {"seed", 0}};
  const json response = endpoint_.post("/completions", body);
  if (!response.contains("choices") || response["choices"].empty() ||
      !response["choices"][0].contains("text"))
    throw BackendError("completion response has no text");
  std::string out = response["choices"][0]["text"].get<std::string>();
  out = std::string(text::trim(out));
  if (auto nl = out.find('\n'); nl != std::string::npos) out.resize(nl);
  return std::string(text::trim(out));
}

void HttpAttackerModel::check_ready() const { endpoint_.get("/models"); }

HttpEmbedder::HttpEmbedder(HttpEndpoint endpoint, std::string model_id, std::size_t dim)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)), dim_(dim) {
  if (model_id_.empty()) throw ConfigError("http embedder needs a model id");
  if (dim_ == 0) throw ConfigError("http embedder needs a positive dim");
}

Embedding HttpEmbedder::embed(std::string_view text) const {
  if (text::trim(text).empty()) throw std::domain_error("cannot embed empty text");
  const json response = endpoint_.post("/embeddings", {{"model", model_id_}, {"input", text}});
  if (!response.contains("data") || !response["data"].is_array() || response["data"].empty() ||
      !response["data"][0].contains("embedding"))
    throw BackendError("embedding response has no data[0].embedding");
  const auto values = response["data"][0]["embedding"].get<std::vector<float>>();
  if (values.size() != dim_)
    throw BackendError("embedding endpoint returned dim " + std::to_string(values.size()) +
                       ", expected " + std::to_string(dim_));
  Embedding v = Eigen::Map<const Embedding>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (v.norm() == 0.0f) throw BackendError("embedding endpoint returned a zero vector");
  v.normalize();
  return v;
}

void HttpEmbedder::check_ready() const { endpoint_.get("/models"); }

SidecarEmbedder::SidecarEmbedder(HttpEndpoint endpoint, std::size_t dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {
  if (dim_ == 0) throw ConfigError("sidecar embedder needs a positive dim");
}

std::vector<Embedding> SidecarEmbedder::embed_batch(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  for (const auto& t : texts)
    if (text::trim(t).empty()) throw std::domain_error("cannot embed empty text");
  const json response = endpoint_.post("/embed", {{"texts", texts}});
  if (!response.contains("vectors") || !response["vectors"].is_array())
    throw BackendError("embed response has no vectors array");
  if (response.contains("dim") && response["dim"].get<std::size_t>() != dim_)
    throw BackendError("sidecar reports dim " + std::to_string(response["dim"].get<std::size_t>()) +
                       ", expected " + std::to_string(dim_));
  const json& vectors = response["vectors"];
  if (vectors.size() != texts.size())
    throw BackendError("embed response has " + std::to_string(vectors.size()) + " vectors for " +
                       std::to_string(texts.size()) + " texts");
  std::vector<Embedding> out;
  for (const auto& row : vectors) {
    std::vector<float> values;
    try {
      values = row.get<std::vector<float>>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed embedding vector: ") + e.what());
    }
    if (values.size() != dim_)
      throw BackendError("sidecar returned dim " + std::to_string(values.size()) + ", expected " +
                         std::to_string(dim_));
    Embedding v = Eigen::Map<const Embedding>(values.data(), static_cast<Eigen::Index>(values.size()));
    if (v.norm() == 0.0f) throw BackendError("sidecar returned a zero vector");
    v.normalize();
    out.push_back(std::move(v));
  }
  return out;
}

Embedding SidecarEmbedder::embed(std::string_view text) const {
  const std::string one[] = {std::string(text)};
  return embed_batch(one).front();
}

void SidecarEmbedder::check_ready() const { endpoint_.get("/healthz"); }

}  // namespace ragpoison
