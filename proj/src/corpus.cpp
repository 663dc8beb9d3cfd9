#include "ragpoison/corpus.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "ragpoison/error.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kStoreVersion = 1;

bool same_embedding(const std::optional<Embedding>& a, const std::optional<Embedding>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (a->size() != b->size()) return false;
  return std::memcmp(a->data(), b->data(), sizeof(float) * static_cast<std::size_t>(a->size())) == 0;
}

std::string truncate_words(const std::string& text, std::size_t max_len, bool* truncated) {
  auto words = text::split_whitespace(text);
  *truncated = words.size() > max_len;
  if (!*truncated) return text;
  words.resize(max_len);
  return text::join(words, " ");
}

const json& require_field(const json& obj, const char* key, const std::string& src,
                          std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(src, line, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& src,
                           std::size_t line) {
  const json& v = require_field(obj, key, src, line);
  if (!v.is_string()) throw ParseError(src, line, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  const std::string src = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(src, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(src, lineno, "expected a JSON object");
    fn(obj, src, lineno);
  }
}

void write_f32_le(std::ostream& out, float f) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                        static_cast<unsigned char>(bits >> 16),
                        static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

std::vector<unsigned char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomically(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StoreError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string_view to_string(Provenance p) {
  return p == Provenance::benign ? "benign" : "malicious";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "benign") return Provenance::benign;
  if (s == "malicious") return Provenance::malicious;
  throw ValidationError("unknown provenance \"" + std::string(s) + "\"");
}

bool operator==(const Passage& a, const Passage& b) {
  return a.id == b.id && a.text == b.text && a.title == b.title && a.provenance == b.provenance &&
         a.parent_query_id == b.parent_query_id && same_embedding(a.embedding, b.embedding);
}

void KnowledgeBase::add(Passage p) {
  if (p.id.empty()) throw ValidationError("passage id must be non-empty");
  if (index_.count(p.id)) throw ValidationError("duplicate passage id \"" + p.id + "\"");
  if (p.is_malicious() && !p.parent_query_id)
    throw ValidationError("malicious passage \"" + p.id + "\" has no parent query id");
  if (p.embedding) {
    const auto d = static_cast<std::size_t>(p.embedding->size());
    if (dim_ == 0) {
      if (d == 0) throw ValidationError("passage \"" + p.id + "\" has an empty embedding");
    } else if (d != dim_) {
      throw ValidationError("passage \"" + p.id + "\" has embedding dim " + std::to_string(d) +
                            ", store dim is " + std::to_string(dim_));
    }
    const double norm = p.embedding->cast<double>().norm();
    if (!(std::abs(norm - 1.0) <= kUnitNormTolerance))
      throw ValidationError("passage \"" + p.id + "\" embedding is not unit norm");
    dim_ = d;
  }
  index_.emplace(p.id, passages_.size());
  passages_.push_back(std::move(p));
}

const Passage* KnowledgeBase::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &passages_[it->second];
}

bool KnowledgeBase::fully_embedded() const {
  for (const auto& p : passages_)
    if (!p.embedding) return false;
  return true;
}

std::size_t KnowledgeBase::malicious_count() const {
  std::size_t n = 0;
  for (const auto& p : passages_) n += p.is_malicious() ? 1 : 0;
  return n;
}

Matrix<float> KnowledgeBase::embedding_matrix() const {
  Matrix<float> out(static_cast<Eigen::Index>(passages_.size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const auto& e = passages_[i].embedding;
    if (!e) throw ValidationError("passage \"" + passages_[i].id + "\" is not embedded");
    out.row(static_cast<Eigen::Index>(i)) = e->transpose();
  }
  return out;
}

KnowledgeBase load_corpus(const fs::path& path, std::size_t max_passage_len) {
  KnowledgeBase kb;
  std::unordered_map<std::string, std::size_t> first_line;
  for_each_json_line(path, [&](const json& obj, const std::string& src, std::size_t line) {
    Passage p;
    p.id = require_string(obj, "id", src, line);
    std::string raw = require_string(obj, "text", src, line);
    if (auto t = obj.find("title"); t != obj.end() && !t->is_null()) {
      if (!t->is_string()) throw ParseError(src, line, "field \"title\" must be a string");
      p.title = t->get<std::string>();
    }
    if (auto [it, inserted] = first_line.emplace(p.id, line); !inserted) {
      throw ValidationError(src + ":" + std::to_string(line) + ": duplicate passage id \"" + p.id +
                            "\" (first seen on line " + std::to_string(it->second) + ")");
    }
    bool truncated = false;
    p.text = truncate_words(raw, max_passage_len, &truncated);
    if (truncated) {
      std::clog << "warning: passage \"" << p.id << "\" truncated to " << max_passage_len
                << " tokens\n";
    }
    kb.add(std::move(p));
  });
  return kb;
}

std::vector<QueryRecord> load_queries(const fs::path& path) {
  std::vector<QueryRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_json_line(path, [&](const json& obj, const std::string& src, std::size_t line) {
    QueryRecord q;
    q.id = require_string(obj, "id", src, line);
    q.question = require_string(obj, "question", src, line);
    const json& answers = require_field(obj, "answers", src, line);
    if (!answers.is_array()) throw ParseError(src, line, "field \"answers\" must be an array");
    for (const auto& a : answers) {
      if (!a.is_string()) throw ParseError(src, line, "answers must be strings");
      q.gold_answers.push_back(a.get<std::string>());
    }
    if (text::trim(q.question).empty()) throw ValidationError(src + ":" + std::to_string(line) + ": empty question");
    if (q.gold_answers.empty()) throw ValidationError(src + ":" + std::to_string(line) + ": no gold answers");
    if (!seen.emplace(q.id, line).second)
      throw ValidationError(src + ":" + std::to_string(line) + ": duplicate query id \"" + q.id + "\"");
    out.push_back(std::move(q));
  });
  return out;
}

KnowledgeBase embed_corpus(const KnowledgeBase& kb, const Embedder& embedder) {
  std::vector<Embedding> vectors;
  vectors.reserve(kb.size());
  for (const auto& p : kb.passages()) {
    try {
      vectors.push_back(embedder.embed(p.text));
    } catch (const std::domain_error& e) {
      throw ValidationError("cannot embed passage \"" + p.id + "\": " + e.what());
    }
  }
  KnowledgeBase out(embedder.dim());
  for (std::size_t i = 0; i < kb.size(); ++i) {
    Passage p = kb[i];
    p.embedding = std::move(vectors[i]);
    out.add(std::move(p));
  }
  return out;
}

KnowledgeBase inject_passages(const KnowledgeBase& kb, std::span<const Passage> malicious) {
  KnowledgeBase out = kb;
  for (const auto& p : malicious) {
    if (!p.is_malicious())
      throw ValidationError("injected passage \"" + p.id + "\" is not flagged malicious");
    if (!p.embedding && kb.fully_embedded() && !kb.empty())
      throw ValidationError("injected passage \"" + p.id + "\" has no embedding");
    out.add(p);
  }
  return out;
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw StoreError("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

void persist_store(const KnowledgeBase& kb, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream passages;
  std::ostringstream block(std::ios::binary);
  json ids = json::array();
  std::size_t embedded = 0;
  for (const auto& p : kb.passages()) {
    json row = {{"id", p.id},
                {"text", p.text},
                {"provenance", to_string(p.provenance)},
                {"embedded", p.embedding.has_value()}};
    if (p.title) row["title"] = *p.title;
    if (p.parent_query_id) row["parent_query_id"] = *p.parent_query_id;
    passages << row.dump() << '\n';
    ids.push_back(p.id);
    if (p.embedding) {
      ++embedded;
      for (Eigen::Index i = 0; i < p.embedding->size(); ++i) write_f32_le(block, (*p.embedding)[i]);
    }
  }
  const std::string bytes = block.str();
  json header = {{"format", "ragpoison-store"},
                 {"version", kStoreVersion},
                 {"dim", kb.dim()},
                 {"count", kb.size()},
                 {"embedded_count", embedded},
                 {"ids", ids},
                 {"sha256", sha256_hex({reinterpret_cast<const unsigned char*>(bytes.data()),
                                        bytes.size()})}};
  write_file_atomically(dir / "embeddings.f32", bytes);
  write_file_atomically(dir / "passages.jsonl", passages.str());
  write_file_atomically(dir / "header.json", header.dump(2) + "\n");
}

KnowledgeBase load_store(const fs::path& dir) {
  const fs::path header_path = dir / "header.json";
  if (!fs::exists(header_path)) throw StoreError("missing store: no header.json in " + dir.string());

  json header;
  {
    const auto raw = read_all(header_path);
    try {
      header = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& e) {
      throw StoreError("corrupt header: " + std::string(e.what()), e.byte);
    }
  }
  std::size_t dim = 0, count = 0, embedded = 0;
  std::string checksum;
  std::vector<std::string> ids;
  try {
    if (header.at("format") != "ragpoison-store") throw StoreError("corrupt header: unknown format", 0);
    if (header.at("version").get<int>() != kStoreVersion)
      throw StoreError("unsupported store version " + header.at("version").dump(), 0);
    dim = header.at("dim").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
    embedded = header.at("embedded_count").get<std::size_t>();
    checksum = header.at("sha256").get<std::string>();
    ids = header.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw StoreError("corrupt header: " + std::string(e.what()), 0);
  }
  if (ids.size() != count) throw StoreError("corrupt header: ids/count mismatch", 0);

  const auto block = read_all(dir / "embeddings.f32");
  const std::size_t expected = embedded * dim * sizeof(float);
  if (block.size() < expected) {
    throw StoreError("truncated embedding block: expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(block.size()),
                     block.size());
  }
  if (block.size() > expected)
    throw StoreError("trailing bytes after embedding block", expected);
  if (sha256_hex(block) != checksum)
    throw StoreError("embedding block checksum mismatch (expected " + checksum + ")", 0);

  std::vector<Passage> rows;
  if (!fs::exists(dir / "passages.jsonl")) throw StoreError("missing store: no passages.jsonl");
  std::vector<bool> has_embedding;
  for_each_json_line(dir / "passages.jsonl", [&](const json& obj, const std::string& src, std::size_t line) {
    Passage p;
    p.id = require_string(obj, "id", src, line);
    p.text = require_string(obj, "text", src, line);
    p.provenance = provenance_from_string(require_string(obj, "provenance", src, line));
    if (auto t = obj.find("title"); t != obj.end()) p.title = t->get<std::string>();
    if (auto q = obj.find("parent_query_id"); q != obj.end()) p.parent_query_id = q->get<std::string>();
    has_embedding.push_back(obj.value("embedded", false));
    rows.push_back(std::move(p));
  });
  if (rows.size() != count) throw StoreError("passages.jsonl holds " + std::to_string(rows.size()) + " rows, header says " + std::to_string(count));

  KnowledgeBase kb(dim);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].id != ids[i]) throw StoreError("passage order differs from header at row " + std::to_string(i));
    if (has_embedding[i]) {
      if (offset + dim * sizeof(float) > block.size())
        throw StoreError("embedding block shorter than passage list", offset);
      Embedding e(static_cast<Eigen::Index>(dim));
      for (std::size_t d = 0; d < dim; ++d) e[static_cast<Eigen::Index>(d)] = read_f32_le(&block[offset + 4 * d]);
      offset += dim * sizeof(float);
      rows[i].embedding = std::move(e);
    }
    kb.add(std::move(rows[i]));
  }
  return kb;
}

}  // namespace ragpoison
