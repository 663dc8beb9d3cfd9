#ifndef RAGPOISON_TESTS_SUPPORT_FIXTURES_HPP_
#define RAGPOISON_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ragpoison/corpus.hpp"
#include "ragpoison/embedder.hpp"
#include "ragpoison/engine.hpp"
#include "ragpoison/hash.hpp"
#include "ragpoison/locator.hpp"
#include "ragpoison/models.hpp"
#include "ragpoison/retrieval.hpp"

namespace httplib {
class Server;
}

namespace fixtures {

namespace fs = std::filesystem;

fs::path source_dir();
fs::path toy_corpus();
fs::path toy_queries();
fs::path toy_config();

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(std::string_view name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, std::string_view contents);
std::string read_text(const fs::path& path);

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Runs the built CLI with the given arguments.
CliResult run_cli(const std::vector<std::string>& args);

// Mock collaborators wired the way the CLI wires them for a mock run.
struct MockStack {
  explicit MockStack(std::size_t k = ragpoison::kDefaultTopK, std::size_t dim = 64);

  std::shared_ptr<ragpoison::MockHashEmbedder> retriever_embedder;
  std::shared_ptr<ragpoison::MockHashEmbedder> proxy_embedder;
  ragpoison::SimilarityBackend retriever;
  ragpoison::SimilarityBackend proxy;
  ragpoison::MockOverlapAttacker attacker;
  ragpoison::MockOverlapAttacker reader;
  ragpoison::RuleBasedLocator locator;

  ragpoison::KnowledgeBase embed(const ragpoison::KnowledgeBase& kb) const;
};

ragpoison::KnowledgeBase make_kb(const std::vector<std::string>& texts, std::string_view id_prefix = "p");

// Small attack instances with a LOCATION answer and few location tokens per
// passage, so every parent has at most `max_positions` attack positions.
struct ToyInstance {
  ragpoison::KnowledgeBase kb;  // not embedded
  ragpoison::QueryRecord query;
};

ToyInstance random_instance(std::uint64_t seed, std::size_t passages, std::size_t max_positions);

// Background HTTP server on 127.0.0.1 with an ephemeral port.
class FixtureServer {
 public:
  using Setup = std::function<void(httplib::Server&)>;
  explicit FixtureServer(const Setup& setup);
  ~FixtureServer();
  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  int port() const { return port_; }
  std::string base_url(std::string_view prefix = "") const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace fixtures

#endif  // RAGPOISON_TESTS_SUPPORT_FIXTURES_HPP_
