#include "support/fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

namespace fixtures {

using namespace ragpoison;

fs::path source_dir() { return RAGPOISON_SOURCE_DIR; }
fs::path toy_corpus() { return source_dir() / "data/toy/corpus.jsonl"; }
fs::path toy_queries() { return source_dir() / "data/toy/queries.jsonl"; }
fs::path toy_config() { return source_dir() / "data/configs/toy.json"; }

TempDir::TempDir() {
  static std::uint64_t counter = 0;
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("ragpoison-test-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
           std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

CliResult run_cli(const std::vector<std::string>& args) {
  std::string cmd = shell_quote(RAGPOISON_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>&1";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

MockStack::MockStack(std::size_t k, std::size_t dim)
    : retriever_embedder(std::make_shared<MockHashEmbedder>(dim, "retriever")),
      proxy_embedder(std::make_shared<MockHashEmbedder>(dim, "proxy")),
      retriever(SimilarityBackend::retriever_cosine(retriever_embedder)),
      proxy(SimilarityBackend::proxy_cosine(proxy_embedder)),
      attacker(k),
      reader(k) {}

KnowledgeBase MockStack::embed(const KnowledgeBase& kb) const { return embed_corpus(kb, *retriever_embedder); }

KnowledgeBase make_kb(const std::vector<std::string>& texts, std::string_view id_prefix) {
  KnowledgeBase kb;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Passage p;
    p.id = std::string(id_prefix) + std::to_string(i);
    p.text = texts[i];
    kb.add(std::move(p));
  }
  return kb;
}

namespace {

constexpr std::string_view kCommon[] = {
    "river",    "mountain", "island",   "ocean",     "desert",   "forest",   "valley",  "lake",
    "harbor",   "bridge",   "tower",    "castle",    "museum",   "library",  "stadium", "airport",
    "railway",  "company",  "album",    "novel",     "film",     "painting", "opera",   "theory",
    "planet",   "comet",    "telescope", "vaccine",  "treaty",   "festival", "trophy",  "medal",
    "language", "currency", "dynasty",  "parliament", "economy", "industry", "ancient", "modern"};

constexpr std::string_view kCities[] = {"paris",  "london", "berlin", "madrid",  "rome",    "vienna",
                                        "lisbon", "dublin", "oslo",   "prague",  "cairo",   "tokyo",
                                        "seoul",  "sydney", "toronto", "chicago"};

template <std::size_t N>
std::string pick(RandomStream& rng, const std::string_view (&words)[N]) {
  return std::string(words[rng.uniform_index(N)]);
}

}  // namespace

ToyInstance random_instance(std::uint64_t seed, std::size_t passages, std::size_t max_positions) {
  RandomStream rng(seed);
  ToyInstance inst;
  const std::string answer = pick(rng, kCities);
  std::string anchor;
  do anchor = pick(rng, kCities);
  while (anchor == answer);
  const std::string c1 = pick(rng, kCommon);
  std::string c2;
  do c2 = pick(rng, kCommon);
  while (c2 == c1);

  inst.query.id = "r" + std::to_string(seed);
  inst.query.question = "Which city near " + anchor + " holds the " + c1 + " " + c2 + "?";
  inst.query.gold_answers = {answer};

  for (std::size_t i = 0; i < passages; ++i) {
    std::vector<std::string> words;
    const std::size_t filler = 5 + rng.uniform_index(6);
    for (std::size_t w = 0; w < filler; ++w) words.push_back(pick(rng, kCommon));
    std::size_t locations = 0;
    const bool relevant = i < 3 || rng.uniform01() < 0.2;
    if (relevant) {
      words.push_back(c1);
      words.push_back(c2);
      words.push_back(answer);
      ++locations;
      if (locations < max_positions && rng.uniform01() < 0.7) {
        words.push_back(anchor);
        ++locations;
      }
    }
    while (locations < max_positions && rng.uniform01() < 0.3) {
      words.push_back(pick(rng, kCities));
      ++locations;
    }
    for (std::size_t j = words.size(); j > 1; --j) std::swap(words[j - 1], words[rng.uniform_index(j)]);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    Passage p;
    p.id = inst.query.id + "-p" + std::to_string(i);
    p.text = text + ".";
    inst.kb.add(std::move(p));
  }
  return inst;
}

FixtureServer::FixtureServer(const Setup& setup) : server_(std::make_unique<httplib::Server>()) {
  setup(*server_);
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("fixture server could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FixtureServer::~FixtureServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string FixtureServer::base_url(std::string_view prefix) const {
  return "http://127.0.0.1:" + std::to_string(port_) + std::string(prefix);
}

}  // namespace fixtures
