#ifndef RAGPOISON_HARNESS_HPP_
#define RAGPOISON_HARNESS_HPP_

#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragpoison/engine.hpp"

namespace ragpoison {

inline constexpr const char* kApiKeyEnv = "RAGPOISON_API_KEY";
inline constexpr const char* kBaseUrlEnv = "RAGPOISON_BASE_URL";

// kind: "mock_hash" {dim, salt} | "http" {endpoint, model, dim} | "sidecar" {endpoint, dim}
struct EmbedderSpec {
  std::string kind = "mock_hash";
  std::size_t dim = 64;
  std::string salt;
  std::string endpoint;
  std::string model;
};

// kind: "mock_overlap" | "http" {endpoint, model, likelihood_normalization}
struct ModelSpec {
  std::string kind = "mock_overlap";
  std::string endpoint;
  std::string model;
  LikelihoodNormalization normalization = LikelihoodNormalization::mean;
};

// kind: "rules" {gazetteer_dir?} | "sidecar" {endpoint}
struct LocatorSpec {
  std::string kind = "rules";
  std::filesystem::path gazetteer_dir;
  std::string endpoint;
};

inline constexpr std::string_view kSweepAxes[] = {"pr_sub", "n", "n_iter", "similarity"};

struct SweepAxis {
  std::string name;
  std::vector<nlohmann::json> values;
};

struct SweepPoint {
  std::vector<std::pair<std::string, nlohmann::json>> params;

  // "default" without parameters, else "axis=value" joined by "__".
  std::string name() const;
  AttackConfig apply(const AttackConfig& base) const;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path queries;
  std::filesystem::path store_dir;
  std::filesystem::path output_dir;
  std::size_t jobs = 1;
  AttackConfig attack;
  EmbedderSpec retriever{"mock_hash", 64, "retriever", {}, {}};
  EmbedderSpec proxy_embedder{"mock_hash", 64, "proxy", {}, {}};
  ModelSpec attacker;
  ModelSpec reader;
  LocatorSpec locator;
  std::vector<SweepAxis> sweep;
};

nlohmann::json load_config_document(const std::filesystem::path& path);

// KEY=VALUE with a dotted KEY; VALUE is parsed as JSON, falling back to a
// plain string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// AXIS=v1,v2,... for an axis in kSweepAxes.
SweepAxis parse_sweep_arg(std::string_view arg);

// Relative paths resolve against base_dir. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// Cartesian product in declaration order; one empty point without axes.
std::vector<SweepPoint> sweep_points(std::span<const SweepAxis> axes);

struct Backends {
  std::shared_ptr<const Embedder> retriever_embedder;
  std::shared_ptr<const Embedder> proxy_embedder;
  std::shared_ptr<const AttackerModel> attacker;
  std::shared_ptr<const AttackerModel> reader;
  std::shared_ptr<const EntityLocator> locator;
  std::vector<std::function<void()>> readiness_checks;
};

Backends build_backends(const RunConfig& config);

// Runs every readiness check; the first failure propagates as BackendError.
void check_backends(const Backends& backends);

// Attack similarity signal for one configuration. BM25 statistics come from kb.
SimilarityBackend make_attack_similarity(const AttackConfig& config, const Backends& backends,
                                         const KnowledgeBase& kb);

// 0 success, 1 usage/config, 2 data, 3 backend.
int exit_code_for(const std::exception& e);

void cmd_ingest(const RunConfig& config, std::ostream& out);

// Writes <output_dir>/<sweep point>/transcripts.jsonl and run.json per point.
std::vector<std::filesystem::path> cmd_attack(const RunConfig& config, std::ostream& out);

// Inputs are transcript files, run directories, or directories holding run
// directories. Writes metrics.csv and metrics.txt next to each transcript file.
std::vector<std::filesystem::path> cmd_evaluate(std::span<const std::filesystem::path> inputs,
                                                std::ostream& out);

// Inputs are metrics.csv files or directories searched for them. Writes
// summary.md and plot.csv into out_dir.
void cmd_report(std::span<const std::filesystem::path> inputs, const std::filesystem::path& out_dir,
                std::ostream& out);

}  // namespace ragpoison

#endif  // RAGPOISON_HARNESS_HPP_
