#ifndef RAGPOISON_TRANSCRIPT_HPP_
#define RAGPOISON_TRANSCRIPT_HPP_

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragpoison/engine.hpp"
#include "ragpoison/metrics.hpp"

namespace ragpoison {

nlohmann::json to_json(const AttackConfig& c);
// Missing keys keep their defaults; unknown keys are a ConfigError.
AttackConfig attack_config_from_json(const nlohmann::json& j, AttackConfig base = {});

nlohmann::json to_json(const AttackTranscript& t);
// Throws ParseError on a malformed document and on a schema_version other
// than kTranscriptSchemaVersion.
AttackTranscript transcript_from_json(const nlohmann::json& j);

// One compact JSON object per line, in the given order.
void write_transcripts(std::ostream& out, std::span<const AttackTranscript> transcripts);
void write_transcripts(const std::filesystem::path& path, std::span<const AttackTranscript> transcripts);
std::vector<AttackTranscript> read_transcripts(const std::filesystem::path& path);

// Metrics inputs for one query after `iteration` (1-based). Queries whose
// reader failed carry no EM/F1.
QueryResult query_result(const AttackTranscript& t, std::size_t iteration);

}  // namespace ragpoison

#endif  // RAGPOISON_TRANSCRIPT_HPP_
