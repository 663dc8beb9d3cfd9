#ifndef RAGPOISON_ENGINE_HPP_
#define RAGPOISON_ENGINE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragpoison/corpus.hpp"
#include "ragpoison/hash.hpp"
#include "ragpoison/locator.hpp"
#include "ragpoison/models.hpp"
#include "ragpoison/prompt.hpp"
#include "ragpoison/retrieval.hpp"

namespace ragpoison {

enum class AttackMode { white_box, black_box, fully_black_box };

std::string_view to_string(AttackMode m);
AttackMode attack_mode_from_string(std::string_view s);

struct AttackConfig {
  std::size_t m = 5;       // benign passages attacked / malicious passages emitted
  std::size_t k = kDefaultTopK;  // alternatives kept per generated token
  std::size_t n = 20;      // candidate-set size per parent
  double pr_sub = 0.2;     // per-position substitution probability
  std::size_t n_iter = 5;
  AttackMode mode = AttackMode::black_box;
  // Similarity signal in the black-box modes; white_box always uses the
  // retriever's own encoder.
  SimilarityKind similarity = SimilarityKind::proxy_embedding_cosine;
  Bm25Params bm25;
  std::uint64_t seed = 0;
  std::size_t max_passage_len = kDefaultMaxPassageLen;
  std::string prompt_template_id = "rewrite-v1";

  // Throws ConfigError on any out-of-range field.
  void validate() const;
};

// Per-query gates: l = max initial answer likelihood, s = min initial similarity.
struct Thresholds {
  double likelihood_gate = 0.0;
  double similarity_gate = 0.0;
  std::vector<double> likelihoods;
  std::vector<double> similarities;
};

// l = max(likelihoods), s = min(similarities). Both spans must be non-empty
// and of equal length.
Thresholds make_thresholds(std::span<const double> likelihoods, std::span<const double> similarities);

// Scores each passage with the attacker (likelihood of `answer`) and the
// attack similarity signal, then gates as above.
Thresholds initialize(const QueryRecord& query, std::string_view answer,
                      std::span<const std::string> passages, const AttackerModel& model,
                      const PreparedQuery& similarity);

struct Parent {
  std::string text;
  TokenTrace trace;
  std::string fabricated_answer;
};

struct ParentOutcome {
  std::optional<Parent> parent;
  std::string error;  // set when generation failed for this slot
};

struct Substitution {
  std::size_t position;
  std::string original;
  std::string replacement;

  friend bool operator==(const Substitution&, const Substitution&) = default;
};

struct CandidatePassage {
  std::string text;
  std::vector<std::string> tokens;
  std::optional<double> similarity;
  std::optional<double> likelihood;
  std::vector<Substitution> substitutions;
  std::size_t parent_index = 0;
  bool degenerate = false;  // parent had no attack positions
};

// Parent passage as a candidate with no substitutions.
CandidatePassage as_candidate(const Parent& parent, std::size_t parent_index);

// Seeds derived from the root seed. Every random decision in an attack draws
// from one of these, so results do not depend on scheduling order.
std::uint64_t query_seed(std::uint64_t root_seed, std::string_view query_id);
std::uint64_t generation_seed(std::uint64_t query_seed, std::size_t iteration, std::size_t slot);
std::uint64_t substitution_seed(std::uint64_t query_seed, std::size_t iteration, std::size_t slot);
std::uint64_t candidate_seed(std::uint64_t substitution_seed, std::size_t candidate_index);

// max_tokens requested for one parent generation: room for the passage cap
// plus the WRONG_ANSWER header.
std::size_t generation_budget(const AttackConfig& config);

// One parent per source passage (or `slots` parents from the question alone
// when sources is empty). Parents are cut to max_passage_len tokens and their
// alternatives to config.k entries. Failed slots carry an error instead.
std::vector<ParentOutcome> generate_parents(const QueryRecord& query,
                                            std::span<const std::string> sources, std::size_t slots,
                                            const AttackerModel& model, const PromptTemplate& prompt,
                                            const AttackConfig& config, std::uint64_t query_seed,
                                            std::size_t iteration);

// Falls back to a replacement token when the generation had no WRONG_ANSWER
// field: the best alternative at the first attack position (or at position 0).
std::string fallback_fabricated_answer(const Parent& parent, const AttackPositions& positions);

// One independent draw: each attack position is substituted when a uniform
// draw falls below pr_sub, with the replacement picked uniformly among the
// trace alternatives other than the current token.
CandidatePassage draw_candidate(const Parent& parent, std::size_t parent_index,
                                const AttackPositions& positions, double pr_sub,
                                RandomStream& stream);

// Number of distinct substitution patterns draw_candidate can produce,
// saturating at `cap`.
std::size_t substitution_support(const Parent& parent, const AttackPositions& positions,
                                 double pr_sub, std::size_t cap);

// Up to n distinct candidates for one parent.
//
// With no attack positions the parent itself is returned, flagged degenerate.
// When the draw distribution has at most n outcomes, every outcome is listed
// in canonical order: odometer over attack positions (first position most
// significant), choice 0 keeps the token where keeping is possible, then the
// alternatives in trace order skipping the current token. Otherwise n
// independent draws are made from candidate_seed(seed, c) streams and
// deduplicated by text, keeping first occurrences.
std::vector<CandidatePassage> substitute_tokens(const Parent& parent, std::size_t parent_index,
                                                const AttackPositions& positions,
                                                const AttackConfig& config, std::uint64_t seed);

// Scores every candidate's similarity in place and returns the ones strictly
// above the similarity gate.
std::vector<CandidatePassage> filter_candidates(std::span<CandidatePassage> candidates,
                                                const PreparedQuery& similarity,
                                                const Thresholds& thresholds);

struct Selection {
  CandidatePassage chosen;
  bool kept_incumbent = false;
  std::size_t dropped = 0;  // candidates whose scoring failed
};

// Lowest answer likelihood wins; ties go to higher similarity, then to the
// earlier candidate. The incumbent stays when there is no survivor or the
// best survivor's likelihood exceeds the incumbent's.
Selection select_by_likelihood(std::span<const CandidatePassage> survivors,
                               std::string_view question, std::string_view answer,
                               const AttackerModel& model, const CandidatePassage& incumbent);

struct SlotRecord {
  std::size_t slot = 0;
  bool generated = false;
  std::string error;
  std::string parent_text;
  std::string fabricated_answer;
  std::vector<std::size_t> attack_positions;
  std::size_t candidate_count = 0;
  std::size_t survivor_count = 0;
  std::optional<double> mean_candidate_similarity;
  bool degenerate = false;
  bool kept_incumbent = false;
  std::optional<CandidatePassage> selected;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<SlotRecord> slots;
};

struct MaliciousPassage {
  std::size_t slot = 0;
  std::string text;
  double similarity = 0.0;
  double likelihood = 0.0;
  bool retrieval_condition = false;   // similarity > s
  bool likelihood_condition = false;  // likelihood < l
};

struct PassagePair {
  std::size_t slot = 0;
  std::string benign_id;
  double s_benign = 0.0;
  double s_malicious = 0.0;
  double p_benign = 0.0;
  double p_malicious = 0.0;
};

struct IterationEvaluation {
  std::size_t iteration = 0;
  bool reader_failed = false;
  std::string answer;
  double em = 0.0;
  double f1 = 0.0;
  std::size_t malicious_retrieved = 0;
  std::vector<std::string> retrieved_ids;
  std::vector<PassagePair> pairs;
};

struct Evaluation {
  bool reader_failed = false;
  std::string clean_answer;
  double clean_em = 0.0;
  double clean_f1 = 0.0;
  std::vector<IterationEvaluation> per_iteration;
};

inline constexpr int kTranscriptSchemaVersion = 1;

struct AttackTranscript {
  int schema_version = kTranscriptSchemaVersion;
  std::string query_id;
  std::string question;
  std::vector<std::string> gold_answers;
  AttackMode mode = AttackMode::black_box;
  std::string similarity;
  AttackConfig config;
  bool failed = false;
  std::string failure;
  Thresholds thresholds;
  std::vector<std::string> benign_parent_ids;  // empty in fully_black_box
  LabelSet answer_entity_types;
  std::vector<IterationRecord> iterations;
  std::vector<MaliciousPassage> final_set;
  std::optional<Evaluation> evaluation;
};

// Passages that would be injected after `iteration` (1-based): every slot's
// selection with similarity > s, ascending by likelihood, ties by slot.
std::vector<MaliciousPassage> malicious_set_after(const AttackTranscript& t, std::size_t iteration);

// The attack for one query. Collaborators are borrowed and must outlive the engine.
class AttackEngine {
 public:
  // `retriever` is the RAG system's retriever (cosine over the kb
  // embeddings). `proxy` is the substitute similarity signal for the
  // black-box modes and may be null in white_box.
  AttackEngine(const AttackerModel& attacker, const SimilarityBackend& retriever,
               const SimilarityBackend* proxy, const EntityLocator& locator, AttackConfig config);

  const AttackConfig& config() const { return config_; }
  const SimilarityBackend& attack_similarity() const;
  const SimilarityBackend& retriever() const { return retriever_; }
  const AttackerModel& attacker() const { return attacker_; }

  // Retrieves D from the benign passages of kb, then runs n_iter rounds of
  // generate -> locate -> substitute -> filter -> select.
  AttackTranscript run(const QueryRecord& query, const KnowledgeBase& kb) const;

 private:
  const AttackerModel& attacker_;
  const SimilarityBackend& retriever_;
  const SimilarityBackend* proxy_;
  const EntityLocator& locator_;
  AttackConfig config_;
  PromptTemplate rewrite_prompt_;
  PromptTemplate query_only_prompt_;
};

// Malicious Passage records ready for injection, embedded with the retriever.
std::vector<Passage> malicious_passages(const AttackTranscript& t,
                                        std::span<const MaliciousPassage> set,
                                        const Embedder& retriever_embedder);

struct EndToEndOptions {
  std::size_t jobs = 1;
};

struct EndToEndResult {
  std::vector<AttackTranscript> transcripts;
};

// Per query: attack, then for every iteration inject that iteration's
// malicious set into a copy of kb, retrieve top-m with the retriever, let the
// reader answer, and record EM/F1 and per-passage ASR pairs in the
// transcript's evaluation block. kb itself is never modified. Output is
// identical for any jobs value.
EndToEndResult end_to_end_attack(std::span<const QueryRecord> queries, const KnowledgeBase& kb,
                                 const AttackEngine& engine, const AttackerModel& reader,
                                 const EndToEndOptions& options = {});

}  // namespace ragpoison

#endif  // RAGPOISON_ENGINE_HPP_
