#ifndef RAGPOISON_MODELS_HPP_
#define RAGPOISON_MODELS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ragpoison {

inline constexpr std::size_t kDefaultTopK = 10;

struct TokenAlternative {
  std::string token;
  double score;

  friend bool operator==(const TokenAlternative&, const TokenAlternative&) = default;
};

// A generated sequence with the k best tokens recorded at every position.
// Tokens are surface pieces: concatenating them reproduces the text,
// including any leading whitespace a piece carries.
struct TokenTrace {
  std::vector<std::string> tokens;
  std::vector<std::vector<TokenAlternative>> alternatives;
  std::uint64_t prompt_fingerprint = 0;

  std::size_t size() const { return tokens.size(); }
  std::string concatenated() const;

  // Positions [begin, end) as a trace of their own.
  TokenTrace slice(std::size_t begin, std::size_t end) const;

  // Throws FormatError unless |alternatives| == |tokens|, every list is
  // non-empty and non-increasing in score, and tokens[j] is among
  // alternatives[j].
  void validate() const;

  friend bool operator==(const TokenTrace&, const TokenTrace&) = default;
};

// Text rendered from surface tokens: concatenation with outer whitespace trimmed.
std::string render_tokens(std::span<const std::string> tokens);

struct RawGeneration {
  std::string text;
  TokenTrace trace;
};

// The white-box attacker LLM. The same interface also serves as the RAG
// reader in end-to-end runs.
class AttackerModel {
 public:
  virtual ~AttackerModel() = default;

  virtual std::string id() const = 0;
  virtual std::size_t top_k() const = 0;

  // Greedy decode of up to max_tokens tokens, recording the top-k
  // alternatives at each position.
  virtual RawGeneration generate(std::string_view prompt, std::size_t max_tokens,
                                 std::uint64_t seed) const = 0;

  // Likelihood in [0, 1] of producing `answer` for `question` given a single
  // passage as context.
  virtual double answer_likelihood(std::string_view question, std::string_view passage,
                                   std::string_view answer) const = 0;

  // Reader role: short answer from the question and retrieved passages.
  virtual std::string answer(std::string_view question,
                             std::span<const std::string> passages) const = 0;

  // Throws BackendError when the backend cannot serve requests.
  virtual void check_ready() const {}
};

struct Generation {
  std::string text;  // the passage field only
  TokenTrace trace;  // aligned with the passage field
  std::string fabricated_answer;  // empty when the output had no WRONG_ANSWER field
};

// Runs the model and splits its structured output into the fabricated answer
// and the passage, slicing the trace down to the passage tokens. Throws
// FormatError (carrying the raw text) when the PASSAGE field is missing or
// empty.
Generation generate_with_candidates(const AttackerModel& model, std::string_view prompt,
                                    std::size_t max_tokens, std::uint64_t seed);

// Throws std::domain_error on an empty answer.
double score_answer_likelihood(const AttackerModel& model, std::string_view question,
                               std::string_view passage, std::string_view answer);

// The 256 words the mock attacker may substitute besides the passage's own.
std::span<const std::string_view> mock_vocabulary();

// Deterministic stand-in for an attacker LLM, fully specified so tests can
// recompute everything it does.
//
// Generation: the prompt's <question>...</question> and <passage>...</passage>
// fields are extracted. The output word sequence is
//   WRONG_ANSWER: <a'> PASSAGE: <source words>
// where the source words are the passage's whitespace words (or, without a
// passage, the question's words followed by a'), and a' is the vocabulary word
// absent from passage and question with the highest score at position
// kAnswerSlot. The score of word w at output position j is
//   unit_interval(hash_words({seed, fnv1a64(prompt), j, fnv1a64(w)}))
// plus 1.0 when w is the word the sequence calls for at j. Candidates are the
// fixed vocabulary plus the passage words; the emitted word is the argmax and
// the alternatives are the top-k. Surface tokens carry a leading space except
// at position 0.
//
// Likelihood: the fraction of normalized answer tokens present in the passage.
//
// Reader: the normalized passage token that is neither a stopword nor in the
// question, with the highest sum of 1/(rank+1) over the retrieved passages;
// ties go to the earliest occurrence.
class MockOverlapAttacker final : public AttackerModel {
 public:
  static constexpr std::uint64_t kAnswerSlot = ~std::uint64_t{0};

  explicit MockOverlapAttacker(std::size_t top_k = kDefaultTopK);

  std::string id() const override;
  std::size_t top_k() const override { return top_k_; }
  RawGeneration generate(std::string_view prompt, std::size_t max_tokens,
                         std::uint64_t seed) const override;
  double answer_likelihood(std::string_view question, std::string_view passage,
                           std::string_view answer) const override;
  std::string answer(std::string_view question,
                     std::span<const std::string> passages) const override;

  // Score of word w at output position j, as defined above minus the bonus.
  static double hash_score(std::uint64_t seed, std::uint64_t prompt_fingerprint,
                           std::uint64_t position, std::string_view word);

 private:
  std::size_t top_k_;
};

// Text between <tag> and </tag>, or nullopt-like empty view with found=false.
struct TaggedField {
  bool found = false;
  std::string_view value;
};
TaggedField extract_tagged(std::string_view text, std::string_view tag);

}  // namespace ragpoison

#endif  // RAGPOISON_MODELS_HPP_
