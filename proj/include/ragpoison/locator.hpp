#ifndef RAGPOISON_LOCATOR_HPP_
#define RAGPOISON_LOCATOR_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ragpoison/http_backend.hpp"

namespace ragpoison {

inline constexpr std::string_view kLabelLocation = "LOCATION";
inline constexpr std::string_view kLabelPerson = "PERSON";
inline constexpr std::string_view kLabelDate = "DATE";
inline constexpr std::string_view kLabelNumber = "NUMBER";
// Catch-all for answers with no recognized entity: every content word qualifies.
inline constexpr std::string_view kLabelOther = "OTHER";

using LabelSet = std::set<std::string, std::less<>>;

// Character span [start, end) in the annotated text.
struct EntitySpan {
  std::size_t start;
  std::size_t end;
  std::string label;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

class EntityLocator {
 public:
  virtual ~EntityLocator() = default;
  virtual std::string id() const = 0;
  virtual std::vector<EntitySpan> annotate(std::string_view text) const = 0;
  virtual bool is_stopword(std::string_view normalized) const = 0;
};

// Gazetteer + regex tagger.
//
//  - Gazetteer phrases (up to 4 words, matched longest-first on normalized
//    words) give LOCATION or PERSON; a phrase may carry both.
//  - A word matching ^(1[0-9]{3}|20[0-9]{2})$ is a DATE.
//  - Any other word matching ^[0-9]+([.,][0-9]+)*$ is a NUMBER.
// Spans cover the word with surrounding punctuation trimmed.
class RuleBasedLocator final : public EntityLocator {
 public:
  // Built-in gazetteers and stopword list.
  RuleBasedLocator();
  // Empty gazetteers; stopwords default to the built-in list.
  static RuleBasedLocator empty();
  // Gazetteer/stopword files are UTF-8, one term per line. Missing optional
  // paths keep the built-in lists.
  static RuleBasedLocator from_files(const std::filesystem::path& locations,
                                     const std::filesystem::path& persons,
                                     const std::filesystem::path& stopwords = {});

  void add_terms(std::string_view label, std::span<const std::string> terms);
  void set_stopwords(std::span<const std::string> words);

  std::string id() const override { return "rules"; }
  std::vector<EntitySpan> annotate(std::string_view text) const override;
  bool is_stopword(std::string_view normalized) const override;

 private:
  struct Tag {};
  explicit RuleBasedLocator(Tag) {}

  std::map<std::string, LabelSet, std::less<>> phrases_;
  std::size_t max_phrase_words_ = 1;
  std::unordered_set<std::string> stopwords_;
};

// Client for the NER sidecar: POST /ner {"text"} -> {"spans": [{start, end, label}]}.
// Labels PER/LOC/GPE are mapped to PERSON/LOCATION; DATE, CARDINAL and
// QUANTITY to DATE/NUMBER; anything else passes through unchanged. Spans that
// are out of bounds, empty or overlapping are a BackendError.
class SidecarNerLocator final : public EntityLocator {
 public:
  explicit SidecarNerLocator(HttpEndpoint endpoint);

  std::string id() const override { return "sidecar:" + endpoint_.origin; }
  std::vector<EntitySpan> annotate(std::string_view text) const override;
  bool is_stopword(std::string_view normalized) const override;

  static std::string canonical_label(std::string_view label);
  // GET {prefix}/healthz.
  void check_ready() const { endpoint_.get("/healthz"); }

 private:
  HttpEndpoint endpoint_;
};

struct AttackPositions {
  LabelSet answer_entity_types;
  std::vector<std::size_t> positions;  // strictly increasing token indices
};

// Entity labels of the answer; {OTHER} when nothing is recognized.
LabelSet locate_answer_entities(const EntityLocator& locator, std::string_view answer);

// Token indices whose projected label intersects answer_types. Word labels
// are projected onto tokens by character-span overlap over the concatenated
// tokens (joined with single spaces when no token contains whitespace, i.e.
// a plain word list). When answer_types contains OTHER, every token carrying a
// non-stopword content word qualifies as well.
AttackPositions find_attack_positions(const EntityLocator& locator,
                                      std::span<const std::string> tokens,
                                      const LabelSet& answer_types);

}  // namespace ragpoison

#endif  // RAGPOISON_LOCATOR_HPP_
