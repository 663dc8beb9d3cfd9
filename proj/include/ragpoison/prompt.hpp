#ifndef RAGPOISON_PROMPT_HPP_
#define RAGPOISON_PROMPT_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace ragpoison {

inline constexpr std::string_view kWrongAnswerField = "WRONG_ANSWER:";
inline constexpr std::string_view kPassageField = "PASSAGE:";

// Format block substituted for {format_instructions}.
std::string_view format_instructions();

// Byte layout of a generation that follows the WRONG_ANSWER:/PASSAGE: contract.
struct StructuredOutput {
  std::optional<std::string> wrong_answer;
  std::size_t passage_begin = 0;  // first non-space byte after PASSAGE:
  std::size_t passage_end = 0;    // one past the last non-space byte
};

// Throws FormatError when PASSAGE: is missing or followed by nothing.
StructuredOutput parse_structured_output(std::string_view raw);

// Versioned generation prompt with {question}, {passage} and
// {format_instructions} placeholders. Question and passage are wrapped in
// <question>...</question> and <passage>...</passage> tags by the built-in
// templates.
class PromptTemplate {
 public:
  // "rewrite-v1" (question + passage) and "query-only-v1" (question only).
  static PromptTemplate builtin(std::string_view id);
  static PromptTemplate load(const std::filesystem::path& path, std::string id);

  PromptTemplate(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  bool uses_passage() const;

  // Throws ConfigError when a passage is given to a template without
  // {passage} or withheld from one that has it.
  std::string render(std::string_view question, std::optional<std::string_view> passage) const;

 private:
  std::string id_;
  std::string text_;
};

// Reader-style prompt used for likelihood scoring and for answering.
std::string build_reader_prompt(std::string_view question, std::span<const std::string> passages);

}  // namespace ragpoison

#endif  // RAGPOISON_PROMPT_HPP_
