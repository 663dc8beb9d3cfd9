#ifndef RAGPOISON_TEXT_HPP_
#define RAGPOISON_TEXT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ragpoison::text {

// ASCII-only case folding; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view s);

bool is_punct(char c);
bool is_space(char c);

std::string_view trim(std::string_view s);

// Split on runs of whitespace, keeping the surface form of each word.
std::vector<std::string> split_whitespace(std::string_view s);

// Lowercase, delete punctuation, split on whitespace. Words that consist only
// of punctuation disappear. This is the tokenizer behind BM25, ROUGE-2, the
// mock embedder and the mock models.
std::vector<std::string> normalize_tokens(std::string_view s);

// Normalized form of a single word ("Paris," -> "paris").
std::string normalize_word(std::string_view word);

// Built-in English stopword list (normalized forms).
bool is_stopword(std::string_view normalized);
std::span<const std::string_view> default_stopwords();

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace ragpoison::text

#endif  // RAGPOISON_TEXT_HPP_
