#include "ragpoison/text.hpp"

#include <cctype>

namespace ragpoison::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string normalize_word(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (char c : word) {
    if (is_punct(c) || is_space(c)) continue;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

std::vector<std::string> normalize_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& w : split_whitespace(s)) {
    auto n = normalize_word(w);
    if (!n.empty()) out.push_back(std::move(n));
  }
  return out;
}

namespace {

constexpr std::string_view kStopwords[] = {
    "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",
    "at",    "be",    "been",  "before", "being", "but",  "by",    "can",   "could", "did",
    "do",    "does",  "during", "each", "for",   "from",  "had",   "has",   "have",  "he",
    "her",   "his",   "how",   "i",     "if",    "in",    "into",  "is",    "it",    "its",
    "many",  "more",  "most",  "no",    "not",   "of",    "on",    "one",   "only",  "or",
    "other", "our",   "she",   "so",    "some",  "such",  "than",  "that",  "the",   "their",
    "them",  "then",  "there", "these", "they",  "this",  "those", "through", "to",  "under",
    "up",    "was",   "we",    "were",  "what",  "when",  "where", "which", "while", "who",
    "whom",  "why",   "will",  "with",  "would", "you",   "your",
};

}  // namespace

bool is_stopword(std::string_view normalized) {
  for (auto w : kStopwords)
    if (w == normalized) return true;
  return false;
}

std::span<const std::string_view> default_stopwords() { return kStopwords; }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace ragpoison::text
