#include "ragpoison/locator.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "builtin_data.hpp"
#include "ragpoison/error.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_lines(std::string_view blob) {
  std::vector<std::string> out;
  std::istringstream in{std::string(blob)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return split_lines(ss.str());
}

struct Word {
  std::size_t start;  // core span, punctuation trimmed
  std::size_t end;
  std::string norm;
};

std::vector<Word> words_of(std::string_view s) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    std::size_t b = i;
    while (i < s.size() && !text::is_space(s[i])) ++i;
    std::size_t e = i;
    while (b < e && text::is_punct(s[b])) ++b;
    while (e > b && text::is_punct(s[e - 1])) --e;
    if (b < e) {
      auto norm = text::normalize_word(s.substr(b, e - b));
      if (!norm.empty()) out.push_back({b, e, std::move(norm)});
    }
  }
  return out;
}

const std::regex& year_pattern() {
  static const std::regex re("^(1[0-9]{3}|20[0-9]{2})$");
  return re;
}

const std::regex& number_pattern() {
  static const std::regex re("^[0-9]+([.,][0-9]+)*$");
  return re;
}

}  // namespace

RuleBasedLocator::RuleBasedLocator() {
  set_stopwords({});
  add_terms(kLabelLocation, split_lines(builtin::locations_gazetteer()));
  add_terms(kLabelPerson, split_lines(builtin::persons_gazetteer()));
}

RuleBasedLocator RuleBasedLocator::empty() {
  RuleBasedLocator loc{Tag{}};
  loc.set_stopwords({});
  return loc;
}

RuleBasedLocator RuleBasedLocator::from_files(const fs::path& locations, const fs::path& persons,
                                              const fs::path& stopwords) {
  RuleBasedLocator loc = empty();
  loc.add_terms(kLabelLocation, read_lines(locations));
  loc.add_terms(kLabelPerson, read_lines(persons));
  if (!stopwords.empty()) loc.set_stopwords(read_lines(stopwords));
  return loc;
}

void RuleBasedLocator::add_terms(std::string_view label, std::span<const std::string> terms) {
  for (const auto& term : terms) {
    const auto words = text::normalize_tokens(term);
    if (words.empty()) continue;
    max_phrase_words_ = std::max(max_phrase_words_, std::min<std::size_t>(words.size(), 4));
    if (words.size() > 4) continue;
    phrases_[text::join(words, " ")].emplace(label);
  }
}

void RuleBasedLocator::set_stopwords(std::span<const std::string> words) {
  stopwords_.clear();
  if (words.empty()) {
    for (auto w : text::default_stopwords()) stopwords_.emplace(w);
    return;
  }
  for (const auto& w : words) {
    auto n = text::normalize_word(w);
    if (!n.empty()) stopwords_.insert(std::move(n));
  }
}

bool RuleBasedLocator::is_stopword(std::string_view normalized) const {
  return stopwords_.count(std::string(normalized)) > 0;
}

std::vector<EntitySpan> RuleBasedLocator::annotate(std::string_view s) const {
  const auto words = words_of(s);
  std::vector<EntitySpan> out;
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(max_phrase_words_, words.size() - i); len >= 1; --len) {
      std::string key = words[i].norm;
      for (std::size_t k = 1; k < len; ++k) key += " " + words[i + k].norm;
      auto it = phrases_.find(key);
      if (it == phrases_.end()) continue;
      for (const auto& label : it->second)
        out.push_back({words[i].start, words[i + len - 1].end, label});
      matched = len;
      break;
    }
    if (matched > 0) {
      i += matched;
      continue;
    }
    const std::string core(s.substr(words[i].start, words[i].end - words[i].start));
    if (std::regex_match(core, year_pattern())) {
      out.push_back({words[i].start, words[i].end, std::string(kLabelDate)});
    } else if (std::regex_match(core, number_pattern())) {
      out.push_back({words[i].start, words[i].end, std::string(kLabelNumber)});
    }
    ++i;
  }
  return out;
}

SidecarNerLocator::SidecarNerLocator(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string SidecarNerLocator::canonical_label(std::string_view label) {
  if (label == "PER" || label == "PERSON") return std::string(kLabelPerson);
  if (label == "LOC" || label == "GPE" || label == "LOCATION") return std::string(kLabelLocation);
  if (label == "DATE") return std::string(kLabelDate);
  if (label == "CARDINAL" || label == "QUANTITY" || label == "NUMBER") return std::string(kLabelNumber);
  return std::string(label);
}

std::vector<EntitySpan> SidecarNerLocator::annotate(std::string_view s) const {
  if (text::trim(s).empty()) return {};
  const json response = endpoint_.post("/ner", {{"text", s}});
  if (!response.contains("spans") || !response["spans"].is_array())
    throw BackendError("ner response has no spans array");
  std::vector<EntitySpan> out;
  for (const auto& span : response["spans"]) {
    try {
      out.push_back({span.at("start").get<std::size_t>(), span.at("end").get<std::size_t>(),
                     canonical_label(span.at("label").get<std::string>())});
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed ner span: ") + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].start >= out[i].end || out[i].end > s.size())
      throw BackendError("ner span out of bounds");
    if (i > 0 && out[i].start < out[i - 1].end) throw BackendError("ner spans overlap");
  }
  return out;
}

bool SidecarNerLocator::is_stopword(std::string_view normalized) const {
  return text::is_stopword(normalized);
}

LabelSet locate_answer_entities(const EntityLocator& locator, std::string_view answer) {
  LabelSet labels;
  for (const auto& span : locator.annotate(answer)) labels.insert(span.label);
  if (labels.empty()) labels.emplace(kLabelOther);
  return labels;
}

AttackPositions find_attack_positions(const EntityLocator& locator,
                                      std::span<const std::string> tokens,
                                      const LabelSet& answer_types) {
  AttackPositions out;
  out.answer_entity_types = answer_types;
  // Surface tokens carry their own spacing; a list with no whitespace at all
  // is a plain word list and gets single spaces between words.
  const bool word_list = std::none_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    return std::any_of(t.begin(), t.end(), text::is_space);
  });
  std::string joined;
  std::vector<std::size_t> starts, ends;
  starts.reserve(tokens.size());
  ends.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (word_list && !joined.empty()) joined += ' ';
    starts.push_back(joined.size());
    joined += t;
    ends.push_back(joined.size());
  }

  std::vector<EntitySpan> spans;
  for (auto& span : locator.annotate(joined))
    if (answer_types.count(span.label)) spans.push_back(std::move(span));
  const bool content_words = answer_types.count(kLabelOther) > 0;

  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const std::size_t b = starts[j];
    const std::size_t e = ends[j];
    bool hit = std::any_of(spans.begin(), spans.end(),
                           [&](const EntitySpan& s) { return s.start < e && b < s.end; });
    if (!hit && content_words) {
      const auto norm = text::normalize_word(tokens[j]);
      hit = !norm.empty() && !locator.is_stopword(norm);
    }
    if (hit) out.positions.push_back(j);
  }
  return out;
}

}  // namespace ragpoison
