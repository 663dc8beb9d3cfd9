#include "ragpoison/models.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "ragpoison/error.hpp"
#include "ragpoison/hash.hpp"
#include "ragpoison/prompt.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

std::string TokenTrace::concatenated() const {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

TokenTrace TokenTrace::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, tokens.size());
  begin = std::min(begin, end);
  TokenTrace out;
  out.prompt_fingerprint = prompt_fingerprint;
  out.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                    tokens.begin() + static_cast<std::ptrdiff_t>(end));
  out.alternatives.assign(alternatives.begin() + static_cast<std::ptrdiff_t>(begin),
                          alternatives.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

void TokenTrace::validate() const {
  if (alternatives.size() != tokens.size())
    throw FormatError("trace has " + std::to_string(alternatives.size()) + " alternative lists for " +
                          std::to_string(tokens.size()) + " tokens",
                      concatenated());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto& alts = alternatives[j];
    if (alts.empty()) throw FormatError("no alternatives at position " + std::to_string(j), concatenated());
    bool found = false;
    for (std::size_t a = 0; a < alts.size(); ++a) {
      if (a > 0 && alts[a].score > alts[a - 1].score)
        throw FormatError("alternatives not sorted at position " + std::to_string(j), concatenated());
      found = found || alts[a].token == tokens[j];
    }
    if (!found)
      throw FormatError("emitted token missing from alternatives at position " + std::to_string(j),
                        concatenated());
  }
}

std::string render_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return std::string(text::trim(out));
}

Generation generate_with_candidates(const AttackerModel& model, std::string_view prompt,
                                    std::size_t max_tokens, std::uint64_t seed) {
  if (text::trim(prompt).empty()) throw std::invalid_argument("generate: empty prompt");
  if (max_tokens == 0) throw std::invalid_argument("generate: max_tokens must be >= 1");
  RawGeneration raw = model.generate(prompt, max_tokens, seed);
  raw.trace.validate();
  const std::string full = raw.trace.concatenated();
  const StructuredOutput fields = parse_structured_output(full);

  std::size_t first = raw.trace.size();
  std::size_t last = 0;
  std::size_t offset = 0;
  for (std::size_t j = 0; j < raw.trace.size(); ++j) {
    const std::size_t start = offset;
    const std::size_t end = offset + raw.trace.tokens[j].size();
    offset = end;
    if (end <= fields.passage_begin || start >= fields.passage_end) continue;
    // A token straddling the field header would drag header text along.
    if (start < fields.passage_begin &&
        !text::trim(std::string_view(full).substr(start, fields.passage_begin - start)).empty())
      continue;
    first = std::min(first, j);
    last = j + 1;
  }
  if (first >= last) throw FormatError("PASSAGE: field has no whole tokens", full);

  Generation out;
  out.trace = raw.trace.slice(first, last);
  out.text = render_tokens(out.trace.tokens);
  if (fields.wrong_answer) out.fabricated_answer = *fields.wrong_answer;
  return out;
}

double score_answer_likelihood(const AttackerModel& model, std::string_view question,
                               std::string_view passage, std::string_view answer) {
  if (text::trim(answer).empty()) throw std::domain_error("answer likelihood: empty answer");
  const double l = model.answer_likelihood(question, passage, answer);
  if (!(l >= 0.0 && l <= 1.0)) throw BackendError("likelihood outside [0, 1] from " + model.id());
  return l;
}

TaggedField extract_tagged(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::size_t b = text.find(open);
  if (b == std::string_view::npos) return {};
  const std::size_t vb = b + open.size();
  const std::size_t e = text.find(close, vb);
  if (e == std::string_view::npos) return {};
  return {true, text.substr(vb, e - vb)};
}

MockOverlapAttacker::MockOverlapAttacker(std::size_t top_k) : top_k_(top_k) {
  if (top_k_ == 0) throw std::invalid_argument("top_k must be >= 1");
}

std::string MockOverlapAttacker::id() const { return "mock_overlap:k=" + std::to_string(top_k_); }

double MockOverlapAttacker::hash_score(std::uint64_t seed, std::uint64_t prompt_fingerprint,
                                       std::uint64_t position, std::string_view word) {
  return unit_interval(hash_words({seed, prompt_fingerprint, position, fnv1a64(word)}));
}

RawGeneration MockOverlapAttacker::generate(std::string_view prompt, std::size_t max_tokens,
                                            std::uint64_t seed) const {
  const std::uint64_t fp = fnv1a64(prompt);
  const TaggedField question = extract_tagged(prompt, "question");
  const TaggedField passage = extract_tagged(prompt, "passage");

  std::vector<std::string> passage_words;
  if (passage.found) passage_words = text::split_whitespace(passage.value);

  // Candidate vocabulary: fixed words, then the passage's words in order of
  // first appearance.
  std::vector<std::string> vocab(mock_vocabulary().begin(), mock_vocabulary().end());
  {
    std::unordered_set<std::string> seen(vocab.begin(), vocab.end());
    for (const auto& w : passage_words)
      if (seen.insert(w).second) vocab.push_back(w);
  }

  std::unordered_set<std::string> context;
  for (const auto& w : text::normalize_tokens(passage.value)) context.insert(w);
  for (const auto& w : text::normalize_tokens(question.value)) context.insert(w);
  std::string wrong;
  double best = -1.0;
  for (std::string_view w : mock_vocabulary()) {
    if (context.count(std::string(w))) continue;
    const double s = hash_score(seed, fp, kAnswerSlot, w);
    if (s > best) {
      best = s;
      wrong = std::string(w);
    }
  }

  std::vector<std::string> sequence = {std::string(kWrongAnswerField), wrong,
                                       std::string(kPassageField)};
  if (!passage_words.empty()) {
    sequence.insert(sequence.end(), passage_words.begin(), passage_words.end());
  } else {
    for (const auto& w : text::split_whitespace(question.value)) {
      std::string word = w;
      while (!word.empty() && word.back() == '?') word.pop_back();
      if (!word.empty()) sequence.push_back(std::move(word));
    }
    sequence.push_back(wrong);
  }
  if (sequence.size() > max_tokens) sequence.resize(max_tokens);

  RawGeneration out;
  out.trace.prompt_fingerprint = fp;
  std::vector<std::pair<double, const std::string*>> scored;
  for (std::size_t j = 0; j < sequence.size(); ++j) {
    const std::string& target = sequence[j];
    scored.clear();
    bool target_in_vocab = false;
    for (const auto& w : vocab) {
      const bool is_target = w == target;
      target_in_vocab = target_in_vocab || is_target;
      scored.emplace_back(hash_score(seed, fp, j, w) + (is_target ? 1.0 : 0.0), &w);
    }
    if (!target_in_vocab) scored.emplace_back(hash_score(seed, fp, j, target) + 1.0, &target);
    const std::size_t k = std::min(top_k_, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return *a.second < *b.second;
                      });
    const std::string lead = j == 0 ? "" : " ";
    std::vector<TokenAlternative> alts;
    alts.reserve(k);
    for (std::size_t a = 0; a < k; ++a) alts.push_back({lead + *scored[a].second, scored[a].first});
    out.trace.tokens.push_back(alts.front().token);
    out.trace.alternatives.push_back(std::move(alts));
  }
  out.text = out.trace.concatenated();
  return out;
}

double MockOverlapAttacker::answer_likelihood(std::string_view /*question*/,
                                              std::string_view passage,
                                              std::string_view answer) const {
  const auto answer_tokens = text::normalize_tokens(answer);
  if (answer_tokens.empty()) throw std::domain_error("answer has no tokens after normalization");
  const auto passage_tokens = text::normalize_tokens(passage);
  const std::unordered_set<std::string> present(passage_tokens.begin(), passage_tokens.end());
  std::size_t hits = 0;
  for (const auto& t : answer_tokens) hits += present.count(t);
  return static_cast<double>(hits) / static_cast<double>(answer_tokens.size());
}

std::string MockOverlapAttacker::answer(std::string_view question,
                                        std::span<const std::string> passages) const {
  const auto q = text::normalize_tokens(question);
  const std::unordered_set<std::string> in_question(q.begin(), q.end());
  std::unordered_map<std::string, double> weight;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < passages.size(); ++r) {
    const double w = 1.0 / static_cast<double>(r + 1);
    for (const auto& t : text::normalize_tokens(passages[r])) {
      if (in_question.count(t) || text::is_stopword(t)) continue;
      auto [it, inserted] = weight.emplace(t, 0.0);
      if (inserted) order.push_back(t);
      it->second += w;
    }
  }
  std::string best;
  double best_w = 0.0;
  for (const auto& t : order) {
    if (weight[t] > best_w) {
      best_w = weight[t];
      best = t;
    }
  }
  return best;
}

}  // namespace ragpoison
