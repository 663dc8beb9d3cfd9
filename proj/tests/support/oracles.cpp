#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "ragpoison/prompt.hpp"

namespace oracles {

using namespace ragpoison;

std::vector<std::size_t> argsort_top_m(const std::vector<double>& scores, std::size_t m) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(m, idx.size()));
  return idx;
}

double cosine(const Embedding& a, const Embedding& b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  return dot / std::sqrt(na * nb);
}

double okapi_bm25(const std::vector<std::string>& query, const std::vector<std::string>& doc,
                  const std::vector<std::vector<std::string>>& corpus, double k1, double b) {
  const double n = static_cast<double>(corpus.size());
  double total_len = 0;
  for (const auto& d : corpus) total_len += static_cast<double>(d.size());
  const double avgdl = total_len / n;
  double score = 0;
  for (const auto& term : query) {
    double df = 0;
    for (const auto& d : corpus)
      if (std::find(d.begin(), d.end(), term) != d.end()) df += 1;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double f = static_cast<double>(std::count(doc.begin(), doc.end(), term));
    score += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * static_cast<double>(doc.size()) / avgdl));
  }
  return score;
}

double rouge2(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() < 2 || b.size() < 2) return 0.0;
  std::map<std::pair<std::string, std::string>, int> ca, cb;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) ++ca[{a[i], a[i + 1]}];
  for (std::size_t i = 0; i + 1 < b.size(); ++i) ++cb[{b[i], b[i + 1]}];
  int overlap = 0;
  for (const auto& [bg, c] : ca) {
    auto it = cb.find(bg);
    if (it != cb.end()) overlap += std::min(c, it->second);
  }
  if (overlap == 0) return 0.0;
  const double recall = overlap / double(a.size() - 1);
  const double precision = overlap / double(b.size() - 1);
  return 2 * precision * recall / (precision + recall);
}

namespace {

struct Scored {
  std::string text;
  double similarity;
  double likelihood;
};

std::string concat_trim(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += t;
  const auto b = s.find_first_not_of(" \t\n\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\n\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

OracleAttack brute_force_attack(const QueryRecord& query, const KnowledgeBase& kb, const AttackerModel& model,
                                const SimilarityBackend& retriever, const SimilarityBackend& attack_similarity,
                                const EntityLocator& locator, const AttackConfig& config) {
  OracleAttack out;
  const std::string& answer = query.gold_answers.front();
  const PreparedQuery rq = retriever.prepare(query.question);
  const PreparedQuery sq = attack_similarity.prepare(query.question);

  std::vector<double> retrieval_scores;
  for (const auto& p : kb.passages())
    retrieval_scores.push_back(p.is_malicious() ? -std::numeric_limits<double>::infinity() : rq.score(p));
  std::vector<std::string> sources;
  for (std::size_t i : argsort_top_m(retrieval_scores, config.m))
    if (!kb[i].is_malicious()) sources.push_back(kb[i].text);

  out.likelihood_gate = -std::numeric_limits<double>::infinity();
  out.similarity_gate = std::numeric_limits<double>::infinity();
  for (const auto& d : sources) {
    out.likelihood_gate = std::max(out.likelihood_gate, model.answer_likelihood(query.question, d, answer));
    out.similarity_gate = std::min(out.similarity_gate, sq.score(d));
  }

  const LabelSet types = locate_answer_entities(locator, answer);
  const PromptTemplate prompt = PromptTemplate::builtin(config.prompt_template_id);
  const std::uint64_t qs = query_seed(config.seed, query.id);
  std::vector<std::optional<Scored>> best(sources.size());

  for (std::size_t it = 1; it <= config.n_iter; ++it) {
    std::vector<double> trace_row;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const std::string source = best[i] ? best[i]->text : sources[i];
      const Generation gen = generate_with_candidates(model, prompt.render(query.question, source),
                                                      generation_budget(config), generation_seed(qs, it, i));
      const std::size_t len = std::min(gen.trace.size(), config.max_passage_len);
      const std::vector<std::string> tokens(gen.trace.tokens.begin(), gen.trace.tokens.begin() + len);
      const auto positions = find_attack_positions(locator, tokens, types).positions;

      // Choice lists: keep, then every alternative that differs from the token.
      std::vector<std::vector<std::string>> options;
      for (std::size_t j : positions) {
        std::vector<std::string> row{tokens[j]};
        for (const auto& alt : gen.trace.alternatives[j])
          if (alt.token != tokens[j]) row.push_back(alt.token);
        options.push_back(row);
      }
      std::vector<std::string> texts;
      std::set<std::string> seen;
      std::vector<std::string> work = tokens;
      std::function<void(std::size_t)> expand = [&](std::size_t p) {
        if (p == positions.size()) {
          auto t = concat_trim(work);
          if (seen.insert(t).second) texts.push_back(t);
          return;
        }
        for (const auto& choice : options[p]) {
          work[positions[p]] = choice;
          expand(p + 1);
        }
        work[positions[p]] = tokens[positions[p]];
      };
      expand(0);

      if (!best[i]) {
        const std::string parent = concat_trim(tokens);
        best[i] = Scored{parent, sq.score(parent), model.answer_likelihood(query.question, parent, answer)};
      }
      std::optional<Scored> winner;
      for (const auto& t : texts) {
        const double s = sq.score(t);
        if (!(s > out.similarity_gate)) continue;
        const double l = model.answer_likelihood(query.question, t, answer);
        // Strict comparisons keep the earliest candidate on full ties.
        if (!winner || l < winner->likelihood || (l == winner->likelihood && s > winner->similarity))
          winner = Scored{t, s, l};
      }
      if (winner && winner->likelihood <= best[i]->likelihood) best[i] = winner;
      trace_row.push_back(best[i]->likelihood);
    }
    out.likelihood_trace.push_back(trace_row);
  }

  for (std::size_t i = 0; i < best.size(); ++i)
    if (best[i] && best[i]->similarity > out.similarity_gate)
      out.final_set.push_back({i, best[i]->text, best[i]->similarity, best[i]->likelihood});
  std::sort(out.final_set.begin(), out.final_set.end(), [](const OracleSelection& a, const OracleSelection& b) {
    return a.likelihood != b.likelihood ? a.likelihood < b.likelihood : a.slot < b.slot;
  });
  return out;
}

AsrCount count_from_jsonl(const std::filesystem::path& path, std::size_t iteration) {
  AsrCount c;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto& ev = j["evaluation"];
    if (ev.is_null()) continue;
    if (j["status"] == "failed") {
      if (!ev["reader_failed"].get<bool>()) {
        ++c.answered;
        c.em_sum += ev["clean_em"].get<double>();
        c.f1_sum += ev["clean_f1"].get<double>();
      }
      continue;
    }
    for (const auto& it : ev["per_iteration"]) {
      if (it["iteration"].get<std::size_t>() != iteration) continue;
      if (!it["reader_failed"].get<bool>()) {
        ++c.answered;
        c.em_sum += it["em"].get<double>();
        c.f1_sum += it["f1"].get<double>();
      }
      for (const auto& p : it["pairs"]) {
        const bool r = p["s_malicious"].get<double>() - p["s_benign"].get<double>() > 0;
        const bool l = p["p_benign"].get<double>() - p["p_malicious"].get<double>() > 0;
        ++c.pairs;
        c.retrieval += r;
        c.likelihood += l;
        c.joint += r && l;
      }
    }
  }
  return c;
}

}  // namespace oracles
