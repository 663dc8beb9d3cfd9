#include "ragpoison/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "ragpoison/error.hpp"
#include "ragpoison/metrics.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

namespace {

constexpr std::uint64_t kGenerationTag = 0x67656e65726174ULL;
constexpr std::uint64_t kSubstitutionTag = 0x7375627374ULL;

// Alternatives at position j other than the emitted token.
std::vector<const std::string*> replacement_options(const Parent& parent, std::size_t j) {
  std::vector<const std::string*> out;
  for (const auto& alt : parent.trace.alternatives[j])
    if (alt.token != parent.trace.tokens[j]) out.push_back(&alt.token);
  return out;
}

void truncate_alternatives(TokenTrace& trace, std::size_t k) {
  for (std::size_t j = 0; j < trace.size(); ++j) {
    auto& alts = trace.alternatives[j];
    if (alts.size() <= k) continue;
    auto it = std::find_if(alts.begin(), alts.end(),
                           [&](const TokenAlternative& a) { return a.token == trace.tokens[j]; });
    if (static_cast<std::size_t>(it - alts.begin()) >= k) {
      TokenAlternative emitted = *it;
      alts.resize(k - 1);
      alts.push_back(std::move(emitted));
    } else {
      alts.resize(k);
    }
  }
}

ParentOutcome generate_parent(const QueryRecord& query, std::optional<std::string_view> source,
                              const AttackerModel& model, const PromptTemplate& prompt,
                              const AttackConfig& config, std::uint64_t seed) {
  ParentOutcome out;
  try {
    const std::string rendered = prompt.render(query.question, source);
    Generation gen = generate_with_candidates(model, rendered, generation_budget(config), seed);
    Parent p;
    p.trace = gen.trace.slice(0, config.max_passage_len);
    truncate_alternatives(p.trace, config.k);
    p.text = render_tokens(p.trace.tokens);
    p.fabricated_answer = std::string(text::trim(gen.fabricated_answer));
    if (p.text.empty()) throw FormatError("generated passage is empty", gen.text);
    out.parent = std::move(p);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

bool better(const CandidatePassage& a, std::size_t ia, const CandidatePassage& b, std::size_t ib) {
  if (*a.likelihood != *b.likelihood) return *a.likelihood < *b.likelihood;
  const double sa = a.similarity.value_or(-std::numeric_limits<double>::infinity());
  const double sb = b.similarity.value_or(-std::numeric_limits<double>::infinity());
  if (sa != sb) return sa > sb;
  return ia < ib;
}

}  // namespace

std::string_view to_string(AttackMode m) {
  switch (m) {
    case AttackMode::white_box: return "white_box";
    case AttackMode::black_box: return "black_box";
    case AttackMode::fully_black_box: return "fully_black_box";
  }
  return "black_box";
}

AttackMode attack_mode_from_string(std::string_view s) {
  if (s == "white_box") return AttackMode::white_box;
  if (s == "black_box") return AttackMode::black_box;
  if (s == "fully_black_box") return AttackMode::fully_black_box;
  throw ConfigError("unknown attack mode \"" + std::string(s) + "\"");
}

void AttackConfig::validate() const {
  if (m < 1) throw ConfigError("m must be >= 1");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (n_iter < 1) throw ConfigError("n_iter must be >= 1");
  if (!(pr_sub >= 0.0 && pr_sub <= 1.0)) throw ConfigError("pr_sub must lie in [0, 1]");
  if (max_passage_len < 1) throw ConfigError("max_passage_len must be >= 1");
  if (mode != AttackMode::white_box && similarity == SimilarityKind::retriever_cosine)
    throw ConfigError("the retriever's own similarity is only available in white_box mode");
  try {
    bm25.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Thresholds make_thresholds(std::span<const double> likelihoods, std::span<const double> similarities) {
  if (likelihoods.empty() || likelihoods.size() != similarities.size())
    throw std::domain_error("thresholds need equally many (>= 1) likelihoods and similarities");
  for (double v : likelihoods)
    if (!std::isfinite(v)) throw std::domain_error("non-finite likelihood");
  for (double v : similarities)
    if (!std::isfinite(v)) throw std::domain_error("non-finite similarity");
  Thresholds t;
  t.likelihoods.assign(likelihoods.begin(), likelihoods.end());
  t.similarities.assign(similarities.begin(), similarities.end());
  t.likelihood_gate = *std::max_element(likelihoods.begin(), likelihoods.end());
  t.similarity_gate = *std::min_element(similarities.begin(), similarities.end());
  return t;
}

Thresholds initialize(const QueryRecord& query, std::string_view answer,
                      std::span<const std::string> passages, const AttackerModel& model,
                      const PreparedQuery& similarity) {
  std::vector<double> l, s;
  for (const auto& d : passages) {
    l.push_back(score_answer_likelihood(model, query.question, d, answer));
    s.push_back(similarity.score(d));
  }
  return make_thresholds(l, s);
}

CandidatePassage as_candidate(const Parent& parent, std::size_t parent_index) {
  CandidatePassage c;
  c.text = parent.text;
  c.tokens = parent.trace.tokens;
  c.parent_index = parent_index;
  return c;
}

std::uint64_t query_seed(std::uint64_t root_seed, std::string_view query_id) {
  return hash_words({root_seed, fnv1a64(query_id)});
}

std::uint64_t generation_seed(std::uint64_t qs, std::size_t iteration, std::size_t slot) {
  return hash_words({qs, kGenerationTag, iteration, slot});
}

std::uint64_t substitution_seed(std::uint64_t qs, std::size_t iteration, std::size_t slot) {
  return hash_words({qs, kSubstitutionTag, iteration, slot});
}

std::uint64_t candidate_seed(std::uint64_t ss, std::size_t candidate_index) {
  return hash_words({ss, candidate_index});
}

std::size_t generation_budget(const AttackConfig& config) { return 2 * config.max_passage_len + 32; }

std::vector<ParentOutcome> generate_parents(const QueryRecord& query,
                                            std::span<const std::string> sources, std::size_t slots,
                                            const AttackerModel& model, const PromptTemplate& prompt,
                                            const AttackConfig& config, std::uint64_t qs,
                                            std::size_t iteration) {
  const std::size_t count = sources.empty() ? slots : sources.size();
  std::vector<ParentOutcome> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::optional<std::string_view> source;
    if (!sources.empty()) source = sources[i];
    out.push_back(generate_parent(query, source, model, prompt, config, generation_seed(qs, iteration, i)));
  }
  return out;
}

std::string fallback_fabricated_answer(const Parent& parent, const AttackPositions& positions) {
  if (parent.trace.size() == 0) return {};
  const std::size_t j = positions.positions.empty() ? 0 : positions.positions.front();
  for (const auto* tok : replacement_options(parent, j)) {
    auto t = text::trim(*tok);
    if (!t.empty()) return std::string(t);
  }
  return {};
}

CandidatePassage draw_candidate(const Parent& parent, std::size_t parent_index,
                                const AttackPositions& positions, double pr_sub,
                                RandomStream& stream) {
  CandidatePassage c = as_candidate(parent, parent_index);
  for (std::size_t j : positions.positions) {
    if (!(stream.uniform01() < pr_sub)) continue;
    const auto options = replacement_options(parent, j);
    if (options.empty()) continue;
    const std::string& replacement = *options[stream.uniform_index(options.size())];
    c.substitutions.push_back({j, c.tokens[j], replacement});
    c.tokens[j] = replacement;
  }
  c.text = render_tokens(c.tokens);
  return c;
}

std::size_t substitution_support(const Parent& parent, const AttackPositions& positions,
                                 double pr_sub, std::size_t cap) {
  if (pr_sub <= 0.0) return std::min<std::size_t>(1, cap);
  std::size_t total = 1;
  for (std::size_t j : positions.positions) {
    const std::size_t options = replacement_options(parent, j).size();
    const std::size_t factor = pr_sub >= 1.0 ? std::max<std::size_t>(options, 1) : options + 1;
    if (total > cap / factor) return cap;
    total *= factor;
  }
  return std::min(total, cap);
}

std::vector<CandidatePassage> substitute_tokens(const Parent& parent, std::size_t parent_index,
                                                const AttackPositions& positions,
                                                const AttackConfig& config, std::uint64_t seed) {
  if (positions.positions.empty()) {
    CandidatePassage c = as_candidate(parent, parent_index);
    c.degenerate = true;
    return {c};
  }
  for (std::size_t j : positions.positions)
    if (j >= parent.trace.size()) throw std::out_of_range("attack position beyond the parent");

  std::vector<CandidatePassage> out;
  std::unordered_set<std::string> seen;
  auto keep = [&](CandidatePassage c) {
    if (seen.insert(c.text).second) out.push_back(std::move(c));
  };

  if (substitution_support(parent, positions, config.pr_sub, config.n + 1) <= config.n) {
    // choices[p][0] == nullptr keeps the token.
    std::vector<std::vector<const std::string*>> choices;
    for (std::size_t j : positions.positions) {
      auto options = replacement_options(parent, j);
      std::vector<const std::string*> row;
      if (config.pr_sub < 1.0 || options.empty()) row.push_back(nullptr);
      if (config.pr_sub > 0.0) row.insert(row.end(), options.begin(), options.end());
      choices.push_back(std::move(row));
    }
    std::vector<std::size_t> digit(choices.size(), 0);
    while (true) {
      CandidatePassage c = as_candidate(parent, parent_index);
      for (std::size_t p = 0; p < choices.size(); ++p) {
        const std::string* r = choices[p][digit[p]];
        if (!r) continue;
        const std::size_t j = positions.positions[p];
        c.substitutions.push_back({j, c.tokens[j], *r});
        c.tokens[j] = *r;
      }
      c.text = render_tokens(c.tokens);
      keep(std::move(c));
      std::size_t p = choices.size();
      while (p > 0) {
        --p;
        if (++digit[p] < choices[p].size()) break;
        digit[p] = 0;
        if (p == 0) return out;
      }
      if (choices.empty()) return out;
    }
  }

  for (std::size_t c = 0; c < config.n; ++c) {
    RandomStream stream(candidate_seed(seed, c));
    keep(draw_candidate(parent, parent_index, positions, config.pr_sub, stream));
  }
  return out;
}

std::vector<CandidatePassage> filter_candidates(std::span<CandidatePassage> candidates,
                                                const PreparedQuery& similarity,
                                                const Thresholds& thresholds) {
  std::vector<CandidatePassage> out;
  for (auto& c : candidates) {
    if (!c.similarity) c.similarity = similarity.score(c.text);
    if (*c.similarity > thresholds.similarity_gate) out.push_back(c);
  }
  return out;
}

Selection select_by_likelihood(std::span<const CandidatePassage> survivors,
                               std::string_view question, std::string_view answer,
                               const AttackerModel& model, const CandidatePassage& incumbent) {
  Selection sel;
  std::optional<CandidatePassage> best;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    CandidatePassage c = survivors[i];
    try {
      c.likelihood = score_answer_likelihood(model, question, c.text, answer);
    } catch (const Error& e) {
      ++sel.dropped;
      std::clog << "warning: dropped candidate " << i << ": " << e.what() << '\n';
      continue;
    } catch (const std::domain_error& e) {
      ++sel.dropped;
      std::clog << "warning: dropped candidate " << i << ": " << e.what() << '\n';
      continue;
    }
    if (!best || better(c, i, *best, best_index)) {
      best = std::move(c);
      best_index = i;
    }
  }
  const double incumbent_l = incumbent.likelihood.value_or(std::numeric_limits<double>::infinity());
  if (!best || *best->likelihood > incumbent_l) {
    sel.chosen = incumbent;
    sel.kept_incumbent = true;
  } else {
    sel.chosen = std::move(*best);
  }
  return sel;
}

std::vector<MaliciousPassage> malicious_set_after(const AttackTranscript& t, std::size_t iteration) {
  std::vector<MaliciousPassage> out;
  if (iteration == 0 || iteration > t.iterations.size()) return out;
  for (const auto& rec : t.iterations[iteration - 1].slots) {
    if (!rec.selected || !rec.selected->similarity || !rec.selected->likelihood) continue;
    const auto& c = *rec.selected;
    if (!(*c.similarity > t.thresholds.similarity_gate)) continue;
    MaliciousPassage p;
    p.slot = rec.slot;
    p.text = c.text;
    p.similarity = *c.similarity;
    p.likelihood = *c.likelihood;
    p.retrieval_condition = true;
    p.likelihood_condition = p.likelihood < t.thresholds.likelihood_gate;
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(), [](const MaliciousPassage& a, const MaliciousPassage& b) {
    if (a.likelihood != b.likelihood) return a.likelihood < b.likelihood;
    return a.slot < b.slot;
  });
  return out;
}

AttackEngine::AttackEngine(const AttackerModel& attacker, const SimilarityBackend& retriever,
                           const SimilarityBackend* proxy, const EntityLocator& locator,
                           AttackConfig config)
    : attacker_(attacker),
      retriever_(retriever),
      proxy_(proxy),
      locator_(locator),
      config_(std::move(config)),
      rewrite_prompt_(PromptTemplate::builtin(config_.prompt_template_id)),
      query_only_prompt_(PromptTemplate::builtin("query-only-v1")) {
  config_.validate();
  if (retriever_.kind() != SimilarityKind::retriever_cosine)
    throw ConfigError("the retriever must be a retriever_cosine backend");
  if (config_.mode != AttackMode::white_box && proxy_ == nullptr)
    throw ConfigError("black-box modes need a substitute similarity backend");
  if (!rewrite_prompt_.uses_passage())
    throw ConfigError("prompt template " + config_.prompt_template_id + " has no {passage} placeholder");
}

const SimilarityBackend& AttackEngine::attack_similarity() const {
  return config_.mode == AttackMode::white_box ? retriever_ : *proxy_;
}

AttackTranscript AttackEngine::run(const QueryRecord& query, const KnowledgeBase& kb) const {
  AttackTranscript t;
  t.query_id = query.id;
  t.question = query.question;
  t.gold_answers = query.gold_answers;
  t.mode = config_.mode;
  t.config = config_;
  t.similarity = attack_similarity().describe();

  auto fail = [&](std::string why) {
    t.failed = true;
    t.failure = std::move(why);
    return t;
  };
  if (query.gold_answers.empty() || text::trim(query.gold_answers.front()).empty())
    return fail("query has no gold answer");
  const std::string& answer = query.gold_answers.front();
  const std::uint64_t qs = query_seed(config_.seed, query.id);
  const PreparedQuery similarity = attack_similarity().prepare(query.question);
  const bool query_only = config_.mode == AttackMode::fully_black_box;

  try {
    t.answer_entity_types = locate_answer_entities(locator_, answer);
  } catch (const Error& e) {
    return fail(std::string("answer annotation failed: ") + e.what());
  }

  std::vector<std::string> sources;
  if (!query_only) {
    for (const auto& r : retrieve_top_m(kb, query.question, retriever_, kb.size())) {
      const Passage& p = kb[r.index];
      if (p.is_malicious()) continue;
      sources.push_back(p.text);
      t.benign_parent_ids.push_back(p.id);
      if (sources.size() == config_.m) break;
    }
    if (sources.empty()) return fail("no benign passages to attack");
    try {
      t.thresholds = initialize(query, answer, sources, attacker_, similarity);
    } catch (const std::exception& e) {
      return fail(std::string("initialization failed: ") + e.what());
    }
  }
  const std::size_t slots = query_only ? config_.m : sources.size();

  std::vector<std::optional<CandidatePassage>> incumbent(slots);
  bool thresholds_ready = !query_only;
  for (std::size_t it = 1; it <= config_.n_iter; ++it) {
    std::vector<ParentOutcome> parents;
    for (std::size_t i = 0; i < slots; ++i) {
      std::optional<std::string_view> source;
      const PromptTemplate* prompt = &rewrite_prompt_;
      if (incumbent[i]) source = incumbent[i]->text;
      else if (!query_only) source = sources[i];
      else prompt = &query_only_prompt_;
      parents.push_back(
          generate_parent(query, source, attacker_, *prompt, config_, generation_seed(qs, it, i)));
    }

    if (!thresholds_ready) {
      std::vector<double> l, s;
      try {
        for (const auto& o : parents) {
          if (!o.parent) continue;
          l.push_back(score_answer_likelihood(attacker_, query.question, o.parent->text, answer));
          s.push_back(similarity.score(o.parent->text));
        }
      } catch (const std::exception& e) {
        return fail(std::string("initialization failed: ") + e.what());
      }
      if (l.empty()) return fail("all parent generations failed");
      t.thresholds = make_thresholds(l, s);
      thresholds_ready = true;
    }

    IterationRecord rec;
    rec.iteration = it;
    for (std::size_t i = 0; i < slots; ++i) {
      SlotRecord slot;
      slot.slot = i;
      slot.selected = incumbent[i];
      slot.kept_incumbent = incumbent[i].has_value();
      if (!parents[i].parent) {
        slot.error = parents[i].error;
        rec.slots.push_back(std::move(slot));
        continue;
      }
      const Parent& parent = *parents[i].parent;
      slot.generated = true;
      slot.parent_text = parent.text;
      try {
        const AttackPositions positions =
            find_attack_positions(locator_, parent.trace.tokens, t.answer_entity_types);
        slot.attack_positions = positions.positions;
        slot.fabricated_answer = parent.fabricated_answer.empty()
                                     ? fallback_fabricated_answer(parent, positions)
                                     : parent.fabricated_answer;
        CandidatePassage current;
        if (incumbent[i]) {
          current = *incumbent[i];
        } else {
          current = as_candidate(parent, i);
          current.similarity = similarity.score(current.text);
          current.likelihood = score_answer_likelihood(attacker_, query.question, current.text, answer);
        }
        auto candidates = substitute_tokens(parent, i, positions, config_, substitution_seed(qs, it, i));
        auto survivors = filter_candidates(candidates, similarity, t.thresholds);
        slot.candidate_count = candidates.size();
        slot.survivor_count = survivors.size();
        slot.degenerate = candidates.size() == 1 && candidates.front().degenerate;
        double sum = 0.0;
        for (const auto& c : candidates) sum += *c.similarity;
        slot.mean_candidate_similarity = sum / static_cast<double>(candidates.size());
        Selection sel = select_by_likelihood(survivors, query.question, answer, attacker_, current);
        slot.kept_incumbent = sel.kept_incumbent;
        slot.selected = sel.chosen;
        incumbent[i] = std::move(sel.chosen);
      } catch (const Error& e) {
        slot.error = e.what();
      } catch (const std::domain_error& e) {
        slot.error = e.what();
      }
      rec.slots.push_back(std::move(slot));
    }
    t.iterations.push_back(std::move(rec));
  }

  if (std::none_of(incumbent.begin(), incumbent.end(), [](const auto& c) { return c.has_value(); }))
    return fail("all parent generations failed");
  t.final_set = malicious_set_after(t, t.iterations.size());
  return t;
}

std::vector<Passage> malicious_passages(const AttackTranscript& t,
                                        std::span<const MaliciousPassage> set,
                                        const Embedder& retriever_embedder) {
  std::vector<Passage> out;
  for (const auto& m : set) {
    Passage p;
    p.id = t.query_id + "/malicious/" + std::to_string(m.slot);
    p.text = m.text;
    p.embedding = retriever_embedder.embed(m.text);
    p.provenance = Provenance::malicious;
    p.parent_query_id = t.query_id;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

struct RetrievedContext {
  std::vector<std::string> texts;
  std::vector<std::string> ids;
  std::vector<std::size_t> benign;  // kb indices of retrieved benign passages, rank order
  std::size_t malicious = 0;
};

RetrievedContext retrieve_context(const KnowledgeBase& kb, std::string_view question,
                                  const SimilarityBackend& retriever, std::size_t m) {
  RetrievedContext ctx;
  for (const auto& r : retrieve_top_m(kb, question, retriever, m)) {
    const Passage& p = kb[r.index];
    ctx.texts.push_back(p.text);
    ctx.ids.push_back(p.id);
    if (p.is_malicious()) ++ctx.malicious;
    else ctx.benign.push_back(r.index);
  }
  return ctx;
}

void evaluate_transcript(AttackTranscript& t, const KnowledgeBase& kb, const AttackEngine& engine,
                         const AttackerModel& reader) {
  const SimilarityBackend& retriever = engine.retriever();
  const std::size_t m = engine.config().m;
  const QueryRecord query{t.query_id, t.question, t.gold_answers};
  Evaluation ev;

  const RetrievedContext clean = retrieve_context(kb, query.question, retriever, m);
  try {
    ev.clean_answer = reader.answer(query.question, clean.texts);
    if (!t.gold_answers.empty()) {
      ev.clean_em = exact_match(ev.clean_answer, t.gold_answers);
      ev.clean_f1 = f1_score(ev.clean_answer, t.gold_answers);
    }
  } catch (const Error& e) {
    ev.reader_failed = true;
    std::clog << "warning: reader failed on " << t.query_id << ": " << e.what() << '\n';
  }

  if (!t.failed && !t.gold_answers.empty()) {
    const std::string& answer = t.gold_answers.front();
    const PreparedQuery rq = retriever.prepare(query.question);
    for (std::size_t it = 1; it <= t.iterations.size(); ++it) {
      IterationEvaluation ie;
      ie.iteration = it;
      const auto set = malicious_set_after(t, it);
      const KnowledgeBase poisoned =
          inject_passages(kb, malicious_passages(t, set, *retriever.embedder()));
      const RetrievedContext ctx = retrieve_context(poisoned, query.question, retriever, m);
      ie.retrieved_ids = ctx.ids;
      ie.malicious_retrieved = ctx.malicious;
      try {
        ie.answer = reader.answer(query.question, ctx.texts);
        ie.em = exact_match(ie.answer, t.gold_answers);
        ie.f1 = f1_score(ie.answer, t.gold_answers);
      } catch (const Error& e) {
        ie.reader_failed = true;
        std::clog << "warning: reader failed on " << t.query_id << ": " << e.what() << '\n';
      }

      for (const auto& slot : t.iterations[it - 1].slots) {
        if (!slot.selected) continue;
        const Passage* benign = nullptr;
        if (t.mode == AttackMode::fully_black_box) {
          if (slot.slot < clean.benign.size()) benign = &kb[clean.benign[slot.slot]];
        } else if (slot.slot < t.benign_parent_ids.size()) {
          benign = kb.find(t.benign_parent_ids[slot.slot]);
        }
        if (!benign) continue;
        PassagePair pair;
        pair.slot = slot.slot;
        pair.benign_id = benign->id;
        try {
          pair.s_benign = rq.score(*benign);
          pair.s_malicious = rq.score(slot.selected->text);
          pair.p_benign = score_answer_likelihood(reader, query.question, benign->text, answer);
          pair.p_malicious = score_answer_likelihood(reader, query.question, slot.selected->text, answer);
        } catch (const Error& e) {
          std::clog << "warning: pair " << t.query_id << "/" << slot.slot << " dropped: " << e.what() << '\n';
          continue;
        }
        ie.pairs.push_back(std::move(pair));
      }
      ev.per_iteration.push_back(std::move(ie));
    }
  }
  t.evaluation = std::move(ev);
}

}  // namespace

EndToEndResult end_to_end_attack(std::span<const QueryRecord> queries, const KnowledgeBase& kb,
                                 const AttackEngine& engine, const AttackerModel& reader,
                                 const EndToEndOptions& options) {
  if (!kb.fully_embedded()) throw ValidationError("end-to-end attack needs an embedded knowledge base");
  EndToEndResult result;
  result.transcripts.resize(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      try {
        AttackTranscript t = engine.run(queries[i], kb);
        evaluate_transcript(t, kb, engine, reader);
        result.transcripts[i] = std::move(t);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(queries.size(), 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

}  // namespace ragpoison
