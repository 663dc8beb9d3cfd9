#include "ragpoison/transcript.hpp"

#include <fstream>
#include <sstream>

#include "ragpoison/error.hpp"

namespace ragpoison {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

json candidate_json(const CandidatePassage& c) {
  json subs = json::array();
  for (const auto& s : c.substitutions)
    subs.push_back({{"position", s.position}, {"original", s.original}, {"replacement", s.replacement}});
  return {{"text", c.text},
          {"tokens", c.tokens},
          {"similarity", opt(c.similarity)},
          {"likelihood", opt(c.likelihood)},
          {"substitutions", std::move(subs)},
          {"parent_index", c.parent_index},
          {"degenerate", c.degenerate}};
}

CandidatePassage candidate_from(const json& j) {
  CandidatePassage c;
  c.text = j.at("text").get<std::string>();
  c.tokens = j.at("tokens").get<std::vector<std::string>>();
  c.similarity = opt_double(j, "similarity");
  c.likelihood = opt_double(j, "likelihood");
  for (const auto& s : j.at("substitutions"))
    c.substitutions.push_back({s.at("position").get<std::size_t>(), s.at("original").get<std::string>(),
                               s.at("replacement").get<std::string>()});
  c.parent_index = j.at("parent_index").get<std::size_t>();
  c.degenerate = j.at("degenerate").get<bool>();
  return c;
}

json slot_json(const SlotRecord& s) {
  return {{"slot", s.slot},
          {"generated", s.generated},
          {"error", s.error},
          {"parent_text", s.parent_text},
          {"fabricated_answer", s.fabricated_answer},
          {"attack_positions", s.attack_positions},
          {"candidate_count", s.candidate_count},
          {"survivor_count", s.survivor_count},
          {"mean_candidate_similarity", opt(s.mean_candidate_similarity)},
          {"degenerate", s.degenerate},
          {"kept_incumbent", s.kept_incumbent},
          {"selected", s.selected ? candidate_json(*s.selected) : json(nullptr)}};
}

SlotRecord slot_from(const json& j) {
  SlotRecord s;
  s.slot = j.at("slot").get<std::size_t>();
  s.generated = j.at("generated").get<bool>();
  s.error = j.at("error").get<std::string>();
  s.parent_text = j.at("parent_text").get<std::string>();
  s.fabricated_answer = j.at("fabricated_answer").get<std::string>();
  s.attack_positions = j.at("attack_positions").get<std::vector<std::size_t>>();
  s.candidate_count = j.at("candidate_count").get<std::size_t>();
  s.survivor_count = j.at("survivor_count").get<std::size_t>();
  s.mean_candidate_similarity = opt_double(j, "mean_candidate_similarity");
  s.degenerate = j.at("degenerate").get<bool>();
  s.kept_incumbent = j.at("kept_incumbent").get<bool>();
  if (!j.at("selected").is_null()) s.selected = candidate_from(j["selected"]);
  return s;
}

json malicious_json(const MaliciousPassage& p) {
  return {{"slot", p.slot},
          {"text", p.text},
          {"similarity", p.similarity},
          {"likelihood", p.likelihood},
          {"retrieval_condition", p.retrieval_condition},
          {"likelihood_condition", p.likelihood_condition}};
}

MaliciousPassage malicious_from(const json& j) {
  MaliciousPassage p;
  p.slot = j.at("slot").get<std::size_t>();
  p.text = j.at("text").get<std::string>();
  p.similarity = j.at("similarity").get<double>();
  p.likelihood = j.at("likelihood").get<double>();
  p.retrieval_condition = j.at("retrieval_condition").get<bool>();
  p.likelihood_condition = j.at("likelihood_condition").get<bool>();
  return p;
}

json evaluation_json(const Evaluation& e) {
  json per = json::array();
  for (const auto& ie : e.per_iteration) {
    json pairs = json::array();
    for (const auto& p : ie.pairs)
      pairs.push_back({{"slot", p.slot},
                       {"benign_id", p.benign_id},
                       {"s_benign", p.s_benign},
                       {"s_malicious", p.s_malicious},
                       {"p_benign", p.p_benign},
                       {"p_malicious", p.p_malicious}});
    per.push_back({{"iteration", ie.iteration},
                   {"reader_failed", ie.reader_failed},
                   {"answer", ie.answer},
                   {"em", ie.em},
                   {"f1", ie.f1},
                   {"malicious_retrieved", ie.malicious_retrieved},
                   {"retrieved_ids", ie.retrieved_ids},
                   {"pairs", std::move(pairs)}});
  }
  return {{"reader_failed", e.reader_failed},
          {"clean_answer", e.clean_answer},
          {"clean_em", e.clean_em},
          {"clean_f1", e.clean_f1},
          {"per_iteration", std::move(per)}};
}

Evaluation evaluation_from(const json& j) {
  Evaluation e;
  e.reader_failed = j.at("reader_failed").get<bool>();
  e.clean_answer = j.at("clean_answer").get<std::string>();
  e.clean_em = j.at("clean_em").get<double>();
  e.clean_f1 = j.at("clean_f1").get<double>();
  for (const auto& x : j.at("per_iteration")) {
    IterationEvaluation ie;
    ie.iteration = x.at("iteration").get<std::size_t>();
    ie.reader_failed = x.at("reader_failed").get<bool>();
    ie.answer = x.at("answer").get<std::string>();
    ie.em = x.at("em").get<double>();
    ie.f1 = x.at("f1").get<double>();
    ie.malicious_retrieved = x.at("malicious_retrieved").get<std::size_t>();
    ie.retrieved_ids = x.at("retrieved_ids").get<std::vector<std::string>>();
    for (const auto& p : x.at("pairs"))
      ie.pairs.push_back({p.at("slot").get<std::size_t>(), p.at("benign_id").get<std::string>(),
                          p.at("s_benign").get<double>(), p.at("s_malicious").get<double>(),
                          p.at("p_benign").get<double>(), p.at("p_malicious").get<double>()});
    e.per_iteration.push_back(std::move(ie));
  }
  return e;
}

}  // namespace

json to_json(const AttackConfig& c) {
  return {{"m", c.m},
          {"k", c.k},
          {"n", c.n},
          {"pr_sub", c.pr_sub},
          {"n_iter", c.n_iter},
          {"mode", to_string(c.mode)},
          {"similarity", to_string(c.similarity)},
          {"bm25_k1", c.bm25.k1},
          {"bm25_b", c.bm25.b},
          {"seed", c.seed},
          {"max_passage_len", c.max_passage_len},
          {"prompt_template_id", c.prompt_template_id}};
}

AttackConfig attack_config_from_json(const json& j, AttackConfig c) {
  if (!j.is_object()) throw ConfigError("attack config must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "m") c.m = v.get<std::size_t>();
      else if (key == "k") c.k = v.get<std::size_t>();
      else if (key == "n") c.n = v.get<std::size_t>();
      else if (key == "pr_sub") c.pr_sub = v.get<double>();
      else if (key == "n_iter") c.n_iter = v.get<std::size_t>();
      else if (key == "mode") c.mode = attack_mode_from_string(v.get<std::string>());
      else if (key == "similarity") c.similarity = similarity_kind_from_string(v.get<std::string>());
      else if (key == "bm25_k1") c.bm25.k1 = v.get<double>();
      else if (key == "bm25_b") c.bm25.b = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "max_passage_len") c.max_passage_len = v.get<std::size_t>();
      else if (key == "prompt_template_id") c.prompt_template_id = v.get<std::string>();
      else throw ConfigError("unknown attack config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad attack config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json to_json(const AttackTranscript& t) {
  json iterations = json::array();
  for (const auto& rec : t.iterations) {
    json slots = json::array();
    for (const auto& s : rec.slots) slots.push_back(slot_json(s));
    iterations.push_back({{"iteration", rec.iteration}, {"slots", std::move(slots)}});
  }
  json final_set = json::array();
  for (const auto& p : t.final_set) final_set.push_back(malicious_json(p));
  return {{"schema_version", t.schema_version},
          {"query_id", t.query_id},
          {"question", t.question},
          {"gold_answers", t.gold_answers},
          {"mode", to_string(t.mode)},
          {"similarity", t.similarity},
          {"config", to_json(t.config)},
          {"status", t.failed ? "failed" : "ok"},
          {"failure", t.failure},
          {"thresholds",
           {{"likelihood_gate", t.thresholds.likelihood_gate},
            {"similarity_gate", t.thresholds.similarity_gate},
            {"likelihoods", t.thresholds.likelihoods},
            {"similarities", t.thresholds.similarities}}},
          {"benign_parents", t.benign_parent_ids},
          {"answer_entity_types", t.answer_entity_types},
          {"iterations", std::move(iterations)},
          {"final", std::move(final_set)},
          {"evaluation", t.evaluation ? evaluation_json(*t.evaluation) : json(nullptr)}};
}

AttackTranscript transcript_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version"))
    throw ParseError("transcript has no schema_version");
  const int version = j["schema_version"].get<int>();
  if (version != kTranscriptSchemaVersion)
    throw ParseError("transcript schema_version " + std::to_string(version) + " is not the supported version " +
                     std::to_string(kTranscriptSchemaVersion));
  try {
    AttackTranscript t;
    t.schema_version = version;
    t.query_id = j.at("query_id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    t.mode = attack_mode_from_string(j.at("mode").get<std::string>());
    t.similarity = j.at("similarity").get<std::string>();
    t.config = attack_config_from_json(j.at("config"));
    t.failed = j.at("status").get<std::string>() == "failed";
    t.failure = j.at("failure").get<std::string>();
    const json& th = j.at("thresholds");
    t.thresholds.likelihood_gate = th.at("likelihood_gate").get<double>();
    t.thresholds.similarity_gate = th.at("similarity_gate").get<double>();
    t.thresholds.likelihoods = th.at("likelihoods").get<std::vector<double>>();
    t.thresholds.similarities = th.at("similarities").get<std::vector<double>>();
    t.benign_parent_ids = j.at("benign_parents").get<std::vector<std::string>>();
    for (const auto& l : j.at("answer_entity_types")) t.answer_entity_types.insert(l.get<std::string>());
    for (const auto& rec : j.at("iterations")) {
      IterationRecord r;
      r.iteration = rec.at("iteration").get<std::size_t>();
      for (const auto& s : rec.at("slots")) r.slots.push_back(slot_from(s));
      t.iterations.push_back(std::move(r));
    }
    for (const auto& p : j.at("final")) t.final_set.push_back(malicious_from(p));
    if (!j.at("evaluation").is_null()) t.evaluation = evaluation_from(j["evaluation"]);
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed transcript: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("malformed transcript: ") + e.what());
  }
}

void write_transcripts(std::ostream& out, std::span<const AttackTranscript> transcripts) {
  for (const auto& t : transcripts) out << to_json(t).dump() << '\n';
}

void write_transcripts(const std::filesystem::path& path, std::span<const AttackTranscript> transcripts) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    write_transcripts(out, transcripts);
    if (!out) throw Error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<AttackTranscript> read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::vector<AttackTranscript> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    try {
      out.push_back(transcript_from_json(j));
    } catch (const ParseError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

QueryResult query_result(const AttackTranscript& t, std::size_t iteration) {
  QueryResult r;
  r.query_id = t.query_id;
  if (!t.evaluation) return r;
  if (t.failed && !t.evaluation->reader_failed) {
    // Nothing was injected, so the reader saw the clean context.
    r.em = t.evaluation->clean_em;
    r.f1 = t.evaluation->clean_f1;
    return r;
  }
  for (const auto& ie : t.evaluation->per_iteration) {
    if (ie.iteration != iteration) continue;
    if (!ie.reader_failed) {
      r.em = ie.em;
      r.f1 = ie.f1;
    }
    for (const auto& p : ie.pairs) r.pairs.push_back({p.s_benign, p.s_malicious, p.p_benign, p.p_malicious});
  }
  return r;
}

}  // namespace ragpoison
