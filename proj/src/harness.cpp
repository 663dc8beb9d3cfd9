#include "ragpoison/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ragpoison/error.hpp"
#include "ragpoison/http_backend.hpp"
#include "ragpoison/locator.hpp"
#include "ragpoison/metrics.hpp"
#include "ragpoison/text.hpp"
#include "ragpoison/transcript.hpp"

namespace ragpoison {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string value_label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

fs::path resolve(const json& v, const fs::path& base) {
  fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> keys, std::string_view where) {
  for (const auto& [k, v] : obj.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown key \"" + k + "\" in " + std::string(where));
}

EmbedderSpec parse_embedder(const json& j, EmbedderSpec spec, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  reject_unknown(j, {"kind", "dim", "salt", "endpoint", "model"}, where);
  if (j.contains("kind")) spec.kind = j["kind"].get<std::string>();
  if (j.contains("dim")) spec.dim = j["dim"].get<std::size_t>();
  if (j.contains("salt")) spec.salt = j["salt"].get<std::string>();
  if (j.contains("endpoint")) spec.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("model")) spec.model = j["model"].get<std::string>();
  if (spec.kind != "mock_hash" && spec.kind != "http" && spec.kind != "sidecar")
    throw ConfigError("unknown embedder kind \"" + spec.kind + "\" in " + std::string(where));
  if (spec.dim == 0) throw ConfigError(std::string(where) + ".dim must be positive");
  return spec;
}

ModelSpec parse_model(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  reject_unknown(j, {"kind", "endpoint", "model", "likelihood_normalization"}, where);
  ModelSpec spec;
  if (j.contains("kind")) spec.kind = j["kind"].get<std::string>();
  if (j.contains("endpoint")) spec.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("model")) spec.model = j["model"].get<std::string>();
  if (j.contains("likelihood_normalization"))
    spec.normalization = likelihood_normalization_from_string(j["likelihood_normalization"].get<std::string>());
  if (spec.kind != "mock_overlap" && spec.kind != "http")
    throw ConfigError("unknown model kind \"" + spec.kind + "\" in " + std::string(where));
  return spec;
}

HttpEndpoint endpoint_for(const std::string& configured, std::string_view default_prefix) {
  const std::string url = configured.empty() ? env_or(kBaseUrlEnv) : configured;
  if (url.empty())
    throw ConfigError(std::string("no endpoint configured and ") + kBaseUrlEnv + " is unset");
  return HttpEndpoint::parse(url, env_or(kApiKeyEnv), default_prefix);
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderSpec& spec, Backends& b) {
  if (spec.kind == "mock_hash") return std::make_shared<MockHashEmbedder>(spec.dim, spec.salt);
  if (spec.kind == "http") {
    auto e = std::make_shared<HttpEmbedder>(endpoint_for(spec.endpoint, "/v1"), spec.model, spec.dim);
    b.readiness_checks.push_back([e] { e->check_ready(); });
    return e;
  }
  auto e = std::make_shared<SidecarEmbedder>(endpoint_for(spec.endpoint, ""), spec.dim);
  b.readiness_checks.push_back([e] { e->check_ready(); });
  return e;
}

std::shared_ptr<const AttackerModel> make_model(const ModelSpec& spec, std::size_t top_k, Backends& b) {
  if (spec.kind == "mock_overlap") return std::make_shared<MockOverlapAttacker>(top_k);
  auto m = std::make_shared<HttpAttackerModel>(endpoint_for(spec.endpoint, "/v1"), spec.model, top_k,
                                               spec.normalization);
  b.readiness_checks.push_back([m] { m->check_ready(); });
  return m;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << contents;
    if (!out) throw Error("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

struct RunInput {
  fs::path transcripts;
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;
};

RunInput describe_run(const fs::path& transcripts) {
  RunInput r;
  r.transcripts = transcripts;
  const fs::path dir = transcripts.parent_path();
  r.name = dir.filename().string();
  const fs::path meta = dir / "run.json";
  if (fs::exists(meta)) {
    std::ifstream in(meta);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(meta.string() + ": " + e.what());
    }
    if (j.contains("run")) r.name = j["run"].get<std::string>();
    if (j.contains("params"))
      for (const auto& [k, v] : j["params"].items()) r.params.emplace_back(k, value_label(v));
  }
  return r;
}

}  // namespace

std::string SweepPoint::name() const {
  if (params.empty()) return "default";
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += "__";
    out += k + "=" + value_label(v);
  }
  return out;
}

AttackConfig SweepPoint::apply(const AttackConfig& base) const {
  json overrides = json::object();
  for (const auto& [k, v] : params) overrides[k] = v;
  return attack_config_from_json(overrides, base);
}

json load_config_document(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("--set expects KEY=VALUE, got \"" + std::string(assignment) + "\"");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("empty segment in --set key \"" + key + "\"");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    json& child = (*node)[part];
    if (!child.is_object()) child = json::object();
    node = &child;
    start = dot + 1;
  }
}

SweepAxis parse_sweep_arg(std::string_view arg) {
  const auto eq = arg.find('=');
  if (eq == std::string_view::npos) throw ConfigError("--sweep expects AXIS=v1,v2,...");
  SweepAxis axis;
  axis.name = std::string(arg.substr(0, eq));
  if (std::find(std::begin(kSweepAxes), std::end(kSweepAxes), axis.name) == std::end(kSweepAxes))
    throw ConfigError("unknown sweep axis \"" + axis.name + "\"");
  std::string_view rest = arg.substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string item(text::trim(rest.substr(0, comma)));
    if (item.empty()) throw ConfigError("empty value in --sweep " + axis.name);
    try {
      axis.values.push_back(json::parse(item));
    } catch (const json::parse_error&) {
      axis.values.emplace_back(item);
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return axis;
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    reject_unknown(doc,
                   {"corpus", "queries", "store_dir", "output_dir", "jobs", "attack", "retriever",
                    "proxy_embedder", "attacker", "reader", "locator", "sweep"},
                   "config");
    if (doc.contains("corpus")) c.corpus = resolve(doc["corpus"], base_dir);
    if (doc.contains("queries")) c.queries = resolve(doc["queries"], base_dir);
    c.store_dir = doc.contains("store_dir") ? resolve(doc["store_dir"], base_dir) : base_dir / "store";
    c.output_dir = doc.contains("output_dir") ? resolve(doc["output_dir"], base_dir) : base_dir / "runs";
    if (doc.contains("jobs")) c.jobs = doc["jobs"].get<std::size_t>();
    if (c.jobs == 0) throw ConfigError("jobs must be >= 1");
    if (doc.contains("attack")) c.attack = attack_config_from_json(doc["attack"]);
    if (doc.contains("retriever")) c.retriever = parse_embedder(doc["retriever"], c.retriever, "retriever");
    if (doc.contains("proxy_embedder"))
      c.proxy_embedder = parse_embedder(doc["proxy_embedder"], c.proxy_embedder, "proxy_embedder");
    if (doc.contains("attacker")) c.attacker = parse_model(doc["attacker"], "attacker");
    if (doc.contains("reader")) c.reader = parse_model(doc["reader"], "reader");
    if (doc.contains("locator")) {
      const json& l = doc["locator"];
      reject_unknown(l, {"kind", "gazetteer_dir", "endpoint"}, "locator");
      if (l.contains("kind")) c.locator.kind = l["kind"].get<std::string>();
      if (l.contains("gazetteer_dir")) c.locator.gazetteer_dir = resolve(l["gazetteer_dir"], base_dir);
      if (l.contains("endpoint")) c.locator.endpoint = l["endpoint"].get<std::string>();
      if (c.locator.kind != "rules" && c.locator.kind != "sidecar")
        throw ConfigError("unknown locator kind \"" + c.locator.kind + "\"");
    }
    if (doc.contains("sweep")) {
      const json& s = doc["sweep"];
      if (!s.is_object()) throw ConfigError("sweep must map axis names to value lists");
      for (const auto& [name, values] : s.items()) {
        if (std::find(std::begin(kSweepAxes), std::end(kSweepAxes), name) == std::end(kSweepAxes))
          throw ConfigError("unknown sweep axis \"" + name + "\"");
        if (!values.is_array() || values.empty())
          throw ConfigError("sweep axis " + name + " needs a non-empty list");
        c.sweep.push_back({name, std::vector<json>(values.begin(), values.end())});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.attack.validate();
  for (const auto& p : sweep_points(c.sweep)) p.apply(c.attack).validate();
  return c;
}

std::vector<SweepPoint> sweep_points(std::span<const SweepAxis> axes) {
  std::vector<SweepPoint> out{SweepPoint{}};
  for (const auto& axis : axes) {
    std::vector<SweepPoint> next;
    for (const auto& p : out)
      for (const auto& v : axis.values) {
        SweepPoint q = p;
        q.params.emplace_back(axis.name, v);
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

Backends build_backends(const RunConfig& config) {
  Backends b;
  b.retriever_embedder = make_embedder(config.retriever, b);
  b.proxy_embedder = make_embedder(config.proxy_embedder, b);
  b.attacker = make_model(config.attacker, config.attack.k, b);
  b.reader = make_model(config.reader, config.attack.k, b);
  if (config.locator.kind == "rules") {
    if (config.locator.gazetteer_dir.empty()) {
      b.locator = std::make_shared<RuleBasedLocator>();
    } else {
      const auto& dir = config.locator.gazetteer_dir;
      const fs::path stop = dir / "stopwords.txt";
      b.locator = std::make_shared<RuleBasedLocator>(RuleBasedLocator::from_files(
          dir / "locations.txt", dir / "persons.txt", fs::exists(stop) ? stop : fs::path{}));
    }
  } else {
    auto loc = std::make_shared<SidecarNerLocator>(endpoint_for(config.locator.endpoint, ""));
    b.readiness_checks.push_back([loc] { loc->check_ready(); });
    b.locator = loc;
  }
  return b;
}

void check_backends(const Backends& backends) {
  for (const auto& check : backends.readiness_checks) check();
}

SimilarityBackend make_attack_similarity(const AttackConfig& config, const Backends& backends,
                                         const KnowledgeBase& kb) {
  switch (config.similarity) {
    case SimilarityKind::retriever_cosine:
      return SimilarityBackend::retriever_cosine(backends.retriever_embedder);
    case SimilarityKind::proxy_embedding_cosine:
      return SimilarityBackend::proxy_cosine(backends.proxy_embedder);
    case SimilarityKind::bm25:
      return SimilarityBackend::bm25(std::make_shared<Bm25Stats>(Bm25Stats::from_kb(kb)), config.bm25);
    case SimilarityKind::rouge2:
      return SimilarityBackend::rouge2();
  }
  throw ConfigError("unsupported similarity kind");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BackendError*>(&e)) return 3;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const StoreError*>(&e) || dynamic_cast<const FormatError*>(&e))
    return 2;
  return 1;
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  if (config.corpus.empty()) throw ConfigError("config has no corpus path");
  Backends backends = build_backends(config);
  if (config.retriever.kind != "mock_hash") {
    const auto& e = backends.retriever_embedder;
    if (auto* h = dynamic_cast<const HttpEmbedder*>(e.get())) h->check_ready();
    if (auto* s = dynamic_cast<const SidecarEmbedder*>(e.get())) s->check_ready();
  }
  const KnowledgeBase kb = embed_corpus(load_corpus(config.corpus, config.attack.max_passage_len),
                                        *backends.retriever_embedder);
  persist_store(kb, config.store_dir);
  out << "ingested " << kb.size() << " passages, dim " << kb.dim() << " -> " << config.store_dir.string()
      << '\n';
}

std::vector<fs::path> cmd_attack(const RunConfig& config, std::ostream& out) {
  if (config.queries.empty()) throw ConfigError("config has no queries path");
  const KnowledgeBase kb = load_store(config.store_dir);
  const auto queries = load_queries(config.queries);
  Backends backends = build_backends(config);
  check_backends(backends);
  if (kb.dim() != backends.retriever_embedder->dim())
    throw ValidationError("store dim " + std::to_string(kb.dim()) + " does not match retriever dim " +
                          std::to_string(backends.retriever_embedder->dim()));

  const SimilarityBackend retriever = SimilarityBackend::retriever_cosine(backends.retriever_embedder);
  std::vector<fs::path> written;
  for (const auto& point : sweep_points(config.sweep)) {
    const AttackConfig attack = point.apply(config.attack);
    const SimilarityBackend similarity = make_attack_similarity(attack, backends, kb);
    const AttackEngine engine(*backends.attacker, retriever,
                              attack.mode == AttackMode::white_box ? nullptr : &similarity,
                              *backends.locator, attack);
    const auto result = end_to_end_attack(queries, kb, engine, *backends.reader, {.jobs = config.jobs});

    const fs::path dir = config.output_dir / point.name();
    const fs::path path = dir / "transcripts.jsonl";
    write_transcripts(path, result.transcripts);
    json params = json::object();
    for (const auto& [k, v] : point.params) params[k] = v;
    write_file(dir / "run.json",
               json{{"run", point.name()}, {"params", params}, {"config", to_json(attack)}}.dump(2) + "\n");
    written.push_back(path);

    out << "run " << point.name() << ": " << result.transcripts.size() << " queries\n";
    for (const auto& t : result.transcripts) {
      out << "  " << t.query_id << ' ' << (t.failed ? "failed" : "ok");
      if (t.failed) {
        out << " (" << t.failure << ")\n";
        continue;
      }
      std::size_t flagged = 0;
      for (const auto& p : t.final_set) flagged += p.likelihood_condition;
      out << " emitted=" << t.final_set.size() << " success=" << flagged;
      if (!t.final_set.empty())
        out << " best_s=" << fixed(t.final_set.front().similarity, 4)
            << " best_l=" << fixed(t.final_set.front().likelihood, 4);
      out << " s_gate=" << fixed(t.thresholds.similarity_gate, 4)
          << " l_gate=" << fixed(t.thresholds.likelihood_gate, 4) << '\n';
    }
    out << "  -> " << path.string() << '\n';
  }
  return written;
}

std::vector<fs::path> cmd_evaluate(std::span<const fs::path> inputs, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else if (fs::is_directory(in)) {
      if (fs::exists(in / "transcripts.jsonl")) {
        files.push_back(in / "transcripts.jsonl");
        continue;
      }
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in))
        if (entry.is_directory() && fs::exists(entry.path() / "transcripts.jsonl"))
          found.push_back(entry.path() / "transcripts.jsonl");
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      throw ValidationError("no transcripts: " + in.string() + " does not exist");
    }
  }
  if (files.empty()) throw ValidationError("no transcripts found");

  std::vector<fs::path> written;
  for (const auto& file : files) {
    const RunInput run = describe_run(file);
    const auto transcripts = read_transcripts(file);
    if (transcripts.empty()) throw ValidationError("no transcripts in " + file.string());
    std::size_t iterations = 0;
    for (const auto& t : transcripts) iterations = std::max(iterations, t.config.n_iter);

    std::vector<ReportRow> rows;
    for (std::size_t it = 1; it <= iterations; ++it) {
      std::vector<QueryResult> results;
      for (const auto& t : transcripts) results.push_back(query_result(t, it));
      ReportRow row;
      row.keys.emplace_back("run", run.name);
      for (const auto& p : run.params) row.keys.push_back(p);
      row.keys.emplace_back("iteration", std::to_string(it));
      row.report = aggregate(results);
      rows.push_back(std::move(row));
    }
    std::ostringstream csv;
    write_metrics_csv(csv, rows);
    const fs::path dir = file.parent_path();
    write_file(dir / "metrics.csv", csv.str());
    const std::string table = format_metrics_table(rows);
    write_file(dir / "metrics.txt", table);
    out << table << "  -> " << (dir / "metrics.csv").string() << '\n';
    written.push_back(dir / "metrics.csv");
  }
  return written;
}

void cmd_report(std::span<const fs::path> inputs, const fs::path& out_dir, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::recursive_directory_iterator(in))
        if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      throw ValidationError(in.string() + " does not exist");
    }
  }
  if (files.empty()) throw ValidationError("no metrics files found");

  // Row = column name -> cell, in file order.
  std::vector<std::map<std::string, std::string>> rows;
  std::vector<std::string> key_columns;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot read " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(file.string() + ": empty metrics file");
    const auto header = parse_csv_line(line);
    const auto first_metric = std::find(header.begin(), header.end(), std::string(kMetricColumns[0]));
    if (first_metric == header.end()) throw ParseError(file.string() + ": no ASR_R column");
    for (auto it = header.begin(); it != first_metric; ++it)
      if (std::find(key_columns.begin(), key_columns.end(), *it) == key_columns.end()) key_columns.push_back(*it);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      const auto cells = parse_csv_line(line);
      if (cells.size() != header.size())
        throw ParseError(file.string(), lineno, "expected " + std::to_string(header.size()) + " cells");
      std::map<std::string, std::string> row;
      for (std::size_t c = 0; c < header.size(); ++c) row[header[c]] = cells[c];
      rows.push_back(std::move(row));
    }
  }
  // iteration last among keys so row groups read run, params, iteration.
  std::stable_partition(key_columns.begin(), key_columns.end(), [](const std::string& k) { return k != "iteration"; });

  std::ostringstream md;
  md << "|";
  for (const auto& k : key_columns) md << ' ' << k << " |";
  for (auto c : kMetricColumns) md << ' ' << c << " |";
  md << "\n|";
  for (std::size_t i = 0; i < key_columns.size(); ++i) md << "---|";
  for (std::size_t i = 0; i < std::size(kMetricColumns); ++i) md << "---:|";
  md << '\n';
  for (const auto& row : rows) {
    md << "|";
    for (const auto& k : key_columns) {
      auto it = row.find(k);
      md << ' ' << (it == row.end() || it->second.empty() ? "-" : it->second) << " |";
    }
    for (auto c : kMetricColumns) md << ' ' << fixed(std::stod(row.at(std::string(c))), 1) << " |";
    md << '\n';
  }

  // Long format: one line per (row, axis, metric). Sweep axes use each run's
  // final iteration; the iteration axis uses every row.
  std::map<std::string, std::string> last_iteration;
  for (const auto& row : rows) {
    auto run = row.count("run") ? row.at("run") : "";
    auto it = row.count("iteration") ? row.at("iteration") : "";
    if (!last_iteration.count(run) || std::stoul(it) > std::stoul(last_iteration[run])) last_iteration[run] = it;
  }
  std::ostringstream plot;
  plot << "run,axis,x,metric,y\n";
  for (const auto& row : rows) {
    const std::string run = row.count("run") ? row.at("run") : "";
    const std::string iteration = row.count("iteration") ? row.at("iteration") : "";
    for (const auto& k : key_columns) {
      if (k == "run") continue;
      if (k != "iteration" && iteration != last_iteration[run]) continue;
      auto v = row.find(k);
      if (v == row.end() || v->second.empty()) continue;
      for (auto c : kMetricColumns)
        plot << run << ',' << k << ',' << v->second << ',' << c << ',' << row.at(std::string(c)) << '\n';
    }
  }

  write_file(out_dir / "summary.md", md.str());
  write_file(out_dir / "plot.csv", plot.str());
  out << md.str() << "  -> " << (out_dir / "summary.md").string() << ", " << (out_dir / "plot.csv").string()
      << '\n';
}

}  // namespace ragpoison
