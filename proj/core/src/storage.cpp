// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/storage.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dtkg/codec.hpp"
#include "dtkg/error.hpp"
#include "dtkg/text.hpp"

namespace dtkg {

using nlohmann::json;

namespace {

json times_json(const TimeList& list) {
    auto out = json::array();
    for (const auto ts : list) out.push_back(ts.seconds);
    return out;
}

json key_json(const EntityKey& k) { return {{"name", k.name}, {"label", k.label}}; }

TimeList times_from(const json& v, std::string_view field) {
    if (!v.is_array()) throw Error(ErrorCode::kParse, fmt::format("'{}' must be an array of integers", field));
    TimeList out;
    for (const auto& item : v) {
        if (!item.is_number_integer()) {
            throw Error(ErrorCode::kParse, fmt::format("'{}' must be an array of integers", field));
        }
        out.insert(Timestamp{item.get<std::int64_t>()});
    }
    return out;
}

EntityKey key_from(const json& v) {
    return {v.at("name").get<std::string>(), v.at("label").get<std::string>()};
}

json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kParse, fmt::format("{}: {}", what, e.what()));
    }
}

// Runs `fn` and turns nlohmann access errors into parse errors.
template <typename Fn>
auto guarded(std::string_view what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, fmt::format("{}: {}", what, e.what()));
    }
}

Timestamp observed_at_from(const json& v) {
    if (v.is_number_integer()) return Timestamp{v.get<std::int64_t>()};
    if (v.is_string()) {
        if (const auto ts = parse_date(v.get<std::string>())) return *ts;
    }
    throw Error(ErrorCode::kParse, "observed_at must be an ISO-8601 date/time or UNIX seconds");
}

TimeList gold_times(const json& item, const char* key) {
    TimeList out;
    const auto it = item.find(key);
    if (it == item.end() || it->is_null()) return out;
    if (!it->is_array()) throw Error(ErrorCode::kParse, fmt::format("gold '{}' must be an array", key));
    for (const auto& v : *it) out.insert(observed_at_from(v));
    return out;
}

template <typename Parse>
auto load_lines(const std::filesystem::path& path, Parse&& parse) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
    std::vector<decltype(parse(std::string_view{}))> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(parse(line));
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("{}:{}: {}", path.string(), number, e.what()), e.detail());
        }
    }
    return out;
}

}  // namespace

std::string graph_to_json(const Tkg& graph) {
    json doc;
    doc["format_version"] = kGraphFormatVersion;
    auto entities = json::array();
    for (const auto& e : graph.entities) entities.push_back(key_json(e.key()));
    auto relations = json::array();
    for (const auto& r : graph.relations) {
        relations.push_back({{"subject", key_json(r.subject)},
                             {"predicate", r.predicate},
                             {"object", key_json(r.object)},
                             {"t_start", times_json(r.t_start)},
                             {"t_end", times_json(r.t_end)},
                             {"t_obs", times_json(r.t_obs)}});
    }
    doc["entities"] = std::move(entities);
    doc["relations"] = std::move(relations);
    return doc.dump(2) + "\n";
}

namespace {

Tkg raw_graph_from_json(std::string_view text) {
    const auto doc = parse_json(text, "graph document");
    return guarded("graph document", [&] {
        if (!doc.is_object()) throw Error(ErrorCode::kParse, "graph document must be a JSON object");
        const auto version = doc.at("format_version").get<int>();
        if (version != kGraphFormatVersion) {
            throw Error(ErrorCode::kParse,
                        fmt::format("unsupported format_version {} (this reader handles {})", version,
                                    kGraphFormatVersion));
        }
        Tkg g;
        for (const auto& e : doc.at("entities")) {
            g.entities.push_back({e.at("name").get<std::string>(), e.at("label").get<std::string>(), {}, {}});
        }
        for (const auto& r : doc.at("relations")) {
            g.relations.push_back({key_from(r.at("subject")), r.at("predicate").get<std::string>(),
                                   key_from(r.at("object")), times_from(r.at("t_start"), "t_start"),
                                   times_from(r.at("t_end"), "t_end"), times_from(r.at("t_obs"), "t_obs"), {}});
        }
        return g;
    });
}

Tkg finish_loaded(Tkg g) {
    require_valid(g);
    return canonicalize(std::move(g));
}

}  // namespace

Tkg graph_from_json(std::string_view json_text) { return finish_loaded(raw_graph_from_json(json_text)); }

std::filesystem::path sidecar_path(const std::filesystem::path& graph_path) {
    auto p = graph_path;
    p += ".emb.jsonl";
    return p;
}

void save_graph(const Tkg& graph, const std::filesystem::path& path, bool include_embeddings) {
    require_valid(graph);
    const auto canonical = canonicalize(graph);
    const auto sidecar = sidecar_path(path);
    if (include_embeddings) {
        std::string lines;
        for (const auto& e : canonical.entities) {
            if (e.name_embedding.empty() && e.label_embedding.empty()) continue;
            json rec = {{"kind", "entity"}, {"name", e.name}, {"label", e.label}};
            if (!e.name_embedding.empty()) rec["name_embedding"] = codec::encode_floats(e.name_embedding);
            if (!e.label_embedding.empty()) rec["label_embedding"] = codec::encode_floats(e.label_embedding);
            lines += rec.dump() + "\n";
        }
        for (std::size_t i = 0; i < canonical.relations.size(); ++i) {
            const auto& r = canonical.relations[i];
            if (r.predicate_embedding.empty()) continue;
            json rec = {{"kind", "relation"},
                        {"index", i},
                        {"predicate_embedding", codec::encode_floats(r.predicate_embedding)}};
            lines += rec.dump() + "\n";
        }
        write_file_atomic(sidecar, lines);
    } else {
        std::error_code ec;
        std::filesystem::remove(sidecar, ec);
    }
    write_file_atomic(path, graph_to_json(canonical));
}

Tkg load_graph(const std::filesystem::path& path) {
    auto g = raw_graph_from_json(read_text_file(path));
    const auto sidecar = sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        std::map<EntityKey, std::size_t> index;
        for (std::size_t i = 0; i < g.entities.size(); ++i) index.emplace(g.entities[i].key(), i);
        std::istringstream in(read_text_file(sidecar));
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (text::trim(line).empty()) continue;
            const auto where = fmt::format("{}:{}", sidecar.string(), number);
            const auto rec = parse_json(line, where);
            guarded(where, [&] {
                const auto kind = rec.at("kind").get<std::string>();
                if (kind == "entity") {
                    const auto it = index.find(EntityKey{rec.at("name").get<std::string>(),
                                                         rec.at("label").get<std::string>()});
                    if (it == index.end()) throw Error(ErrorCode::kParse, fmt::format("{}: unknown entity", where));
                    auto& e = g.entities[it->second];
                    if (rec.contains("name_embedding")) {
                        e.name_embedding = codec::decode_floats(rec.at("name_embedding").get<std::string>());
                    }
                    if (rec.contains("label_embedding")) {
                        e.label_embedding = codec::decode_floats(rec.at("label_embedding").get<std::string>());
                    }
                } else if (kind == "relation") {
                    const auto i = rec.at("index").get<std::size_t>();
                    if (i >= g.relations.size()) {
                        throw Error(ErrorCode::kParse, fmt::format("{}: relation index out of range", where));
                    }
                    g.relations[i].predicate_embedding =
                        codec::decode_floats(rec.at("predicate_embedding").get<std::string>());
                } else {
                    throw Error(ErrorCode::kParse, fmt::format("{}: unknown record kind '{}'", where, kind));
                }
                return 0;
            });
        }
    }
    return finish_loaded(std::move(g));
}

std::string mention_trace_to_json(const MentionTrace& trace) {
    auto entities = json::array();
    for (const auto& [mention, current] : trace.entities) {
        entities.push_back({{"mention", key_json(mention)}, {"current", key_json(current)}});
    }
    json doc = {{"entities", std::move(entities)}, {"predicates", trace.predicates}};
    return doc.dump(2) + "\n";
}

MentionTrace mention_trace_from_json(std::string_view text) {
    const auto doc = parse_json(text, "mention trace");
    return guarded("mention trace", [&] {
        MentionTrace t;
        for (const auto& e : doc.at("entities")) t.entities.emplace(key_from(e.at("mention")), key_from(e.at("current")));
        t.predicates = doc.at("predicates").get<std::map<std::string, std::string>>();
        return t;
    });
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
    }
    thread_local std::mt19937_64 rng{std::random_device{}()};
    auto tmp = path;
    tmp += fmt::format(".tmp-{:016x}", rng());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", tmp.string()));
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::kIo, fmt::format("short write to {}", tmp.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::kIo, fmt::format("cannot replace {}", path.string()));
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Document parse_corpus_line(std::string_view line) {
    const auto rec = parse_json(line, "corpus record");
    return guarded("corpus record", [&] {
        Document d{rec.at("doc_id").get<std::string>(), rec.at("text").get<std::string>(),
                   observed_at_from(rec.at("observed_at"))};
        if (d.doc_id.empty()) throw Error(ErrorCode::kParse, "doc_id must be non-empty");
        if (text::trim(d.text).empty()) throw Error(ErrorCode::kParse, fmt::format("document {} has no text", d.doc_id));
        return d;
    });
}

std::string corpus_line(const Document& doc) {
    return json{{"doc_id", doc.doc_id}, {"text", doc.text}, {"observed_at", doc.observed_at.seconds}}.dump();
}

std::vector<Document> load_corpus(const std::filesystem::path& path) { return load_lines(path, parse_corpus_line); }

GoldAnnotation parse_gold_line(std::string_view line) {
    const auto rec = parse_json(line, "gold record");
    return guarded("gold record", [&] {
        GoldAnnotation g;
        g.doc_id = rec.at("doc_id").get<std::string>();
        for (const auto& t : rec.value("gold_tuples", json::array())) {
            g.gold_tuples.push_back({normalize_name(t.at("subject").get<std::string>()),
                                     normalize_name(t.at("predicate").get<std::string>()),
                                     normalize_name(t.at("object").get<std::string>()), gold_times(t, "t_start"),
                                     gold_times(t, "t_end")});
        }
        std::sort(g.gold_tuples.begin(), g.gold_tuples.end());
        g.gold_tuples.erase(std::unique(g.gold_tuples.begin(), g.gold_tuples.end()), g.gold_tuples.end());
        const auto entity_clusters = rec.value("entity_clusters", json::object());
        const auto relation_clusters = rec.value("relation_clusters", json::object());
        for (const auto& [mention, label] : entity_clusters.items()) {
            g.entity_clusters.emplace(normalize_name(mention), label.get<std::string>());
        }
        for (const auto& [mention, label] : relation_clusters.items()) {
            g.relation_clusters.emplace(normalize_name(mention), label.get<std::string>());
        }
        return g;
    });
}

std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path) { return load_lines(path, parse_gold_line); }

std::string fact_line(const AtomicFact& fact) {
    return json{{"fact_id", fact.fact_id},
                {"text", fact.text},
                {"observed_at", fact.observed_at.seconds},
                {"doc_id", fact.doc_id},
                {"chunk_index", fact.chunk_index}}
        .dump();
}

AtomicFact parse_fact_line(std::string_view line) {
    const auto rec = parse_json(line, "fact record");
    return guarded("fact record", [&] {
        return AtomicFact{rec.at("fact_id").get<std::string>(), rec.at("text").get<std::string>(),
                          observed_at_from(rec.at("observed_at")), rec.value("doc_id", std::string()),
                          rec.value("chunk_index", std::size_t{0})};
    });
}

std::vector<AtomicFact> load_facts(const std::filesystem::path& path) { return load_lines(path, parse_fact_line); }

std::string batches_manifest_json(const std::vector<ObservationBatch>& batches) {
    auto list = json::array();
    for (const auto& b : batches) {
        auto ids = json::array();
        for (const auto& d : b.documents) ids.push_back(d.doc_id);
        list.push_back({{"observed_at", b.observed_at.seconds},
                        {"date", format_iso_date(b.observed_at)},
                        {"documents", std::move(ids)}});
    }
    return json{{"batches", std::move(list)}, {"count", batches.size()}}.dump(2) + "\n";
}

namespace {

json timings_json(const StageTimings& t) {
    return {{"chunk_ms", t.chunk_ms},
            {"decompose_ms", t.decompose_ms},
            {"extract_ms", t.extract_ms},
            {"merge_ms", t.merge_ms},
            {"update_ms", t.update_ms}};
}

}  // namespace

std::string stream_report_to_json(const StreamResult& result, BackendKind backend) {
    auto batches = json::array();
    for (const auto& r : result.reports) {
        batches.push_back({{"observed_at", r.observed_at.seconds},
                           {"date", format_iso_date(r.observed_at)},
                           {"documents", r.documents},
                           {"chunks", r.chunks},
                           {"oversized_chunks", r.oversized_chunks},
                           {"facts", r.facts},
                           {"decompose_failures", r.decompose_failures},
                           {"extraction_failures", r.extraction_failures},
                           {"atomic_graphs", r.atomic_graphs},
                           {"extracted_relations", r.extracted_relations},
                           {"merge_rounds", r.merge.rounds},
                           {"binary_merges", r.merge.binary_merges},
                           {"timings", timings_json(r.timings)},
                           {"errors", r.errors}});
    }
    return json{{"backend", to_string(backend)},
                {"batches", std::move(batches)},
                {"resumed_batches", result.resumed_batches},
                {"stopped_early", result.stopped_early},
                {"entities", result.dtkg.entities.size()},
                {"relations", result.dtkg.relations.size()}}
               .dump(2) +
           "\n";
}

std::string latency_report_to_json(const LatencyReport& r) {
    return json{{"backend", to_string(r.backend)},
                {"batches", r.batches},
                {"facts", r.facts},
                {"relations", r.relations},
                {"stages", timings_json(r.stages)},
                {"total_ms", r.total_ms},
                {"merge_share_percent", r.merge_share_percent}}
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------------------------------------------------------
// Config

std::map<std::string, std::string> parse_config(std::string_view input) {
    std::map<std::string, std::string> out;
    std::string section;
    std::istringstream in{std::string(input)};
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        std::string_view line = raw;
        // Strip comments outside of quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = text::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::kConfig, fmt::format("config line {}: bad section", number));
            section = std::string(text::trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorCode::kConfig, fmt::format("config line {}: expected key = value", number));
        const auto key = std::string(text::trim(line.substr(0, eq)));
        auto value = std::string(text::trim(line.substr(eq + 1)));
        if (key.empty()) throw Error(ErrorCode::kConfig, fmt::format("config line {}: empty key", number));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::kConfig, fmt::format("config {}: '{}' is not a number", key, v));
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw Error(ErrorCode::kConfig, fmt::format("config {}: '{}' is not a non-negative integer", key, v));
    }
    return out;
}

}  // namespace

void apply_config(PipelineConfig& c, const std::map<std::string, std::string>& values) {
    for (const auto& [key, v] : values) {
        if (key == "pipeline.max_chunk_tokens") {
            c.max_chunk_tokens = to_size(key, v);
        } else if (key == "pipeline.extraction_batch_size") {
            c.extraction_batch_size = to_size(key, v);
        } else if (key == "pipeline.granularity") {
            c.granularity = parse_granularity(v);
        } else if (key == "pipeline.failure_budget") {
            c.failure_budget = to_double(key, v);
        } else if (key == "pipeline.checkpoint_dir") {
            c.checkpoint_dir = v;
        } else if (key == "pipeline.prompt_dir") {
            c.prompt_dir = v;
        } else if (key == "merge.workers") {
            c.merge.workers = to_size(key, v);
        } else if (key == "merge.theta_entity") {
            c.merge.similarity.theta_entity = to_double(key, v);
        } else if (key == "merge.theta_relation") {
            c.merge.similarity.theta_relation = to_double(key, v);
        } else if (key == "merge.lambda") {
            c.merge.similarity.lambda = to_double(key, v);
        } else if (key == "merge.beta") {
            c.merge.similarity.beta = to_double(key, v);
        } else if (key == "backend.kind") {
            c.backend.kind = parse_backend_kind(v);
        } else if (key == "backend.endpoint") {
            c.backend.endpoint = v;
        } else if (key == "backend.model_id") {
            c.backend.model_id = v;
        } else if (key == "backend.api_key_env_var") {
            c.backend.api_key_env_var = v;
        } else if (key == "backend.max_attempts") {
            c.backend.retry.max_attempts = static_cast<int>(to_size(key, v));
        } else if (key == "backend.base_backoff_ms") {
            c.backend.retry.base_backoff = std::chrono::milliseconds(to_size(key, v));
        } else if (key == "embedding.kind") {
            c.embedding.kind = parse_embedding_kind(v);
        } else if (key == "embedding.dimension") {
            c.embedding.mock_dimension = to_size(key, v);
        } else if (key == "embedding.endpoint") {
            c.embedding.http.endpoint = v;
        } else if (key == "embedding.model_id") {
            c.embedding.http.model_id = v;
        } else if (key == "embedding.api_key_env_var") {
            c.embedding.http.api_key_env_var = v;
        } else if (key == "embedding.max_batch") {
            c.embedding.http.max_batch = to_size(key, v);
        } else if (key == "embedding.cache_path") {
            c.embedding.cache_path = v;
        } else {
            throw Error(ErrorCode::kConfig, fmt::format("unknown config key '{}'", key));
        }
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    PipelineConfig c;
    c.backend = BackendConfig::from_env(BackendKind::kMock);
    c.embedding.http = EmbeddingEndpointConfig::from_env();
    apply_config(c, parse_config(read_text_file(path)));
    c.validate();
    return c;
}

}  // namespace dtkg
