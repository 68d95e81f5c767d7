// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/pipeline.hpp"

#include <chrono>
#include <map>
#include <system_error>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dtkg/concurrency.hpp"
#include "dtkg/error.hpp"
#include "dtkg/storage.hpp"

namespace dtkg {

std::string_view to_string(Granularity g) noexcept { return g == Granularity::kDay ? "day" : "exact"; }

Granularity parse_granularity(std::string_view s) {
    if (s == "day") return Granularity::kDay;
    if (s == "exact") return Granularity::kExact;
    throw Error(ErrorCode::kConfig, fmt::format("unknown granularity '{}' (expected day or exact)", s));
}

std::string_view to_string(EmbeddingKind kind) noexcept { return kind == EmbeddingKind::kMock ? "mock" : "http"; }

EmbeddingKind parse_embedding_kind(std::string_view s) {
    if (s == "mock") return EmbeddingKind::kMock;
    if (s == "http" || s == "live") return EmbeddingKind::kHttp;
    throw Error(ErrorCode::kConfig, fmt::format("unknown embedding provider '{}' (expected mock or http)", s));
}

std::vector<ObservationBatch> group_by_observation(const std::vector<Document>& docs, Granularity granularity) {
    std::map<Timestamp, std::vector<Document>> groups;
    for (const auto& d : docs) {
        const auto key = granularity == Granularity::kDay ? truncate_to_day(d.observed_at) : d.observed_at;
        auto copy = d;
        copy.observed_at = key;
        groups[key].push_back(std::move(copy));
    }
    std::vector<ObservationBatch> out;
    out.reserve(groups.size());
    for (auto& [key, list] : groups) out.push_back({key, std::move(list)});
    return out;
}

void PipelineConfig::validate() const {
    if (max_chunk_tokens < kMinChunkTokens) {
        throw Error(ErrorCode::kConfig, fmt::format("max_chunk_tokens must be >= {}", kMinChunkTokens));
    }
    if (extraction_batch_size < 1) throw Error(ErrorCode::kConfig, "extraction_batch_size must be >= 1");
    if (!(failure_budget >= 0.0 && failure_budget <= 1.0)) {
        throw Error(ErrorCode::kConfig, "failure_budget must lie in [0, 1]");
    }
    if (embedding.kind == EmbeddingKind::kMock && embedding.mock_dimension < 2) {
        throw Error(ErrorCode::kConfig, "mock embedding dimension must be >= 2");
    }
    merge.validate();
    backend.validate();
}

std::shared_ptr<Embedder> make_embedder(const EmbeddingSettings& settings) {
    std::shared_ptr<EmbeddingProvider> provider;
    if (settings.kind == EmbeddingKind::kMock) {
        provider = std::make_shared<MockEmbeddingProvider>(settings.mock_dimension);
    } else {
        provider = std::make_shared<HttpEmbeddingProvider>(settings.http);
    }
    auto cache = settings.cache_path ? std::make_shared<EmbeddingCache>(*settings.cache_path)
                                     : std::make_shared<EmbeddingCache>();
    return std::make_shared<Embedder>(std::move(provider), std::move(cache));
}

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

PipelineConfig with_gateway_bound(PipelineConfig c) {
    c.validate();
    c.backend.max_concurrent_requests = c.extraction_batch_size;
    return c;
}

void check_budget(std::size_t failures, std::size_t total, double budget, std::string_view stage,
                  const SnapshotReport& report) {
    if (total == 0 || static_cast<double>(failures) <= budget * static_cast<double>(total)) return;
    std::string detail;
    for (const auto& e : report.errors) detail += e + "\n";
    throw Error(ErrorCode::kBatchFailed,
                fmt::format("batch {}: {} of {} {} slots failed (budget {:.0f}%)", format_iso_date(report.observed_at),
                            failures, total, stage, budget * 100.0),
                detail);
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : Pipeline(config, nullptr, nullptr) {}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<Gateway> gateway, std::shared_ptr<Embedder> embedder)
    : config_(with_gateway_bound(std::move(config))),
      gateway_(std::move(gateway)),
      embedder_(std::move(embedder)) {
    if (!gateway_) gateway_ = make_gateway(config_.backend);
    if (!embedder_) embedder_ = make_embedder(config_.embedding);
    if (config_.prompt_dir) extraction_.templates = PromptTemplates::load(*config_.prompt_dir);
    extraction_.max_fact_tokens = config_.max_chunk_tokens;
}

std::vector<Tkg> Pipeline::extract_batch(const ObservationBatch& batch, SnapshotReport& report) {
    report.observed_at = batch.observed_at;
    report.documents = batch.documents.size();

    auto start = Clock::now();
    std::vector<Chunk> chunks;
    for (const auto& doc : batch.documents) {
        for (auto& c : chunk_document(doc, config_.max_chunk_tokens)) {
            report.oversized_chunks += c.oversized ? 1 : 0;
            chunks.push_back(std::move(c));
        }
    }
    report.chunks = chunks.size();
    report.timings.chunk_ms = millis_since(start);

    start = Clock::now();
    std::vector<std::optional<Result<std::vector<AtomicFact>>>> decomposed(chunks.size());
    run_indexed(chunks.size(), config_.extraction_batch_size, [&](std::size_t i) {
        try {
            decomposed[i].emplace(decompose(chunks[i], *gateway_, extraction_));
        } catch (const Error& e) {
            decomposed[i].emplace(e);
        }
    });
    std::vector<AtomicFact> facts;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        auto& slot = *decomposed[i];
        if (!slot.ok()) {
            ++report.decompose_failures;
            report.errors.push_back(fmt::format("decompose {}#{}: {}", chunks[i].doc_id, chunks[i].index,
                                                slot.error().what()));
            continue;
        }
        for (auto& f : slot.value()) facts.push_back(std::move(f));
    }
    report.facts = facts.size();
    report.timings.decompose_ms = millis_since(start);
    check_budget(report.decompose_failures, chunks.size(), config_.failure_budget, "decomposition", report);

    start = Clock::now();
    auto results = extract_all(facts, *gateway_, *embedder_, extraction_);
    std::vector<Tkg> graphs;
    graphs.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok()) {
            ++report.extraction_failures;
            report.errors.push_back(fmt::format("extract {}: {}", facts[i].fact_id, results[i].error().what()));
            continue;
        }
        report.extracted_relations += results[i].value().relations.size();
        graphs.push_back(std::move(results[i]).value());
    }
    report.atomic_graphs = graphs.size();
    report.timings.extract_ms = millis_since(start);
    check_budget(report.extraction_failures, facts.size(), config_.failure_budget, "extraction", report);

    if (extraction_observer_) extraction_observer_(graphs);
    return graphs;
}

Tkg Pipeline::build_snapshot(const ObservationBatch& batch, SnapshotReport* report) {
    SnapshotReport local;
    auto& r = report ? *report : local;
    auto graphs = extract_batch(batch, r);
    const auto start = Clock::now();
    auto snapshot = parallel_merge(std::move(graphs), config_.merge, &r.merge);
    r.timings.merge_ms = millis_since(start);
    return snapshot;
}

TracedTkg Pipeline::build_snapshot_traced(const ObservationBatch& batch, SnapshotReport* report) {
    SnapshotReport local;
    auto& r = report ? *report : local;
    auto graphs = extract_batch(batch, r);
    const auto start = Clock::now();
    std::vector<TracedTkg> traced;
    traced.reserve(graphs.size());
    for (auto& g : graphs) {
        auto trace = MentionTrace::identity(g);
        traced.push_back({std::move(g), std::move(trace)});
    }
    auto snapshot = parallel_merge(std::move(traced), config_.merge, &r.merge);
    r.timings.merge_ms = millis_since(start);
    return snapshot;
}

// ---------------------------------------------------------------------------------------------------------------
// Checkpoints: dtkg-<seq>.json (+ sidecar), optional mentions-<seq>.json, and manifest.json written last.

namespace {

constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<std::int64_t> processed;
    TracedTkg state;
    bool has_trace = false;
};

std::string graph_file(std::size_t seq) { return fmt::format("dtkg-{:06}.json", seq); }
std::string trace_file(std::size_t seq) { return fmt::format("mentions-{:06}.json", seq); }

std::optional<Checkpoint> read_checkpoint(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) return std::nullopt;
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_text_file(manifest_path));
        if (m.at("format_version").get<int>() != kCheckpointVersion) {
            throw Error(ErrorCode::kIo, fmt::format("{}: unsupported checkpoint version", manifest_path.string()));
        }
        Checkpoint c;
        c.processed = m.at("processed").get<std::vector<std::int64_t>>();
        c.state.graph = load_graph(dir / m.at("graph").get<std::string>());
        if (!m.at("trace").is_null()) {
            c.state.trace = mention_trace_from_json(read_text_file(dir / m.at("trace").get<std::string>()));
            c.has_trace = true;
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kIo, fmt::format("{}: corrupt checkpoint manifest: {}", manifest_path.string(), e.what()));
    }
}

void write_checkpoint(const std::filesystem::path& dir, const std::vector<std::int64_t>& processed,
                      const TracedTkg& state, bool with_trace) {
    const std::size_t seq = processed.size();
    save_graph(state.graph, dir / graph_file(seq), true);
    if (with_trace) write_file_atomic(dir / trace_file(seq), mention_trace_to_json(state.trace));
    const nlohmann::json manifest = {{"format_version", kCheckpointVersion},
                                     {"processed", processed},
                                     {"graph", graph_file(seq)},
                                     {"trace", with_trace ? nlohmann::json(trace_file(seq)) : nlohmann::json()}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    // Older generations are no longer referenced.
    if (seq > 0) {
        std::error_code ec;
        const auto prev = seq - 1;
        std::filesystem::remove(dir / graph_file(prev), ec);
        std::filesystem::remove(sidecar_path(dir / graph_file(prev)), ec);
        std::filesystem::remove(dir / trace_file(prev), ec);
    }
}

}  // namespace

StreamResult Pipeline::run_stream(const std::vector<ObservationBatch>& batches, StreamOptions options) {
    for (std::size_t i = 1; i < batches.size(); ++i) {
        if (!(batches[i - 1].observed_at < batches[i].observed_at)) {
            throw Error(ErrorCode::kInvalidArgument, "observation batches must be strictly ascending");
        }
    }
    StreamResult out;
    TracedTkg state{std::move(options.initial), {}};
    if (options.trace) state.trace = MentionTrace::identity(state.graph);
    std::vector<std::int64_t> processed;

    if (config_.checkpoint_dir) {
        if (auto cp = read_checkpoint(*config_.checkpoint_dir)) {
            if (cp->processed.size() > batches.size()) {
                throw Error(ErrorCode::kIo, "checkpoint covers more batches than the stream has");
            }
            for (std::size_t i = 0; i < cp->processed.size(); ++i) {
                if (cp->processed[i] != batches[i].observed_at.seconds) {
                    throw Error(ErrorCode::kIo,
                                fmt::format("checkpoint in {} belongs to a different stream (batch {} differs)",
                                            config_.checkpoint_dir->string(), i));
                }
            }
            if (options.trace && !cp->has_trace) {
                throw Error(ErrorCode::kIo, "checkpoint was written without a mention trace");
            }
            processed = std::move(cp->processed);
            state.graph = std::move(cp->state.graph);
            if (options.trace) state.trace = std::move(cp->state.trace);
            out.resumed_batches = processed.size();
        }
    }

    for (std::size_t i = processed.size(); i < batches.size(); ++i) {
        if (options.stop_after && processed.size() >= *options.stop_after) {
            out.stopped_early = true;
            break;
        }
        SnapshotReport report;
        if (options.trace) {
            auto snapshot = build_snapshot_traced(batches[i], &report);
            const auto start = Clock::now();
            state = update_dtkg(state, snapshot, config_.merge);
            report.timings.update_ms = millis_since(start);
        } else {
            auto snapshot = build_snapshot(batches[i], &report);
            const auto start = Clock::now();
            state.graph = update_dtkg(state.graph, snapshot, config_.merge);
            report.timings.update_ms = millis_since(start);
        }
        processed.push_back(batches[i].observed_at.seconds);
        if (config_.checkpoint_dir) write_checkpoint(*config_.checkpoint_dir, processed, state, options.trace);
        out.reports.push_back(std::move(report));
    }

    out.dtkg = std::move(state.graph);
    if (options.trace) out.trace = std::move(state.trace);
    return out;
}

LatencyReport Pipeline::bench(const std::vector<ObservationBatch>& batches) {
    LatencyReport out;
    out.backend = gateway_->backend_kind();
    const auto start = Clock::now();
    Tkg dtkg;
    for (const auto& batch : batches) {
        SnapshotReport report;
        auto snapshot = build_snapshot(batch, &report);
        const auto t = Clock::now();
        dtkg = update_dtkg(dtkg, snapshot, config_.merge);
        report.timings.update_ms = millis_since(t);
        ++out.batches;
        out.facts += report.facts;
        out.relations += report.extracted_relations;
        out.stages.chunk_ms += report.timings.chunk_ms;
        out.stages.decompose_ms += report.timings.decompose_ms;
        out.stages.extract_ms += report.timings.extract_ms;
        out.stages.merge_ms += report.timings.merge_ms;
        out.stages.update_ms += report.timings.update_ms;
    }
    out.total_ms = batches.empty() ? 0.0 : millis_since(start);
    if (out.total_ms > 0.0) {
        out.merge_share_percent = 100.0 * (out.stages.merge_ms + out.stages.update_ms) / out.total_ms;
    }
    return out;
}

}  // namespace dtkg
