// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

// dtkg: command-line front end to the pipeline stages and the evaluation suite.
//
// Exit codes: 0 success, 1 usage or configuration, 2 runtime failure, 3 invalid graph or gold data.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dtkg/concurrency.hpp"
#include "dtkg/error.hpp"
#include "dtkg/evaluation.hpp"
#include "dtkg/extraction.hpp"
#include "dtkg/merge.hpp"
#include "dtkg/pipeline.hpp"
#include "dtkg/storage.hpp"
#include "dtkg/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitValidation = 3;

struct GlobalFlags {
    std::string config;
    std::string backend;
    std::string embedding;
    std::optional<std::size_t> workers;
    std::optional<double> theta_entity;
    std::optional<double> theta_relation;
    std::optional<std::size_t> max_chunk_tokens;
    std::optional<std::size_t> batch_size;
};

dtkg::PipelineConfig resolve_config(const GlobalFlags& f) {
    dtkg::PipelineConfig c;
    if (!f.config.empty()) {
        c = dtkg::load_config(f.config);
    } else {
        c.backend = dtkg::BackendConfig::from_env(dtkg::BackendKind::kMock);
        c.embedding.http = dtkg::EmbeddingEndpointConfig::from_env();
    }
    if (!f.backend.empty()) c.backend.kind = dtkg::parse_backend_kind(f.backend);
    if (!f.embedding.empty()) c.embedding.kind = dtkg::parse_embedding_kind(f.embedding);
    if (f.workers) c.merge.workers = *f.workers;
    if (f.theta_entity) c.merge.similarity.theta_entity = *f.theta_entity;
    if (f.theta_relation) c.merge.similarity.theta_relation = *f.theta_relation;
    if (f.max_chunk_tokens) c.max_chunk_tokens = *f.max_chunk_tokens;
    if (f.batch_size) c.extraction_batch_size = *f.batch_size;
    c.validate();
    return c;
}

// Writes to `path`, or to stdout when it is empty.
void emit(const std::string& path, const std::string& contents) {
    if (path.empty()) {
        std::cout << contents;
        std::cout.flush();
    } else {
        dtkg::write_file_atomic(path, contents);
    }
}

std::shared_ptr<dtkg::Gateway> gateway_for(const dtkg::PipelineConfig& c) {
    auto backend = c.backend;
    backend.max_concurrent_requests = c.extraction_batch_size;
    return dtkg::make_gateway(backend);
}

dtkg::ExtractionOptions extraction_options(const dtkg::PipelineConfig& c) {
    dtkg::ExtractionOptions o;
    if (c.prompt_dir) o.templates = dtkg::PromptTemplates::load(*c.prompt_dir);
    o.max_fact_tokens = c.max_chunk_tokens;
    return o;
}

void check_budget(std::size_t failures, std::size_t total, double budget, std::string_view stage) {
    if (total > 0 && static_cast<double>(failures) > budget * static_cast<double>(total)) {
        throw dtkg::Error(dtkg::ErrorCode::kBatchFailed,
                          fmt::format("{}: {} of {} slots failed (budget {:.0f}%)", stage, failures, total,
                                      budget * 100.0));
    }
}

std::vector<fs::path> graph_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw dtkg::Error(dtkg::ErrorCode::kIo, fmt::format("{}: not a directory", dir.string()));
    }
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (entry.is_regular_file() && p.extension() == ".json") out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
    std::vector<std::size_t> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        const auto v = std::stoull(item, &pos);
        if (pos != item.size() || v == 0) {
            throw dtkg::Error(dtkg::ErrorCode::kInvalidArgument, fmt::format("bad size '{}'", item));
        }
        out.push_back(v);
    }
    if (out.empty()) throw dtkg::Error(dtkg::ErrorCode::kInvalidArgument, "--sizes is empty");
    return out;
}

int exit_code_for(const dtkg::Error& e) {
    switch (e.code()) {
        case dtkg::ErrorCode::kInvalidArgument:
        case dtkg::ErrorCode::kConfig:
            return kExitUsage;
        case dtkg::ErrorCode::kValidation:
            return kExitValidation;
        default:
            return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Build and evaluate dynamic temporal knowledge graphs", "dtkg"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--config", flags.config, "TOML-style configuration file")->check(CLI::ExistingFile);
    app.add_option("--backend", flags.backend, "completion backend")->check(CLI::IsMember({"live", "mock"}));
    app.add_option("--embedding", flags.embedding, "embedding provider")->check(CLI::IsMember({"mock", "http"}));
    app.add_option("--workers", flags.workers, "merge worker threads")->check(CLI::PositiveNumber);
    app.add_option("--theta-entity", flags.theta_entity, "entity merge threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--theta-relation", flags.theta_relation, "relation merge threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--max-chunk-tokens", flags.max_chunk_tokens, "chunk token budget")->check(CLI::PositiveNumber);
    app.add_option("--batch-size", flags.batch_size, "concurrent extraction requests")->check(CLI::PositiveNumber);

    std::string corpus, out, report, checkpoint_dir, trace_out;
    std::string facts_path, in_dir, out_dir, dtkg_path;
    std::string predicted, gold, match_mode = "exact", trace_in, base_run, atomic_dir;
    std::string sizes = "500,1000,2000,4000";
    std::uint64_t seed = 7;

    auto* ingest = app.add_subcommand("ingest", "Group a corpus into observation batches");
    ingest->add_option("--corpus", corpus, "corpus JSONL")->required()->check(CLI::ExistingFile);
    ingest->add_option("--out", out, "batches manifest (stdout if omitted)");

    auto* decompose_cmd = app.add_subcommand("decompose", "Chunk documents and decompose them into atomic facts");
    decompose_cmd->add_option("--corpus", corpus, "corpus JSONL")->required()->check(CLI::ExistingFile);
    decompose_cmd->add_option("--out", out, "facts JSONL (stdout if omitted)");

    auto* extract_cmd = app.add_subcommand("extract", "Extract one atomic graph per fact");
    extract_cmd->add_option("--facts", facts_path, "facts JSONL")->required()->check(CLI::ExistingFile);
    extract_cmd->add_option("--out-dir", out_dir, "directory for atomic graphs")->required();

    auto* merge_cmd = app.add_subcommand("merge", "Merge a directory of graphs into one snapshot");
    merge_cmd->add_option("--in-dir", in_dir, "directory of graph files")->required()->check(CLI::ExistingDirectory);
    merge_cmd->add_option("--out", out, "snapshot graph file")->required();

    auto* build = app.add_subcommand("build", "Corpus to DTKG, end to end");
    build->add_option("--corpus", corpus, "corpus JSONL")->required()->check(CLI::ExistingFile);
    build->add_option("--out", out, "DTKG graph file")->required();
    build->add_option("--report", report, "stage report (default: <out>.report.json)");
    build->add_option("--checkpoint-dir", checkpoint_dir, "checkpoint directory; resumes if it holds one");
    build->add_option("--trace-out", trace_out, "write the mention trace for ER/RR scoring");

    auto* update = app.add_subcommand("update", "Fold new documents into an existing DTKG");
    update->add_option("--dtkg", dtkg_path, "previous DTKG")->required()->check(CLI::ExistingFile);
    update->add_option("--corpus", corpus, "new documents JSONL")->required()->check(CLI::ExistingFile);
    update->add_option("--out", out, "updated DTKG graph file")->required();
    update->add_option("--report", report, "stage report (default: <out>.report.json)");

    auto* eval = app.add_subcommand("eval", "Score a predicted graph against gold annotations");
    eval->add_option("--predicted", predicted, "predicted graph")->required()->check(CLI::ExistingFile);
    eval->add_option("--gold", gold, "gold JSONL")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", out, "report JSON (stdout if omitted)");
    eval->add_option("--match-mode", match_mode, "factual matcher")->check(CLI::IsMember({"exact", "embedding"}));
    eval->add_option("--trace", trace_in, "mention trace written by build --trace-out")->check(CLI::ExistingFile);
    eval->add_option("--base", base_run, "graph of a base run for the stability score")->check(CLI::ExistingFile);
    eval->add_option("--atomic-dir", atomic_dir, "atomic graphs for validity counts")->check(CLI::ExistingDirectory);

    auto* bench = app.add_subcommand("bench", "Latency over a scaling series of synthetic corpora");
    bench->add_option("--sizes", sizes, "comma-separated fact counts");
    bench->add_option("--seed", seed, "corpus seed");
    bench->add_option("--out", out, "CSV n_facts,stage,millis (stdout if omitted)");
    bench->add_option("--report", report, "per-size latency reports as JSON lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        const auto config = resolve_config(flags);

        if (*ingest) {
            emit(out, dtkg::batches_manifest_json(dtkg::group_by_observation(dtkg::load_corpus(corpus), config.granularity)));
            return kExitOk;
        }

        if (*decompose_cmd) {
            std::vector<dtkg::Chunk> chunks;
            for (const auto& batch : dtkg::group_by_observation(dtkg::load_corpus(corpus), config.granularity)) {
                for (const auto& doc : batch.documents) {
                    for (auto& c : dtkg::chunk_document(doc, config.max_chunk_tokens)) chunks.push_back(std::move(c));
                }
            }
            auto gateway = gateway_for(config);
            const auto options = extraction_options(config);
            std::vector<std::optional<std::vector<dtkg::AtomicFact>>> results(chunks.size());
            std::vector<std::string> errors(chunks.size());
            dtkg::run_indexed(chunks.size(), config.extraction_batch_size, [&](std::size_t i) {
                try {
                    results[i] = dtkg::decompose(chunks[i], *gateway, options);
                } catch (const dtkg::Error& e) {
                    errors[i] = e.what();
                }
            });
            std::string lines;
            std::size_t failures = 0;
            for (std::size_t i = 0; i < chunks.size(); ++i) {
                if (!results[i]) {
                    ++failures;
                    std::cerr << fmt::format("chunk {}#{}: {}\n", chunks[i].doc_id, chunks[i].index, errors[i]);
                    continue;
                }
                for (const auto& f : *results[i]) lines += dtkg::fact_line(f);
            }
            check_budget(failures, chunks.size(), config.failure_budget, "decompose");
            emit(out, lines);
            return kExitOk;
        }

        if (*extract_cmd) {
            const auto facts = dtkg::load_facts(facts_path);
            auto gateway = gateway_for(config);
            auto embedder = dtkg::make_embedder(config.embedding);
            const auto results = dtkg::extract_all(facts, *gateway, *embedder, extraction_options(config));
            fs::create_directories(out_dir);
            std::size_t failures = 0;
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (!results[i]) {
                    ++failures;
                    std::cerr << fmt::format("fact {}: {}\n", facts[i].fact_id, results[i].error().what());
                }
            }
            check_budget(failures, results.size(), config.failure_budget, "extract");
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (results[i]) dtkg::save_graph(results[i].value(), fs::path(out_dir) / fmt::format("atomic-{:06}.json", i));
            }
            std::cerr << fmt::format("{} atomic graphs, {} failures\n", results.size() - failures, failures);
            return kExitOk;
        }

        if (*merge_cmd) {
            std::vector<dtkg::Tkg> graphs;
            for (const auto& p : graph_files(in_dir)) graphs.push_back(dtkg::load_graph(p));
            dtkg::MergeStats stats;
            const auto snapshot = dtkg::parallel_merge(std::move(graphs), config.merge, &stats);
            dtkg::save_graph(snapshot, out);
            std::cerr << fmt::format("{} rounds, {} binary merges, {} entities, {} relations\n", stats.rounds,
                                     stats.binary_merges, snapshot.entities.size(), snapshot.relations.size());
            return kExitOk;
        }

        if (*build || *update) {
            auto c = config;
            if (!checkpoint_dir.empty()) c.checkpoint_dir = checkpoint_dir;
            dtkg::StreamOptions options;
            if (*update) options.initial = dtkg::load_graph(dtkg_path);
            options.trace = !trace_out.empty();
            dtkg::Pipeline pipeline(c);
            const auto result =
                pipeline.run_stream(dtkg::group_by_observation(dtkg::load_corpus(corpus), c.granularity), options);
            dtkg::save_graph(result.dtkg, out);
            if (result.trace) dtkg::write_file_atomic(trace_out, dtkg::mention_trace_to_json(*result.trace));
            const auto report_path = report.empty() ? out + ".report.json" : report;
            dtkg::write_file_atomic(report_path, dtkg::stream_report_to_json(result, c.backend.kind));
            std::cerr << fmt::format("{} batches ({} resumed), {} entities, {} relations\n",
                                     result.reports.size() + result.resumed_batches, result.resumed_batches,
                                     result.dtkg.entities.size(), result.dtkg.relations.size());
            return kExitOk;
        }

        if (*eval) {
            const auto graph = dtkg::load_graph(predicted);
            const auto gold_doc = dtkg::combine_gold(dtkg::load_gold(gold));
            dtkg::EvaluationReport r;
            r.mode = match_mode == "embedding" ? dtkg::MatchMode::kEmbedding : dtkg::MatchMode::kExact;
            std::shared_ptr<dtkg::Embedder> embedder;
            if (r.mode == dtkg::MatchMode::kEmbedding || !base_run.empty()) embedder = dtkg::make_embedder(config.embedding);
            dtkg::ClassifyOptions co;
            co.mode = r.mode;
            co.embedder = embedder.get();
            const auto extracted = dtkg::quintuples_of(graph);
            r.counts = dtkg::classify(extracted, gold_doc.gold_tuples, co);
            r.rates = dtkg::rates(r.counts);
            if (!base_run.empty()) {
                r.stability = dtkg::stability(dtkg::quintuples_of(dtkg::load_graph(base_run)), extracted, *embedder);
            }
            if (!gold_doc.entity_clusters.empty() || !gold_doc.relation_clusters.empty()) {
                std::optional<dtkg::MentionTrace> trace;
                if (!trace_in.empty()) trace = dtkg::mention_trace_from_json(dtkg::read_text_file(trace_in));
                r.resolution = dtkg::er_rr_scores(graph, gold_doc, trace ? &*trace : nullptr);
            }
            if (!atomic_dir.empty()) {
                std::vector<dtkg::Tkg> atomic;
                for (const auto& p : graph_files(atomic_dir)) atomic.push_back(dtkg::load_graph(p));
                r.validity = dtkg::count_facts_with_validity(atomic);
            } else {
                r.validity = dtkg::count_facts_with_validity({graph});
            }
            r.config = {{"predicted", predicted},
                        {"gold", gold},
                        {"fallback_threshold", fmt::format("{}", co.fallback_threshold)},
                        {"embedding", std::string(dtkg::to_string(config.embedding.kind))}};
            emit(out, dtkg::report_to_json(r));
            return kExitOk;
        }

        if (*bench) {
            std::string csv = "n_facts,stage,millis\n";
            std::string reports;
            for (const auto n : parse_sizes(sizes)) {
                auto c = config;
                c.checkpoint_dir.reset();
                dtkg::Pipeline pipeline(c);
                const auto batches = dtkg::group_by_observation(dtkg::synthetic::grammar_corpus(n, seed), c.granularity);
                const auto r = pipeline.bench(batches);
                const std::pair<const char*, double> rows[] = {
                    {"chunk", r.stages.chunk_ms},   {"decompose", r.stages.decompose_ms},
                    {"extract", r.stages.extract_ms}, {"merge", r.stages.merge_ms},
                    {"update", r.stages.update_ms}, {"total", r.total_ms}};
                for (const auto& [stage, ms] : rows) csv += fmt::format("{},{},{:.3f}\n", n, stage, ms);
                auto line = dtkg::latency_report_to_json(r);
                line.erase(std::remove(line.begin(), line.end(), '\n'), line.end());
                reports += line + "\n";
                std::cerr << fmt::format("n_facts={} total={:.1f} ms merge share={:.1f}% ({} backend)\n", n,
                                         r.total_ms, r.merge_share_percent, dtkg::to_string(r.backend));
            }
            emit(out, csv);
            if (!report.empty()) dtkg::write_file_atomic(report, reports);
            return kExitOk;
        }
    } catch (const dtkg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!e.detail().empty()) std::cerr << e.detail() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
