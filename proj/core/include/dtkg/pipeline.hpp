// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dtkg/embedding.hpp"
#include "dtkg/extraction.hpp"
#include "dtkg/llm.hpp"
#include "dtkg/merge.hpp"
#include "dtkg/model.hpp"

namespace dtkg {

enum class Granularity { kDay, kExact };

std::string_view to_string(Granularity g) noexcept;
Granularity parse_granularity(std::string_view s);

struct ObservationBatch {
    Timestamp observed_at;
    std::vector<Document> documents;

    friend bool operator==(const ObservationBatch&, const ObservationBatch&) = default;
};

/// Batches keyed by the (truncated) observation time, ascending. Documents keep their input order
/// and take the batch's observation time.
std::vector<ObservationBatch> group_by_observation(const std::vector<Document>& docs,
                                                   Granularity granularity = Granularity::kDay);

enum class EmbeddingKind { kMock, kHttp };

std::string_view to_string(EmbeddingKind kind) noexcept;
EmbeddingKind parse_embedding_kind(std::string_view s);

struct EmbeddingSettings {
    EmbeddingKind kind = EmbeddingKind::kMock;
    std::size_t mock_dimension = 64;
    EmbeddingEndpointConfig http;
    std::optional<std::filesystem::path> cache_path;
};

struct PipelineConfig {
    std::size_t max_chunk_tokens = kDefaultMaxChunkTokens;
    std::size_t extraction_batch_size = 40;  // also the gateway's in-flight bound
    MergeConfig merge;
    BackendConfig backend;
    EmbeddingSettings embedding;
    Granularity granularity = Granularity::kDay;
    double failure_budget = 0.10;  // a batch aborts when more than this share of slots fails
    std::optional<std::filesystem::path> checkpoint_dir;
    std::optional<std::filesystem::path> prompt_dir;

    /// Throws Error(kConfig).
    void validate() const;
};

struct StageTimings {
    double chunk_ms = 0;
    double decompose_ms = 0;
    double extract_ms = 0;
    double merge_ms = 0;
    double update_ms = 0;
};

struct SnapshotReport {
    Timestamp observed_at;
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t oversized_chunks = 0;
    std::size_t facts = 0;
    std::size_t decompose_failures = 0;
    std::size_t extraction_failures = 0;
    std::size_t atomic_graphs = 0;
    std::size_t extracted_relations = 0;
    MergeStats merge;
    StageTimings timings;
    std::vector<std::string> errors;  // one line per failed slot
};

struct StreamOptions {
    Tkg initial;
    /// Stop after this many batches have been processed and checkpointed, as if killed.
    std::optional<std::size_t> stop_after;
    /// Carry a mention trace for entity/relation resolution scoring.
    bool trace = false;
};

struct StreamResult {
    Tkg dtkg;
    std::optional<MentionTrace> trace;
    std::vector<SnapshotReport> reports;  // batches processed by this call
    std::size_t resumed_batches = 0;      // batches skipped because a checkpoint covered them
    bool stopped_early = false;
};

struct LatencyReport {
    BackendKind backend = BackendKind::kMock;
    std::size_t batches = 0;
    std::size_t facts = 0;
    std::size_t relations = 0;
    StageTimings stages;
    double total_ms = 0;
    /// (merge + update) / total, in percent; 0 for an empty run.
    double merge_share_percent = 0;
};

class Pipeline {
  public:
    /// Builds the gateway and embedder described by `config`.
    explicit Pipeline(PipelineConfig config);
    Pipeline(PipelineConfig config, std::shared_ptr<Gateway> gateway, std::shared_ptr<Embedder> embedder);

    /// chunk -> decompose -> extract_all -> parallel_merge. Throws Error(kBatchFailed) when the
    /// failure budget is exceeded.
    Tkg build_snapshot(const ObservationBatch& batch, SnapshotReport* report = nullptr);
    TracedTkg build_snapshot_traced(const ObservationBatch& batch, SnapshotReport* report = nullptr);

    /// Folds update_dtkg over the snapshots in order. With a checkpoint directory, the DTKG is
    /// persisted after every batch and a later call with the same batches resumes after the last
    /// persisted one.
    StreamResult run_stream(const std::vector<ObservationBatch>& batches, StreamOptions options = {});

    /// Runs the whole stream without checkpoints and reports wall-clock time per stage.
    LatencyReport bench(const std::vector<ObservationBatch>& batches);

    /// Called with the atomic graphs of each batch before they are merged.
    void set_extraction_observer(std::function<void(const std::vector<Tkg>&)> observer) {
        extraction_observer_ = std::move(observer);
    }

    [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }
    [[nodiscard]] Gateway& gateway() noexcept { return *gateway_; }
    [[nodiscard]] Embedder& embedder() noexcept { return *embedder_; }

  private:
    std::vector<Tkg> extract_batch(const ObservationBatch& batch, SnapshotReport& report);

    PipelineConfig config_;
    ExtractionOptions extraction_;
    std::shared_ptr<Gateway> gateway_;
    std::shared_ptr<Embedder> embedder_;
    std::function<void(const std::vector<Tkg>&)> extraction_observer_;
};

std::shared_ptr<Embedder> make_embedder(const EmbeddingSettings& settings);

}  // namespace dtkg
