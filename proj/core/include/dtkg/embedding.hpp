// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dtkg/http.hpp"
#include "dtkg/model.hpp"

namespace dtkg {

/// Unit-normalized embedding. Zero vectors are rejected at construction.
class EmbeddingVector {
  public:
    EmbeddingVector() = default;
    /// Normalizes `raw`; throws Error(kInvalidArgument) on zero or non-finite input.
    static EmbeddingVector normalized(std::vector<float> raw);

    [[nodiscard]] const std::vector<float>& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

  private:
    std::vector<float> values_;
};

/// Hybrid entity similarity weights and merge thresholds.
struct SimilarityConfig {
    double lambda = 0.8;           // name weight
    double beta = 0.2;             // label weight
    double theta_entity = 0.8;
    double theta_relation = 0.7;

    /// lambda + beta == 1 and every value in [0, 1]; throws Error(kConfig) otherwise.
    void validate() const;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// <a,b> / (|a||b|). Throws Error(kDimensionMismatch) on unequal sizes; 0 when either norm is 0.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// lambda * name_embedding + beta * label_embedding, not re-normalized.
/// Throws Error(kMissingEmbedding) if either embedding is absent.
std::vector<double> combined_entity_vector(const Entity& e, const SimilarityConfig& cfg);

double entity_similarity(const Entity& a, const Entity& b, const SimilarityConfig& cfg);
/// Cosine of the predicate embeddings only.
double relation_similarity(const TemporalRelation& a, const TemporalRelation& b);

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    [[nodiscard]] virtual std::string provider_id() const = 0;
    [[nodiscard]] virtual std::string model_id() const = 0;
    /// Raw (not necessarily normalized) vectors, positionally aligned with `texts`.
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
};

/// Hash-to-sphere embeddings with an explicit synonym table.
///
/// Unrelated texts land on independent random directions. Members of a synonym group share a base
/// direction plus a small per-text perturbation, so their pairwise cosine is about 0.9.
class MockEmbeddingProvider final : public EmbeddingProvider {
  public:
    explicit MockEmbeddingProvider(std::size_t dimension = 64, bool default_synonyms = true);

    /// Texts are matched after lowercasing and replacing whitespace runs with '_'.
    void add_synonyms(const std::vector<std::string>& group);

    [[nodiscard]] std::string provider_id() const override { return "mock"; }
    [[nodiscard]] std::string model_id() const override;
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }
    [[nodiscard]] std::size_t texts_embedded() const noexcept { return texts_.load(); }

  private:
    std::vector<float> vector_for(const std::string& text) const;

    std::size_t dimension_;
    std::unordered_map<std::string, std::string> synonym_head_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> texts_{0};
};

struct EmbeddingEndpointConfig {
    std::string endpoint = "https://api.openai.com/v1/embeddings";
    std::string model_id = "text-embedding-3-large";
    std::string api_key_env_var = "ATOM_API_KEY";
    std::size_t max_batch = 256;
    RetryPolicy retry;

    /// Defaults overridden by ATOM_EMBED_ENDPOINT and ATOM_EMBED_MODEL_ID when set.
    static EmbeddingEndpointConfig from_env();
};

/// OpenAI-style embeddings endpoint: {"model", "input": [...]} -> {"data": [{"index", "embedding"}]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
  public:
    explicit HttpEmbeddingProvider(EmbeddingEndpointConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                                   Sleeper sleep = real_sleeper());

    [[nodiscard]] std::string provider_id() const override { return "http"; }
    [[nodiscard]] std::string model_id() const override { return config_.model_id; }
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

  private:
    EmbeddingEndpointConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleep_;
};

/// Append-only, file-backed map keyed by (provider id, model id, SHA-256 of text).
///
/// One JSON record per line: {"key", "provider_id", "model_id", "dim", "vector"} where vector is
/// base64 float32. Readers share a lock; writers serialize.
class EmbeddingCache {
  public:
    /// In-memory only.
    EmbeddingCache() = default;
    /// Loads existing records from `path` (a torn trailing line is ignored) and appends new ones.
    explicit EmbeddingCache(std::filesystem::path path);

    [[nodiscard]] std::optional<std::vector<float>> get(const std::string& provider_id, const std::string& model_id,
                                                        std::string_view text) const;
    void put(const std::string& provider_id, const std::string& model_id, std::string_view text,
             const std::vector<float>& values);

    [[nodiscard]] std::size_t size() const;

  private:
    static std::string composite(const std::string& provider_id, const std::string& model_id, const std::string& key);

    std::optional<std::filesystem::path> path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::vector<float>> entries_;
    std::ofstream out_;
};

struct EmbedderStats {
    std::size_t provider_calls = 0;
    std::size_t provider_texts = 0;
    std::size_t cache_hits = 0;
};

/// Cached front end to a provider. Duplicate texts in one request are embedded once.
class Embedder {
  public:
    explicit Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache = nullptr);

    /// Throws Error(kInvalidArgument) on an empty text and Error(kDimensionMismatch) when the provider
    /// disagrees with cached dimensions.
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
    EmbeddingVector embed_one(const std::string& text);

    [[nodiscard]] EmbedderStats stats() const;
    [[nodiscard]] const EmbeddingProvider& provider() const noexcept { return *provider_; }

  private:
    std::shared_ptr<EmbeddingProvider> provider_;
    std::shared_ptr<EmbeddingCache> cache_;
    std::atomic<std::size_t> dimension_{0};
    std::atomic<std::size_t> provider_calls_{0};
    std::atomic<std::size_t> provider_texts_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace dtkg
