// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/embedding.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dtkg/codec.hpp"
#include "dtkg/error.hpp"

namespace dtkg {

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
    double sum = 0.0;
    for (const float v : raw) {
        if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "embedding has a non-finite component");
        sum += static_cast<double>(v) * v;
    }
    if (raw.empty() || sum == 0.0) throw Error(ErrorCode::kInvalidArgument, "zero embedding vector");
    const double inv = 1.0 / std::sqrt(sum);
    for (auto& v : raw) v = static_cast<float>(v * inv);
    EmbeddingVector out;
    out.values_ = std::move(raw);
    return out;
}

void SimilarityConfig::validate() const {
    const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(lambda) || !in_unit(beta) || !in_unit(theta_entity) || !in_unit(theta_relation)) {
        throw Error(ErrorCode::kConfig, "similarity weights and thresholds must lie in [0, 1]");
    }
    if (std::abs(lambda + beta - 1.0) > 1e-9) {
        throw Error(ErrorCode::kConfig, fmt::format("lambda + beta must equal 1 (got {} + {})", lambda, beta));
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::kDimensionMismatch, fmt::format("cosine of {}-d and {}-d vectors", a.size(), b.size()));
    }
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }
double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine(std::span<const float>(a.values()), std::span<const float>(b.values()));
}

std::vector<double> combined_entity_vector(const Entity& e, const SimilarityConfig& cfg) {
    if (e.name_embedding.empty() || e.label_embedding.empty()) {
        throw Error(ErrorCode::kMissingEmbedding, fmt::format("entity {} is not embedded", to_string(e.key())));
    }
    if (e.name_embedding.size() != e.label_embedding.size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    fmt::format("entity {} has name/label embeddings of different sizes", to_string(e.key())));
    }
    std::vector<double> out(e.name_embedding.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = cfg.lambda * e.name_embedding[i] + cfg.beta * e.label_embedding[i];
    }
    return out;
}

double entity_similarity(const Entity& a, const Entity& b, const SimilarityConfig& cfg) {
    const auto va = combined_entity_vector(a, cfg);
    const auto vb = combined_entity_vector(b, cfg);
    return cosine(std::span<const double>(va), std::span<const double>(vb));
}

double relation_similarity(const TemporalRelation& a, const TemporalRelation& b) {
    if (a.predicate_embedding.empty() || b.predicate_embedding.empty()) {
        throw Error(ErrorCode::kMissingEmbedding,
                    fmt::format("predicate '{}' or '{}' is not embedded", a.predicate, b.predicate));
    }
    return cosine(std::span<const float>(a.predicate_embedding), std::span<const float>(b.predicate_embedding));
}

// ---------------------------------------------------------------------------------------------------------------
// Mock provider

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Standard normal samples via Box-Muller; portable across standard libraries.
std::vector<double> gaussian(std::string_view seed_text, std::size_t n) {
    std::uint64_t state = fnv1a(seed_text);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < n) out[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    return out;
}

std::string synonym_key(std::string_view text) {
    std::string out;
    bool gap = false;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            gap = !out.empty();
            continue;
        }
        if (gap) out.push_back('_');
        gap = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

constexpr double kSynonymPerturbation = 0.35;

}  // namespace

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dimension, bool default_synonyms) : dimension_(dimension) {
    if (dimension_ < 2) throw Error(ErrorCode::kConfig, "mock embedding dimension must be >= 2");
    if (default_synonyms) {
        add_synonyms({"owns", "possesses", "has"});
        add_synonyms({"is_ceo", "is_chief_executive_officer", "is_chief_executive"});
        add_synonyms({"works_at", "is_employed_by", "works_for"});
        add_synonyms({"killed_people_in", "caused_deaths_in"});
        add_synonyms({"protested_against", "rallied_against"});
    }
}

void MockEmbeddingProvider::add_synonyms(const std::vector<std::string>& group) {
    if (group.empty()) return;
    const auto head = "synonym-group:" + synonym_key(group.front());
    for (const auto& member : group) synonym_head_[synonym_key(member)] = head;
}

std::string MockEmbeddingProvider::model_id() const { return fmt::format("hash-sphere-{}", dimension_); }

std::vector<float> MockEmbeddingProvider::vector_for(const std::string& text) const {
    const auto key = synonym_key(text);
    std::vector<double> v;
    if (const auto it = synonym_head_.find(key); it != synonym_head_.end()) {
        v = gaussian(it->second, dimension_);
        const auto noise = gaussian(key, dimension_);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += kSynonymPerturbation * noise[i];
    } else {
        v = gaussian(text, dimension_);
    }
    std::vector<float> out(v.begin(), v.end());
    return out;
}

std::vector<std::vector<float>> MockEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    calls_.fetch_add(1);
    texts_.fetch_add(texts.size());
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(vector_for(t));
    return out;
}

// ---------------------------------------------------------------------------------------------------------------
// HTTP provider

EmbeddingEndpointConfig EmbeddingEndpointConfig::from_env() {
    EmbeddingEndpointConfig config;
    if (const char* v = std::getenv("ATOM_EMBED_ENDPOINT"); v && *v) config.endpoint = v;
    if (const char* v = std::getenv("ATOM_EMBED_MODEL_ID"); v && *v) config.model_id = v;
    return config;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(EmbeddingEndpointConfig config, std::shared_ptr<HttpTransport> transport,
                                             Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
    check_endpoint(config_.endpoint);
    if (config_.max_batch == 0) throw Error(ErrorCode::kConfig, "embedding max_batch must be positive");
    if (!transport_) transport_ = make_http_transport();
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    const char* key = std::getenv(config_.api_key_env_var.c_str());
    if (!key || !*key) {
        throw Error(ErrorCode::kAuth, fmt::format("environment variable {} is not set", config_.api_key_env_var));
    }
    const HttpHeaders headers = {{"Authorization", fmt::format("Bearer {}", key)}};
    std::vector<std::vector<float>> out(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += config_.max_batch) {
        const std::size_t end = std::min(texts.size(), begin + config_.max_batch);
        const nlohmann::json body = {
            {"model", config_.model_id},
            {"input", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                               texts.begin() + static_cast<std::ptrdiff_t>(end))}};
        const auto res = post_with_retry(*transport_, config_.endpoint, headers, body.dump(), config_.retry, sleep_);
        try {
            const auto reply = nlohmann::json::parse(res.body);
            const auto& data = reply.at("data");
            if (data.size() != end - begin) throw Error(ErrorCode::kParse, "embedding reply has the wrong length");
            for (const auto& item : data) {
                const auto index = item.at("index").get<std::size_t>();
                if (index >= end - begin) throw Error(ErrorCode::kParse, "embedding reply index out of range");
                out[begin + index] = item.at("embedding").get<std::vector<float>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::kParse, fmt::format("unexpected embeddings reply: {}", e.what()), res.body);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Cache

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    if (std::ifstream in(*path_); in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                const auto rec = nlohmann::json::parse(line);
                auto values = codec::decode_floats(rec.at("vector").get<std::string>());
                if (values.size() != rec.at("dim").get<std::size_t>()) continue;
                entries_.emplace(composite(rec.at("provider_id").get<std::string>(),
                                           rec.at("model_id").get<std::string>(), rec.at("key").get<std::string>()),
                                 std::move(values));
            } catch (const std::exception&) {
                // A crash mid-append can leave one torn record at the end of the file.
            }
        }
    }
    bool needs_newline = false;
    if (std::ifstream tail(*path_, std::ios::binary | std::ios::ate); tail && tail.tellg() > 0) {
        tail.seekg(-1, std::ios::end);
        needs_newline = tail.get() != '\n';
    }
    out_.open(*path_, std::ios::app);
    if (!out_) throw Error(ErrorCode::kIo, fmt::format("cannot open embedding cache {}", path_->string()));
    // Terminate a torn record so the next append starts on a line of its own.
    if (needs_newline) out_ << '\n';
}

std::string EmbeddingCache::composite(const std::string& provider_id, const std::string& model_id,
                                      const std::string& key) {
    return provider_id + '\x1f' + model_id + '\x1f' + key;
}

std::optional<std::vector<float>> EmbeddingCache::get(const std::string& provider_id, const std::string& model_id,
                                                      std::string_view text) const {
    const auto k = composite(provider_id, model_id, codec::sha256_hex(text));
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(k);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::put(const std::string& provider_id, const std::string& model_id, std::string_view text,
                         const std::vector<float>& values) {
    const auto key = codec::sha256_hex(text);
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(composite(provider_id, model_id, key), values).second) return;
    if (!path_) return;
    const nlohmann::json rec = {{"key", key},
                                {"provider_id", provider_id},
                                {"model_id", model_id},
                                {"dim", values.size()},
                                {"vector", codec::encode_floats(values)}};
    out_ << rec.dump() << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::kIo, fmt::format("cannot append to embedding cache {}", path_->string()));
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------------------------------------------
// Embedder

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache)
    : provider_(std::move(provider)), cache_(std::move(cache)) {
    if (!provider_) throw Error(ErrorCode::kConfig, "embedder needs a provider");
}

std::vector<EmbeddingVector> Embedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out(texts.size());
    const auto provider_id = provider_->provider_id();
    const auto model_id = provider_->model_id();

    auto check_dimension = [this](std::size_t dim) {
        std::size_t expected = 0;
        if (dimension_.compare_exchange_strong(expected, dim) || expected == dim) return;
        throw Error(ErrorCode::kDimensionMismatch,
                    fmt::format("embedding dimension {} does not match previously seen {}", dim, expected));
    };

    // Unique misses in first-occurrence order, and the slots each one fills.
    std::vector<std::string> misses;
    std::map<std::string, std::vector<std::size_t>> waiting;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) throw Error(ErrorCode::kInvalidArgument, "cannot embed an empty text");
        if (cache_) {
            if (auto hit = cache_->get(provider_id, model_id, texts[i])) {
                check_dimension(hit->size());
                out[i] = EmbeddingVector::normalized(std::move(*hit));
                cache_hits_.fetch_add(1);
                continue;
            }
        }
        auto [it, fresh] = waiting.try_emplace(texts[i]);
        if (fresh) misses.push_back(texts[i]);
        it->second.push_back(i);
    }
    if (misses.empty()) return out;

    auto raw = provider_->embed(misses);
    provider_calls_.fetch_add(1);
    provider_texts_.fetch_add(misses.size());
    if (raw.size() != misses.size()) {
        throw Error(ErrorCode::kParse, fmt::format("provider returned {} vectors for {} texts", raw.size(), misses.size()));
    }
    for (std::size_t m = 0; m < misses.size(); ++m) {
        check_dimension(raw[m].size());
        auto vec = EmbeddingVector::normalized(std::move(raw[m]));
        if (cache_) cache_->put(provider_id, model_id, misses[m], vec.values());
        for (const auto slot : waiting[misses[m]]) out[slot] = vec;
    }
    return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) { return std::move(embed({text}).front()); }

EmbedderStats Embedder::stats() const {
    return {provider_calls_.load(), provider_texts_.load(), cache_hits_.load()};
}

}  // namespace dtkg
