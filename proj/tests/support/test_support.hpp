// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "dtkg/embedding.hpp"
#include "dtkg/http.hpp"
#include "dtkg/llm.hpp"
#include "dtkg/model.hpp"
#include "dtkg/pipeline.hpp"
#include "dtkg/synthetic.hpp"

namespace dtkg::test {

/// Scripted HTTP double. Each post pops the next step; an empty script answers 200 with `fallback`.
class ScriptedTransport final : public HttpTransport {
  public:
    struct Step {
        int status = 200;
        std::string body;
        bool transport_error = false;
    };

    explicit ScriptedTransport(std::vector<Step> script, std::string fallback = {});
    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body) override;

    [[nodiscard]] int attempts() const { return attempts_.load(); }
    [[nodiscard]] std::vector<std::string> bodies() const;
    [[nodiscard]] std::vector<HttpHeaders> headers() const;

  private:
    mutable std::mutex mutex_;
    std::deque<Step> script_;
    std::string fallback_;
    std::atomic<int> attempts_{0};
    std::vector<std::string> bodies_;
    std::vector<HttpHeaders> headers_;
};

/// Chat-completion reply body carrying `content`.
std::string chat_reply(const std::string& content);

/// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
  public:
    ScopedEnv(std::string name, const std::string& value);
    ~ScopedEnv();
    ScopedEnv(const ScopedEnv&) = delete;
    ScopedEnv& operator=(const ScopedEnv&) = delete;

  private:
    std::string name_;
};

class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

std::vector<float> unit_axis(std::size_t i, std::size_t dim);
std::vector<float> normalized(std::vector<float> v);

Entity make_entity(const std::string& name, const std::string& label, std::vector<float> name_embedding,
                   std::vector<float> label_embedding);
TemporalRelation make_relation(const Entity& s, const std::string& predicate, const Entity& o, TimeList t_start,
                               TimeList t_end, TimeList t_obs, std::vector<float> predicate_embedding);

/// Mock-embedded entity or relation, as the extraction stage would produce them.
Entity embedded_entity(Embedder& embedder, const std::string& name, const std::string& label);
TemporalRelation embedded_relation(Embedder& embedder, const Entity& s, const std::string& predicate, const Entity& o,
                                   TimeList t_start, TimeList t_end, TimeList t_obs);

struct RandomGraphOptions {
    std::size_t max_entities = 8;
    std::size_t max_relations = 10;
    std::size_t name_pool = 12;
    std::size_t predicate_pool = 6;
    std::size_t days = 30;
};

/// Valid, canonical graph over a small shared vocabulary, embedded with `embedder`.
Tkg random_graph(synthetic::Rng& rng, Embedder& embedder, const RandomGraphOptions& options = {});

/// Every timestamp in every relation time list (start, end and observation kept apart).
struct TimeUnion {
    std::vector<std::int64_t> start;
    std::vector<std::int64_t> end;
    std::vector<std::int64_t> obs;
    friend bool operator==(const TimeUnion&, const TimeUnion&) = default;
};
TimeUnion time_union(const std::vector<Tkg>& graphs);

/// Shared mock embedder (dimension 64, default synonym table).
std::shared_ptr<Embedder> mock_embedder();

/// Mock backend, mock embeddings, no checkpoints.
PipelineConfig mock_config();

std::string read_file(const std::filesystem::path& path);

}  // namespace dtkg::test
