// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dtkg::test {

ScriptedTransport::ScriptedTransport(std::vector<Step> script, std::string fallback)
    : script_(script.begin(), script.end()), fallback_(std::move(fallback)) {}

HttpResponse ScriptedTransport::post(const std::string&, const HttpHeaders& headers, const std::string& body) {
    attempts_.fetch_add(1);
    Step step{200, fallback_, false};
    {
        std::lock_guard lock(mutex_);
        bodies_.push_back(body);
        headers_.push_back(headers);
        if (!script_.empty()) {
            step = script_.front();
            script_.pop_front();
        }
    }
    if (step.transport_error) throw Error(ErrorCode::kTransport, "connection reset");
    return {step.status, step.body};
}

std::vector<std::string> ScriptedTransport::bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
}

std::vector<HttpHeaders> ScriptedTransport::headers() const {
    std::lock_guard lock(mutex_);
    return headers_;
}

std::string chat_reply(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

ScopedEnv::ScopedEnv(std::string name, const std::string& value) : name_(std::move(name)) {
    ::setenv(name_.c_str(), value.c_str(), 1);
}

ScopedEnv::~ScopedEnv() { ::unsetenv(name_.c_str()); }

TempDir::TempDir() {
    auto pattern = (std::filesystem::temp_directory_path() / "dtkg-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::vector<float> unit_axis(std::size_t i, std::size_t dim) {
    std::vector<float> v(dim, 0.0F);
    v.at(i) = 1.0F;
    return v;
}

std::vector<float> normalized(std::vector<float> v) {
    double n = 0;
    for (const float x : v) n += static_cast<double>(x) * x;
    n = std::sqrt(n);
    for (auto& x : v) x = static_cast<float>(x / n);
    return v;
}

Entity make_entity(const std::string& name, const std::string& label, std::vector<float> name_embedding,
                   std::vector<float> label_embedding) {
    return Entity{name, label, std::move(name_embedding), std::move(label_embedding)};
}

TemporalRelation make_relation(const Entity& s, const std::string& predicate, const Entity& o, TimeList t_start,
                               TimeList t_end, TimeList t_obs, std::vector<float> predicate_embedding) {
    return TemporalRelation{s.key(),           predicate,        o.key(), std::move(t_start), std::move(t_end),
                            std::move(t_obs), std::move(predicate_embedding)};
}

Entity embedded_entity(Embedder& embedder, const std::string& name, const std::string& label) {
    auto v = embedder.embed({name, label});
    return Entity{name, label, v[0].values(), v[1].values()};
}

TemporalRelation embedded_relation(Embedder& embedder, const Entity& s, const std::string& predicate, const Entity& o,
                                   TimeList t_start, TimeList t_end, TimeList t_obs) {
    return make_relation(s, predicate, o, std::move(t_start), std::move(t_end), std::move(t_obs),
                         embedder.embed_one(predicate).values());
}

Tkg random_graph(synthetic::Rng& rng, Embedder& embedder, const RandomGraphOptions& o) {
    static const char* const kLabels[] = {"person", "organization", "location"};
    static const char* const kPredicates[] = {"owns", "possesses", "has", "works_at", "sued", "founded", "visited"};
    const auto base = from_civil(2020, 1, 1);
    auto day = [&]() { return add_days(base, static_cast<std::int64_t>(rng.below(o.days))); };
    auto times = [&](double p) {
        TimeList t;
        while (rng.chance(p)) t.insert(day());
        return t;
    };

    Tkg g;
    std::set<EntityKey> keys;
    const std::size_t n_entities = 2 + rng.below(std::max<std::size_t>(o.max_entities, 3) - 1);
    while (g.entities.size() < n_entities) {
        const auto name = "entity_" + std::to_string(rng.below(o.name_pool));
        const std::string label = kLabels[rng.below(3)];
        if (!keys.insert({name, label}).second) continue;
        g.entities.push_back(embedded_entity(embedder, name, label));
    }
    const std::size_t n_relations = rng.below(o.max_relations + 1);
    const std::size_t n_predicates = std::min<std::size_t>(o.predicate_pool, std::size(kPredicates));
    for (std::size_t i = 0; i < n_relations; ++i) {
        const auto& s = g.entities[rng.below(g.entities.size())];
        const auto& obj = g.entities[rng.below(g.entities.size())];
        auto obs = times(0.3);
        obs.insert(day());
        g.relations.push_back(
            embedded_relation(embedder, s, kPredicates[rng.below(n_predicates)], obj, times(0.5), times(0.3), obs));
    }
    return canonicalize(std::move(g));
}

TimeUnion time_union(const std::vector<Tkg>& graphs) {
    std::set<std::int64_t> start, end, obs;
    for (const auto& g : graphs) {
        for (const auto& r : g.relations) {
            for (const auto t : r.t_start) start.insert(t.seconds);
            for (const auto t : r.t_end) end.insert(t.seconds);
            for (const auto t : r.t_obs) obs.insert(t.seconds);
        }
    }
    return {{start.begin(), start.end()}, {end.begin(), end.end()}, {obs.begin(), obs.end()}};
}

std::shared_ptr<Embedder> mock_embedder() {
    return std::make_shared<Embedder>(std::make_shared<MockEmbeddingProvider>(64));
}

PipelineConfig mock_config() {
    PipelineConfig c;
    c.backend.kind = BackendKind::kMock;
    c.embedding.kind = EmbeddingKind::kMock;
    return c;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dtkg::test
