// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/merge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include <fmt/format.h>

#include "dtkg/error.hpp"

namespace dtkg {

void MergeConfig::validate() const {
    similarity.validate();
    if (workers < 1) throw Error(ErrorCode::kConfig, "merge workers must be >= 1");
}

namespace {

// Below this many similarity evaluations a binary merge stays on the calling thread.
constexpr std::size_t kParallelWork = 1 << 14;

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

template <typename Fn>
void for_each_index(WorkerPool* pool, std::size_t n, std::size_t work, Fn&& fn) {
    if (pool && pool->parallelism() > 1 && n > 1 && work >= kParallelWork) {
        pool->parallel_for(n, fn);
        return;
    }
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

std::vector<double> unit(std::vector<double> v) {
    const double n = l2_norm(v);
    if (n == 0.0) return v;
    for (auto& x : v) x /= n;
    return v;
}

std::vector<double> unit(const std::vector<float>& v) { return unit(std::vector<double>(v.begin(), v.end())); }

std::vector<double> unit_combined(const Entity& e, const SimilarityConfig& cfg) {
    return unit(combined_entity_vector(e, cfg));
}

const std::vector<float>& predicate_vector(const TemporalRelation& r) {
    if (r.predicate_embedding.empty()) {
        throw Error(ErrorCode::kMissingEmbedding, fmt::format("predicate '{}' is not embedded", r.predicate));
    }
    return r.predicate_embedding;
}

double predicate_similarity(const std::string& a, const std::vector<float>& a_emb, const std::string& b,
                            const std::vector<float>& b_emb) {
    if (a == b) return 1.0;
    if (a_emb.empty() || b_emb.empty()) {
        throw Error(ErrorCode::kMissingEmbedding, fmt::format("predicate '{}' or '{}' is not embedded", a, b));
    }
    return cosine(std::span<const float>(a_emb), std::span<const float>(b_emb));
}

struct RightPredicate {
    std::string name;
    const std::vector<float>* embedding;
    std::vector<double> unit_embedding;  // filled lazily for similarity search
};

struct RelationPlan {
    std::string predicate;
    const std::vector<float>* embedding = nullptr;
    EntityKey subject;
    EntityKey object;
    std::size_t absorb_into = kNone;
};

Tkg merge_impl(const Tkg& left, const Tkg& right, const MergeConfig& cfg, WorkerPool* pool, MergeMaps* maps) {
    auto resolution = resolve_entities(left, right, cfg, pool);
    const auto& mapping = resolution.mapping;

    // Relation-name resolution candidates: distinct right predicates in name order.
    std::vector<RightPredicate> right_preds;
    {
        std::map<std::string, const std::vector<float>*> distinct;
        for (const auto& r : right.relations) distinct.try_emplace(r.predicate, &r.predicate_embedding);
        right_preds.reserve(distinct.size());
        for (const auto& [name, emb] : distinct) right_preds.push_back({name, emb, {}});
    }
    auto find_right_pred = [&](const std::string& name) -> const RightPredicate* {
        const auto it = std::lower_bound(right_preds.begin(), right_preds.end(), name,
                                         [](const RightPredicate& p, const std::string& n) { return p.name < n; });
        return it != right_preds.end() && it->name == name ? &*it : nullptr;
    };

    // Distinct left predicates that need a similarity search.
    std::vector<const TemporalRelation*> searches;
    {
        std::map<std::string, const TemporalRelation*> distinct;
        for (const auto& r : left.relations) {
            if (!find_right_pred(r.predicate)) distinct.try_emplace(r.predicate, &r);
        }
        for (const auto& [_, r] : distinct) searches.push_back(r);
    }
    if (!searches.empty()) {
        for (auto& p : right_preds) {
            if (p.embedding->empty()) {
                throw Error(ErrorCode::kMissingEmbedding, fmt::format("predicate '{}' is not embedded", p.name));
            }
            p.unit_embedding = unit(*p.embedding);
        }
    }
    std::vector<std::size_t> adopted(searches.size(), kNone);
    for_each_index(pool, searches.size(), searches.size() * right_preds.size(), [&](std::size_t i) {
        const auto v = unit(predicate_vector(*searches[i]));
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_j = kNone;
        for (std::size_t j = 0; j < right_preds.size(); ++j) {
            const double s = dot(v, right_preds[j].unit_embedding);
            if (s > best) {
                best = s;
                best_j = j;
            }
        }
        if (best_j != kNone && best >= cfg.similarity.theta_relation) adopted[i] = best_j;
    });

    std::map<std::string, std::pair<std::string, const std::vector<float>*>> renames;
    for (std::size_t i = 0; i < searches.size(); ++i) {
        if (adopted[i] == kNone) continue;
        const auto& p = right_preds[adopted[i]];
        renames.emplace(searches[i]->predicate, std::make_pair(p.name, p.embedding));
    }

    // Temporal resolution candidates: right relations grouped by endpoints.
    std::map<std::pair<EntityKey, EntityKey>, std::vector<std::size_t>> by_endpoints;
    for (std::size_t j = 0; j < right.relations.size(); ++j) {
        const auto& r = right.relations[j];
        by_endpoints[{r.subject, r.object}].push_back(j);
    }

    std::vector<RelationPlan> plans(left.relations.size());
    for (std::size_t i = 0; i < left.relations.size(); ++i) {
        const auto& r = left.relations[i];
        auto& plan = plans[i];
        plan.subject = mapping.at(r.subject);
        plan.object = mapping.at(r.object);
        if (const auto it = renames.find(r.predicate); it != renames.end()) {
            plan.predicate = it->second.first;
            plan.embedding = it->second.second;
        } else {
            plan.predicate = r.predicate;
            plan.embedding = &r.predicate_embedding;
        }
    }
    for_each_index(pool, plans.size(), plans.size() * 8, [&](std::size_t i) {
        auto& plan = plans[i];
        const auto it = by_endpoints.find({plan.subject, plan.object});
        if (it == by_endpoints.end()) return;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto j : it->second) {
            const auto& c = right.relations[j];
            const double s = predicate_similarity(plan.predicate, *plan.embedding, c.predicate, c.predicate_embedding);
            if (s > best) {
                best = s;
                plan.absorb_into = j;
            }
        }
        if (best < cfg.similarity.theta_relation) plan.absorb_into = kNone;
    });

    Tkg out;
    out.entities = std::move(resolution.merged);
    out.relations = right.relations;
    out.relations.reserve(right.relations.size() + left.relations.size());
    std::size_t absorbed = 0;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const auto& r = left.relations[i];
        auto& plan = plans[i];
        if (plan.absorb_into != kNone) {
            auto& target = out.relations[plan.absorb_into];
            target.t_start.merge(r.t_start);
            target.t_end.merge(r.t_end);
            target.t_obs.merge(r.t_obs);
            ++absorbed;
            continue;
        }
        out.relations.push_back({std::move(plan.subject), std::move(plan.predicate), std::move(plan.object), r.t_start,
                                 r.t_end, r.t_obs, *plan.embedding});
    }

    if (maps) {
        maps->entities = std::move(resolution.mapping);
        maps->predicates.clear();
        for (const auto& r : left.relations) {
            const auto it = renames.find(r.predicate);
            maps->predicates.try_emplace(r.predicate, it == renames.end() ? r.predicate : it->second.first);
        }
        maps->absorbed_relations = absorbed;
    }
    return canonicalize(std::move(out));
}

bool is_canonical(const Tkg& g) {
    return std::is_sorted(g.entities.begin(), g.entities.end(),
                          [](const Entity& a, const Entity& b) { return a.key() < b.key(); }) &&
           std::is_sorted(g.relations.begin(), g.relations.end(),
                          [](const TemporalRelation& a, const TemporalRelation& b) { return compare_identity(a, b) < 0; });
}

// Validated input in canonical order; copies only when the caller's graph is unsorted.
const Tkg& prepared(const Tkg& g, std::optional<Tkg>& storage) {
    require_valid(g);
    if (is_canonical(g)) return g;
    storage = canonicalize(g);
    return *storage;
}

std::unique_ptr<WorkerPool> pool_for(const Tkg& left, const Tkg& right, const MergeConfig& cfg) {
    const std::size_t work = left.entities.size() * right.entities.size();
    if (cfg.workers <= 1 || work < kParallelWork) return nullptr;
    return std::make_unique<WorkerPool>(cfg.workers);
}

template <typename T, typename MergeFn>
T reduce_rounds(std::vector<T> current, const MergeConfig& cfg, MergeStats* stats, MergeFn&& merge) {
    if (stats) *stats = {};
    if (current.empty()) return T{};
    WorkerPool pool(cfg.workers);
    while (current.size() > 1) {
        const std::size_t pairs = current.size() / 2;
        std::vector<T> next(pairs);
        std::atomic<bool> failed{false};
        pool.parallel_for(pairs, [&](std::size_t i) {
            if (failed.load(std::memory_order_relaxed)) return;
            try {
                next[i] = merge(current[2 * i], current[2 * i + 1], &pool);
            } catch (...) {
                failed.store(true, std::memory_order_relaxed);
                throw;
            }
        });
        if (current.size() % 2 == 1) next.push_back(std::move(current.back()));
        current = std::move(next);
        if (stats) {
            ++stats->rounds;
            stats->binary_merges += pairs;
        }
    }
    return std::move(current.front());
}

}  // namespace

EntityResolution resolve_entities(const Tkg& left, const Tkg& right, const MergeConfig& cfg, WorkerPool* pool) {
    const std::size_t n = left.entities.size();
    std::vector<std::size_t> target(n, kNone);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
        if (const auto* match = right.find(left.entities[i].key())) {
            target[i] = static_cast<std::size_t>(match - right.entities.data());
        } else {
            pending.push_back(i);
        }
    }

    if (!pending.empty() && !right.entities.empty()) {
        std::vector<std::vector<double>> right_vecs(right.entities.size());
        for_each_index(pool, right.entities.size(), right.entities.size() * 64,
                       [&](std::size_t j) { right_vecs[j] = unit_combined(right.entities[j], cfg.similarity); });
        for_each_index(pool, pending.size(), pending.size() * right.entities.size(), [&](std::size_t k) {
            const std::size_t i = pending[k];
            const auto v = unit_combined(left.entities[i], cfg.similarity);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_j = kNone;
            for (std::size_t j = 0; j < right_vecs.size(); ++j) {
                const double s = dot(v, right_vecs[j]);
                if (s > best) {
                    best = s;
                    best_j = j;
                }
            }
            if (best >= cfg.similarity.theta_entity) target[i] = best_j;
        });
    }

    EntityResolution out;
    out.merged = right.entities;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = left.entities[i];
        if (target[i] == kNone) {
            out.mapping.emplace(e.key(), e.key());
            out.merged.push_back(e);
        } else {
            out.mapping.emplace(e.key(), right.entities[target[i]].key());
        }
    }
    std::stable_sort(out.merged.begin(), out.merged.end(),
                     [](const Entity& a, const Entity& b) { return a.key() < b.key(); });
    return out;
}

Tkg binary_merge(const Tkg& left, const Tkg& right, const MergeConfig& cfg, MergeMaps* maps) {
    cfg.validate();
    std::optional<Tkg> l_storage;
    std::optional<Tkg> r_storage;
    const auto& l = prepared(left, l_storage);
    const auto& r = prepared(right, r_storage);
    const auto pool = pool_for(l, r, cfg);
    return merge_impl(l, r, cfg, pool.get(), maps);
}

MentionTrace MentionTrace::identity(const Tkg& graph) {
    MentionTrace t;
    for (const auto& e : graph.entities) t.entities.emplace(e.key(), e.key());
    for (const auto& r : graph.relations) t.predicates.emplace(r.predicate, r.predicate);
    return t;
}

void MentionTrace::apply(const MergeMaps& maps) {
    for (auto& [_, current] : entities) {
        if (const auto it = maps.entities.find(current); it != maps.entities.end()) current = it->second;
    }
    for (auto& [_, current] : predicates) {
        if (const auto it = maps.predicates.find(current); it != maps.predicates.end()) current = it->second;
    }
}

void MentionTrace::absorb(const MentionTrace& other) {
    entities.insert(other.entities.begin(), other.entities.end());
    predicates.insert(other.predicates.begin(), other.predicates.end());
}

namespace {

TracedTkg merge_traced(const TracedTkg& left, const TracedTkg& right, const MergeConfig& cfg, WorkerPool* pool) {
    MergeMaps maps;
    TracedTkg out;
    out.graph = merge_impl(left.graph, right.graph, cfg, pool, &maps);
    auto moved = left.trace;
    moved.apply(maps);
    out.trace = right.trace;
    out.trace.absorb(moved);
    return out;
}

}  // namespace

Tkg parallel_merge(std::vector<Tkg> graphs, const MergeConfig& cfg, MergeStats* stats) {
    cfg.validate();
    for (auto& g : graphs) {
        std::optional<Tkg> storage;
        if (&prepared(g, storage) != &g) g = std::move(*storage);
    }
    return reduce_rounds(std::move(graphs), cfg, stats, [&cfg](const Tkg& l, const Tkg& r, WorkerPool* pool) {
        return merge_impl(l, r, cfg, pool, nullptr);
    });
}

TracedTkg parallel_merge(std::vector<TracedTkg> graphs, const MergeConfig& cfg, MergeStats* stats) {
    cfg.validate();
    for (auto& g : graphs) {
        std::optional<Tkg> storage;
        if (&prepared(g.graph, storage) != &g.graph) g.graph = std::move(*storage);
    }
    return reduce_rounds(std::move(graphs), cfg, stats,
                         [&cfg](const TracedTkg& l, const TracedTkg& r, WorkerPool* pool) {
                             return merge_traced(l, r, cfg, pool);
                         });
}

Tkg update_dtkg(const Tkg& previous, const Tkg& snapshot, const MergeConfig& cfg, MergeMaps* maps) {
    return binary_merge(snapshot, previous, cfg, maps);
}

TracedTkg update_dtkg(const TracedTkg& previous, const TracedTkg& snapshot, const MergeConfig& cfg) {
    cfg.validate();
    TracedTkg prev = previous;
    TracedTkg snap = snapshot;
    for (auto* g : {&prev, &snap}) {
        std::optional<Tkg> storage;
        if (&prepared(g->graph, storage) != &g->graph) g->graph = std::move(*storage);
    }
    const auto pool = pool_for(snap.graph, prev.graph, cfg);
    return merge_traced(snap, prev, cfg, pool.get());
}

}  // namespace dtkg
