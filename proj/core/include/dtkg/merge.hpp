// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dtkg/concurrency.hpp"
#include "dtkg/embedding.hpp"
#include "dtkg/model.hpp"

namespace dtkg {

struct MergeConfig {
    SimilarityConfig similarity;
    std::size_t workers = 8;

    /// Throws Error(kConfig) on out-of-range thresholds or zero workers.
    void validate() const;
};

/// Left-graph entity key -> key in the merged graph.
using EntityMapping = std::map<EntityKey, EntityKey>;

struct EntityResolution {
    EntityMapping mapping;
    std::vector<Entity> merged;  // right entities plus unmapped left entities, in key order
};

/// Exact (name, label) match first; otherwise the most similar right entity if it reaches
/// theta_entity, ties going to the smallest key; otherwise the entity maps to itself.
/// `pool` may be null.
EntityResolution resolve_entities(const Tkg& left, const Tkg& right, const MergeConfig& cfg,
                                  WorkerPool* pool = nullptr);

/// What one binary merge did to the left graph's names.
struct MergeMaps {
    EntityMapping entities;
    std::map<std::string, std::string> predicates;  // left predicate -> predicate in the result
    std::size_t absorbed_relations = 0;             // left relations folded into a right relation
};

/// Merges `left` into `right`. Right-hand names win. Throws Error(kValidation) on invalid inputs
/// and Error(kMissingEmbedding) when a needed embedding is absent.
Tkg binary_merge(const Tkg& left, const Tkg& right, const MergeConfig& cfg, MergeMaps* maps = nullptr);

/// Original mention -> current canonical name, carried alongside a graph through merges.
struct MentionTrace {
    std::map<EntityKey, EntityKey> entities;
    std::map<std::string, std::string> predicates;

    /// Every entity and predicate of `graph` mapped to itself.
    static MentionTrace identity(const Tkg& graph);
    /// Rewrites every target through `maps` (the trace belongs to the left side of that merge).
    void apply(const MergeMaps& maps);
    /// Adds entries from `other` that are not present yet.
    void absorb(const MentionTrace& other);

    friend bool operator==(const MentionTrace&, const MentionTrace&) = default;
};

struct TracedTkg {
    Tkg graph;
    MentionTrace trace;
};

struct MergeStats {
    std::size_t rounds = 0;
    std::size_t binary_merges = 0;
};

/// Pairwise reduction: each round merges (g[2i], g[2i+1]) concurrently and carries an odd last
/// graph forward to the end of the next round. Empty input yields an empty graph.
Tkg parallel_merge(std::vector<Tkg> graphs, const MergeConfig& cfg, MergeStats* stats = nullptr);
TracedTkg parallel_merge(std::vector<TracedTkg> graphs, const MergeConfig& cfg, MergeStats* stats = nullptr);

/// binary_merge(snapshot, previous): the running graph is the reference side.
Tkg update_dtkg(const Tkg& previous, const Tkg& snapshot, const MergeConfig& cfg, MergeMaps* maps = nullptr);
TracedTkg update_dtkg(const TracedTkg& previous, const TracedTkg& snapshot, const MergeConfig& cfg);

}  // namespace dtkg
