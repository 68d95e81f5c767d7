// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded generators for tests, benchmarks and the `bench` command.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dtkg/extraction.hpp"
#include "dtkg/model.hpp"

namespace dtkg::synthetic {

/// Deterministic across platforms (splitmix64), unlike the standard distributions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform in [0, n).
    std::size_t below(std::size_t n);
    double uniform();  // [0, 1)
    double gaussian();
    bool chance(double p) { return uniform() < p; }

  private:
    std::uint64_t state_;
};

struct CorpusOptions {
    std::size_t facts_per_document = 4;
    std::size_t entity_pool = 40;
    std::size_t days = 5;
    Timestamp first_day = from_civil(2020, 1, 1);
    double start_probability = 0.6;
    double end_probability = 0.3;
};

/// Documents written in the mock backend's tuple grammar, one tuple sentence per fact.
std::vector<Document> grammar_corpus(std::size_t n_facts, std::uint64_t seed, const CorpusOptions& options = {});

struct ClusterOptions {
    std::size_t graphs = 16;
    std::size_t relations_per_graph = 2;
    std::size_t entity_clusters = 12;
    std::size_t variants_per_entity = 3;
    std::size_t predicate_clusters = 5;
    std::size_t variants_per_predicate = 3;
    std::size_t labels = 3;
    /// 0 picks the smallest dimension that keeps every cluster on its own axis.
    std::size_t dimension = 0;
    /// Size of the per-variant perturbation around the cluster direction.
    double spread = 0.25;
    std::size_t days = 6;
    Timestamp first_day = from_civil(2020, 3, 1);
    /// Check that every within-cluster pair is at least `margin` above and every cross-cluster
    /// pair at least `margin` below its threshold. Throws Error(kInvalidArgument) otherwise.
    bool verify = true;
    double margin = 0.05;
    double theta_entity = 0.8;
    double theta_relation = 0.7;
    double lambda = 0.8;
    double beta = 0.2;
};

struct ClusteredGraphs {
    std::vector<Tkg> graphs;
    std::map<EntityKey, std::size_t> entity_cluster;
    std::map<std::string, std::size_t> predicate_cluster;
};

/// Atomic graphs whose entity and predicate embeddings form well-separated clusters. A graph never
/// holds two entities of one cluster, two predicate names of one cluster, or two relations with the
/// same (subject cluster, predicate cluster, object cluster).
ClusteredGraphs clustered_graphs(std::uint64_t seed, const ClusterOptions& options = {});

}  // namespace dtkg::synthetic
