// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtkg/embedding.hpp"
#include "dtkg/merge.hpp"
#include "dtkg/model.hpp"

namespace dtkg {

/// (subject, predicate, object, t_start, t_end) with normalized names and no labels.
struct Quintuple {
    std::string subject;
    std::string predicate;
    std::string object;
    TimeList t_start;
    TimeList t_end;

    friend auto operator<=>(const Quintuple&, const Quintuple&) = default;
    friend bool operator==(const Quintuple&, const Quintuple&) = default;
};

Quintuple to_quintuple(const TemporalRelation& r);
/// One quintuple per relation, sorted, duplicates removed.
std::vector<Quintuple> quintuples_of(const Tkg& graph);

/// "subject predicate object start=[...] end=[...]"
std::string render_quintuple(const Quintuple& q);

enum class MatchMode { kExact, kEmbedding };

std::string_view to_string(MatchMode mode) noexcept;

struct ClassifyOptions {
    MatchMode mode = MatchMode::kExact;
    /// Cosine of the rendered "subject predicate object" texts needed for fallback credit.
    double fallback_threshold = 0.9;
    Embedder* embedder = nullptr;  // required for kEmbedding
};

struct MatchCounts {
    std::size_t match = 0;
    std::size_t om = 0;
    std::size_t hall = 0;
    std::size_t match_t = 0;
    std::size_t om_t = 0;
    std::size_t hall_t = 0;
    std::size_t fallback_matches = 0;  // included in `match`

    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Factual matching pairs extracted and gold tuples one-to-one on (subject, predicate, object),
/// preferring pairs whose times also agree. Each factual match then lands in exactly one of
/// MATCH_t (both time lists equal), OM_t (some gold time is missing), HALL_t (otherwise: the
/// extraction adds times).
MatchCounts classify(const std::vector<Quintuple>& extracted, const std::vector<Quintuple>& gold,
                     const ClassifyOptions& options = {});

struct Rates {
    double r_match = 0;
    double r_om = 0;
    double r_hall = 0;
    double r_match_t = 0;
    double r_om_t = 0;
    double r_hall_t = 0;
    bool factual_undefined = false;  // |MATCH| + |OM| == 0
    bool hall_undefined = false;     // |MATCH| + |HALL| == 0
};

/// R_MATCH = M/(M+OM), R_OM = OM/(M+OM), R_HALL = HALL/(M+HALL), R_MATCH_t and R_OM_t over M+OM,
/// R_HALL_t = R_MATCH - R_MATCH_t - R_OM_t. A 0/0 MATCH-type rate is 1 and an OM/HALL-type rate is 0.
Rates rates(const MatchCounts& counts);

/// R_MATCH - R_MATCH_t - R_OM_t, with rounding noise below 1e-12 clamped to zero.
double hall_t_rate(double r_match, double r_match_t, double r_om_t);

/// Cosine between the centroids of the embedded renderings. Throws Error(kInvalidArgument) on an empty run.
double stability(const std::vector<Quintuple>& run_base, const std::vector<Quintuple>& run_r, Embedder& embedder);

struct PairwiseScores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Pairwise clustering scores over the mentions of `predicted` (mention -> cluster id). Pairs with
/// no positives on a side give 1 for that side. Throws Error(kInvalidArgument) if a mention has no
/// gold label.
PairwiseScores pairwise_scores(const std::map<std::string, std::string>& predicted,
                               const std::map<std::string, std::string>& gold);

struct GoldAnnotation {
    std::string doc_id;
    std::vector<Quintuple> gold_tuples;
    std::map<std::string, std::string> entity_clusters;    // entity name mention -> cluster label
    std::map<std::string, std::string> relation_clusters;  // predicate mention -> cluster label
};

/// Concatenates per-document annotations; duplicate tuples collapse. Throws Error(kValidation) when
/// two documents give one mention different cluster labels.
GoldAnnotation combine_gold(const std::vector<GoldAnnotation>& docs);

struct ResolutionScores {
    PairwiseScores er;
    PairwiseScores rr;
};

/// Entity mentions are entity names and relation mentions are predicates. With a trace, each
/// original mention is scored in the cluster it was merged into; without one, every entity and
/// predicate of `predicted` is its own mention.
ResolutionScores er_rr_scores(const Tkg& predicted, const GoldAnnotation& gold, const MentionTrace* trace = nullptr);

struct ValidityCounts {
    std::size_t with_validity = 0;
    std::size_t without_validity = 0;

    friend bool operator==(const ValidityCounts&, const ValidityCounts&) = default;
};

/// Relations with a non-empty t_start or t_end count as "with".
ValidityCounts count_facts_with_validity(const std::vector<Tkg>& atomic_graphs);

struct EvaluationReport {
    MatchMode mode = MatchMode::kExact;
    MatchCounts counts;
    Rates rates;
    std::optional<double> stability;
    std::optional<ResolutionScores> resolution;
    ValidityCounts validity;
    std::map<std::string, std::string> config;  // echoed settings
};

/// Pretty-printed JSON with sorted keys.
std::string report_to_json(const EvaluationReport& report);

}  // namespace dtkg
