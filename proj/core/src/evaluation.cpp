// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dtkg/error.hpp"

namespace dtkg {

Quintuple to_quintuple(const TemporalRelation& r) {
    return {r.subject.name, r.predicate, r.object.name, r.t_start, r.t_end};
}

std::vector<Quintuple> quintuples_of(const Tkg& graph) {
    std::vector<Quintuple> out;
    out.reserve(graph.relations.size());
    for (const auto& r : graph.relations) out.push_back(to_quintuple(r));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string render_quintuple(const Quintuple& q) {
    return fmt::format("{} {} {} start={} end={}", q.subject, q.predicate, q.object, format_time_list(q.t_start),
                       format_time_list(q.t_end));
}

std::string_view to_string(MatchMode mode) noexcept { return mode == MatchMode::kExact ? "exact" : "embedding"; }

namespace {

using FactKey = std::tuple<std::string, std::string, std::string>;

FactKey fact_key(const Quintuple& q) { return {q.subject, q.predicate, q.object}; }

bool covers(const TimeList& have, const TimeList& want) {
    return std::includes(have.begin(), have.end(), want.begin(), want.end());
}

void classify_pair(const Quintuple& ext, const Quintuple& gold, MatchCounts& c) {
    ++c.match;
    if (ext.t_start == gold.t_start && ext.t_end == gold.t_end) {
        ++c.match_t;
    } else if (!covers(ext.t_start, gold.t_start) || !covers(ext.t_end, gold.t_end)) {
        ++c.om_t;
    } else {
        ++c.hall_t;
    }
}

std::string factual_text(const Quintuple& q) {
    auto s = fmt::format("{} {} {}", q.subject, q.predicate, q.object);
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
}

double safe_ratio(std::size_t num, std::size_t den, double if_undefined) {
    return den == 0 ? if_undefined : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MatchCounts classify(const std::vector<Quintuple>& extracted, const std::vector<Quintuple>& gold,
                     const ClassifyOptions& options) {
    if (options.mode == MatchMode::kEmbedding && !options.embedder) {
        throw Error(ErrorCode::kInvalidArgument, "embedding match mode needs an embedder");
    }
    std::map<FactKey, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < extracted.size(); ++i) groups[fact_key(extracted[i])].first.push_back(i);
    for (std::size_t j = 0; j < gold.size(); ++j) groups[fact_key(gold[j])].second.push_back(j);

    MatchCounts c;
    std::vector<std::size_t> left_ext;
    std::vector<std::size_t> left_gold;
    for (auto& [_, group] : groups) {
        auto& [ext, gld] = group;
        std::vector<bool> ext_used(ext.size()), gold_used(gld.size());
        // Temporally exact pairs first, then whatever is left in order.
        for (std::size_t a = 0; a < ext.size(); ++a) {
            for (std::size_t b = 0; b < gld.size(); ++b) {
                if (gold_used[b]) continue;
                const auto& x = extracted[ext[a]];
                const auto& g = gold[gld[b]];
                if (x.t_start == g.t_start && x.t_end == g.t_end) {
                    ext_used[a] = gold_used[b] = true;
                    classify_pair(x, g, c);
                    break;
                }
            }
        }
        std::size_t b = 0;
        for (std::size_t a = 0; a < ext.size(); ++a) {
            if (ext_used[a]) continue;
            while (b < gld.size() && gold_used[b]) ++b;
            if (b == gld.size()) {
                left_ext.push_back(ext[a]);
                continue;
            }
            gold_used[b] = true;
            classify_pair(extracted[ext[a]], gold[gld[b]], c);
        }
        for (std::size_t k = 0; k < gld.size(); ++k) {
            if (!gold_used[k]) left_gold.push_back(gld[k]);
        }
    }

    if (options.mode == MatchMode::kEmbedding && !left_ext.empty() && !left_gold.empty()) {
        std::vector<std::string> texts;
        for (const auto i : left_ext) texts.push_back(factual_text(extracted[i]));
        for (const auto j : left_gold) texts.push_back(factual_text(gold[j]));
        const auto vecs = options.embedder->embed(texts);
        struct Candidate {
            double sim;
            std::size_t a;
            std::size_t b;
        };
        std::vector<Candidate> cands;
        for (std::size_t a = 0; a < left_ext.size(); ++a) {
            for (std::size_t b = 0; b < left_gold.size(); ++b) {
                const double s = cosine(vecs[a], vecs[left_ext.size() + b]);
                if (s >= options.fallback_threshold) cands.push_back({s, a, b});
            }
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Candidate& x, const Candidate& y) { return x.sim > y.sim; });
        std::vector<bool> ext_used(left_ext.size()), gold_used(left_gold.size());
        for (const auto& cand : cands) {
            if (ext_used[cand.a] || gold_used[cand.b]) continue;
            ext_used[cand.a] = gold_used[cand.b] = true;
            classify_pair(extracted[left_ext[cand.a]], gold[left_gold[cand.b]], c);
            ++c.fallback_matches;
        }
        c.hall += static_cast<std::size_t>(std::count(ext_used.begin(), ext_used.end(), false));
        c.om += static_cast<std::size_t>(std::count(gold_used.begin(), gold_used.end(), false));
    } else {
        c.hall += left_ext.size();
        c.om += left_gold.size();
    }
    return c;
}

double hall_t_rate(double r_match, double r_match_t, double r_om_t) {
    const double v = r_match - r_match_t - r_om_t;
    return (v < 0.0 && v > -1e-12) ? 0.0 : v;
}

Rates rates(const MatchCounts& c) {
    Rates r;
    const std::size_t factual = c.match + c.om;
    const std::size_t produced = c.match + c.hall;
    r.factual_undefined = factual == 0;
    r.hall_undefined = produced == 0;
    r.r_match = safe_ratio(c.match, factual, 1.0);
    r.r_om = safe_ratio(c.om, factual, 0.0);
    r.r_hall = safe_ratio(c.hall, produced, 0.0);
    r.r_match_t = safe_ratio(c.match_t, factual, 1.0);
    r.r_om_t = safe_ratio(c.om_t, factual, 0.0);
    r.r_hall_t = hall_t_rate(r.r_match, r.r_match_t, r.r_om_t);
    return r;
}

double stability(const std::vector<Quintuple>& run_base, const std::vector<Quintuple>& run_r, Embedder& embedder) {
    if (run_base.empty() || run_r.empty()) throw Error(ErrorCode::kInvalidArgument, "stability needs non-empty runs");
    auto centroid = [&embedder](const std::vector<Quintuple>& run) {
        std::vector<std::string> texts;
        texts.reserve(run.size());
        for (const auto& q : run) texts.push_back(render_quintuple(q));
        const auto vecs = embedder.embed(texts);
        std::vector<double> c(vecs.front().dimension(), 0.0);
        for (const auto& v : vecs) {
            if (v.dimension() != c.size()) throw Error(ErrorCode::kDimensionMismatch, "mixed embedding dimensions");
            for (std::size_t k = 0; k < c.size(); ++k) c[k] += v.values()[k];
        }
        for (auto& x : c) x /= static_cast<double>(vecs.size());
        return c;
    };
    const auto a = centroid(run_base);
    const auto b = centroid(run_r);
    return cosine(std::span<const double>(a), std::span<const double>(b));
}

PairwiseScores pairwise_scores(const std::map<std::string, std::string>& predicted,
                               const std::map<std::string, std::string>& gold) {
    std::map<std::string, std::size_t> pred_sizes;
    std::map<std::string, std::size_t> gold_sizes;
    std::map<std::pair<std::string, std::string>, std::size_t> cells;
    for (const auto& [mention, cluster] : predicted) {
        const auto it = gold.find(mention);
        if (it == gold.end()) {
            throw Error(ErrorCode::kInvalidArgument, fmt::format("mention '{}' has no gold cluster label", mention));
        }
        ++pred_sizes[cluster];
        ++gold_sizes[it->second];
        ++cells[{cluster, it->second}];
    }
    auto pairs = [](std::size_t n) { return n * (n - (n > 0 ? 1 : 0)) / 2; };
    std::size_t tp = 0, pred_pairs = 0, gold_pairs = 0;
    for (const auto& [_, n] : cells) tp += pairs(n);
    for (const auto& [_, n] : pred_sizes) pred_pairs += pairs(n);
    for (const auto& [_, n] : gold_sizes) gold_pairs += pairs(n);

    PairwiseScores s;
    s.precision = safe_ratio(tp, pred_pairs, 1.0);
    s.recall = safe_ratio(tp, gold_pairs, 1.0);
    const double sum = s.precision + s.recall;
    s.f1 = sum == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / sum;
    return s;
}

GoldAnnotation combine_gold(const std::vector<GoldAnnotation>& docs) {
    GoldAnnotation out;
    out.doc_id = "*";
    auto merge_clusters = [](std::map<std::string, std::string>& into, const std::map<std::string, std::string>& from,
                             std::string_view what) {
        for (const auto& [mention, label] : from) {
            const auto [it, fresh] = into.emplace(mention, label);
            if (!fresh && it->second != label) {
                throw Error(ErrorCode::kValidation,
                            fmt::format("{} mention '{}' has gold labels '{}' and '{}'", what, mention, it->second, label));
            }
        }
    };
    for (const auto& d : docs) {
        out.gold_tuples.insert(out.gold_tuples.end(), d.gold_tuples.begin(), d.gold_tuples.end());
        merge_clusters(out.entity_clusters, d.entity_clusters, "entity");
        merge_clusters(out.relation_clusters, d.relation_clusters, "relation");
    }
    std::sort(out.gold_tuples.begin(), out.gold_tuples.end());
    out.gold_tuples.erase(std::unique(out.gold_tuples.begin(), out.gold_tuples.end()), out.gold_tuples.end());
    return out;
}

ResolutionScores er_rr_scores(const Tkg& predicted, const GoldAnnotation& gold, const MentionTrace* trace) {
    std::map<std::string, std::string> entity_pred;
    std::map<std::string, std::string> relation_pred;
    if (trace) {
        for (const auto& [mention, current] : trace->entities) entity_pred.try_emplace(mention.name, to_string(current));
        for (const auto& [mention, current] : trace->predicates) relation_pred.try_emplace(mention, current);
    } else {
        for (const auto& e : predicted.entities) entity_pred.try_emplace(e.name, to_string(e.key()));
        for (const auto& r : predicted.relations) relation_pred.try_emplace(r.predicate, r.predicate);
    }
    return {pairwise_scores(entity_pred, gold.entity_clusters), pairwise_scores(relation_pred, gold.relation_clusters)};
}

ValidityCounts count_facts_with_validity(const std::vector<Tkg>& atomic_graphs) {
    ValidityCounts out;
    for (const auto& g : atomic_graphs) {
        for (const auto& r : g.relations) {
            if (r.t_start.empty() && r.t_end.empty()) {
                ++out.without_validity;
            } else {
                ++out.with_validity;
            }
        }
    }
    return out;
}

std::string report_to_json(const EvaluationReport& report) {
    const auto& c = report.counts;
    const auto& r = report.rates;
    nlohmann::json j;
    j["match_mode"] = std::string(to_string(report.mode));
    j["counts"] = {{"match", c.match},     {"om", c.om},     {"hall", c.hall},
                   {"match_t", c.match_t}, {"om_t", c.om_t}, {"hall_t", c.hall_t},
                   {"fallback_matches", c.fallback_matches}};
    j["rates"] = {{"r_match", r.r_match},     {"r_om", r.r_om},     {"r_hall", r.r_hall},
                  {"r_match_t", r.r_match_t}, {"r_om_t", r.r_om_t}, {"r_hall_t", r.r_hall_t},
                  {"factual_undefined", r.factual_undefined},        {"hall_undefined", r.hall_undefined}};
    j["stability"] = report.stability ? nlohmann::json(*report.stability) : nlohmann::json();
    if (report.resolution) {
        auto scores = [](const PairwiseScores& s) {
            return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
        };
        j["resolution"] = {{"er", scores(report.resolution->er)}, {"rr", scores(report.resolution->rr)}};
    } else {
        j["resolution"] = nullptr;
    }
    j["validity"] = {{"with", report.validity.with_validity}, {"without", report.validity.without_validity}};
    j["config"] = report.config;
    return j.dump(2) + "\n";
}

}  // namespace dtkg
