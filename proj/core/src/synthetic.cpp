// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "dtkg/embedding.hpp"
#include "dtkg/error.hpp"

namespace dtkg::synthetic {

std::uint64_t Rng::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t Rng::below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
    const double u1 = uniform() + 0x1.0p-54;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

constexpr const char* kLabels[] = {"organization", "person", "location"};
constexpr const char* kPredicates[] = {"owns",        "possesses",      "has",     "works at", "is employed by",
                                       "invested in", "partnered with", "sued",    "supplies", "acquired"};

std::string iso(Timestamp t) { return format_iso_date(t); }

}  // namespace

std::vector<Document> grammar_corpus(std::size_t n_facts, std::uint64_t seed, const CorpusOptions& o) {
    Rng rng(seed);
    const std::size_t pool = std::max<std::size_t>(o.entity_pool, 2);
    const std::size_t per_doc = std::max<std::size_t>(o.facts_per_document, 1);
    const std::size_t days = std::max<std::size_t>(o.days, 1);
    auto entity = [&](std::size_t i) {
        return fmt::format("{} {} [{}]", i % 3 == 1 ? "Person" : (i % 3 == 2 ? "Place" : "Org"), i,
                           kLabels[i % 3]);
    };
    std::vector<Document> docs;
    std::size_t written = 0;
    while (written < n_facts) {
        const std::size_t count = std::min(per_doc, n_facts - written);
        const auto day = static_cast<std::int64_t>(rng.below(days));
        const auto observed = Timestamp{add_days(o.first_day, day).seconds + static_cast<std::int64_t>(rng.below(86400))};
        std::string text;
        for (std::size_t k = 0; k < count; ++k) {
            const auto s = rng.below(pool);
            auto t = rng.below(pool - 1);
            if (t >= s) ++t;
            std::string line = fmt::format("{} | {} | {}", entity(s), kPredicates[rng.below(std::size(kPredicates))],
                                           entity(t));
            if (rng.chance(o.start_probability)) {
                line += " | start=" + iso(add_days(o.first_day, static_cast<std::int64_t>(rng.below(days * 4)) - 30));
            }
            if (rng.chance(o.end_probability)) {
                line += " | end=" + iso(add_days(o.first_day, static_cast<std::int64_t>(rng.below(days * 4))));
            }
            if (!text.empty()) text += ' ';
            text += line + ".";
        }
        docs.push_back({fmt::format("doc-{:05}", docs.size()), std::move(text), observed});
        written += count;
    }
    return docs;
}

namespace {

using Vec = std::vector<double>;

Vec normalized(Vec v) {
    const double n = l2_norm(v);
    for (auto& x : v) x /= n;
    return v;
}

Vec random_unit(Rng& rng, std::size_t dim) {
    Vec v(dim);
    for (auto& x : v) x = rng.gaussian();
    return normalized(std::move(v));
}

Vec axis(std::size_t i, std::size_t dim) {
    Vec v(dim, 0.0);
    v[i] = 1.0;
    return v;
}

Vec around(const Vec& base, double spread, Rng& rng) {
    const auto r = random_unit(rng, base.size());
    Vec v(base.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = base[i] + spread * r[i];
    return normalized(std::move(v));
}

std::vector<float> to_float(const Vec& v) { return {v.begin(), v.end()}; }

// Every within-cluster pair must clear theta + margin and every cross-cluster pair stay under
// theta - margin. Vectors are already unit length.
void verify_separation(const std::vector<Vec>& vecs, const std::vector<std::size_t>& cluster, double theta,
                       double margin, std::string_view what) {
    for (std::size_t a = 0; a < vecs.size(); ++a) {
        for (std::size_t b = a + 1; b < vecs.size(); ++b) {
            const double s = dot(vecs[a], vecs[b]);
            const bool same = cluster[a] == cluster[b];
            if ((same && s < theta + margin) || (!same && s > theta - margin)) {
                throw Error(ErrorCode::kInvalidArgument,
                            fmt::format("synthetic {} clusters not separated: pair ({}, {}) similarity {:.4f}", what, a,
                                        b, s));
            }
        }
    }
}

}  // namespace

ClusteredGraphs clustered_graphs(std::uint64_t seed, const ClusterOptions& o) {
    if (o.entity_clusters < 2 || o.predicate_clusters < 1 || o.variants_per_entity < 1 ||
        o.variants_per_predicate < 1 || o.labels < 1) {
        throw Error(ErrorCode::kInvalidArgument, "clustered_graphs needs >= 2 entity clusters and >= 1 of the rest");
    }
    Rng rng(seed);
    const std::size_t axes = o.entity_clusters + o.predicate_clusters + o.labels;
    const std::size_t dim = o.dimension == 0 ? axes : o.dimension;
    const bool on_axes = dim >= axes;
    std::size_t next_axis = 0;
    auto base = [&]() { return on_axes ? axis(next_axis++, dim) : random_unit(rng, dim); };

    std::vector<Vec> label_vecs;
    for (std::size_t l = 0; l < o.labels; ++l) label_vecs.push_back(base());

    ClusteredGraphs out;
    // Entity variants: name vector, label index, cluster.
    std::vector<std::vector<Entity>> entity_variants(o.entity_clusters);
    std::vector<Vec> combined;
    std::vector<std::size_t> combined_cluster;
    for (std::size_t c = 0; c < o.entity_clusters; ++c) {
        const auto center = base();
        const auto label = c % o.labels;
        for (std::size_t v = 0; v < o.variants_per_entity; ++v) {
            const auto name_vec = around(center, o.spread, rng);
            Entity e{fmt::format("entity_{}_{}", c, v), fmt::format("type_{}", label), to_float(name_vec),
                     to_float(label_vecs[label])};
            if (o.verify) {
                Vec mix(dim);
                for (std::size_t i = 0; i < dim; ++i) mix[i] = o.lambda * name_vec[i] + o.beta * label_vecs[label][i];
                combined.push_back(normalized(std::move(mix)));
                combined_cluster.push_back(c);
            }
            out.entity_cluster.emplace(e.key(), c);
            entity_variants[c].push_back(std::move(e));
        }
    }

    std::vector<std::vector<std::pair<std::string, std::vector<float>>>> predicate_variants(o.predicate_clusters);
    std::vector<Vec> pred_vecs;
    std::vector<std::size_t> pred_cluster;
    for (std::size_t c = 0; c < o.predicate_clusters; ++c) {
        const auto center = base();
        for (std::size_t v = 0; v < o.variants_per_predicate; ++v) {
            const auto vec = around(center, o.spread, rng);
            auto name = fmt::format("relation_{}_{}", c, v);
            out.predicate_cluster.emplace(name, c);
            if (o.verify) {
                pred_vecs.push_back(vec);
                pred_cluster.push_back(c);
            }
            predicate_variants[c].emplace_back(std::move(name), to_float(vec));
        }
    }

    if (o.verify) {
        verify_separation(combined, combined_cluster, o.theta_entity, o.margin, "entity");
        verify_separation(pred_vecs, pred_cluster, o.theta_relation, o.margin, "predicate");
    }

    const std::size_t days = std::max<std::size_t>(o.days, 1);
    auto random_day = [&]() { return add_days(o.first_day, static_cast<std::int64_t>(rng.below(days))); };
    for (std::size_t g = 0; g < o.graphs; ++g) {
        Tkg graph;
        std::map<std::size_t, std::size_t> entity_choice;
        std::map<std::size_t, std::size_t> predicate_choice;
        std::set<std::tuple<std::size_t, std::size_t, std::size_t>> triples;
        const auto observed = random_day();
        auto pick_entity = [&](std::size_t c) -> const Entity& {
            auto [it, fresh] = entity_choice.try_emplace(c, 0);
            if (fresh) {
                it->second = rng.below(o.variants_per_entity);
                graph.entities.push_back(entity_variants[c][it->second]);
            }
            return entity_variants[c][it->second];
        };
        for (std::size_t k = 0; k < o.relations_per_graph; ++k) {
            std::size_t s = 0, p = 0, obj = 0;
            bool found = false;
            for (int attempt = 0; attempt < 64 && !found; ++attempt) {
                s = rng.below(o.entity_clusters);
                obj = rng.below(o.entity_clusters - 1);
                if (obj >= s) ++obj;
                p = rng.below(o.predicate_clusters);
                found = !triples.contains({s, p, obj});
            }
            if (!found) break;
            triples.insert({s, p, obj});
            const auto& subject = pick_entity(s);
            const auto& object = pick_entity(obj);
            auto [pit, fresh] = predicate_choice.try_emplace(p, 0);
            if (fresh) pit->second = rng.below(o.variants_per_predicate);
            const auto& [pname, pvec] = predicate_variants[p][pit->second];
            TemporalRelation r{subject.key(), pname, object.key(), {}, {}, TimeList{observed}, pvec};
            if (rng.chance(0.6)) r.t_start.insert(random_day());
            if (rng.chance(0.3)) r.t_end.insert(random_day());
            graph.relations.push_back(std::move(r));
        }
        out.graphs.push_back(canonicalize(std::move(graph)));
    }
    return out;
}

}  // namespace dtkg::synthetic
