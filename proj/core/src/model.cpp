// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/model.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "dtkg/error.hpp"

namespace dtkg {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "invalid_argument";
        case ErrorCode::kValidation: return "validation";
        case ErrorCode::kConfig: return "config";
        case ErrorCode::kAuth: return "auth";
        case ErrorCode::kRateLimited: return "rate_limited";
        case ErrorCode::kTransport: return "transport";
        case ErrorCode::kHttp: return "http";
        case ErrorCode::kParse: return "parse";
        case ErrorCode::kMissingEmbedding: return "missing_embedding";
        case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
        case ErrorCode::kIo: return "io";
        case ErrorCode::kBatchFailed: return "batch_failed";
    }
    return "unknown";
}

std::string to_string(const EntityKey& key) { return fmt::format("{}:{}", key.name, key.label); }

std::strong_ordering compare_identity(const TemporalRelation& a, const TemporalRelation& b) {
    if (auto c = a.subject <=> b.subject; c != 0) return c;
    if (auto c = a.predicate <=> b.predicate; c != 0) return c;
    if (auto c = a.object <=> b.object; c != 0) return c;
    if (auto c = a.t_start <=> b.t_start; c != 0) return c;
    if (auto c = a.t_end <=> b.t_end; c != 0) return c;
    return a.t_obs <=> b.t_obs;
}

bool same_identity(const TemporalRelation& a, const TemporalRelation& b) { return compare_identity(a, b) == 0; }

const Entity* Tkg::find(const EntityKey& key) const {
    const auto it = std::lower_bound(entities.begin(), entities.end(), key,
                                     [](const Entity& e, const EntityKey& k) { return e.key() < k; });
    if (it == entities.end() || it->name != key.name || it->label != key.label) return nullptr;
    return &*it;
}

Tkg canonicalize(Tkg graph) {
    std::stable_sort(graph.entities.begin(), graph.entities.end(),
                     [](const Entity& a, const Entity& b) { return a.key() < b.key(); });
    std::stable_sort(graph.relations.begin(), graph.relations.end(),
                     [](const TemporalRelation& a, const TemporalRelation& b) { return compare_identity(a, b) < 0; });
    graph.relations.erase(std::unique(graph.relations.begin(), graph.relations.end(), same_identity),
                          graph.relations.end());
    return graph;
}

std::string normalize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_separator = false;
    for (const char ch : raw) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_separator = !out.empty();
            continue;
        }
        if (pending_separator) {
            out.push_back('_');
            pending_separator = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    if (out.empty()) {
        throw Error(ErrorCode::kInvalidArgument, fmt::format("name '{}' is empty after normalization", raw));
    }
    return out;
}

bool is_normalized(std::string_view name) {
    if (name.empty()) return false;
    return std::none_of(name.begin(), name.end(), [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return std::isspace(c) || std::isupper(c);
    });
}

std::string_view to_string(Rule rule) noexcept {
    switch (rule) {
        case Rule::kEmptyName: return "empty_name";
        case Rule::kUnnormalizedName: return "unnormalized_name";
        case Rule::kDuplicateEntityKey: return "duplicate_entity_key";
        case Rule::kDanglingSubject: return "dangling_subject";
        case Rule::kDanglingObject: return "dangling_object";
        case Rule::kDuplicateRelation: return "duplicate_relation";
        case Rule::kEmptyPredicate: return "empty_predicate";
        case Rule::kEmbeddingDimension: return "embedding_dimension";
    }
    return "unknown";
}

namespace {

std::string describe(const TemporalRelation& r) {
    return fmt::format("({}, {}, {}, {}, {})", to_string(r.subject), r.predicate, to_string(r.object),
                       format_time_list(r.t_start), format_time_list(r.t_end));
}

class DimensionCheck {
  public:
    void observe(const std::vector<float>& v, const std::string& element, std::vector<Violation>& out) {
        if (v.empty()) return;
        if (!dim_) {
            dim_ = v.size();
        } else if (*dim_ != v.size()) {
            out.push_back({Rule::kEmbeddingDimension,
                           fmt::format("{} has dimension {}, expected {}", element, v.size(), *dim_)});
        }
    }

  private:
    std::optional<std::size_t> dim_;
};

}  // namespace

std::vector<Violation> validate(const Tkg& graph) {
    std::vector<Violation> out;
    std::set<EntityKey> keys;
    DimensionCheck dims;
    for (const auto& e : graph.entities) {
        const auto key = to_string(e.key());
        if (e.name.empty() || e.label.empty()) {
            out.push_back({Rule::kEmptyName, key});
        } else if (!is_normalized(e.name) || !is_normalized(e.label)) {
            out.push_back({Rule::kUnnormalizedName, key});
        }
        if (!keys.insert(e.key()).second) out.push_back({Rule::kDuplicateEntityKey, key});
        dims.observe(e.name_embedding, key + " name_embedding", out);
        dims.observe(e.label_embedding, key + " label_embedding", out);
    }

    std::vector<const TemporalRelation*> sorted;
    sorted.reserve(graph.relations.size());
    for (const auto& r : graph.relations) {
        if (!keys.contains(r.subject)) out.push_back({Rule::kDanglingSubject, describe(r)});
        if (!keys.contains(r.object)) out.push_back({Rule::kDanglingObject, describe(r)});
        if (r.predicate.empty()) {
            out.push_back({Rule::kEmptyPredicate, describe(r)});
        } else if (!is_normalized(r.predicate)) {
            out.push_back({Rule::kUnnormalizedName, describe(r)});
        }
        dims.observe(r.predicate_embedding, describe(r), out);
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return compare_identity(*a, *b) < 0; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (same_identity(*sorted[i - 1], *sorted[i])) out.push_back({Rule::kDuplicateRelation, describe(*sorted[i])});
    }
    return out;
}

void require_valid(const Tkg& graph) {
    const auto violations = validate(graph);
    if (violations.empty()) return;
    std::string detail;
    for (const auto& v : violations) detail += fmt::format("{}: {}\n", to_string(v.rule), v.element);
    throw Error(ErrorCode::kValidation,
                fmt::format("graph violates {} invariant(s); first: {} {}", violations.size(),
                            to_string(violations.front().rule), violations.front().element),
                detail);
}

}  // namespace dtkg
