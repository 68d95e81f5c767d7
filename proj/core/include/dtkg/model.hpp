// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "dtkg/time.hpp"

namespace dtkg {

/// Identity of an entity within one graph: normalized (name, label).
struct EntityKey {
    std::string name;
    std::string label;

    friend auto operator<=>(const EntityKey&, const EntityKey&) = default;
    friend bool operator==(const EntityKey&, const EntityKey&) = default;
};

std::string to_string(const EntityKey& key);

struct Entity {
    std::string name;
    std::string label;
    std::vector<float> name_embedding;   // empty when not embedded
    std::vector<float> label_embedding;  // empty when not embedded

    [[nodiscard]] EntityKey key() const { return {name, label}; }

    friend bool operator==(const Entity&, const Entity&) = default;
};

/// A 5-tuple edge plus its observation history.
struct TemporalRelation {
    EntityKey subject;
    std::string predicate;
    EntityKey object;
    TimeList t_start;
    TimeList t_end;
    TimeList t_obs;
    std::vector<float> predicate_embedding;

    friend bool operator==(const TemporalRelation&, const TemporalRelation&) = default;
};

/// Ordering over the identity fields (everything except the embedding).
std::strong_ordering compare_identity(const TemporalRelation& a, const TemporalRelation& b);
bool same_identity(const TemporalRelation& a, const TemporalRelation& b);

/// Temporal knowledge graph. One type serves atomic graphs, snapshots and the running DTKG.
///
/// Every graph returned by a public operation is canonical: entities sorted by key, relations
/// sorted by identity and de-duplicated. Fields stay public so that tests and loaders can build
/// arbitrary (possibly invalid) values; `validate` reports what is wrong with them.
struct Tkg {
    std::vector<Entity> entities;
    std::vector<TemporalRelation> relations;

    [[nodiscard]] bool empty() const noexcept { return entities.empty() && relations.empty(); }
    /// Binary search; requires canonical entity order.
    [[nodiscard]] const Entity* find(const EntityKey& key) const;

    friend bool operator==(const Tkg&, const Tkg&) = default;
};

/// Sorts entities and relations and drops relations with duplicate identity (first one wins).
/// Duplicate entity keys are kept so that `validate` can still see them.
Tkg canonicalize(Tkg graph);

/// Lowercases, trims, and collapses internal whitespace runs to a single underscore.
/// Throws Error(kInvalidArgument) when nothing is left.
std::string normalize_name(std::string_view raw);
[[nodiscard]] bool is_normalized(std::string_view name);

enum class Rule {
    kEmptyName,
    kUnnormalizedName,
    kDuplicateEntityKey,
    kDanglingSubject,
    kDanglingObject,
    kDuplicateRelation,
    kEmptyPredicate,
    kEmbeddingDimension,
};

std::string_view to_string(Rule rule) noexcept;

struct Violation {
    Rule rule;
    std::string element;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty iff every graph invariant holds.
std::vector<Violation> validate(const Tkg& graph);

/// Throws Error(kValidation) listing the violations, if any.
void require_valid(const Tkg& graph);

}  // namespace dtkg
