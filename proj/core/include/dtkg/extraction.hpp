// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtkg/embedding.hpp"
#include "dtkg/error.hpp"
#include "dtkg/llm.hpp"
#include "dtkg/model.hpp"
#include "dtkg/time.hpp"

namespace dtkg {

inline constexpr std::size_t kDefaultMaxChunkTokens = 400;
inline constexpr std::size_t kMinChunkTokens = 16;

struct Document {
    std::string doc_id;
    std::string text;
    Timestamp observed_at;

    friend bool operator==(const Document&, const Document&) = default;
};

struct Chunk {
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t token_count = 0;
    Timestamp observed_at;
    bool oversized = false;  // a single sentence that alone exceeds the budget

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct AtomicFact {
    std::string fact_id;
    std::string text;
    Timestamp observed_at;
    std::string doc_id;
    std::size_t chunk_index = 0;

    friend bool operator==(const AtomicFact&, const AtomicFact&) = default;
};

/// ceil(words * 4 / 3), words being whitespace-separated.
std::size_t estimate_tokens(std::string_view text);

using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// Greedy sentence packing. Sentences are joined with single spaces; a sentence over the budget
/// becomes its own chunk with `oversized` set. Throws Error(kInvalidArgument) if max_tokens < 16.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_tokens = kDefaultMaxChunkTokens,
                                  const TokenEstimator& estimator = estimate_tokens);

/// System prompts for the two model tasks. Each must begin with its task marker line.
struct PromptTemplates {
    std::string decompose;
    std::string extract;

    /// The templates compiled into the library.
    static PromptTemplates defaults();
    /// Reads decompose.prompt and extract.prompt from `dir`. Throws Error(kConfig) or Error(kIo).
    static PromptTemplates load(const std::filesystem::path& dir);
    void validate() const;
};

struct ExtractionOptions {
    PromptTemplates templates = PromptTemplates::defaults();
    /// Facts longer than this (or than their oversized source chunk) are rejected as malformed.
    std::size_t max_fact_tokens = kDefaultMaxChunkTokens;
};

/// Asks the model for atomic facts, one "- " line each. One reformat retry, then Error(kParse)
/// carrying the raw reply.
std::vector<AtomicFact> decompose(const Chunk& chunk, Gateway& gateway, const ExtractionOptions& options = {});

/// Atomic graph for one fact. Every relation has t_obs == [fact.observed_at]; names and predicates
/// are normalized and embedded. Negated end actions ("is_no_longer_ceo") are rewritten to the
/// affirmative predicate with the date moved to t_end.
Tkg extract_quintuples(const AtomicFact& fact, Gateway& gateway, Embedder& embedder,
                       const ExtractionOptions& options = {});

/// Positionally aligned; failures stay in their slot.
std::vector<Result<Tkg>> extract_all(const std::vector<AtomicFact>& facts, Gateway& gateway, Embedder& embedder,
                                     const ExtractionOptions& options = {});

/// Affirmative form of a normalized predicate that states the end of something, if it does.
std::optional<std::string> affirmative_predicate(std::string_view predicate);

}  // namespace dtkg
