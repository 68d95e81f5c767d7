// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dtkg/evaluation.hpp"
#include "dtkg/extraction.hpp"
#include "dtkg/merge.hpp"
#include "dtkg/model.hpp"
#include "dtkg/pipeline.hpp"

namespace dtkg {

inline constexpr int kGraphFormatVersion = 1;

/// Graph document without embeddings: sorted keys, canonical element order, UNIX-second times.
std::string graph_to_json(const Tkg& graph);
/// Parses and validates a graph document. Throws Error(kParse) or Error(kValidation).
Tkg graph_from_json(std::string_view json);

/// "<graph path>.emb.jsonl"
std::filesystem::path sidecar_path(const std::filesystem::path& graph_path);

/// Writes the document and, if requested, the embedding sidecar (otherwise removes a stale one).
/// Both writes are atomic. Throws Error(kValidation) for an invalid graph and Error(kIo).
void save_graph(const Tkg& graph, const std::filesystem::path& path, bool include_embeddings = true);
/// Reads the document and its sidecar when present.
Tkg load_graph(const std::filesystem::path& path);

std::string mention_trace_to_json(const MentionTrace& trace);
MentionTrace mention_trace_from_json(std::string_view json);

/// Write to a temporary sibling, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

/// {"doc_id", "text", "observed_at": ISO-8601 string or UNIX seconds}
Document parse_corpus_line(std::string_view line);
std::string corpus_line(const Document& doc);
/// Blank lines are skipped; errors name the line number.
std::vector<Document> load_corpus(const std::filesystem::path& path);

/// {"doc_id", "gold_tuples": [{subject, predicate, object, t_start, t_end}], "entity_clusters", "relation_clusters"}
GoldAnnotation parse_gold_line(std::string_view line);
std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path);

std::string fact_line(const AtomicFact& fact);
AtomicFact parse_fact_line(std::string_view line);
std::vector<AtomicFact> load_facts(const std::filesystem::path& path);

std::string batches_manifest_json(const std::vector<ObservationBatch>& batches);

/// Per-batch counts and stage timings of a stream run.
std::string stream_report_to_json(const StreamResult& result, BackendKind backend);
std::string latency_report_to_json(const LatencyReport& report);

/// "[section]" headers and "key = value" lines; '#' starts a comment; values may be quoted.
/// Keys come back as "section.key". Throws Error(kConfig) with the line number.
std::map<std::string, std::string> parse_config(std::string_view text);
/// Applies recognized keys; unknown keys raise Error(kConfig).
void apply_config(PipelineConfig& config, const std::map<std::string, std::string>& values);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace dtkg
