// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/extraction.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dtkg/concurrency.hpp"
#include "dtkg/prompts_generated.hpp"
#include "dtkg/text.hpp"

namespace dtkg {

std::size_t estimate_tokens(std::string_view text) {
    const std::size_t words = text::count_words(text);
    return (words * 4 + 2) / 3;
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_tokens, const TokenEstimator& estimator) {
    if (max_tokens < kMinChunkTokens) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("max_chunk_tokens must be >= {} (got {})", kMinChunkTokens, max_tokens));
    }
    std::vector<Chunk> out;
    std::vector<std::string> pending;
    auto flush = [&](bool oversized) {
        if (pending.empty()) return;
        Chunk c;
        c.doc_id = doc.doc_id;
        c.index = out.size();
        c.text = text::join(pending, " ");
        c.token_count = estimator(c.text);
        c.observed_at = doc.observed_at;
        c.oversized = oversized;
        out.push_back(std::move(c));
        pending.clear();
    };
    for (auto& sentence : text::split_sentences(doc.text)) {
        if (estimator(sentence) > max_tokens) {
            flush(false);
            pending.push_back(std::move(sentence));
            flush(true);
            continue;
        }
        pending.push_back(sentence);
        if (estimator(text::join(pending, " ")) > max_tokens) {
            pending.pop_back();
            flush(false);
            pending.push_back(std::move(sentence));
        }
    }
    flush(false);
    return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Prompt templates

PromptTemplates PromptTemplates::defaults() {
    return {std::string(prompt_defaults::kDecompose), std::string(prompt_defaults::kExtract)};
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t{read_file(dir / "decompose.prompt"), read_file(dir / "extract.prompt")};
    t.validate();
    return t;
}

void PromptTemplates::validate() const {
    if (text::trim(decompose).rfind(prompt::kDecomposeTask, 0) != 0) {
        throw Error(ErrorCode::kConfig, fmt::format("decompose template must start with '{}'", prompt::kDecomposeTask));
    }
    if (text::trim(extract).rfind(prompt::kExtractTask, 0) != 0) {
        throw Error(ErrorCode::kConfig, fmt::format("extract template must start with '{}'", prompt::kExtractTask));
    }
}

// ---------------------------------------------------------------------------------------------------------------
// Reply parsing

namespace {

// Runs the request, and once more with the reformat flag if `parse` rejects the reply.
template <typename T, typename Parse>
T ask_with_reformat(Gateway& gateway, const std::string& system_prompt, prompt::UserPrompt user, Parse&& parse,
                    std::string_view what) {
    std::string reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        user.reformat = attempt > 0;
        reply = gateway.complete({system_prompt, prompt::render_user_prompt(user)});
        if (auto parsed = parse(reply)) return std::move(*parsed);
    }
    throw Error(ErrorCode::kParse, fmt::format("{}: unparseable model reply after a reformat retry", what), reply);
}

std::optional<std::vector<std::string>> parse_fact_lines(std::string_view reply, std::size_t max_tokens) {
    std::vector<std::string> facts;
    std::istringstream in{std::string(reply)};
    std::string line;
    while (std::getline(in, line)) {
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.rfind("- ", 0) != 0) return std::nullopt;
        auto fact = text::collapse_whitespace(trimmed.substr(2));
        if (fact.empty() || estimate_tokens(fact) > max_tokens) return std::nullopt;
        facts.push_back(std::move(fact));
    }
    if (facts.empty()) return std::nullopt;
    return facts;
}

struct RawTuple {
    std::string subject;
    std::string subject_label;
    std::string predicate;
    std::string object;
    std::string object_label;
    TimeList t_start;
    TimeList t_end;
};

std::optional<TimeList> parse_time_field(const nlohmann::json& v) {
    TimeList out;
    if (v.is_null()) return out;
    if (v.is_string()) {
        const auto ts = parse_date(v.get<std::string>());
        if (!ts) return std::nullopt;
        out.insert(*ts);
        return out;
    }
    if (!v.is_array()) return std::nullopt;
    for (const auto& item : v) {
        if (item.is_number_integer()) {
            out.insert(Timestamp{item.get<std::int64_t>()});
            continue;
        }
        if (!item.is_string()) return std::nullopt;
        const auto ts = parse_date(item.get<std::string>());
        if (!ts) return std::nullopt;
        out.insert(*ts);
    }
    return out;
}

std::optional<std::string> normalized_field(const nlohmann::json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) return std::nullopt;
    const auto raw = it->get<std::string>();
    if (text::trim(raw).empty()) return std::nullopt;
    return normalize_name(raw);
}

// Strips a ```json fence if the model wrapped its answer in one.
std::string_view unfence(std::string_view reply) {
    auto body = text::trim(reply);
    if (body.rfind("```", 0) != 0) return body;
    const auto first_nl = body.find('\n');
    const auto last = body.rfind("```");
    if (first_nl == std::string_view::npos || last <= first_nl) return body;
    return text::trim(body.substr(first_nl + 1, last - first_nl - 1));
}

std::optional<std::vector<RawTuple>> parse_tuples(std::string_view reply) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(unfence(reply));
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    if (!doc.is_array()) return std::nullopt;
    std::vector<RawTuple> out;
    for (const auto& item : doc) {
        if (!item.is_object()) return std::nullopt;
        RawTuple t;
        auto s = normalized_field(item, "subject");
        auto p = normalized_field(item, "predicate");
        auto o = normalized_field(item, "object");
        if (!s || !p || !o) return std::nullopt;
        auto sl = normalized_field(item, "subject_label");
        auto ol = normalized_field(item, "object_label");
        t.subject = std::move(*s);
        t.predicate = std::move(*p);
        t.object = std::move(*o);
        t.subject_label = sl ? std::move(*sl) : "entity";
        t.object_label = ol ? std::move(*ol) : "entity";
        const auto start = parse_time_field(item.value("t_start", nlohmann::json()));
        const auto end = parse_time_field(item.value("t_end", nlohmann::json()));
        if (!start || !end) return std::nullopt;
        t.t_start = *start;
        t.t_end = *end;
        out.push_back(std::move(t));
    }
    return out;
}

std::string display_text(const std::string& normalized) {
    std::string out = normalized;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

}  // namespace

std::optional<std::string> affirmative_predicate(std::string_view predicate) {
    struct Rewrite {
        std::string_view marker;
        std::string_view replacement;
    };
    static constexpr Rewrite kRewrites[] = {
        {"is_no_longer_", "is_"},   {"are_no_longer_", "are_"}, {"was_no_longer_", "is_"},
        {"no_longer_", ""},         {"stopped_being_", "is_"},  {"stopped_", ""},
        {"ceased_to_be_", "is_"},   {"ceased_to_", ""},         {"ended_", ""},
    };
    std::string p(predicate);
    for (const auto& r : kRewrites) {
        const auto pos = p.find(r.marker);
        if (pos == std::string::npos) continue;
        if (pos != 0 && p[pos - 1] != '_') continue;
        std::string rewritten = p.substr(0, pos);
        rewritten += r.replacement;
        rewritten += p.substr(pos + r.marker.size());
        if (rewritten.empty() || rewritten.back() == '_') continue;
        return rewritten;
    }
    return std::nullopt;
}

std::vector<AtomicFact> decompose(const Chunk& chunk, Gateway& gateway, const ExtractionOptions& options) {
    if (text::trim(chunk.text).empty()) return {};
    const std::size_t limit = std::max(options.max_fact_tokens, chunk.token_count);
    auto lines = ask_with_reformat<std::vector<std::string>>(
        gateway, options.templates.decompose, {chunk.observed_at, chunk.text, false},
        [limit](std::string_view reply) { return parse_fact_lines(reply, limit); },
        fmt::format("decompose {}#{}", chunk.doc_id, chunk.index));
    std::vector<AtomicFact> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out.push_back({fmt::format("{}#{}.{}", chunk.doc_id, chunk.index, i), std::move(lines[i]), chunk.observed_at,
                       chunk.doc_id, chunk.index});
    }
    return out;
}

Tkg extract_quintuples(const AtomicFact& fact, Gateway& gateway, Embedder& embedder,
                       const ExtractionOptions& options) {
    auto tuples = ask_with_reformat<std::vector<RawTuple>>(gateway, options.templates.extract,
                                                           {fact.observed_at, fact.text, false}, parse_tuples,
                                                           fmt::format("extract {}", fact.fact_id));

    for (auto& t : tuples) {
        if (auto affirmed = affirmative_predicate(t.predicate)) {
            t.predicate = std::move(*affirmed);
            t.t_end.merge(t.t_start);
            t.t_start = {};
        }
    }

    // One embedding request per fact covering every distinct string.
    std::vector<std::string> texts;
    std::map<std::string, std::size_t> slot;
    auto want = [&](const std::string& s) {
        if (slot.try_emplace(s, texts.size()).second) texts.push_back(display_text(s));
    };
    for (const auto& t : tuples) {
        want(t.subject);
        want(t.subject_label);
        want(t.predicate);
        want(t.object);
        want(t.object_label);
    }
    const auto vectors = embedder.embed(texts);
    auto vec = [&](const std::string& s) { return vectors[slot.at(s)].values(); };

    Tkg g;
    std::map<EntityKey, bool> seen;
    auto add_entity = [&](const std::string& name, const std::string& label) {
        if (!seen.try_emplace(EntityKey{name, label}, true).second) return;
        g.entities.push_back({name, label, vec(name), vec(label)});
    };
    for (const auto& t : tuples) {
        add_entity(t.subject, t.subject_label);
        add_entity(t.object, t.object_label);
        g.relations.push_back({{t.subject, t.subject_label},
                               t.predicate,
                               {t.object, t.object_label},
                               t.t_start,
                               t.t_end,
                               TimeList{fact.observed_at},
                               vec(t.predicate)});
    }
    return canonicalize(std::move(g));
}

std::vector<Result<Tkg>> extract_all(const std::vector<AtomicFact>& facts, Gateway& gateway, Embedder& embedder,
                                     const ExtractionOptions& options) {
    std::vector<std::optional<Result<Tkg>>> slots(facts.size());
    run_indexed(facts.size(), gateway.max_concurrent_requests(), [&](std::size_t i) {
        try {
            slots[i].emplace(extract_quintuples(facts[i], gateway, embedder, options));
        } catch (const Error& e) {
            slots[i].emplace(e);
        } catch (const std::exception& e) {
            slots[i].emplace(Error(ErrorCode::kParse, fmt::format("extract {}: {}", facts[i].fact_id, e.what())));
        }
    });
    std::vector<Result<Tkg>> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace dtkg
