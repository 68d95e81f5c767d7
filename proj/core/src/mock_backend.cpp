// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic stand-in for a completion model.
//
// decompose: splits the text into sentences, rewrites relative time phrases against the observation
//   date, and answers one "- fact" line per sentence. A small table maps known paragraphs to their
//   hand-written decompositions.
// extract: understands the corpus grammar
//     Subject [label] | predicate | Object [label] | start=YYYY-MM-DD | end=YYYY-MM-DD
//   (times optional, several tuples separated by ';') and a handful of natural-language sentence
//   shapes, and answers the JSON tuple array the extraction prompt asks for.

#include <optional>
#include <regex>

#include <nlohmann/json.hpp>

#include "dtkg/llm.hpp"
#include "dtkg/text.hpp"

namespace dtkg {

namespace {

struct MockTuple {
    std::string subject;
    std::string subject_label;
    std::string predicate;
    std::string object;
    std::string object_label;
    std::vector<Timestamp> start;
    std::vector<Timestamp> end;
};

struct ParagraphRewrite {
    std::string_view paragraph;
    std::vector<std::string_view> facts;
};

const std::vector<ParagraphRewrite>& paragraph_table() {
    static const std::vector<ParagraphRewrite> table = {
        {"On June 18, 2024, Real Madrid won the Champions League final with a 2-1 victory. Following the "
         "triumph, fans of Real Madrid celebrated the Champions League victory across the city.",
         {"Real Madrid won the Champions League final match on June 18, 2024.",
          "The Champions League final match ended with a 2-1 victory for Real Madrid on June 18, 2024.",
          "Fans of Real Madrid celebrated the Champions League final match victory across the city on June 18, "
          "2024."}},
    };
    return table;
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
    return text::to_lower(haystack).find(text::to_lower(needle)) != std::string::npos;
}

void replace_icase(std::string& s, std::string_view phrase, const std::string& replacement) {
    const auto lower_phrase = text::to_lower(phrase);
    for (;;) {
        const auto pos = text::to_lower(s).find(lower_phrase);
        if (pos == std::string::npos) return;
        s.replace(pos, phrase.size(), replacement);
    }
}

std::string resolve_relative_time(std::string sentence, Timestamp observed) {
    replace_icase(sentence, "a month ago", "in " + format_month_year(subtract_months(observed, 1)));
    replace_icase(sentence, "a week ago", "in the week of " + format_human_date(add_days(observed, -7)));
    replace_icase(sentence, "yesterday", "on " + format_human_date(add_days(observed, -1)));
    replace_icase(sentence, "today", "on " + format_human_date(observed));
    return sentence;
}

std::string decompose(const prompt::UserPrompt& p) {
    const auto textual = text::collapse_whitespace(p.text);
    if (contains_icase(textual, MockBackend::kPoisonMarker)) return std::string(MockBackend::kRefusal);
    std::vector<std::string> facts;
    bool from_table = false;
    for (const auto& row : paragraph_table()) {
        if (textual == row.paragraph) {
            facts.assign(row.facts.begin(), row.facts.end());
            from_table = true;
        }
    }
    if (!from_table) {
        for (auto& sentence : text::split_sentences(textual)) facts.push_back(resolve_relative_time(sentence, p.observed_at));
    }
    if (facts.empty()) return std::string(MockBackend::kRefusal);
    std::string out;
    for (const auto& f : facts) out += "- " + f + "\n";
    return out;
}

// "Name [label]" -> (Name, label); a bare name gets the generic label.
std::pair<std::string, std::string> split_labeled(std::string_view field) {
    const auto trimmed = text::trim(field);
    const auto open = trimmed.rfind('[');
    if (open != std::string_view::npos && trimmed.back() == ']') {
        return {std::string(text::trim(trimmed.substr(0, open))),
                std::string(text::trim(trimmed.substr(open + 1, trimmed.size() - open - 2)))};
    }
    return {std::string(trimmed), "entity"};
}

std::optional<std::vector<Timestamp>> parse_dates(std::string_view list) {
    std::vector<Timestamp> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = list.find(',', pos);
        const auto item = text::trim(list.substr(pos, comma == std::string_view::npos ? list.size() - pos : comma - pos));
        if (!item.empty()) {
            const auto ts = parse_date(item);
            if (!ts) return std::nullopt;
            out.push_back(*ts);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::optional<MockTuple> parse_grammar_tuple(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    for (;;) {
        const auto bar = line.find('|', pos);
        fields.push_back(text::trim(line.substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos)));
        if (bar == std::string_view::npos) break;
        pos = bar + 1;
    }
    if (fields.size() < 3 || fields.size() > 5) return std::nullopt;
    MockTuple t;
    std::tie(t.subject, t.subject_label) = split_labeled(fields[0]);
    t.predicate = std::string(fields[1]);
    std::tie(t.object, t.object_label) = split_labeled(fields[2]);
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) return std::nullopt;
    for (std::size_t i = 3; i < fields.size(); ++i) {
        const auto f = fields[i];
        std::optional<std::vector<Timestamp>> dates;
        if (f.rfind("start=", 0) == 0) {
            dates = parse_dates(f.substr(6));
            if (!dates) return std::nullopt;
            t.start = *dates;
        } else if (f.rfind("end=", 0) == 0) {
            dates = parse_dates(f.substr(4));
            if (!dates) return std::nullopt;
            t.end = *dates;
        } else {
            return std::nullopt;
        }
    }
    return t;
}

// Sentence shapes drawn from worked examples. Each rule yields one tuple.
struct SentenceRule {
    std::regex pattern;
    MockTuple (*build)(const std::smatch&);
};

#define DTKG_DATE "([A-Z][a-z]+ \\d{1,2}, \\d{4}|\\d{4}-\\d{2}-\\d{2}|\\d{2}-\\d{2}-\\d{4})"

Timestamp date_of(const std::ssub_match& m) { return *parse_date(m.str()); }

const std::vector<SentenceRule>& sentence_rules() {
    constexpr auto flags = std::regex::ECMAScript | std::regex::icase;
    static const std::vector<SentenceRule> rules = {
        // End actions become the affirmative predicate with only the end time set.
        {std::regex("^(.+?) is no longer (?:the )?(.+?) of (.+?) (?:on|as of|since) " DTKG_DATE "$", flags),
         [](const std::smatch& m) {
             return MockTuple{m[1].str(), "person", "is " + m[2].str(), m[3].str(), "organization", {}, {date_of(m[4])}};
         }},
        {std::regex("^(.+?) (?:became|is|has been) (?:the )?(.+?) of (.+?) (?:on|since|as of) " DTKG_DATE "$", flags),
         [](const std::smatch& m) {
             return MockTuple{m[1].str(), "person", "is " + m[2].str(), m[3].str(), "organization", {date_of(m[4])}, {}};
         }},
        {std::regex("^By " DTKG_DATE ", (?:the )?(.+?) had killed (?:at least )?\\d+ people in (.+?)$", flags),
         [](const std::smatch& m) {
             return MockTuple{m[2].str(), "disease", "killed people in", m[3].str(), "location", {}, {date_of(m[1])}};
         }},
        {std::regex("^(.+?) (?:protested|rallied) against (.+?) (?:in|during) the week of " DTKG_DATE "$", flags),
         [](const std::smatch& m) {
             const auto week = date_of(m[3]);
             return MockTuple{m[1].str(), "group", "protested against", m[2].str(), "policy", {week}, {add_days(week, 6)}};
         }},
        {std::regex("^(.+?) won the (.+?)(?: match)? on " DTKG_DATE "$", flags),
         [](const std::smatch& m) {
             return MockTuple{m[1].str(), "organization", "won", m[2].str(), "event", {date_of(m[3])}, {}};
         }},
        {std::regex("^The (.+?)(?: match)? ended with an? [\\d-]+ victory for (.+?) on " DTKG_DATE "$", flags),
         [](const std::smatch& m) {
             return MockTuple{m[1].str(), "event", "resulted in victory for", m[2].str(), "organization",
                              {date_of(m[3])}, {}};
         }},
        {std::regex("^Fans of (.+?) celebrated the (.+?)(?: match)? victory across the city on " DTKG_DATE "$", flags),
         [](const std::smatch& m) {
             return MockTuple{"Fans of " + m[1].str(), "group", "celebrated victory in", m[2].str(), "event",
                              {date_of(m[3])}, {}};
         }},
        {std::regex("^(?:The )?(.+?) spread to (?:at least )?(.+?)$", flags),
         [](const std::smatch& m) {
             return MockTuple{m[1].str(), "disease", "spread to", m[2].str(), "location", {}, {}};
         }},
    };
    return rules;
}

#undef DTKG_DATE

std::optional<std::vector<MockTuple>> understand(std::string_view fact) {
    auto body = std::string(text::trim(fact));
    while (!body.empty() && (body.back() == '.' || body.back() == ' ')) body.pop_back();
    if (body.find('|') != std::string::npos) {
        std::vector<MockTuple> out;
        std::size_t pos = 0;
        for (;;) {
            const auto semi = body.find(';', pos);
            const auto part = text::trim(std::string_view(body).substr(pos, semi == std::string::npos ? std::string::npos : semi - pos));
            if (!part.empty()) {
                auto t = parse_grammar_tuple(part);
                if (!t) return std::nullopt;
                out.push_back(std::move(*t));
            }
            if (semi == std::string::npos) break;
            pos = semi + 1;
        }
        return out;
    }
    for (const auto& rule : sentence_rules()) {
        std::smatch m;
        if (std::regex_match(body, m, rule.pattern)) return std::vector<MockTuple>{rule.build(m)};
    }
    return std::nullopt;
}

nlohmann::json dates_json(const std::vector<Timestamp>& dates) {
    auto out = nlohmann::json::array();
    for (const auto ts : dates) out.push_back(format_iso_date(ts));
    return out;
}

std::string extract(const prompt::UserPrompt& p) {
    const auto fact = text::collapse_whitespace(p.text);
    if (contains_icase(fact, MockBackend::kPoisonMarker)) return std::string(MockBackend::kRefusal);
    const auto tuples = understand(fact);
    if (!tuples) return std::string(MockBackend::kRefusal);
    auto out = nlohmann::json::array();
    for (const auto& t : *tuples) {
        out.push_back({{"subject", t.subject},
                       {"subject_label", t.subject_label},
                       {"predicate", t.predicate},
                       {"object", t.object},
                       {"object_label", t.object_label},
                       {"t_start", dates_json(t.start)},
                       {"t_end", dates_json(t.end)}});
    }
    return out.dump();
}

}  // namespace

std::string MockBackend::complete(const CompletionRequest& request) {
    request.validate();
    const auto parsed = prompt::parse_user_prompt(request.user_prompt);
    if (!parsed) return std::string(kRefusal);
    const auto system = text::trim(request.system_prompt);
    if (system.rfind(prompt::kDecomposeTask, 0) == 0) return decompose(*parsed);
    if (system.rfind(prompt::kExtractTask, 0) == 0) return extract(*parsed);
    return std::string(kRefusal);
}

}  // namespace dtkg
