// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace dtkg::text {

namespace {

constexpr std::array<std::string_view, 33> kAbbreviations = {
    "mr.",  "mrs.", "ms.",  "dr.",  "prof.", "st.",  "jr.",  "sr.",  "inc.", "ltd.", "co.",
    "corp.", "vs.", "etc.", "e.g.", "i.e.",  "u.s.", "u.k.", "jan.", "feb.", "mar.", "apr.",
    "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.", "no.",  "mt.",  "gen."};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// The whitespace-delimited token ending at `end` (inclusive).
std::string_view token_before(std::string_view s, std::size_t end) {
    std::size_t begin = end;
    while (begin > 0 && !is_space(s[begin - 1])) --begin;
    return s.substr(begin, end - begin + 1);
}

bool starts_upper(std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s.front())); }

// `token` ends with the period at s[end]. Initials only count inside a capitalized name ("John F. Kennedy").
bool is_guarded(std::string_view s, std::size_t end) {
    auto token = token_before(s, end);
    while (!token.empty() && (token.front() == '(' || token.front() == '"')) token.remove_prefix(1);
    if (token.size() == 2 && starts_upper(token)) {
        const std::size_t token_begin = end + 1 - token.size();
        const auto previous = token_begin >= 2 ? token_before(s, token_begin - 2) : std::string_view{};
        const auto next = end + 2 < s.size() ? s.substr(end + 2, 1) : std::string_view{};
        return starts_upper(previous) && starts_upper(next);
    }
    const auto lower = to_lower(token);
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
}

}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool gap = false;
    for (const char c : trim(s)) {
        if (is_space(c)) {
            gap = true;
            continue;
        }
        if (gap) out.push_back(' ');
        gap = false;
        out.push_back(c);
    }
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::size_t count_words(std::string_view s) {
    std::size_t words = 0;
    bool in_word = false;
    for (const char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c != '.' && c != '?' && c != '!') continue;
        std::size_t end = i;
        while (end + 1 < s.size() && (is_closer(s[end + 1]) || s[end + 1] == '.' || s[end + 1] == '?' ||
                                      s[end + 1] == '!')) {
            ++end;
        }
        if (end + 1 < s.size() && !is_space(s[end + 1])) continue;
        if (c == '.' && is_guarded(s, i)) continue;
        const auto sentence = trim(s.substr(start, end + 1 - start));
        if (!sentence.empty()) out.emplace_back(sentence);
        start = end + 1;
        i = end;
    }
    const auto tail = trim(s.substr(std::min(start, s.size())));
    if (!tail.empty()) out.emplace_back(tail);
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace dtkg::text
