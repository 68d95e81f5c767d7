// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dtkg::text {

std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
std::size_t count_words(std::string_view s);

/// Splits on '.', '?' and '!' followed by whitespace or end of text. Common abbreviations and
/// single-letter initials ("J. Doe") do not end a sentence. Returned sentences are trimmed.
std::vector<std::string> split_sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace dtkg::text
