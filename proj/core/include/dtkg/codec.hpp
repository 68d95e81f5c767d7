// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dtkg::codec {

std::string sha256_hex(std::string_view data);

/// Little-endian float32 payload, standard base64 alphabet with padding.
std::string encode_floats(std::span<const float> values);
/// Throws Error(kParse) on malformed input.
std::vector<float> decode_floats(std::string_view base64);

}  // namespace dtkg::codec
