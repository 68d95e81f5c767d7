// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/codec.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "dtkg/error.hpp"

namespace dtkg::codec {

static_assert(std::endian::native == std::endian::little, "float payloads assume a little-endian host");

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::kInvalidArgument, "SHA-256 digest failed");
    }
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string encode_floats(std::span<const float> values) {
    const auto bytes = values.size_bytes();
    std::string out(4 * ((bytes + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(values.data()), static_cast<int>(bytes));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<float> decode_floats(std::string_view base64) {
    if (base64.size() % 4 != 0) throw Error(ErrorCode::kParse, "base64 payload length is not a multiple of 4");
    std::string raw(base64.size() / 4 * 3, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(raw.data()),
                                  reinterpret_cast<const unsigned char*>(base64.data()), static_cast<int>(base64.size()));
    if (n < 0) throw Error(ErrorCode::kParse, "invalid base64 payload");
    std::size_t size = static_cast<std::size_t>(n);
    // EVP_DecodeBlock keeps the zero bytes that padding stands for.
    if (!base64.empty() && base64.back() == '=') --size;
    if (base64.size() >= 2 && base64[base64.size() - 2] == '=') --size;
    if (size % sizeof(float) != 0) throw Error(ErrorCode::kParse, "base64 payload is not a float32 array");
    std::vector<float> out(size / sizeof(float));
    std::memcpy(out.data(), raw.data(), size);
    return out;
}

}  // namespace dtkg::codec
