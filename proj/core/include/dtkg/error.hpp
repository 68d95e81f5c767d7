// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace dtkg {

enum class ErrorCode {
    kInvalidArgument,
    kValidation,
    kConfig,
    kAuth,
    kRateLimited,
    kTransport,
    kHttp,
    kParse,
    kMissingEmbedding,
    kDimensionMismatch,
    kIo,
    kBatchFailed,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

    // Free-form payload, e.g. the raw model reply that failed to parse.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

  private:
    ErrorCode code_;
    std::string detail_;
};

// Per-slot outcome used by batch operations where one failure must not abort siblings.
template <typename T>
class Result {
  public:
    Result(T value) : state_(std::move(value)) {}          // NOLINT(google-explicit-constructor)
    Result(Error error) : state_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

    [[nodiscard]] bool ok() const noexcept { return std::holds_alternative<T>(state_); }
    explicit operator bool() const noexcept { return ok(); }

    [[nodiscard]] const T& value() const& {
        if (!ok()) throw std::get<Error>(state_);
        return std::get<T>(state_);
    }
    [[nodiscard]] T& value() & {
        if (!ok()) throw std::get<Error>(state_);
        return std::get<T>(state_);
    }
    [[nodiscard]] T&& value() && {
        if (!ok()) throw std::get<Error>(state_);
        return std::get<T>(std::move(state_));
    }

    [[nodiscard]] const Error& error() const { return std::get<Error>(state_); }

  private:
    std::variant<T, Error> state_;
};

}  // namespace dtkg
