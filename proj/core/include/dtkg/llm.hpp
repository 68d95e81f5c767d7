// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtkg/error.hpp"
#include "dtkg/http.hpp"
#include "dtkg/time.hpp"

namespace dtkg {

struct CompletionRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_output_tokens = 4096;

    /// Throws Error(kInvalidArgument) if temperature is outside [0, 2] or the token budget is not positive.
    void validate() const;

    friend bool operator==(const CompletionRequest&, const CompletionRequest&) = default;
};

enum class BackendKind { kLive, kMock };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view s);

struct BackendConfig {
    BackendKind kind = BackendKind::kMock;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model_id = "gpt-4.1-2025-04-14";
    std::string api_key_env_var = "ATOM_API_KEY";
    std::size_t max_concurrent_requests = 40;
    RetryPolicy retry;

    /// Defaults overridden by ATOM_API_ENDPOINT and ATOM_MODEL_ID when set.
    static BackendConfig from_env(BackendKind kind);
    void validate() const;
};

class CompletionBackend {
  public:
    virtual ~CompletionBackend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    [[nodiscard]] virtual BackendKind kind() const noexcept = 0;
};

/// Chat-completion over HTTP+JSON: {"model", "messages": [{role, content}...]} -> choices[0].message.content.
class LiveBackend final : public CompletionBackend {
  public:
    explicit LiveBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                         Sleeper sleep = real_sleeper());

    std::string complete(const CompletionRequest& request) override;
    [[nodiscard]] BackendKind kind() const noexcept override { return BackendKind::kLive; }

  private:
    BackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleep_;
};

/// Hermetic backend: a pure function of the request. It understands the prompt protocol below and
/// the test-corpus grammar, and answers anything else with `kRefusal`.
class MockBackend final : public CompletionBackend {
  public:
    static constexpr std::string_view kRefusal = "I'm sorry, but I can't help with that request.";
    /// Any sentence containing this marker makes the mock refuse.
    static constexpr std::string_view kPoisonMarker = "[refuse]";

    std::string complete(const CompletionRequest& request) override;
    [[nodiscard]] BackendKind kind() const noexcept override { return BackendKind::kMock; }
};

/// Shared entry point to a backend with a global bound on in-flight requests.
class Gateway {
  public:
    Gateway(std::shared_ptr<CompletionBackend> backend, std::size_t max_concurrent_requests);

    std::string complete(const CompletionRequest& request);

    /// Positionally aligned; a failing slot carries its error and never aborts the others.
    std::vector<Result<std::string>> complete_batch(const std::vector<CompletionRequest>& requests);

    [[nodiscard]] std::size_t max_concurrent_requests() const noexcept { return limit_; }
    [[nodiscard]] std::size_t peak_in_flight() const noexcept { return peak_.load(); }
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }
    [[nodiscard]] BackendKind backend_kind() const noexcept { return backend_->kind(); }

  private:
    void acquire();
    void release();

    std::shared_ptr<CompletionBackend> backend_;
    std::size_t limit_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
    std::atomic<std::size_t> peak_{0};
    std::atomic<std::size_t> calls_{0};
};

std::shared_ptr<Gateway> make_gateway(const BackendConfig& config);

/// Layout of the user message shared by the extraction prompts and the mock backend.
namespace prompt {

inline constexpr std::string_view kDecomposeTask = "#task: decompose";
inline constexpr std::string_view kExtractTask = "#task: extract";

struct UserPrompt {
    Timestamp observed_at;
    std::string text;
    bool reformat = false;
};

std::string render_user_prompt(const UserPrompt& prompt);
std::optional<UserPrompt> parse_user_prompt(std::string_view rendered);

}  // namespace prompt

}  // namespace dtkg
