// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtkg/llm.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dtkg/concurrency.hpp"
#include "dtkg/text.hpp"

namespace dtkg {

void CompletionRequest::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(ErrorCode::kInvalidArgument, fmt::format("temperature {} outside [0, 2]", temperature));
    }
    if (max_output_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_output_tokens must be positive");
}

std::string_view to_string(BackendKind kind) noexcept { return kind == BackendKind::kLive ? "live" : "mock"; }

BackendKind parse_backend_kind(std::string_view s) {
    if (s == "live") return BackendKind::kLive;
    if (s == "mock") return BackendKind::kMock;
    throw Error(ErrorCode::kConfig, fmt::format("unknown backend '{}' (expected live or mock)", s));
}

BackendConfig BackendConfig::from_env(BackendKind kind) {
    BackendConfig config;
    config.kind = kind;
    if (const char* v = std::getenv("ATOM_API_ENDPOINT"); v && *v) config.endpoint = v;
    if (const char* v = std::getenv("ATOM_MODEL_ID"); v && *v) config.model_id = v;
    return config;
}

void BackendConfig::validate() const {
    if (max_concurrent_requests < 1) throw Error(ErrorCode::kConfig, "max_concurrent_requests must be >= 1");
    if (retry.max_attempts < 1) throw Error(ErrorCode::kConfig, "retry.max_attempts must be >= 1");
    if (kind == BackendKind::kLive) check_endpoint(endpoint);
}

LiveBackend::LiveBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
    check_endpoint(config_.endpoint);
    if (!transport_) transport_ = make_http_transport();
}

std::string LiveBackend::complete(const CompletionRequest& request) {
    request.validate();
    const char* key = std::getenv(config_.api_key_env_var.c_str());
    if (!key || !*key) {
        throw Error(ErrorCode::kAuth, fmt::format("environment variable {} is not set", config_.api_key_env_var));
    }
    const nlohmann::json body = {
        {"model", config_.model_id},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                {{"role", "user"}, {"content", request.user_prompt}}})},
    };
    const HttpHeaders headers = {{"Authorization", fmt::format("Bearer {}", key)}};
    const auto res = post_with_retry(*transport_, config_.endpoint, headers, body.dump(), config_.retry, sleep_);
    try {
        const auto reply = nlohmann::json::parse(res.body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParse, fmt::format("unexpected chat-completion reply: {}", e.what()), res.body);
    }
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, std::size_t max_concurrent_requests)
    : backend_(std::move(backend)), limit_(max_concurrent_requests) {
    if (!backend_) throw Error(ErrorCode::kConfig, "gateway needs a backend");
    if (limit_ < 1) throw Error(ErrorCode::kConfig, "max_concurrent_requests must be >= 1");
}

void Gateway::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return in_flight_ < limit_; });
    ++in_flight_;
    std::size_t peak = peak_.load();
    while (in_flight_ > peak && !peak_.compare_exchange_weak(peak, in_flight_)) {
    }
}

void Gateway::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_one();
}

std::string Gateway::complete(const CompletionRequest& request) {
    acquire();
    struct Permit {
        Gateway* g;
        ~Permit() { g->release(); }
    } permit{this};
    calls_.fetch_add(1);
    return backend_->complete(request);
}

std::vector<Result<std::string>> Gateway::complete_batch(const std::vector<CompletionRequest>& requests) {
    std::vector<std::optional<Result<std::string>>> slots(requests.size());
    run_indexed(requests.size(), limit_, [&](std::size_t i) {
        try {
            slots[i].emplace(complete(requests[i]));
        } catch (const Error& e) {
            slots[i].emplace(e);
        } catch (const std::exception& e) {
            slots[i].emplace(Error(ErrorCode::kTransport, e.what()));
        }
    });
    std::vector<Result<std::string>> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::shared_ptr<Gateway> make_gateway(const BackendConfig& config) {
    config.validate();
    std::shared_ptr<CompletionBackend> backend;
    if (config.kind == BackendKind::kLive) {
        backend = std::make_shared<LiveBackend>(config);
    } else {
        backend = std::make_shared<MockBackend>();
    }
    return std::make_shared<Gateway>(std::move(backend), config.max_concurrent_requests);
}

namespace prompt {

namespace {
constexpr std::string_view kTimestampField = "observation_timestamp: ";
constexpr std::string_view kReformatField = "reformat: true";
constexpr std::string_view kTextField = "text:\n";
}  // namespace

std::string render_user_prompt(const UserPrompt& p) {
    std::string out = fmt::format("observation_date: {} ({})\n{}{}\n", format_iso_date(p.observed_at),
                                  format_human_date(p.observed_at), kTimestampField, p.observed_at.seconds);
    if (p.reformat) {
        out += kReformatField;
        out += "\nYour previous reply could not be parsed. Answer again using only the required output format.\n";
    }
    out += kTextField;
    out += p.text;
    return out;
}

std::optional<UserPrompt> parse_user_prompt(std::string_view rendered) {
    const auto ts_pos = rendered.find(kTimestampField);
    const auto text_pos = rendered.find(kTextField);
    if (ts_pos == std::string_view::npos || text_pos == std::string_view::npos || text_pos < ts_pos) {
        return std::nullopt;
    }
    const auto ts_begin = ts_pos + kTimestampField.size();
    const auto ts_end = rendered.find('\n', ts_begin);
    UserPrompt out;
    try {
        out.observed_at = Timestamp{std::stoll(std::string(rendered.substr(ts_begin, ts_end - ts_begin)))};
    } catch (const std::exception&) {
        return std::nullopt;
    }
    out.reformat = rendered.substr(0, text_pos).find(kReformatField) != std::string_view::npos;
    out.text = std::string(rendered.substr(text_pos + kTextField.size()));
    return out;
}

}  // namespace prompt

}  // namespace dtkg
