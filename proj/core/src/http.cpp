// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "dtkg/http.hpp"

#include <random>
#include <thread>

#include <fmt/format.h>

#include "dtkg/error.hpp"

namespace dtkg {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    check_endpoint(url);
    const auto scheme_end = url.find("://") + 3;
    const auto path_start = url.find('/', scheme_end);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
  public:
    explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body) override {
        const auto parts = split_url(url);
        httplib::Client client(parts.origin);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        httplib::Headers hdrs;
        for (const auto& [k, v] : headers) hdrs.emplace(k, v);
        auto res = client.Post(parts.path, hdrs, body, "application/json");
        if (!res) {
            throw Error(ErrorCode::kTransport,
                        fmt::format("POST {} failed: {}", url, httplib::to_string(res.error())));
        }
        return {res->status, res->body};
    }

  private:
    std::chrono::seconds timeout_;
};

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
    return std::make_shared<HttplibTransport>(timeout);
}

Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
    thread_local std::minstd_rand rng{std::random_device{}()};
    const auto base = policy.base_backoff.count() << std::min(attempt - 1, 16);
    std::uniform_int_distribution<long long> jitter(0, std::max<long long>(base / 2, 0));
    return std::chrono::milliseconds{base + jitter(rng)};
}

HttpResponse post_with_retry(HttpTransport& transport, const std::string& url, const HttpHeaders& headers,
                             const std::string& body, const RetryPolicy& policy, const Sleeper& sleep) {
    const int attempts = std::max(policy.max_attempts, 1);
    std::string last_failure;
    int last_status = 0;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            auto res = transport.post(url, headers, body);
            if (res.status >= 200 && res.status < 300) return res;
            if (res.status == 401 || res.status == 403) {
                throw Error(ErrorCode::kAuth, fmt::format("{} rejected credentials (HTTP {})", url, res.status),
                            res.body);
            }
            if (!retryable_status(res.status)) {
                throw Error(ErrorCode::kHttp, fmt::format("{} returned HTTP {}", url, res.status), res.body);
            }
            last_status = res.status;
            last_failure = fmt::format("HTTP {}", res.status);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kTransport) throw;
            last_status = 0;
            last_failure = e.what();
        }
        if (attempt < attempts && sleep) sleep(backoff_delay(policy, attempt));
    }
    const auto code = last_status == 429 ? ErrorCode::kRateLimited : ErrorCode::kTransport;
    throw Error(code, fmt::format("{} failed after {} attempts: {}", url, attempts, last_failure));
}

void check_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    const bool scheme_ok = url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0;
    if (!scheme_ok || scheme_end == std::string::npos) {
        throw Error(ErrorCode::kConfig, fmt::format("malformed endpoint '{}': expected http(s)://host/path", url));
    }
    const auto host_start = scheme_end + 3;
    const auto host_end = url.find_first_of("/:?#", host_start);
    if (host_end == host_start || host_start >= url.size()) {
        throw Error(ErrorCode::kConfig, fmt::format("malformed endpoint '{}': missing host", url));
    }
}

}  // namespace dtkg
