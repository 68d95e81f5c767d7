// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dtkg {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Blocking JSON POST. Implementations throw Error(kTransport) on timeouts and connection failures.
class HttpTransport {
  public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds{120});

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_backoff{500};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

/// Delay before retry number `attempt` (1-based): base * 2^(attempt-1) plus up to 50% jitter.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt);

/// POSTs with retries on transport errors, HTTP 429 and 5xx. 401/403 raise Error(kAuth) immediately;
/// other non-2xx statuses raise Error(kHttp). Exhausting 429s raises Error(kRateLimited).
HttpResponse post_with_retry(HttpTransport& transport, const std::string& url, const HttpHeaders& headers,
                             const std::string& body, const RetryPolicy& policy, const Sleeper& sleep);

/// Throws Error(kConfig) unless `url` is an absolute http(s) URL with a host.
void check_endpoint(const std::string& url);

}  // namespace dtkg
