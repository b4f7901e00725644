// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "mathorch/backend/completion.hpp"

namespace mathorch::backend {

struct HttpBackendConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8000
    std::string api_key;   // sent as a Bearer token when non-empty
    std::string model = "default";
    int connect_timeout_s = 10;
    int read_timeout_s = 600;
};

/// Parses one SSE `data:` payload of an OpenAI-style /v1/completions stream.
/// Returns nullopt for "[DONE]".
std::optional<RawPiece> parse_sse_payload(std::string_view payload);

/// Request body for POST /v1/completions.
json completion_request_body(const CompletionRequest& request, const std::string& model);

/// Streaming client for OpenAI-compatible `/v1/completions` endpoints.
/// Each stream owns a worker thread that reads server-sent events.
class HttpBackend final : public CompletionBackend {
public:
    HttpBackend(Clock& clock, HttpBackendConfig config);

    std::unique_ptr<CompletionStream> complete_streaming(const CompletionRequest& request) override;
    Clock& clock() override { return clock_; }

    const HttpBackendConfig& config() const noexcept { return config_; }

private:
    Clock& clock_;
    HttpBackendConfig config_;
};

} // namespace mathorch::backend
