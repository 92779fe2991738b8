#pragma once

#include <chrono>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>

#include "negotiate/backend.hpp"

namespace negotiate {

inline constexpr const char* kApiKeyEnv = "NEGOTIATE_API_KEY";

struct HttpBackendOptions {
    /// e.g. "https://api.openai.com/v1"; requests go to {base_url}/chat/completions.
    std::string base_url;
    /// Bearer token. When empty, NEGOTIATE_API_KEY is read at construction;
    /// with neither, no Authorization header is sent.
    std::string api_key;
    std::chrono::milliseconds timeout{120'000};
    /// Retries after the first attempt for transport failures, 408, 429 and 5xx.
    int max_retries = 3;
    /// Delay before retry n is initial_backoff * 2^(n-1), scaled by a uniform
    /// factor in [1 - jitter, 1 + jitter].
    std::chrono::milliseconds initial_backoff{1000};
    double jitter = 0.2;
    /// Replaceable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Request body for an OpenAI-compatible chat-completions call:
/// {model, messages: [{role: "user", content: prompt}], temperature, max_tokens}.
nlohmann::json chat_request_body(const CompletionRequest& req);

/// Extract choices[0].message.content; throws TransportError when absent.
std::string chat_response_text(const nlohmann::json& body);

/// OpenAI-compatible chat-completions client with bounded retries.
class HttpBackend final : public AgentBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    Completion complete(const CompletionRequest& req) override;

    /// Delay planned before retry number `retry` (1-based), without jitter.
    std::chrono::milliseconds base_delay(int retry) const;

private:
    HttpBackendOptions opts_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;    // path prefix + "/chat/completions"
};

}  // namespace negotiate
