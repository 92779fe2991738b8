#include "negotiate/http_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <random>
#include <regex>
#include <thread>

namespace negotiate {

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

double jitter_factor(double jitter) {
    if (jitter <= 0.0) return 1.0;
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> dist(1.0 - jitter, 1.0 + jitter);
    return dist(rng);
}

}  // namespace

nlohmann::json chat_request_body(const CompletionRequest& req) {
    return {{"model", req.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
            {"temperature", req.temperature},
            {"max_tokens", req.max_output_tokens}};
}

std::string chat_response_text(const nlohmann::json& body) {
    try {
        const auto& content = body.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw TransportError("response content is not a string");
        return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed chat-completions response: ") + e.what());
    }
}

HttpBackend::HttpBackend(HttpBackendOptions options) : opts_(std::move(options)) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(opts_.base_url, m, url_re))
        throw ConfigError("base_url '" + opts_.base_url + "' is not an http(s) URL");
    origin_ = m[1].str();
    std::string prefix = m[2].matched ? m[2].str() : "";
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";

    if (opts_.api_key.empty()) {
        if (const char* env = std::getenv(kApiKeyEnv)) opts_.api_key = env;
    }
    if (!opts_.sleep) opts_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (opts_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::chrono::milliseconds HttpBackend::base_delay(int retry) const {
    return opts_.initial_backoff * (1LL << (retry - 1));
}

Completion HttpBackend::complete(const CompletionRequest& req) {
    req.validate();
    const std::string body = chat_request_body(req).dump();
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

    std::string last_error;
    bool last_was_rate_limit = false;
    for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto base = base_delay(attempt);
            opts_.sleep(std::chrono::milliseconds(
                static_cast<std::int64_t>(static_cast<double>(base.count()) * jitter_factor(opts_.jitter))));
        }
        httplib::Client client(origin_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
        client.set_connection_timeout(secs);
        client.set_read_timeout(secs);
        client.set_write_timeout(secs);

        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(path_, headers, body, "application/json");
        const auto latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

        if (!res) {
            last_error = "request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error());
            last_was_rate_limit = false;
            continue;
        }
        const int status = res->status;
        if (status == 401 || status == 403)
            throw AuthError("authentication rejected (HTTP " + std::to_string(status) + ")");
        if (status >= 200 && status < 300) {
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw TransportError(std::string("response body is not JSON: ") + e.what());
            }
            return Completion{chat_response_text(parsed), latency.count(), false};
        }
        if (!retryable_status(status))
            throw TransportError("HTTP " + std::to_string(status) + ": " + res->body);
        last_error = "HTTP " + std::to_string(status);
        last_was_rate_limit = status == 429;
    }
    const auto attempts = std::to_string(opts_.max_retries + 1);
    if (last_was_rate_limit) throw RateLimitedError("rate limited after " + attempts + " attempts");
    throw TransportError(last_error + " (after " + attempts + " attempts)");
}

}  // namespace negotiate
