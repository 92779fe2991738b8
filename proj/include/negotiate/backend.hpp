#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "negotiate/errors.hpp"

namespace negotiate {

struct CompletionRequest {
    std::string agent_id;
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    int max_output_tokens = 512;

    /// Throws std::invalid_argument on an empty prompt, negative temperature
    /// or non-positive token budget.
    void validate() const;
};

struct Completion {
    std::string text;  // verbatim, untrimmed
    std::int64_t latency_ms = 0;
    bool cached = false;
};

/// A text-completion capability. Implementations must tolerate concurrent
/// calls from many negotiation sessions.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual Completion complete(const CompletionRequest& req) = 0;
};

/// Test double replaying queued responses per agent id, strictly in order.
/// Calls are serialized; an empty queue raises ScriptExhaustedError.
class ScriptedBackend final : public AgentBackend {
public:
    void push(const std::string& agent_id, std::string text);
    void push_all(const std::string& agent_id, const std::vector<std::string>& texts);

    Completion complete(const CompletionRequest& req) override;

    std::size_t remaining(const std::string& agent_id) const;
    std::size_t calls() const;
    std::vector<CompletionRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::deque<std::string>> queues_;
    std::vector<CompletionRequest> log_;
};

/// Test double computing each response from the request. The responder must
/// itself be safe to call concurrently.
class FunctionBackend final : public AgentBackend {
public:
    using Responder = std::function<std::string(const CompletionRequest&)>;

    explicit FunctionBackend(Responder responder) : responder_(std::move(responder)) {}

    Completion complete(const CompletionRequest& req) override;
    std::size_t calls() const;

private:
    Responder responder_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

/// Hex SHA-256 content hash of (model, prompt, temperature, max_output_tokens).
/// The agent id is deliberately not part of the key.
std::string cache_key(const CompletionRequest& req);

/// Look the request up in `cache_dir`; on a miss, query `backend` and persist
/// the answer atomically. A stored entry failing its integrity check is
/// deleted and reported as CacheCorruptError, so the next call re-queries.
Completion cached_complete(const std::filesystem::path& cache_dir, AgentBackend& backend,
                           const CompletionRequest& req);

/// Backend decorator around cached_complete.
class CachedBackend final : public AgentBackend {
public:
    CachedBackend(std::filesystem::path cache_dir, std::shared_ptr<AgentBackend> inner);

    Completion complete(const CompletionRequest& req) override;

private:
    std::filesystem::path dir_;
    std::shared_ptr<AgentBackend> inner_;
};

/// A configured agent: which backend serves it and with which model.
struct AgentHandle {
    std::string id;
    std::string model;
    int max_output_tokens = 512;
    std::shared_ptr<AgentBackend> backend;
};

class AgentDirectory {
public:
    void add(AgentHandle agent);
    bool contains(const std::string& id) const { return agents_.count(id) != 0; }
    /// Throws ConfigError for an unknown id.
    const AgentHandle& at(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, AgentHandle> agents_;
};

/// Send `prompt` to `agent` and return the verbatim completion text.
std::string ask(const AgentHandle& agent, const std::string& prompt, double temperature);

}  // namespace negotiate
