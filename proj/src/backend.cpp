#include "negotiate/backend.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace negotiate {

void CompletionRequest::validate() const {
    if (prompt.empty()) throw std::invalid_argument("completion prompt is empty");
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be positive");
}

// ---- ScriptedBackend --------------------------------------------------------

void ScriptedBackend::push(const std::string& agent_id, std::string text) {
    std::lock_guard lock(mu_);
    queues_[agent_id].push_back(std::move(text));
}

void ScriptedBackend::push_all(const std::string& agent_id, const std::vector<std::string>& texts) {
    std::lock_guard lock(mu_);
    auto& q = queues_[agent_id];
    q.insert(q.end(), texts.begin(), texts.end());
}

Completion ScriptedBackend::complete(const CompletionRequest& req) {
    req.validate();
    std::lock_guard lock(mu_);
    log_.push_back(req);
    auto it = queues_.find(req.agent_id);
    if (it == queues_.end() || it->second.empty())
        throw ScriptExhaustedError("script for agent '" + req.agent_id + "' is exhausted");
    Completion c{std::move(it->second.front()), 0, false};
    it->second.pop_front();
    return c;
}

std::size_t ScriptedBackend::remaining(const std::string& agent_id) const {
    std::lock_guard lock(mu_);
    const auto it = queues_.find(agent_id);
    return it == queues_.end() ? 0 : it->second.size();
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

std::vector<CompletionRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

// ---- FunctionBackend --------------------------------------------------------

Completion FunctionBackend::complete(const CompletionRequest& req) {
    req.validate();
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    return Completion{responder_(req), 0, false};
}

std::size_t FunctionBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

// ---- cache ------------------------------------------------------------------

namespace {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
    return out.str();
}

std::filesystem::path entry_path(const std::filesystem::path& dir, const std::string& key) {
    return dir / (key + ".entry");
}

std::optional<std::string> read_entry(const std::filesystem::path& path, const std::string& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    const auto corrupt = [&](const std::string& why) -> CacheCorruptError {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        return CacheCorruptError("cache entry " + path.string() + ": " + why);
    };

    const auto nl = content.find('\n');
    if (nl == std::string::npos) throw corrupt("missing metadata line");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(content.substr(0, nl));
    } catch (const nlohmann::json::exception&) {
        throw corrupt("unreadable metadata");
    }
    std::string body = content.substr(nl + 1);
    try {
        if (!meta.is_object() || meta.at("key").get<std::string>() != key) throw corrupt("key mismatch");
        if (meta.at("bytes").get<std::size_t>() != body.size()) throw corrupt("length mismatch");
        if (meta.at("sha256").get<std::string>() != sha256_hex(body)) throw corrupt("digest mismatch");
    } catch (const nlohmann::json::exception&) {
        throw corrupt("incomplete metadata");
    }
    return body;
}

void write_entry(const std::filesystem::path& dir, const std::string& key,
                 const CompletionRequest& req, const std::string& text) {
    static std::atomic<std::uint64_t> counter{0};
    const nlohmann::json meta = {{"key", key},
                                 {"model", req.model},
                                 {"temperature", req.temperature},
                                 {"max_output_tokens", req.max_output_tokens},
                                 {"bytes", text.size()},
                                 {"sha256", sha256_hex(text)}};
    std::ostringstream suffix;
    suffix << ".tmp." << std::this_thread::get_id() << "." << counter++;
    const auto tmp = dir / (key + suffix.str());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write cache file " + tmp.string());
        out << meta.dump() << '\n' << text;
        if (!out.flush()) throw IoError("cannot write cache file " + tmp.string());
    }
    std::filesystem::rename(tmp, entry_path(dir, key));
}

}  // namespace

std::string cache_key(const CompletionRequest& req) {
    const nlohmann::json material = {{"model", req.model},
                                     {"prompt", req.prompt},
                                     {"temperature", req.temperature},
                                     {"max_output_tokens", req.max_output_tokens}};
    return sha256_hex(material.dump());
}

Completion cached_complete(const std::filesystem::path& cache_dir, AgentBackend& backend,
                           const CompletionRequest& req) {
    req.validate();
    const auto key = cache_key(req);
    if (auto hit = read_entry(entry_path(cache_dir, key), key)) return Completion{std::move(*hit), 0, true};

    Completion fresh = backend.complete(req);
    std::filesystem::create_directories(cache_dir);
    write_entry(cache_dir, key, req, fresh.text);
    fresh.cached = false;
    return fresh;
}

CachedBackend::CachedBackend(std::filesystem::path cache_dir, std::shared_ptr<AgentBackend> inner)
    : dir_(std::move(cache_dir)), inner_(std::move(inner)) {
    if (!inner_) throw std::invalid_argument("CachedBackend needs an inner backend");
}

Completion CachedBackend::complete(const CompletionRequest& req) { return cached_complete(dir_, *inner_, req); }

// ---- agents -----------------------------------------------------------------

void AgentDirectory::add(AgentHandle agent) {
    if (agent.id.empty()) throw ConfigError("agent id must not be empty");
    if (!agent.backend) throw ConfigError("agent '" + agent.id + "' has no backend");
    const auto id = agent.id;
    if (!agents_.emplace(id, std::move(agent)).second) throw ConfigError("duplicate agent id '" + id + "'");
}

const AgentHandle& AgentDirectory::at(const std::string& id) const {
    const auto it = agents_.find(id);
    if (it == agents_.end()) throw ConfigError("unknown agent id '" + id + "'");
    return it->second;
}

std::vector<std::string> AgentDirectory::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : agents_) out.push_back(id);
    return out;
}

std::string ask(const AgentHandle& agent, const std::string& prompt, double temperature) {
    CompletionRequest req{agent.id, agent.model, prompt, temperature, agent.max_output_tokens};
    return agent.backend->complete(req).text;
}

}  // namespace negotiate
