#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negotiate/backend.hpp"
#include "negotiate/domain.hpp"
#include "negotiate/evaluation.hpp"
#include "negotiate/http_backend.hpp"
#include "negotiate/lexicon_backend.hpp"
#include "negotiate/negotiation.hpp"

namespace negotiate {

/// Parse the TOML subset used by run configs into a JSON object: comments,
/// [tables], [dotted.tables], [[arrays of tables]], bare/quoted/dotted keys,
/// basic, literal and multi-line strings, integers, floats, booleans, arrays
/// and inline tables. Dates are not supported. Throws ConfigError("line N: ...").
nlohmann::json parse_toml(std::string_view source);

enum class AgentKind { OpenAi, Scripted, Lexicon };

struct AgentConfig {
    std::string id;
    AgentKind kind = AgentKind::OpenAi;
    std::string model;
    std::string base_url = "https://api.openai.com/v1";
    int max_output_tokens = 512;
    std::vector<std::string> script;  // scripted agents
    LexiconOptions lexicon = LexiconOptions::defaults();
};

struct DatasetConfig {
    std::string name;
    std::filesystem::path path;
    std::optional<std::filesystem::path> train;
    DatasetFormat format = DatasetFormat::Tsv;
    /// Merged over the built-in map of the dataset.
    std::map<std::string, std::string> label_map;

    DatasetSpec spec() const;
    std::optional<DatasetSpec> train_spec() const;
};

struct RunConfig {
    Mode mode = Mode::DualWithArbitration;
    std::vector<std::string> participants;
    std::filesystem::path out = "runs/latest";
    std::optional<std::filesystem::path> cache_dir;
    std::size_t concurrency = 4;
    std::optional<std::size_t> limit;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> templates;
    std::size_t max_features = 4096;
    NegotiationConfig negotiation;
    std::vector<AgentConfig> agents;
    std::vector<DatasetConfig> datasets;

    PipelineMode pipeline() const { return PipelineMode{mode, participants}; }
    /// Throws ConfigError (ModeError for a bad participant count).
    void validate() const;
    /// Resolved settings, recorded in report.json.
    nlohmann::json snapshot() const;
};

/// Build a config from parsed TOML. Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Read and validate a TOML config file.
RunConfig load_run_config(const std::filesystem::path& path);

struct BackendFactoryOptions {
    /// Overrides the environment API key when set.
    std::optional<std::string> api_key;
    /// Forwarded to HTTP backends (tests use a no-op sleep).
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Instantiate every configured agent. HTTP agents go through the response
/// cache when `cache_dir` is set.
AgentDirectory build_agents(const RunConfig& config, const BackendFactoryOptions& options = {});

}  // namespace negotiate
