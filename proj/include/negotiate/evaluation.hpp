#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negotiate/domain.hpp"
#include "negotiate/negotiation.hpp"

namespace negotiate {

// ---- datasets ---------------------------------------------------------------

enum class DatasetFormat { Tsv, Csv, Jsonl };

DatasetFormat dataset_format_from_string(std::string_view s);
std::string_view to_string(DatasetFormat f) noexcept;

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    DatasetFormat format = DatasetFormat::Tsv;
    /// Raw label value -> canonical label. Lookup tries the trimmed raw value,
    /// then its lowercase form.
    std::map<std::string, std::string> label_map;
    LabelSpace label_space = LabelSpace::binary();

    /// Defaults for the six benchmarks (sst2, mr, twitter, yelp2, amazon2,
    /// imdb): twitter is ternary, the rest binary. Throws ConfigError for any
    /// other name.
    static DatasetSpec builtin(const std::string& name, std::filesystem::path path,
                               DatasetFormat format = DatasetFormat::Tsv);
};

bool is_known_dataset(std::string_view name);

struct RowIssue {
    enum class Kind { Parse, UnknownLabel };
    Kind kind = Kind::Parse;
    std::size_t row = 0;                  // 1-based line (record start for CSV)
    std::optional<std::size_t> column;    // 1-based, when meaningful
    std::string raw;                      // offending value, if any
    std::string message;
};

/// Every row that failed to load, with its location.
class DatasetError : public Error {
public:
    explicit DatasetError(std::vector<RowIssue> issues);
    const std::vector<RowIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<RowIssue> issues_;
};

/// Parse a normalized dataset file. Rows are TSV `text<TAB>label[<TAB>topic]`,
/// CSV `text,label[,topic]`, or JSONL {"text", "label"[, "id", "topic"]}. A
/// leading header row naming the columns is skipped. All rows are validated;
/// any failure raises DatasetError listing every bad row. With `shuffle_seed`
/// the rows are shuffled before `limit` keeps the head.
std::vector<Example> load_dataset(const DatasetSpec& spec, std::optional<std::size_t> limit = std::nullopt,
                                  std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// ---- statistics -------------------------------------------------------------

struct ConsensusHistogram {
    std::map<int, std::size_t> agree_at;  // turns used -> consensus count
    std::size_t disagree = 0;

    std::size_t total() const;
    /// Integer percentages (rounded half away from zero); 0 when empty.
    int agree_percent(int turns) const;
    int disagree_percent() const;

    friend bool operator==(const ConsensusHistogram&, const ConsensusHistogram&) = default;
};

/// Bucket transcripts by consensus turn count, or as disagreements.
ConsensusHistogram consensus_stats(std::span<const NegotiationTranscript> transcripts);

// ---- sessions ---------------------------------------------------------------

enum class FailureKind { Backend, Format, Other };

std::string_view to_string(FailureKind k) noexcept;

/// One evaluated input: its session result, or the error with whatever
/// transcripts were produced before it.
struct SessionRecord {
    Example input;
    std::string mode;
    std::optional<SessionResult> result;
    std::optional<FailureKind> failure;
    std::string error;
    std::vector<NegotiationTranscript> partial;

    /// Backend failures and unlabelled inputs leave the accuracy denominator.
    bool counted() const;
    bool correct() const;
};

nlohmann::json to_json(const SessionRecord& r);
SessionRecord session_record_from_json(const nlohmann::json& j);

/// Read a transcripts.jsonl stream. Throws JsonlError naming the bad line.
std::vector<SessionRecord> read_transcripts(const std::filesystem::path& path);
void write_transcripts(const std::filesystem::path& path, std::span<const SessionRecord> records);

/// Accuracy recomputed from persisted records (final vs gold).
double replay_accuracy(std::span<const SessionRecord> records);

// ---- evaluation -------------------------------------------------------------

struct RunSummary {
    std::string dataset;
    std::string group = "main";  // main | roles | reasoning | consensus
    std::string mode;
    std::vector<std::string> agents;
    bool reasoning_enabled = true;
    int max_turns = 3;
    std::size_t examples = 0;
    std::size_t evaluated = 0;
    std::size_t correct = 0;
    std::size_t excluded = 0;
    std::size_t format_failures = 0;
    double accuracy = 0.0;
    /// Over every non-arbitration transcript (the dual pair, or the single
    /// negotiation of single-negotiation modes).
    ConsensusHistogram consensus;
    /// Keyed "<generator>-><discriminator>".
    std::map<std::string, ConsensusHistogram> consensus_by_pair;
    std::map<std::string, std::size_t> provenance;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct EvalReport {
    static constexpr int kSchemaVersion = 1;
    int schema_version = kSchemaVersion;
    nlohmann::json config = nlohmann::json::object();
    std::vector<RunSummary> runs;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

struct EvalOptions {
    std::string dataset = "dataset";
    std::string group = "main";
    std::size_t concurrency = 1;
    /// Checked between inputs; once set no new session starts.
    const std::atomic<bool>* stop = nullptr;
};

struct EvalOutput {
    RunSummary summary;
    std::vector<SessionRecord> records;  // input order; stopped runs omit unstarted inputs
};

/// Run every example through `mode` on a bounded worker pool and score it.
/// Throws ModeError before any work when the mode/agent invariant fails.
EvalOutput evaluate(const std::vector<Example>& examples, const PipelineMode& mode, const NegotiationDeps& deps,
                    const NegotiationConfig& config, const EvalOptions& options = {});

/// Recompute a summary from records (used by evaluate and by replay checks).
RunSummary summarize(std::span<const SessionRecord> records, const PipelineMode& mode, const NegotiationConfig& config,
                     const std::string& dataset, const std::string& group);

/// Accuracy as a one-decimal percentage: 0.746 -> "74.6".
std::string format_percent(double fraction);

/// Markdown tables: accuracy by setting x dataset, and when present role
/// assignment, consensus percentages per role order, and the reasoning ablation.
std::string render_markdown(const EvalReport& report);

/// Write report.json and report.md into an existing directory (IoError otherwise).
void emit_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace negotiate
