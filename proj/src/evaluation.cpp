#include "negotiate/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "negotiate/serialization.hpp"
#include "negotiate/text.hpp"

namespace negotiate {

using nlohmann::json;

// ---- datasets ---------------------------------------------------------------

DatasetFormat dataset_format_from_string(std::string_view s) {
    const auto v = text::to_lower(s);
    if (v == "tsv") return DatasetFormat::Tsv;
    if (v == "csv") return DatasetFormat::Csv;
    if (v == "jsonl") return DatasetFormat::Jsonl;
    throw ConfigError("unknown dataset format '" + std::string(s) + "'");
}

std::string_view to_string(DatasetFormat f) noexcept {
    switch (f) {
        case DatasetFormat::Tsv: return "tsv";
        case DatasetFormat::Csv: return "csv";
        case DatasetFormat::Jsonl: return "jsonl";
    }
    return "tsv";
}

namespace {

constexpr std::string_view kKnownDatasets[] = {"sst2", "mr", "twitter", "yelp2", "amazon2", "imdb"};

std::map<std::string, std::string> binary_label_map() {
    return {{"1", "positive"},   {"pos", "positive"}, {"positive", "positive"},
            {"0", "negative"},   {"neg", "negative"}, {"negative", "negative"}};
}

std::map<std::string, std::string> twitter_label_map() {
    return {{"positive", "positive"}, {"negative", "negative"}, {"neutral", "neutral"},
            {"0", "negative"},        {"1", "neutral"},         {"2", "positive"}};
}

struct RawRow {
    std::size_t row = 0;
    std::string id;
    std::string text;
    std::string label;
    std::optional<std::string> topic;
};

bool is_header(const std::vector<std::string>& cols) {
    if (cols.size() < 2) return false;
    return text::to_lower(text::trim(cols[0])) == "text" && text::to_lower(text::trim(cols[1])) == "label";
}

void rows_from_columns(std::size_t row, std::vector<std::string> cols, std::vector<RawRow>& rows,
                       std::vector<RowIssue>& issues) {
    if (cols.size() < 2) {
        issues.push_back({RowIssue::Kind::Parse, row, 2, "", "missing label column"});
        return;
    }
    if (cols.size() > 3) {
        issues.push_back({RowIssue::Kind::Parse, row, 4, cols[3], "unexpected extra column"});
        return;
    }
    if (text::trim(cols[0]).empty()) {
        issues.push_back({RowIssue::Kind::Parse, row, 1, "", "empty text"});
        return;
    }
    RawRow r;
    r.row = row;
    r.text = std::move(cols[0]);
    r.label = std::move(cols[1]);
    if (cols.size() == 3 && !text::trim(cols[2]).empty()) r.topic = std::string(text::trim(cols[2]));
    rows.push_back(std::move(r));
}

void read_tsv(std::istream& in, std::vector<RawRow>& rows, std::vector<RowIssue>& issues) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        auto cols = text::split(line, '\t');
        if (row == 1 && is_header(cols)) continue;
        rows_from_columns(row, std::move(cols), rows, issues);
    }
}

void read_csv(std::istream& in, std::vector<RawRow>& rows, std::vector<RowIssue>& issues) {
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto csv = text::parse_csv(data);
    for (std::size_t i = 0; i < csv.records.size(); ++i) {
        auto& rec = csv.records[i];
        if (i == 0 && is_header(rec.fields)) continue;
        rows_from_columns(rec.line, std::move(rec.fields), rows, issues);
    }
    if (csv.unterminated_line)
        issues.push_back({RowIssue::Kind::Parse, *csv.unterminated_line, std::nullopt, "", "unterminated quoted field"});
}

std::string scalar_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

void read_jsonl(std::istream& in, std::vector<RawRow>& rows, std::vector<RowIssue>& issues) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            issues.push_back({RowIssue::Kind::Parse, row, e.byte, "", "invalid JSON"});
            continue;
        }
        if (!j.is_object()) {
            issues.push_back({RowIssue::Kind::Parse, row, std::nullopt, "", "row is not an object"});
            continue;
        }
        if (!j.contains("text") || !j["text"].is_string() || text::trim(j["text"].get<std::string>()).empty()) {
            issues.push_back({RowIssue::Kind::Parse, row, std::nullopt, "", "missing or empty \"text\""});
            continue;
        }
        if (!j.contains("label") || j["label"].is_null() || j["label"].is_structured()) {
            issues.push_back({RowIssue::Kind::Parse, row, std::nullopt, "", "missing \"label\""});
            continue;
        }
        RawRow r;
        r.row = row;
        r.text = j["text"].get<std::string>();
        r.label = scalar_string(j["label"]);
        if (j.contains("id") && !j["id"].is_null()) r.id = scalar_string(j["id"]);
        if (j.contains("topic") && j["topic"].is_string()) r.topic = j["topic"].get<std::string>();
        rows.push_back(std::move(r));
    }
}

std::optional<std::string> map_label(const std::map<std::string, std::string>& m, std::string_view raw) {
    const std::string trimmed(text::trim(raw));
    if (auto it = m.find(trimmed); it != m.end()) return it->second;
    if (auto it = m.find(text::to_lower(trimmed)); it != m.end()) return it->second;
    return std::nullopt;
}

std::string describe_issues(const std::vector<RowIssue>& issues) {
    std::ostringstream out;
    out << issues.size() << " bad row(s)";
    const std::size_t shown = std::min<std::size_t>(issues.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
        const auto& is = issues[i];
        out << (i ? "; " : ": ") << "row " << is.row;
        if (is.column) out << " column " << *is.column;
        out << " " << is.message;
        if (!is.raw.empty()) out << " '" << is.raw << "'";
    }
    if (issues.size() > shown) out << "; ...";
    return out.str();
}

}  // namespace

bool is_known_dataset(std::string_view name) {
    return std::find(std::begin(kKnownDatasets), std::end(kKnownDatasets), name) != std::end(kKnownDatasets);
}

DatasetSpec DatasetSpec::builtin(const std::string& name, std::filesystem::path path, DatasetFormat format) {
    if (!is_known_dataset(name)) throw ConfigError("unknown dataset '" + name + "'");
    DatasetSpec spec;
    spec.name = name;
    spec.path = std::move(path);
    spec.format = format;
    if (name == "twitter") {
        spec.label_map = twitter_label_map();
        spec.label_space = LabelSpace::ternary();
    } else {
        spec.label_map = binary_label_map();
        spec.label_space = LabelSpace::binary();
    }
    return spec;
}

DatasetError::DatasetError(std::vector<RowIssue> issues)
    : Error("dataset: " + describe_issues(issues)), issues_(std::move(issues)) {}

std::vector<Example> load_dataset(const DatasetSpec& spec, std::optional<std::size_t> limit,
                                  std::optional<std::uint64_t> shuffle_seed) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file " + spec.path.string());

    std::vector<RawRow> rows;
    std::vector<RowIssue> issues;
    switch (spec.format) {
        case DatasetFormat::Tsv: read_tsv(in, rows, issues); break;
        case DatasetFormat::Csv: read_csv(in, rows, issues); break;
        case DatasetFormat::Jsonl: read_jsonl(in, rows, issues); break;
    }

    std::vector<Example> out;
    std::set<std::string> seen_ids;
    for (auto& r : rows) {
        const auto mapped = map_label(spec.label_map, r.label);
        if (!mapped || !spec.label_space.contains(Label{*mapped})) {
            issues.push_back({RowIssue::Kind::UnknownLabel, r.row, std::nullopt, r.label, "unknown label"});
            continue;
        }
        Example e;
        e.id = r.id.empty() ? spec.name + ":" + std::to_string(r.row) : r.id;
        if (!seen_ids.insert(e.id).second) {
            issues.push_back({RowIssue::Kind::Parse, r.row, std::nullopt, e.id, "duplicate id"});
            continue;
        }
        e.text = std::move(r.text);
        e.gold = Label{*mapped};
        e.topic = std::move(r.topic);
        out.push_back(std::move(e));
    }
    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const RowIssue& a, const RowIssue& b) { return a.row < b.row; });
        throw DatasetError(std::move(issues));
    }

    if (shuffle_seed) {
        std::mt19937_64 rng(*shuffle_seed);
        std::shuffle(out.begin(), out.end(), rng);
    }
    if (limit && out.size() > *limit) out.resize(*limit);
    return out;
}

// ---- statistics -------------------------------------------------------------

namespace {

int percent_of(std::size_t part, std::size_t whole) {
    if (whole == 0) return 0;
    return static_cast<int>(std::lround(100.0 * static_cast<double>(part) / static_cast<double>(whole)));
}

}  // namespace

std::size_t ConsensusHistogram::total() const {
    std::size_t n = disagree;
    for (const auto& [_, c] : agree_at) n += c;
    return n;
}

int ConsensusHistogram::agree_percent(int turns) const {
    const auto it = agree_at.find(turns);
    return percent_of(it == agree_at.end() ? 0 : it->second, total());
}

int ConsensusHistogram::disagree_percent() const { return percent_of(disagree, total()); }

ConsensusHistogram consensus_stats(std::span<const NegotiationTranscript> transcripts) {
    ConsensusHistogram h;
    for (const auto& t : transcripts) {
        if (t.outcome.is_consensus())
            ++h.agree_at[t.outcome.turns_used];
        else
            ++h.disagree;
    }
    return h;
}

// ---- session records --------------------------------------------------------

std::string_view to_string(FailureKind k) noexcept {
    switch (k) {
        case FailureKind::Backend: return "backend";
        case FailureKind::Format: return "format";
        case FailureKind::Other: return "other";
    }
    return "other";
}

namespace {

FailureKind failure_kind_from_string(const std::string& s) {
    if (s == "backend") return FailureKind::Backend;
    if (s == "format") return FailureKind::Format;
    if (s == "other") return FailureKind::Other;
    throw InvariantError("unknown failure kind '" + s + "'");
}

}  // namespace

bool SessionRecord::counted() const {
    if (!input.gold) return false;
    return !(failure && *failure == FailureKind::Backend);
}

bool SessionRecord::correct() const { return counted() && result && result->final == *input.gold; }

json to_json(const SessionRecord& r) {
    json j;
    if (r.result) {
        j = to_json(*r.result);
    } else {
        j = {{"input", to_json(r.input)}, {"primary", nullptr},   {"flipped", nullptr}, {"arbitration", json::array()},
             {"tally", nullptr},          {"final", nullptr},     {"provenance", nullptr}};
    }
    j["input_id"] = r.input.id;
    j["mode"] = r.mode;
    j["correct"] = r.correct();
    if (r.failure) {
        json partial = json::array();
        for (const auto& t : r.partial) partial.push_back(to_json(t));
        j["error"] = {{"kind", to_string(*r.failure)}, {"message", r.error}};
        j["partial"] = std::move(partial);
    } else {
        j["error"] = nullptr;
    }
    return j;
}

SessionRecord session_record_from_json(const json& j) {
    SessionRecord r;
    r.input = example_from_json(j.at("input"));
    r.mode = j.at("mode").get<std::string>();
    if (!j.at("final").is_null()) r.result = session_from_json(j);
    const auto& err = j.at("error");
    if (!err.is_null()) {
        r.failure = failure_kind_from_string(err.at("kind").get<std::string>());
        r.error = err.at("message").get<std::string>();
        if (j.contains("partial"))
            for (const auto& t : j.at("partial")) r.partial.push_back(transcript_from_json(t, r.input));
    }
    if (!r.result && !r.failure) throw InvariantError("record '" + r.input.id + "' has neither a result nor an error");
    return r;
}

std::vector<SessionRecord> read_transcripts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<SessionRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(session_record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw JsonlError(n, e.what());
        } catch (const Error& e) {
            throw JsonlError(n, e.what());
        }
    }
    return out;
}

void write_transcripts(const std::filesystem::path& path, std::span<const SessionRecord> records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    if (!out.flush()) throw IoError("cannot write " + path.string());
}

double replay_accuracy(std::span<const SessionRecord> records) {
    std::size_t counted = 0;
    std::size_t correct = 0;
    for (const auto& r : records) {
        if (!r.counted()) continue;
        ++counted;
        if (r.result && r.result->final == *r.input.gold) ++correct;
    }
    return counted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(counted);
}

// ---- evaluation -------------------------------------------------------------

namespace {

std::string pair_key(const NegotiationTranscript& t) { return t.gen_agent + "->" + t.disc_agent; }

SessionRecord run_one(const Example& ex, const PipelineMode& mode, const NegotiationDeps& deps,
                      const NegotiationConfig& config) {
    SessionRecord r;
    r.input = ex;
    r.mode = std::string(to_string(mode.mode));
    try {
        r.result = run_session(mode, ex, deps, config);
    } catch (const NegotiationError& e) {
        // anything non-transport inside a negotiation is an unreadable answer
        r.failure = e.backend_failure() ? FailureKind::Backend : FailureKind::Format;
        r.error = e.what();
        r.partial = e.transcripts();
    } catch (const BackendError& e) {
        r.failure = FailureKind::Backend;
        r.error = e.what();
    } catch (const ResponseFormatError& e) {
        r.failure = FailureKind::Format;
        r.error = e.what();
    } catch (const std::exception& e) {
        r.failure = FailureKind::Other;
        r.error = e.what();
    }
    return r;
}

}  // namespace

RunSummary summarize(std::span<const SessionRecord> records, const PipelineMode& mode,
                     const NegotiationConfig& config, const std::string& dataset, const std::string& group) {
    RunSummary s;
    s.dataset = dataset;
    s.group = group;
    s.mode = std::string(to_string(mode.mode));
    s.agents = mode.agents;
    s.reasoning_enabled = config.reasoning_enabled;
    s.max_turns = mode.mode == Mode::VanillaIcl ? 1 : config.max_turns;
    s.examples = records.size();

    std::vector<NegotiationTranscript> pair_transcripts;
    for (const auto& r : records) {
        if (r.counted()) {
            ++s.evaluated;
            if (r.correct()) ++s.correct;
        } else {
            ++s.excluded;
        }
        if (r.failure && *r.failure == FailureKind::Format) ++s.format_failures;
        if (!r.result) continue;
        ++s.provenance[std::string(to_string(r.result->provenance))];
        pair_transcripts.push_back(r.result->primary);
        if (r.result->flipped) pair_transcripts.push_back(*r.result->flipped);
    }
    s.accuracy = s.evaluated == 0 ? 0.0 : static_cast<double>(s.correct) / static_cast<double>(s.evaluated);
    s.consensus = consensus_stats(pair_transcripts);
    std::map<std::string, std::vector<NegotiationTranscript>> by_pair;
    for (auto& t : pair_transcripts) by_pair[pair_key(t)].push_back(std::move(t));
    for (const auto& [key, ts] : by_pair) s.consensus_by_pair[key] = consensus_stats(ts);
    return s;
}

EvalOutput evaluate(const std::vector<Example>& examples, const PipelineMode& mode, const NegotiationDeps& deps,
                    const NegotiationConfig& config, const EvalOptions& options) {
    mode.validate();
    config.validate();
    if (!deps.agents) throw std::invalid_argument("NegotiationDeps.agents is null");
    for (const auto& id : mode.agents) deps.agents->at(id);

    std::vector<std::optional<SessionRecord>> slots(examples.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            if (options.stop && options.stop->load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= examples.size()) return;
            slots[i] = run_one(examples[i], mode, deps, config);
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(examples.size(), 1));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EvalOutput out;
    for (auto& s : slots)
        if (s) out.records.push_back(std::move(*s));
    out.summary = summarize(out.records, mode, config, options.dataset, options.group);
    return out;
}

// ---- reports ----------------------------------------------------------------

namespace {

json to_json(const ConsensusHistogram& h) {
    json agree = json::object();
    for (const auto& [turns, c] : h.agree_at) agree[std::to_string(turns)] = c;
    return {{"agree", std::move(agree)}, {"disagree", h.disagree}, {"total", h.total()}};
}

ConsensusHistogram histogram_from_json(const json& j) {
    ConsensusHistogram h;
    for (const auto& [turns, c] : j.at("agree").items()) h.agree_at[std::stoi(turns)] = c.get<std::size_t>();
    h.disagree = j.at("disagree").get<std::size_t>();
    return h;
}

json to_json(const RunSummary& s) {
    json by_pair = json::object();
    for (const auto& [k, h] : s.consensus_by_pair) by_pair[k] = to_json(h);
    return {{"dataset", s.dataset},
            {"group", s.group},
            {"mode", s.mode},
            {"agents", s.agents},
            {"reasoning", s.reasoning_enabled},
            {"max_turns", s.max_turns},
            {"examples", s.examples},
            {"evaluated", s.evaluated},
            {"correct", s.correct},
            {"excluded", s.excluded},
            {"format_failures", s.format_failures},
            {"accuracy", s.accuracy},
            {"consensus", to_json(s.consensus)},
            {"consensus_by_pair", std::move(by_pair)},
            {"provenance", s.provenance}};
}

RunSummary summary_from_json(const json& j) {
    RunSummary s;
    s.dataset = j.at("dataset").get<std::string>();
    s.group = j.at("group").get<std::string>();
    s.mode = j.at("mode").get<std::string>();
    s.agents = j.at("agents").get<std::vector<std::string>>();
    s.reasoning_enabled = j.at("reasoning").get<bool>();
    s.max_turns = j.at("max_turns").get<int>();
    s.examples = j.at("examples").get<std::size_t>();
    s.evaluated = j.at("evaluated").get<std::size_t>();
    s.correct = j.at("correct").get<std::size_t>();
    s.excluded = j.at("excluded").get<std::size_t>();
    s.format_failures = j.at("format_failures").get<std::size_t>();
    s.accuracy = j.at("accuracy").get<double>();
    s.consensus = histogram_from_json(j.at("consensus"));
    for (const auto& [k, h] : j.at("consensus_by_pair").items()) s.consensus_by_pair[k] = histogram_from_json(h);
    s.provenance = j.at("provenance").get<std::map<std::string, std::size_t>>();
    return s;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string setting_label(const RunSummary& s) { return s.mode + " (" + join(s.agents, ", ") + ")"; }

std::string table_row(const std::vector<std::string>& cells) { return "| " + join(cells, " | ") + " |\n"; }

std::string table_rule(std::size_t n) {
    std::vector<std::string> cells(n, "---");
    return table_row(cells);
}

std::vector<std::string> datasets_in_order(const std::vector<const RunSummary*>& runs) {
    std::vector<std::string> out;
    for (const auto* r : runs)
        if (std::find(out.begin(), out.end(), r->dataset) == out.end()) out.push_back(r->dataset);
    return out;
}

// Rows keyed by `row_of`, one accuracy column per dataset plus an average.
std::string pivot_table(const std::vector<const RunSummary*>& runs, const std::string& first_header,
                        const std::function<std::string(const RunSummary&)>& row_of) {
    const auto datasets = datasets_in_order(runs);
    std::vector<std::string> rows;
    std::map<std::pair<std::string, std::string>, double> cell;
    for (const auto* r : runs) {
        const auto key = row_of(*r);
        if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
        cell[{key, r->dataset}] = r->accuracy;
    }
    const bool average = datasets.size() > 1;
    std::vector<std::string> header{first_header};
    header.insert(header.end(), datasets.begin(), datasets.end());
    if (average) header.push_back("Average");

    std::string out = table_row(header) + table_rule(header.size());
    for (const auto& row : rows) {
        std::vector<std::string> cells{row};
        double sum = 0;
        std::size_t n = 0;
        for (const auto& d : datasets) {
            const auto it = cell.find({row, d});
            if (it == cell.end()) {
                cells.push_back("-");
                continue;
            }
            cells.push_back(format_percent(it->second));
            sum += it->second;
            ++n;
        }
        if (average) cells.push_back(n == datasets.size() ? format_percent(sum / static_cast<double>(n)) : "-");
        out += table_row(cells);
    }
    return out;
}

std::string roles_table(const std::vector<const RunSummary*>& runs) {
    std::string out = table_row({"Dataset", "G", "D", "ACC"}) + table_rule(4);
    for (const auto* r : runs) {
        const std::string g = r->agents.empty() ? "-" : r->agents[0];
        std::string d = "-";
        if (r->mode != "vanilla_icl" && !r->agents.empty()) d = r->agents.size() > 1 ? r->agents[1] : r->agents[0];
        out += table_row({r->dataset, g, d, format_percent(r->accuracy)});
    }
    return out;
}

std::string consensus_table(const RunSummary& r) {
    std::vector<std::string> header{"Consensus"};
    for (const auto& [pair, _] : r.consensus_by_pair) {
        const auto arrow = pair.find("->");
        header.push_back("G:" + pair.substr(0, arrow) + " D:" + pair.substr(arrow + 2));
    }
    std::string out = table_row(header) + table_rule(header.size());
    for (int t = 1; t <= r.max_turns; ++t) {
        bool any = false;
        for (const auto& [_, h] : r.consensus_by_pair) any = any || h.agree_at.count(t);
        if (!any && t == 1) continue;
        std::vector<std::string> cells{std::to_string(t) + (t == 1 ? " turn agree" : " turns agree")};
        for (const auto& [_, h] : r.consensus_by_pair) cells.push_back(std::to_string(h.agree_percent(t)) + "%");
        out += table_row(cells);
    }
    std::vector<std::string> cells{std::to_string(r.max_turns) + " turns disagree"};
    for (const auto& [_, h] : r.consensus_by_pair) cells.push_back(std::to_string(h.disagree_percent()) + "%");
    out += table_row(cells);
    return out;
}

bool is_dual(const RunSummary& r) { return r.mode == "dual_negotiation" || r.mode == "dual_with_arbitration"; }

}  // namespace

json to_json(const EvalReport& r) {
    json runs = json::array();
    for (const auto& s : r.runs) runs.push_back(to_json(s));
    return {{"schema_version", r.schema_version}, {"config", r.config}, {"runs", std::move(runs)}};
}

EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != EvalReport::kSchemaVersion)
        throw InvariantError("unsupported report schema version " + std::to_string(r.schema_version));
    r.config = j.at("config");
    for (const auto& s : j.at("runs")) r.runs.push_back(summary_from_json(s));
    return r;
}

std::string format_percent(double fraction) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << fraction * 100.0;
    return out.str();
}

std::string render_markdown(const EvalReport& report) {
    std::vector<const RunSummary*> main_runs, role_runs, reasoning_runs, consensus_runs;
    for (const auto& r : report.runs) {
        if (r.group == "roles")
            role_runs.push_back(&r);
        else if (r.group == "reasoning")
            reasoning_runs.push_back(&r);
        else if (r.group != "consensus")
            main_runs.push_back(&r);
        if (is_dual(r) && r.max_turns > 1 && !r.consensus_by_pair.empty() &&
            (r.group == "consensus" || r.group == "main"))
            consensus_runs.push_back(&r);
    }

    std::string out = "# Evaluation report\n";
    if (!main_runs.empty()) {
        out += "\n## Accuracy by setting\n\n";
        out += pivot_table(main_runs, "Setting", [](const RunSummary& r) {
            return setting_label(r) + (r.reasoning_enabled ? "" : " wo reasoning");
        });
    }
    if (!role_runs.empty()) {
        out += "\n## Role assignment\n\n";
        out += roles_table(role_runs);
    }
    for (const auto* r : consensus_runs) {
        out += "\n## Consensus turns: " + r->dataset + ", " + setting_label(*r) + "\n\n";
        out += consensus_table(*r);
    }
    if (!reasoning_runs.empty()) {
        out += "\n## Reasoning ablation\n\n";
        out += pivot_table(reasoning_runs, "Setting", [](const RunSummary& r) {
            return setting_label(r) + (r.reasoning_enabled ? " w reasoning" : " wo reasoning");
        });
    }
    return out;
}

void emit_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(out_dir, ec))
        throw IoError("output directory " + out_dir.string() + " does not exist");
    const auto write = [](const std::filesystem::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out || !(out << content) || !out.flush()) throw IoError("cannot write " + p.string());
    };
    write(out_dir / "report.json", to_json(report).dump(2) + "\n");
    write(out_dir / "report.md", render_markdown(report));
}

}  // namespace negotiate
