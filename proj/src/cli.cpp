#include "negotiate/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "negotiate/config.hpp"
#include "negotiate/convert.hpp"
#include "negotiate/evaluation.hpp"
#include "negotiate/text.hpp"

namespace negotiate::cli {

std::atomic<bool>& stop_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace {

struct RunFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::size_t> limit;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> concurrency;
    bool no_reasoning = false;
    std::optional<int> max_turns;
    std::optional<int> k;
    std::optional<std::string> templates;
    std::optional<std::string> cache_dir;
    std::optional<std::string> mode;
    std::vector<std::string> agents;
    std::vector<std::string> datasets;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_mode) {
    cmd->add_option("--config", f.config, "TOML run configuration")->required();
    cmd->add_option("--out", f.out, "output directory (report.json, report.md, transcripts)");
    cmd->add_option("--limit", f.limit, "evaluate a seeded sample of at most N inputs per dataset");
    cmd->add_option("--seed", f.seed, "sampling seed used with --limit");
    cmd->add_option("--concurrency", f.concurrency, "sessions in flight");
    cmd->add_flag("--no-reasoning", f.no_reasoning, "drop rationales and explanations everywhere");
    cmd->add_option("--max-turns", f.max_turns, "responses per negotiation");
    cmd->add_option("--k", f.k, "demonstrations per prompt");
    cmd->add_option("--templates", f.templates, "directory with generator.txt and discriminator.txt");
    cmd->add_option("--cache-dir", f.cache_dir, "response cache for HTTP agents");
    if (with_mode) cmd->add_option("--mode", f.mode, "vanilla_icl, self_negotiation, pair_negotiation, dual_negotiation or dual_with_arbitration");
    cmd->add_option("--agents", f.agents, "participants in role order")->delimiter(',');
    cmd->add_option("--dataset", f.datasets, "only run these configured datasets")->delimiter(',');
}

// Parse the file, apply command-line overrides, then validate the result.
RunConfig prepare(const RunFlags& f, std::optional<Mode> forced_mode = std::nullopt, std::size_t keep_agents = 0) {
    std::ifstream in(f.config, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + f.config);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = parse_toml(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(f.config + ": " + e.what());
    }
    auto c = run_config_from_json(doc, std::filesystem::path(f.config).parent_path());

    if (f.out) c.out = *f.out;
    if (f.limit) c.limit = *f.limit;
    if (f.seed) c.seed = *f.seed;
    if (f.concurrency) c.concurrency = *f.concurrency;
    if (f.no_reasoning) c.negotiation.reasoning_enabled = false;
    if (f.max_turns) c.negotiation.max_turns = *f.max_turns;
    if (f.k) c.negotiation.k_demos = *f.k;
    if (f.templates) c.templates = *f.templates;
    if (f.cache_dir) c.cache_dir = *f.cache_dir;
    if (f.mode) c.mode = mode_from_string(*f.mode);
    if (!f.agents.empty()) c.participants = f.agents;
    if (!f.datasets.empty()) {
        std::vector<DatasetConfig> kept;
        for (const auto& name : f.datasets) {
            const auto it = std::find_if(c.datasets.begin(), c.datasets.end(),
                                         [&](const DatasetConfig& d) { return d.name == name; });
            if (it == c.datasets.end()) throw ConfigError("dataset '" + name + "' is not in the config");
            kept.push_back(*it);
        }
        c.datasets = std::move(kept);
    }
    if (forced_mode) {
        if (c.participants.size() < keep_agents)
            throw ConfigError("this ablation needs " + std::to_string(keep_agents) + " participants");
        c.participants.resize(keep_agents);
        c.mode = *forced_mode;
    }
    c.validate();
    return c;
}

struct Plan {
    PipelineMode mode;
    NegotiationConfig config;
    std::string group;
};

std::string run_tag(const Plan& p) {
    std::string tag(to_string(p.mode.mode));
    for (const auto& a : p.mode.agents) tag += "-" + a;
    if (!p.config.reasoning_enabled) tag += "-wo-reasoning";
    return tag;
}

int execute(const RunConfig& cfg, const std::vector<Plan>& plans, std::ostream& out, std::ostream& err) {
    const AgentDirectory agents = build_agents(cfg);
    const PromptTemplates templates = cfg.templates ? PromptTemplates::load(*cfg.templates) : PromptTemplates::defaults();
    std::filesystem::create_directories(cfg.out);

    bool wants_demos = false;
    for (const auto& p : plans) wants_demos = wants_demos || p.config.k_demos > 0;

    EvalReport report;
    report.config = cfg.snapshot();
    std::optional<std::string> first_failure;
    bool any_scored = false;
    for (const auto& d : cfg.datasets) {
        if (stop_flag().load()) break;
        const auto spec = d.spec();
        const auto test = load_dataset(spec, cfg.limit, cfg.limit ? std::optional(cfg.seed) : std::nullopt);

        std::shared_ptr<const Embedder> embedder;
        std::shared_ptr<const TrainIndex> index;
        std::unique_ptr<RetrievalDemoSource> source;
        if (wants_demos && d.train_spec()) {
            auto train = load_dataset(*d.train_spec());
            std::vector<std::string> texts;
            for (const auto& e : train) texts.push_back(e.text);
            embedder = std::make_shared<TfidfEmbedder>(TfidfEmbedder::fit(texts, cfg.max_features));
            index = std::make_shared<TrainIndex>(TrainIndex::build(std::move(train), *embedder));
            source = std::make_unique<RetrievalDemoSource>(index, embedder);
        } else if (wants_demos) {
            err << "note: dataset " << d.name << " has no train file; prompts carry no demonstrations\n";
        }

        NegotiationDeps deps{&agents, spec.label_space, templates, source.get()};
        for (const auto& plan : plans) {
            if (stop_flag().load()) break;
            EvalOptions opts{d.name, plan.group, cfg.concurrency, &stop_flag()};
            auto result = evaluate(test, plan.mode, deps, plan.config, opts);

            const auto dir = cfg.out / d.name / run_tag(plan);
            std::filesystem::create_directories(dir);
            write_transcripts(dir / "transcripts.jsonl", result.records);

            const auto& s = result.summary;
            any_scored = any_scored || s.evaluated > 0;
            for (const auto& r : result.records)
                if (r.failure && !first_failure) first_failure = r.error;
            out << d.name << "  " << plan.mode.describe() << (plan.config.reasoning_enabled ? "" : " wo reasoning")
                << "  accuracy " << format_percent(s.accuracy) << " (" << s.correct << "/" << s.evaluated << ")";
            if (s.excluded) out << ", excluded " << s.excluded;
            if (s.format_failures) out << ", unreadable " << s.format_failures;
            out << "\n";
            report.runs.push_back(std::move(result.summary));
        }
    }
    emit_report(report, cfg.out);
    out << "report: " << (cfg.out / "report.md").string() << "\n";

    if (stop_flag().load()) {
        err << "interrupted; finished sessions were written\n";
        return kFailure;
    }
    if (!any_scored && first_failure) {
        err << "error: no session could be scored; first failure: " << *first_failure << "\n";
        return kFailure;
    }
    return kOk;
}

// ---- inspect ----------------------------------------------------------------

void print_transcript(std::ostream& out, const std::string& title, const NegotiationTranscript& t, bool prompts) {
    out << title << ": " << t.gen_agent << " -> " << t.disc_agent << ", ";
    if (t.outcome.is_consensus())
        out << "consensus on " << t.outcome.decision->value << " at turn " << t.outcome.turns_used << "\n";
    else
        out << "no consensus after " << t.outcome.turns_used << " turn(s)\n";
    for (const auto& turn : t.turns) {
        out << "  [" << turn.index << "] " << to_string(turn.role) << " " << turn.agent_id << ": "
            << text::one_line(turn.raw()) << "\n";
        if (prompts) {
            std::istringstream lines(turn.prompt);
            std::string line;
            while (std::getline(lines, line)) out << "      | " << line << "\n";
        }
    }
}

void print_record(std::ostream& out, const SessionRecord& r, bool prompts) {
    out << "input " << r.input.id << " (gold: " << (r.input.gold ? r.input.gold->value : "-") << ")\n";
    out << "text: " << text::one_line(r.input.text) << "\n";
    if (r.input.topic) out << "topic: " << *r.input.topic << "\n";
    out << "mode: " << r.mode << "\n";
    if (r.failure) out << "error (" << to_string(*r.failure) << "): " << r.error << "\n";
    if (r.result) {
        const auto& s = *r.result;
        out << "final: " << s.final.value << " (" << to_string(s.provenance) << "), "
            << (r.correct() ? "correct" : "wrong") << "\n";
        if (s.tally) {
            out << "tally:";
            for (const auto& [label, n] : s.tally->counts) out << " " << label.value << " " << n;
            out << "\n";
        }
        out << "\n";
        print_transcript(out, "primary", s.primary, prompts);
        if (s.flipped) print_transcript(out, "flipped", *s.flipped, prompts);
        for (std::size_t i = 0; i < s.arbitration.size(); ++i)
            print_transcript(out, "arbitration " + std::to_string(i + 1), s.arbitration[i], prompts);
    }
    for (std::size_t i = 0; i < r.partial.size(); ++i)
        print_transcript(out, "partial " + std::to_string(i + 1), r.partial[i], prompts);
}

int inspect(const std::string& path, const std::optional<std::string>& id, bool prompts, std::ostream& out) {
    const auto records = read_transcripts(path);
    if (id) {
        const auto it = std::find_if(records.begin(), records.end(),
                                     [&](const SessionRecord& r) { return r.input.id == *id; });
        if (it == records.end()) throw NotFoundError("no record with id '" + *id + "' in " + path);
        print_record(out, *it, prompts);
        return kOk;
    }
    for (const auto& r : records) {
        out << r.input.id << "\t" << r.mode << "\tfinal=" << (r.result ? r.result->final.value : "-")
            << "\tgold=" << (r.input.gold ? r.input.gold->value : "-") << "\t";
        if (r.failure)
            out << "error:" << to_string(*r.failure);
        else
            out << to_string(r.result->provenance) << "\t" << (r.correct() ? "correct" : "wrong");
        out << "\n";
    }
    out << records.size() << " record(s), accuracy " << format_percent(replay_accuracy(records)) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-agent negotiation for sentiment classification"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "evaluate the configured setting on every dataset");
    add_run_flags(run_cmd, run_flags, true);

    RunFlags ablate_flags;
    std::string ablation;
    auto* ablate_cmd = app.add_subcommand("ablate", "role, reasoning or consensus ablation");
    ablate_cmd->add_option("ablation", ablation, "roles, reasoning or consensus")
        ->required()
        ->check(CLI::IsMember({"roles", "reasoning", "consensus"}));
    add_run_flags(ablate_cmd, ablate_flags, false);

    std::string inspect_path;
    std::optional<std::string> inspect_id;
    bool inspect_prompts = false;
    auto* inspect_cmd = app.add_subcommand("inspect", "print persisted transcripts");
    inspect_cmd->add_option("transcripts", inspect_path, "transcripts.jsonl")->required();
    inspect_cmd->add_option("--id", inspect_id, "show one input in full");
    inspect_cmd->add_flag("--prompts", inspect_prompts, "include the prompt of every turn");

    std::string convert_name, convert_input, convert_output;
    auto* convert_cmd = app.add_subcommand("convert-dataset", "normalize a raw benchmark dump to TSV");
    convert_cmd->add_option("name", convert_name, "sst2, mr, twitter, yelp2, amazon2 or imdb")->required();
    convert_cmd->add_option("--input", convert_input, "raw file or directory")->required();
    convert_cmd->add_option("--output", convert_output, "TSV to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*run_cmd) {
            const auto cfg = prepare(run_flags);
            return execute(cfg, {Plan{cfg.pipeline(), cfg.negotiation, "main"}}, out, err);
        }
        if (*ablate_cmd) {
            if (ablation == "roles") {
                const auto cfg = prepare(ablate_flags, Mode::DualNegotiation, 2);
                const auto& a = cfg.participants[0];
                const auto& b = cfg.participants[1];
                std::vector<Plan> plans{{{Mode::VanillaIcl, {a}}, cfg.negotiation, "roles"},
                                        {{Mode::VanillaIcl, {b}}, cfg.negotiation, "roles"},
                                        {{Mode::PairNegotiation, {a, b}}, cfg.negotiation, "roles"},
                                        {{Mode::PairNegotiation, {b, a}}, cfg.negotiation, "roles"}};
                return execute(cfg, plans, out, err);
            }
            if (ablation == "consensus") {
                const auto cfg = prepare(ablate_flags, Mode::DualNegotiation, 2);
                return execute(cfg, {Plan{cfg.pipeline(), cfg.negotiation, "consensus"}}, out, err);
            }
            const auto cfg = prepare(ablate_flags);
            auto with = cfg.negotiation;
            with.reasoning_enabled = true;
            auto without = cfg.negotiation;
            without.reasoning_enabled = false;
            return execute(cfg, {Plan{cfg.pipeline(), with, "reasoning"}, Plan{cfg.pipeline(), without, "reasoning"}},
                           out, err);
        }
        if (*inspect_cmd) return inspect(inspect_path, inspect_id, inspect_prompts, out);
        const auto result = convert_dataset(convert_name, convert_input, convert_output);
        out << "wrote " << result.rows << " row(s) to " << convert_output;
        if (result.skipped) out << ", skipped " << result.skipped << " empty";
        out << "\n";
        return kOk;
    } catch (const ConfigError& e) {
        err << "config: " << e.what() << "\n";
        return kUsage;
    } catch (const DatasetError& e) {
        err << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace negotiate::cli
