// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "negotiate/cli.hpp"
#include "negotiate/evaluation.hpp"
#include "negotiate/http_backend.hpp"
#include "negotiate/lexicon_backend.hpp"
#include "negotiate/negotiation.hpp"
#include "negotiate/retrieval.hpp"
#include "negotiate/serialization.hpp"
#include "support.hpp"

using namespace negotiate;
using namespace testing_support;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

Verdict fail(const std::string& why) { return {false, why}; }

const Label kPos{"positive"}, kNeg{"negative"}, kNeu{"neutral"};

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::vector<const char*> argv{"negotiate"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

// ---- 1 ----------------------------------------------------------------------

Verdict reconciliation_truth_table() {
    const std::vector<NegotiationOutcome> kinds{NegotiationOutcome::consensus(kPos, 2),
                                                NegotiationOutcome::consensus(kNeg, 3),
                                                NegotiationOutcome::no_consensus(3)};
    // expected[i][j] for forward = kinds[i], flipped = kinds[j]
    struct Cell {
        Reconciliation kind;
        std::optional<Label> label;
    };
    const Cell expected[3][3] = {
        {{Reconciliation::Final, kPos}, {Reconciliation::Escalate, {}}, {Reconciliation::Final, kPos}},
        {{Reconciliation::Escalate, {}}, {Reconciliation::Final, kNeg}, {Reconciliation::Final, kNeg}},
        {{Reconciliation::Final, kPos}, {Reconciliation::Final, kNeg}, {Reconciliation::Unresolved, {}}},
    };
    int ok = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const auto r = reconcile(kinds[i], kinds[j]);
            if (r.kind == expected[i][j].kind && r.label == expected[i][j].label) ++ok;
        }
    if (ok != 9) return fail(std::to_string(ok) + "/9 cases");
    return {true, "9/9 cases"};
}

// ---- 2 ----------------------------------------------------------------------

Label oracle_vote(const std::vector<NegotiationOutcome>& outcomes, const LabelSpace& space, const Label& fallback,
                  std::map<std::string, int>& counts) {
    std::map<std::string, int> turns;
    for (const auto& l : space.labels()) counts[l] = 0, turns[l] = 0;
    for (const auto& o : outcomes) {
        if (!o.is_consensus()) continue;
        ++counts[o.decision->value];
        turns[o.decision->value] += o.turns_used;
    }
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    if (best == 0) return fallback;
    std::string winner;
    for (const auto& l : space.labels()) {  // space order = final tie-break
        if (counts[l] != best) continue;
        if (winner.empty() || turns[l] < turns[winner]) winner = l;
    }
    return Label{winner};
}

Verdict voting_oracle() {
    const auto space = LabelSpace::ternary();
    // 9 consensus outcomes (label x turns 1..3) plus no-consensus
    std::vector<NegotiationOutcome> alphabet;
    for (const auto& l : space.labels())
        for (int t = 1; t <= 3; ++t) alphabet.push_back(NegotiationOutcome::consensus(Label{l}, t));
    alphabet.push_back(NegotiationOutcome::no_consensus(3));

    std::size_t pure = 0, with_nc = 0, mismatches = 0;
    std::vector<std::size_t> pick(6, 0);
    const std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t from) {
        if (pos == 6) {
            std::vector<NegotiationOutcome> outs;
            for (auto p : pick) outs.push_back(alphabet[p]);
            (pick.back() == alphabet.size() - 1 ? with_nc : pure) += 1;
            std::map<std::string, int> counts;
            const Label expect = oracle_vote(outs, space, kNeg, counts);
            for (int pass = 0; pass < 2; ++pass) {
                const auto got = majority_vote(outs, space, kNeg);
                bool same = got.label == expect && got.used_fallback == (got.tally.total() == 0);
                for (const auto& [l, c] : counts) same = same && got.tally.count(Label{l}) == c;
                if (!same) ++mismatches;
                std::reverse(outs.begin(), outs.end());
            }
            return;
        }
        for (std::size_t i = from; i < alphabet.size(); ++i) {
            pick[pos] = i;
            rec(pos + 1, i);
        }
    };
    rec(0, 0);
    if (pure != 3003 || with_nc != 2002) return fail("enumeration produced " + std::to_string(pure) + "+" + std::to_string(with_nc));
    if (mismatches) return fail(std::to_string(mismatches) + " mismatching votes");
    return {true, "3003 consensus-only multisets + 2002 with no-consensus, both orders, 0 mismatches"};
}

// ---- 3 ----------------------------------------------------------------------

struct ScriptStep {
    bool disc;
    std::string text;
    std::string label;  // generator label, or discriminator decision ("" = yes)
};

Verdict state_machine() {
    NegotiationConfig cfg;  // max_turns = 3
    std::vector<std::vector<ScriptStep>> patterns;
    const std::vector<ScriptStep> gens{{false, gen("positive"), "positive"}, {false, gen("negative"), "negative"}};
    const std::vector<ScriptStep> discs{{true, yes(), ""}, {true, no("positive"), "positive"}, {true, no("negative"), "negative"}};
    for (const auto& g1 : gens) {
        patterns.push_back({g1});
        for (const auto& d2 : discs) {
            patterns.push_back({g1, d2});
            for (const auto& g3 : gens) patterns.push_back({g1, d2, g3});
        }
    }

    int checked = 0;
    for (const auto& p : patterns) {
        // independent oracle of the alternation rules
        std::optional<NegotiationOutcome> expect;
        std::size_t needed = 2;
        if (p.size() >= 2) {
            if (p[1].label.empty()) {
                expect = NegotiationOutcome::consensus(Label{p[0].label}, 2);
            } else if (p.size() >= 3) {
                needed = 3;
                expect = p[2].label == p[1].label ? NegotiationOutcome::consensus(Label{p[1].label}, 3)
                                                  : NegotiationOutcome::no_consensus(3);
            } else {
                needed = 3;
            }
        }

        auto backend = std::make_shared<ScriptedBackend>();
        for (const auto& s : p) backend->push(s.disc ? "D" : "G", s.text);
        AgentDirectory dir;
        dir.add({"G", "g", 512, backend});
        dir.add({"D", "d", 512, backend});
        NegotiationDeps deps{&dir};
        try {
            const auto t = run_negotiation({"G", "D"}, example("x", "some input", "positive"), deps, cfg);
            if (!expect) return fail("pattern of length " + std::to_string(p.size()) + " should have run out of script");
            validate_transcript(t, cfg.max_turns);
            if (t.outcome.kind != expect->kind || t.outcome.decision != expect->decision ||
                t.outcome.turns_used != expect->turns_used || t.outcome.turns_used > cfg.max_turns)
                return fail("outcome mismatch on a pattern of length " + std::to_string(p.size()));
            if (backend->calls() != needed) return fail("unexpected number of model calls");
        } catch (const NegotiationError& e) {
            if (expect || !e.backend_failure()) return fail(std::string("unexpected failure: ") + e.what());
            if (p.size() >= needed) return fail("script ran out early");
        }
        ++checked;
    }

    // the three consensus archetypes
    const auto run_script = [&](std::vector<std::string> g, std::vector<std::string> d) {
        auto backend = std::make_shared<ScriptedBackend>();
        backend->push_all("G", g);
        backend->push_all("D", d);
        AgentDirectory dir;
        dir.add({"G", "g", 512, backend});
        dir.add({"D", "d", 512, backend});
        NegotiationDeps deps{&dir};
        return run_negotiation({"G", "D"}, example("x", "some input", "positive"), deps, cfg).outcome;
    };
    const auto two = run_script({gen("positive")}, {yes()});
    const auto three = run_script({gen("positive"), gen("negative")}, {no("negative")});
    const auto split = run_script({gen("positive"), gen("positive")}, {no("negative")});
    if (!(two.is_consensus() && two.turns_used == 2 && two.decision == kPos))
        return fail("2-turn agree archetype");
    if (!(three.is_consensus() && three.turns_used == 3 && three.decision == kNeg))
        return fail("3-turn agree archetype");
    if (!(!split.is_consensus() && split.turns_used == 3)) return fail("3-turn disagree archetype");
    return {true, std::to_string(checked) + " scripted patterns + 3 archetypes"};
}

// ---- 4 ----------------------------------------------------------------------

std::vector<NegotiationTranscript> synthetic_transcripts(const std::string& g, const std::string& d, int agree2,
                                                         int agree3, int disagree) {
    auto backend = std::make_shared<ScriptedBackend>();
    for (int i = 0; i < agree2; ++i) backend->push(g, gen("positive")), backend->push(d, yes());
    for (int i = 0; i < agree3; ++i)
        backend->push(g, gen("positive")), backend->push(d, no("negative")), backend->push(g, gen("negative"));
    for (int i = 0; i < disagree; ++i)
        backend->push(g, gen("positive")), backend->push(d, no("negative")), backend->push(g, gen("positive"));
    AgentDirectory dir;
    dir.add({g, g, 512, backend});
    dir.add({d, d, 512, backend});
    NegotiationDeps deps{&dir};
    std::vector<NegotiationTranscript> out;
    for (int i = 0; i < agree2 + agree3 + disagree; ++i)
        out.push_back(run_negotiation({g, d}, example("s" + std::to_string(i), "input " + std::to_string(i), "positive"),
                                      deps, NegotiationConfig{}));
    return out;
}

Verdict consensus_statistics() {
    const auto h1 = consensus_stats(synthetic_transcripts("gpt35", "gpt4", 65, 29, 6));
    const auto h2 = consensus_stats(synthetic_transcripts("gpt4", "gpt35", 76, 21, 3));
    if (h1.agree_percent(2) != 65 || h1.agree_percent(3) != 29 || h1.disagree_percent() != 6)
        return fail("first column is not 65/29/6");
    if (h2.agree_percent(2) != 76 || h2.agree_percent(3) != 21 || h2.disagree_percent() != 3)
        return fail("second column is not 76/21/3");

    RunSummary s;
    s.dataset = "sst2";
    s.group = "consensus";
    s.mode = "dual_negotiation";
    s.agents = {"gpt35", "gpt4"};
    s.consensus_by_pair = {{"gpt35->gpt4", h1}, {"gpt4->gpt35", h2}};
    EvalReport report;
    report.runs.push_back(s);
    const auto md = render_markdown(report);
    for (const auto* row : {"| 2 turns agree | 65% | 76% |", "| 3 turns agree | 29% | 21% |", "| 3 turns disagree | 6% | 3% |"})
        if (md.find(row) == std::string::npos) return fail(std::string("report lacks row ") + row);
    return {true, "65/29/6 and 76/21/3 reproduced"};
}

// ---- 5 ----------------------------------------------------------------------

std::vector<SessionRecord> scripted_e2e_run() {
    auto backend = std::make_shared<ScriptedBackend>();
    // call order per agent: forward negotiation (A generates), then flipped (B generates)
    backend->push_all("A", {gen("positive"), yes(),                                   // e1
                            gen("positive"), gen("negative"), yes(),                  // e2
                            gen("negative"), yes(),                                   // e3
                            gen("negative"), gen("negative"), no("negative"),         // e4
                            gen("positive"), no("positive"),                          // e5
                            gen("negative"), gen("negative"), no("negative")});       // e6
    backend->push_all("B", {yes(), gen("positive"),                                   // e1
                            no("negative"), gen("negative"),                          // e2
                            yes(), gen("negative"),                                   // e3
                            no("positive"), gen("positive"), gen("negative"),         // e4
                            yes(), gen("negative"), gen("negative"),                  // e5
                            no("positive"), gen("positive"), gen("positive")});       // e6
    AgentDirectory dir;
    dir.add({"A", "model-a", 512, backend});
    dir.add({"B", "model-b", 512, backend});
    const std::vector<Example> data{example("e1", "a warm, funny film", "positive"),
                                    example("e2", "the ending drags on", "negative"),
                                    example("e3", "quietly affecting", "positive"),
                                    example("e4", "nothing here works", "negative"),
                                    example("e5", "a small triumph", "positive"),
                                    example("e6", "tedious and overlong", "negative")};
    NegotiationDeps deps{&dir};
    auto out = evaluate(data, {Mode::DualNegotiation, {"A", "B"}}, deps, NegotiationConfig{}, {"fixture", "main", 1, nullptr});
    if (backend->remaining("A") || backend->remaining("B")) throw std::runtime_error("script not fully consumed");
    return std::move(out.records);
}

Verdict scripted_end_to_end() {
    TempDir tmp;
    const auto first = scripted_e2e_run();
    const auto second = scripted_e2e_run();
    write_transcripts(tmp / "run1.jsonl", first);
    write_transcripts(tmp / "run2.jsonl", second);
    const auto a = read_file(tmp / "run1.jsonl");
    const auto b = read_file(tmp / "run2.jsonl");
    if (a != b) return fail("transcripts differ between runs");

    const std::vector<std::pair<std::string, Provenance>> expected{
        {"positive", Provenance::Agreement}, {"negative", Provenance::Agreement},
        {"negative", Provenance::Agreement}, {"negative", Provenance::SingleConsensus},
        {"positive", Provenance::SingleConsensus}, {"negative", Provenance::Fallback}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (!first[i].result) return fail("session " + std::to_string(i + 1) + " failed: " + first[i].error);
        if (first[i].result->final.value != expected[i].first || first[i].result->provenance != expected[i].second)
            return fail("session " + std::to_string(i + 1) + " does not match the hand trace");
    }
    const double acc = replay_accuracy(read_transcripts(tmp / "run1.jsonl"));
    if (acc != 5.0 / 6.0) return fail("replayed accuracy " + std::to_string(acc));
    return {true, "accuracy 5/6 = 0.8333, transcripts byte-identical (" + std::to_string(a.size()) + " bytes)"};
}

// ---- 6 ----------------------------------------------------------------------

struct ComplementaryFixture {
    std::vector<Example> data;
    std::map<std::string, std::map<std::string, std::string>> belief;  // agent -> text -> label
};

ComplementaryFixture complementary_fixture() {
    ComplementaryFixture f;
    const std::set<int> a_wrong{0, 1, 2, 3, 4, 5};  // A correct on 14/20
    const std::set<int> b_wrong{5, 6, 7, 8, 9};     // B correct on 15/20
    for (int i = 0; i < 20; ++i) {
        const std::string gold = i % 2 ? "negative" : "positive";
        const std::string other = i % 2 ? "positive" : "negative";
        auto e = example("c" + std::to_string(i), "fixture sentence number " + std::to_string(i), gold);
        f.belief["A"][e.text] = a_wrong.count(i) ? other : gold;
        f.belief["B"][e.text] = b_wrong.count(i) ? other : gold;
        f.data.push_back(std::move(e));
    }
    return f;
}

// Independent model of one negotiation under the complementary-error agents.
std::optional<std::string> oracle_negotiate(const std::string& g, const std::string& d, const std::string& gold,
                                            std::string& first) {
    first = g;
    if (d == g) return g;
    const std::string third = (g != gold && d == gold) ? d : g;
    if (third == d) return d;
    return std::nullopt;
}

double oracle_dual_accuracy(const ComplementaryFixture& f) {
    int correct = 0;
    for (const auto& e : f.data) {
        const auto& a = f.belief.at("A").at(e.text);
        const auto& b = f.belief.at("B").at(e.text);
        std::string first_fwd, first_flip;
        const auto fwd = oracle_negotiate(a, b, e.gold->value, first_fwd);
        const auto flip = oracle_negotiate(b, a, e.gold->value, first_flip);
        std::string final;
        if (fwd && flip) final = *fwd;  // equal, or conflicting -> forward consensus without arbiter
        else if (fwd) final = *fwd;
        else if (flip) final = *flip;
        else final = first_fwd;
        correct += final == e.gold->value;
    }
    return static_cast<double>(correct) / static_cast<double>(f.data.size());
}

Verdict error_correction() {
    const auto f = complementary_fixture();
    const double expected = oracle_dual_accuracy(f);
    if (expected != 0.95) return fail("oracle gives " + std::to_string(expected) + ", pinned 0.95");

    std::map<std::string, std::string> gold_of;
    for (const auto& e : f.data) gold_of[e.text] = e.gold->value;
    const auto space = LabelSpace::binary();
    auto backend = std::make_shared<FunctionBackend>([&](const CompletionRequest& req) {
        const auto facts = inspect_prompt(req.prompt);
        const auto& own = f.belief.at(req.agent_id).at(facts.input);
        const auto& gold = gold_of.at(facts.input);
        if (facts.kind == PromptFacts::Kind::Generator) {
            if (facts.embedded_response) {
                const auto d = parse_generator_response(*facts.embedded_response, space).decision.value;
                if (own != gold && d == gold) return gen(d);
            }
            return gen(own);
        }
        const auto g = parse_generator_response(*facts.embedded_response, space).decision.value;
        return g == own ? yes() : no(own);
    });
    AgentDirectory dir;
    dir.add({"A", "model-a", 512, backend});
    dir.add({"B", "model-b", 512, backend});
    NegotiationDeps deps{&dir};
    const auto single = [&](const std::string& id) {
        return evaluate(f.data, {Mode::VanillaIcl, {id}}, deps, NegotiationConfig{}).summary.accuracy;
    };
    const double acc_a = single("A");
    const double acc_b = single("B");
    const double dual = evaluate(f.data, {Mode::DualNegotiation, {"A", "B"}}, deps, NegotiationConfig{}).summary.accuracy;
    std::ostringstream d;
    d << "A " << acc_a << ", B " << acc_b << ", dual " << dual << " (oracle " << expected << ")";
    if (acc_a != 0.70 || acc_b != 0.75) return fail("single-agent accuracies off: " + d.str());
    if (dual != expected) return fail("dual accuracy differs from oracle: " + d.str());
    if (!(dual > std::max(acc_a, acc_b))) return fail("no improvement: " + d.str());
    return {true, d.str()};
}

// ---- 7 ----------------------------------------------------------------------

Verdict retrieval_oracle() {
    std::mt19937_64 rng(20240611);
    std::size_t comparisons = 0;
    for (int corpus = 0; corpus < 200; ++corpus) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 1000)(rng);
        const std::size_t dim = std::uniform_int_distribution<std::size_t>(1, 24)(rng);
        std::uniform_int_distribution<int> comp(-3, 3);
        std::vector<float> flat;
        std::vector<Example> rows;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<float> v(dim);
            const int shape = std::uniform_int_distribution<int>(0, 9)(rng);
            if (shape == 0 && i > 0) {  // exact duplicate of an earlier row
                const auto src = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
                std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(src * dim), dim, v.begin());
            } else if (shape == 1 && i > 0) {  // power-of-two multiple: same cosine
                const auto src = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
                for (std::size_t j = 0; j < dim; ++j) v[j] = 2.0f * flat[src * dim + j];
            } else if (shape == 2) {
                // zero vector
            } else {
                for (auto& x : v) x = static_cast<float>(comp(rng));
            }
            flat.insert(flat.end(), v.begin(), v.end());
            rows.push_back(example("r" + std::to_string(i), "row", "positive"));
        }
        const TrainIndex index(rows, flat, dim, "random");
        for (int q = 0; q < 2; ++q) {
            std::vector<float> query(dim);
            for (auto& x : query) x = static_cast<float>(comp(rng));
            // brute force: score every row, order by score desc then index asc
            double qq = 0;
            for (float x : query) qq += static_cast<double>(x) * x;
            std::vector<std::pair<double, std::size_t>> all;
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0, vv = 0;
                for (std::size_t j = 0; j < dim; ++j) {
                    dot += static_cast<double>(query[j]) * flat[i * dim + j];
                    vv += static_cast<double>(flat[i * dim + j]) * flat[i * dim + j];
                }
                const double denom = std::sqrt(qq) * std::sqrt(vv);
                all.emplace_back(denom == 0 ? 0.0 : std::clamp(dot / denom, -1.0, 1.0), i);
            }
            std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
            for (std::size_t k : {0, 1, 5, 20}) {
                const auto got = knn_retrieve(index, query, k);
                const std::size_t want = std::min(k, n);
                if (got.size() != want) return fail("wrong result size");
                for (std::size_t r = 0; r < want; ++r)
                    if (got[r].position != all[r].second || got[r].score != all[r].first)
                        return fail("rank " + std::to_string(r) + " differs in corpus " + std::to_string(corpus));
                ++comparisons;
            }
        }
    }
    return {true, "200 corpora, " + std::to_string(comparisons) + " queries exact"};
}

// ---- 8 ----------------------------------------------------------------------

const char* kTrainTsv =
    "text\tlabel\n"
    "an excellent , delightful picture\t1\n"
    "a terrible script and awful acting\t0\n"
    "brilliant performances throughout\t1\n"
    "the worst film of the decade\t0\n"
    "i loved the characters and the humor\t1\n"
    "poor pacing makes it a dull watch\t0\n";

const char* kTestTsv =
    "text\tlabel\n"
    "a great and moving film with a wonderful cast\t1\n"
    "the plot is a boring mess and the jokes are lame\t0\n"
    "not bad at all , actually a fun ride\t1\n"
    "charming but weak , a mediocre sequel\t0\n";

std::string lexicon_config(const std::filesystem::path& root) {
    return "mode = \"dual_with_arbitration\"\n"
           "participants = [\"A\", \"B\", \"C\"]\n"
           "out = \"" + (root / "out").string() + "\"\n"
           "concurrency = 2\n"
           "[negotiation]\nk = 2\n"
           "[[agents]]\nid = \"A\"\nkind = \"lexicon\"\n"
           "[[agents]]\nid = \"B\"\nkind = \"lexicon\"\nconviction = 2\n"
           "[[agents]]\nid = \"C\"\nkind = \"lexicon\"\nnegative_words = [\"bad\", \"boring\", \"lame\", \"weak\"]\n"
           "[[datasets]]\nname = \"sst2\"\npath = \"test.tsv\"\ntrain = \"train.tsv\"\n";
}

std::size_t delimiters_in_prompts(const std::vector<SessionRecord>& records, std::size_t& prompts) {
    std::size_t hits = 0;
    const auto scan = [&](const NegotiationTranscript& t) {
        for (const auto& turn : t.turns) {
            ++prompts;
            hits += count_occurrences(turn.prompt, std::string(kRationaleDelimiter));
        }
    };
    for (const auto& r : records) {
        if (!r.result) continue;
        scan(r.result->primary);
        if (r.result->flipped) scan(*r.result->flipped);
        for (const auto& t : r.result->arbitration) scan(t);
    }
    return hits;
}

Verdict reasoning_ablation() {
    // library level: every prompt the models see, with a model that keeps writing rationales anyway
    TempDir tmp;
    write_file(tmp / "train.tsv", kTrainTsv);
    write_file(tmp / "test.tsv", kTestTsv);
    auto lexicon = std::make_shared<LexiconBackend>();
    std::mutex mu;
    std::vector<std::string> seen;
    auto noisy = std::make_shared<FunctionBackend>([&](const CompletionRequest& req) {
        {
            std::lock_guard lock(mu);
            seen.push_back(req.prompt);
        }
        auto text = lexicon->complete(req).text;
        if (inspect_prompt(req.prompt).kind == PromptFacts::Kind::Generator)
            text += " Rationale: Step 1: the model ignored the instructions.";
        return text;
    });
    AgentDirectory dir;
    for (const auto* id : {"A", "B", "C"}) dir.add({id, "lexicon", 512, noisy});
    auto train = load_dataset(DatasetSpec::builtin("sst2", tmp / "train.tsv"));
    auto test = load_dataset(DatasetSpec::builtin("sst2", tmp / "test.tsv"));
    std::vector<std::string> texts;
    for (const auto& e : train) texts.push_back(e.text);
    auto embedder = std::make_shared<TfidfEmbedder>(TfidfEmbedder::fit(texts));
    auto index = std::make_shared<TrainIndex>(TrainIndex::build(train, *embedder));
    RetrievalDemoSource demos(index, embedder);
    NegotiationConfig cfg;
    cfg.k_demos = 3;
    cfg.reasoning_enabled = false;
    NegotiationDeps deps{&dir, LabelSpace::binary(), PromptTemplates::defaults(), &demos};
    const auto out = evaluate(test, {Mode::DualWithArbitration, {"A", "B", "C"}}, deps, cfg);
    std::size_t lib_hits = 0;
    for (const auto& p : seen) lib_hits += count_occurrences(p, std::string(kRationaleDelimiter));
    if (seen.empty()) return fail("no prompts were rendered");
    if (lib_hits) return fail(std::to_string(lib_hits) + " delimiter(s) in library-level prompts");
    for (const auto& r : out.records)
        if (!r.result) return fail("session failed: " + r.error);

    // CLI level: --no-reasoning run and the reasoning ablation report
    write_file(tmp / "run.toml", lexicon_config(tmp.path()));
    std::string err;
    if (int code = run_cli({"run", "--config", (tmp / "run.toml").string(), "--no-reasoning"}, nullptr, &err))
        return fail("run --no-reasoning exited " + std::to_string(code) + ": " + err);
    std::size_t prompts = 0;
    const auto wo = read_transcripts(tmp / "out/sst2/dual_with_arbitration-A-B-C-wo-reasoning/transcripts.jsonl");
    if (const auto hits = delimiters_in_prompts(wo, prompts)) return fail(std::to_string(hits) + " delimiter(s) in CLI prompts");

    if (int code = run_cli({"ablate", "reasoning", "--config", (tmp / "run.toml").string(), "--out",
                            (tmp / "ablate").string()}, nullptr, &err))
        return fail("ablate reasoning exited " + std::to_string(code) + ": " + err);
    const auto md = read_file(tmp / "ablate/report.md");
    if (md.find("## Reasoning ablation") == std::string::npos ||
        md.find("| dual_with_arbitration (A, B, C) w reasoning |") == std::string::npos ||
        md.find("| dual_with_arbitration (A, B, C) wo reasoning |") == std::string::npos)
        return fail("report lacks the w/wo rows");
    std::size_t with_prompts = 0;
    const auto with = read_transcripts(tmp / "ablate/sst2/dual_with_arbitration-A-B-C/transcripts.jsonl");
    if (delimiters_in_prompts(with, with_prompts) == 0) return fail("control run shows no delimiter either");
    return {true, std::to_string(seen.size() + prompts) + " prompts without delimiter; w/wo rows present"};
}

// ---- 9 ----------------------------------------------------------------------

Verdict wire_fidelity() {
    struct Seen {
        std::string path, auth, content_type;
        json body;
    };
    std::mutex mu;
    std::vector<Seen> requests;
    const std::map<std::string, std::string> belief{{"model-a", "positive"}, {"model-b", "negative"}, {"model-c", "positive"}};

    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        Seen s{req.path, req.get_header_value("Authorization"), req.get_header_value("Content-Type"),
               json::parse(req.body, nullptr, false)};
        std::string text = "unparseable";
        if (s.body.is_object() && s.body.contains("messages")) {
            const auto prompt = s.body["messages"][0]["content"].get<std::string>();
            const auto facts = inspect_prompt(prompt);
            const auto& model = s.body["model"].get<std::string>();
            text = facts.kind == PromptFacts::Kind::Generator ? gen(belief.at(model)) : yes();
        }
        {
            std::lock_guard lock(mu);
            requests.push_back(std::move(s));
        }
        const json reply = {{"id", "cmpl-1"},
                            {"object", "chat.completion"},
                            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    struct Stop {
        httplib::Server& s;
        std::thread& t;
        ~Stop() {
            s.stop();
            t.join();
        }
    } stopper{server, listener};
    server.wait_until_ready();

    TempDir tmp;
    write_file(tmp / "test.tsv", "text\tlabel\nan unusual film that splits its audience\t1\n");
    const std::string base = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    std::string config = "mode = \"dual_with_arbitration\"\nparticipants = [\"A\", \"B\", \"C\"]\n"
                         "cache_dir = \"cache\"\nconcurrency = 1\n[negotiation]\nk = 0\n";
    for (const auto& [id, model] : std::vector<std::pair<std::string, std::string>>{{"A", "model-a"}, {"B", "model-b"}, {"C", "model-c"}})
        config += "[[agents]]\nid = \"" + id + "\"\nkind = \"openai\"\nmodel = \"" + model + "\"\nbase_url = \"" + base + "\"\n";
    config += "[[datasets]]\nname = \"sst2\"\npath = \"test.tsv\"\n";
    write_file(tmp / "wire.toml", config);
    setenv(kApiKeyEnv, "test-key", 1);

    std::string err;
    if (int code = run_cli({"run", "--config", (tmp / "wire.toml").string(), "--out", (tmp / "run1").string()}, nullptr, &err))
        return fail("first run exited " + std::to_string(code) + ": " + err);
    const std::size_t first_calls = requests.size();
    const auto records = read_transcripts(tmp / "run1/sst2/dual_with_arbitration-A-B-C/transcripts.jsonl");
    if (records.size() != 1 || !records[0].result) return fail("session did not complete");
    const auto& s = *records[0].result;
    if (s.provenance != Provenance::Vote || s.final != kPos || s.arbitration.size() != 4 || !s.tally ||
        s.tally->count(kPos) != 4 || s.tally->count(kNeg) != 2)
        return fail("unexpected session outcome");

    // every distinct (model, prompt) of the transcript went over the wire once; repeats are cache hits
    std::set<std::pair<std::string, std::string>> expected_calls;
    const std::map<std::string, std::string> model_of{{"A", "model-a"}, {"B", "model-b"}, {"C", "model-c"}};
    std::vector<const NegotiationTranscript*> all{&s.primary, &*s.flipped};
    for (const auto& t : s.arbitration) all.push_back(&t);
    for (const auto* t : all)
        for (const auto& turn : t->turns) expected_calls.emplace(model_of.at(turn.agent_id), turn.prompt);
    if (first_calls != expected_calls.size()) return fail(std::to_string(first_calls) + " requests for " +
                                                          std::to_string(expected_calls.size()) + " turns");
    std::multiset<std::pair<std::string, std::string>> wire_calls;
    std::size_t turns = 0;
    for (const auto* t : all) turns += t->turns.size();
    for (const auto& r : requests) {
        if (r.path != "/v1/chat/completions" || r.auth != "Bearer test-key" || r.content_type != "application/json")
            return fail("bad path or headers: " + r.path + " / " + r.auth + " / " + r.content_type);
        const auto& b = r.body;
        std::set<std::string> keys;
        for (const auto& [k, _] : b.items()) keys.insert(k);
        if (keys != std::set<std::string>{"model", "messages", "temperature", "max_tokens"}) return fail("unexpected body fields");
        if (b["temperature"] != 0.0 || b["max_tokens"] != 512 || b["messages"].size() != 1 ||
            b["messages"][0].size() != 2 || b["messages"][0]["role"] != "user")
            return fail("body values differ from the wire format: " + b.dump());
        wire_calls.emplace(b["model"].get<std::string>(), b["messages"][0]["content"].get<std::string>());
    }
    if (std::set(wire_calls.begin(), wire_calls.end()) != expected_calls || wire_calls.size() != expected_calls.size())
        return fail("request prompts differ from transcript prompts");

    if (int code = run_cli({"run", "--config", (tmp / "wire.toml").string(), "--out", (tmp / "run2").string()}, nullptr, &err))
        return fail("cached run exited " + std::to_string(code) + ": " + err);
    if (requests.size() != first_calls)
        return fail("cached replay made " + std::to_string(requests.size() - first_calls) + " network call(s)");
    if (read_file(tmp / "run1/sst2/dual_with_arbitration-A-B-C/transcripts.jsonl") !=
        read_file(tmp / "run2/sst2/dual_with_arbitration-A-B-C/transcripts.jsonl"))
        return fail("cached replay produced different transcripts");
    return {true, std::to_string(first_calls) + " requests for " + std::to_string(turns) + " turns verified; cached replay made 0 calls; tally positive 4 / negative 2"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Verdict (*run)();
        double limit_s;  // 0 = no time bound
    };
    const Criterion criteria[] = {
        {"reconciliation truth table", reconciliation_truth_table, 1.0},
        {"voting oracle equivalence", voting_oracle, 5.0},
        {"negotiation state machine", state_machine, 1.0},
        {"consensus statistics", consensus_statistics, 0.0},
        {"scripted end-to-end", scripted_end_to_end, 0.0},
        {"error-correction property", error_correction, 10.0},
        {"retrieval oracle", retrieval_oracle, 30.0},
        {"reasoning ablation contract", reasoning_ablation, 0.0},
        {"wire fidelity", wire_fidelity, 0.0},
    };
    int failures = 0;
    int n = 0;
    for (const auto& c : criteria) {
        ++n;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (v.pass && c.limit_s > 0 && secs >= c.limit_s) v = fail(v.detail + "; too slow");
        std::ostringstream timing;
        timing.precision(3);
        timing << std::fixed << secs << "s";
        if (c.limit_s > 0) timing << " < " << c.limit_s << "s";
        std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << n << "] " << c.name << ": " << v.detail << " ("
                  << timing.str() << ")\n";
        failures += v.pass ? 0 : 1;
    }
    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed\n"
                           : std::string("acceptance: all criteria passed\n"));
    return failures ? 1 : 0;
}
