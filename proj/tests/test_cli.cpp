#include <gtest/gtest.h>

#include <sstream>

#include "negotiate/cli.hpp"
#include "negotiate/evaluation.hpp"
#include "support.hpp"

using namespace negotiate;
using namespace testing_support;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    std::vector<const char*> argv{"negotiate"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliRun : public ::testing::Test {
protected:
    void SetUp() override {
        write_file(dir / "test.tsv",
                   "text\tlabel\n"
                   "a wonderful , moving film\t1\n"
                   "boring and awful from start to end\t0\n"
                   "great cast but a weak script\t0\n"
                   "fun and charming\t1\n");
        write_file(dir / "train.tsv",
                   "an excellent film\t1\nterrible acting\t0\nbrilliant and fun\t1\ndull , bad , lame\t0\n");
        write_file(dir / "run.toml", R"(
mode = "dual_with_arbitration"
participants = ["A", "B", "C"]
out = "out"
[negotiation]
k = 2
[[agents]]
id = "A"
kind = "lexicon"
[[agents]]
id = "B"
kind = "lexicon"
conviction = 2
[[agents]]
id = "C"
kind = "lexicon"
[[datasets]]
name = "sst2"
path = "test.tsv"
train = "train.tsv"
)");
    }
    std::string config() const { return (dir / "run.toml").string(); }
    TempDir dir;
};

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run({"ablate", "colours", "--config", "x.toml"}).code, cli::kUsage);
    EXPECT_EQ(run({"run"}).code, cli::kUsage);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, cli::kOk);
    EXPECT_NE(help.out.find("convert-dataset"), std::string::npos);
}

TEST(Cli, MissingConfigIsUsageError) {
    const auto r = run({"run", "--config", "/nonexistent/run.toml"});
    EXPECT_EQ(r.code, cli::kUsage);
    EXPECT_EQ(r.err.rfind("config: ", 0), 0u);
}

TEST_F(CliRun, RunThenInspect) {
    const auto r = run({"run", "--config", config()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("sst2"), std::string::npos);
    const auto transcripts = dir / "out/sst2/dual_with_arbitration-A-B-C/transcripts.jsonl";
    ASSERT_TRUE(std::filesystem::exists(transcripts));
    EXPECT_TRUE(std::filesystem::exists(dir / "out/report.md"));
    const auto report = report_from_json(nlohmann::json::parse(read_file(dir / "out/report.json")));
    ASSERT_EQ(report.runs.size(), 1u);
    EXPECT_EQ(report.runs[0].examples, 4u);

    const auto listing = run({"inspect", transcripts.string()});
    EXPECT_EQ(listing.code, cli::kOk);
    EXPECT_NE(listing.out.find("4 record(s), accuracy"), std::string::npos);

    const auto one = run({"inspect", transcripts.string(), "--id", "sst2:2", "--prompts"});
    EXPECT_EQ(one.code, cli::kOk);
    EXPECT_NE(one.out.find("primary: A -> B"), std::string::npos);
    EXPECT_NE(one.out.find("      | Test input: a wonderful , moving film"), std::string::npos);

    EXPECT_EQ(run({"inspect", transcripts.string(), "--id", "nope"}).code, cli::kFailure);
}

TEST_F(CliRun, OverridesAndLimit) {
    const auto r = run({"run", "--config", config(), "--mode", "vanilla_icl", "--agents", "B", "--limit", "2",
                        "--seed", "1", "--k", "0", "--out", (dir / "alt").string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto records = read_transcripts(dir / "alt/sst2/vanilla_icl-B/transcripts.jsonl");
    EXPECT_EQ(records.size(), 2u);
    EXPECT_EQ(run({"run", "--config", config(), "--mode", "vanilla_icl"}).code, cli::kUsage);  // 3 agents
    EXPECT_EQ(run({"run", "--config", config(), "--dataset", "imdb"}).code, cli::kUsage);
}

TEST_F(CliRun, RolesAblation) {
    const auto r = run({"ablate", "roles", "--config", config(), "--agents", "A,B"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto report = report_from_json(nlohmann::json::parse(read_file(dir / "out/report.json")));
    ASSERT_EQ(report.runs.size(), 4u);
    for (const auto& s : report.runs) EXPECT_EQ(s.group, "roles");
    EXPECT_NE(read_file(dir / "out/report.md").find("## Role assignment"), std::string::npos);
}

TEST_F(CliRun, ConsensusAblation) {
    const auto r = run({"ablate", "consensus", "--config", config()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto md = read_file(dir / "out/report.md");
    EXPECT_NE(md.find("| Consensus | G:A D:B | G:B D:A |"), std::string::npos) << md;
}

TEST_F(CliRun, BadDatasetRowsExitOne) {
    write_file(dir / "test.tsv", "fine\t1\nbroken\tperhaps\n");
    const auto r = run({"run", "--config", config()});
    EXPECT_EQ(r.code, cli::kFailure);
    EXPECT_NE(r.err.find("perhaps"), std::string::npos);
}

// ---- convert-dataset --------------------------------------------------------

TEST(Convert, Sst2) {
    TempDir dir;
    write_file(dir / "dev.tsv", "sentence\tlabel\nit 's great \t1\nawful \t0\n");
    const auto r = run({"convert-dataset", "sst2", "--input", (dir / "dev.tsv").string(), "--output",
                        (dir / "out.tsv").string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(read_file(dir / "out.tsv"), "text\tlabel\nit 's great\tpositive\nawful\tnegative\n");
    const auto rows = load_dataset(DatasetSpec::builtin("sst2", dir / "out.tsv"));
    EXPECT_EQ(rows.size(), 2u);
}

TEST(Convert, MovieReviewsLatin1) {
    TempDir dir;
    write_file(dir / "rt/rt-polarity.pos", "a charming caf\xe9 movie\n");
    write_file(dir / "rt/rt-polarity.neg", "dull\n\n");
    ASSERT_EQ(run({"convert-dataset", "mr", "--input", (dir / "rt").string(), "--output", (dir / "mr.tsv").string()})
                  .code,
              cli::kOk);
    const auto rows = load_dataset(DatasetSpec::builtin("mr", dir / "mr.tsv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].text, "a charming caf\xc3\xa9 movie");
}

TEST(Convert, TwitterWithTopic) {
    TempDir dir;
    write_file(dir / "t.tsv", "1\tiphone\tpositive\tlove it\n2\tiphone\tneutral\tit exists\n");
    ASSERT_EQ(run({"convert-dataset", "twitter", "--input", (dir / "t.tsv").string(), "--output",
                   (dir / "o.tsv").string()})
                  .code,
              cli::kOk);
    const auto rows = load_dataset(DatasetSpec::builtin("twitter", dir / "o.tsv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].gold->value, "neutral");
    EXPECT_EQ(rows[0].topic, "iphone");
}

TEST(Convert, YelpAndAmazon) {
    TempDir dir;
    write_file(dir / "y.csv", "\"2\",\"Great food.\\nWill return.\"\n\"1\",\"Cold \\\"\"fresh\\\"\" fries\"\n");
    ASSERT_EQ(run({"convert-dataset", "yelp2", "--input", (dir / "y.csv").string(), "--output",
                   (dir / "y.tsv").string()})
                  .code,
              cli::kOk);
    const auto y = load_dataset(DatasetSpec::builtin("yelp2", dir / "y.tsv"));
    EXPECT_EQ(y[0].text, "Great food. Will return.");
    EXPECT_EQ(y[1].text, "Cold \"fresh\" fries");
    EXPECT_EQ(y[1].gold->value, "negative");

    write_file(dir / "a.csv", "\"2\",\"Works\",\"Does the job\"\n");
    ASSERT_EQ(run({"convert-dataset", "amazon2", "--input", (dir / "a.csv").string(), "--output",
                   (dir / "a.tsv").string()})
                  .code,
              cli::kOk);
    EXPECT_EQ(load_dataset(DatasetSpec::builtin("amazon2", dir / "a.tsv"))[0].text, "Works. Does the job");
}

TEST(Convert, Imdb) {
    TempDir dir;
    write_file(dir / "test/pos/1_9.txt", "Loved it.<br /><br />Really.");
    write_file(dir / "test/neg/0_2.txt", "Hated it.");
    ASSERT_EQ(run({"convert-dataset", "imdb", "--input", (dir / "test").string(), "--output",
                   (dir / "i.tsv").string()})
                  .code,
              cli::kOk);
    const auto rows = load_dataset(DatasetSpec::builtin("imdb", dir / "i.tsv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].gold->value, "positive");
    EXPECT_EQ(rows[0].text, "Loved it. Really.");
}

TEST(Convert, Failures) {
    TempDir dir;
    EXPECT_EQ(run({"convert-dataset", "sst5", "--input", "x", "--output", "y"}).code, cli::kUsage);
    EXPECT_EQ(run({"convert-dataset", "sst2", "--input", (dir / "none.tsv").string(), "--output",
                   (dir / "o.tsv").string()})
                  .code,
              cli::kFailure);
    write_file(dir / "bad.tsv", "sentence\tlabel\nok\t7\n");
    EXPECT_EQ(run({"convert-dataset", "sst2", "--input", (dir / "bad.tsv").string(), "--output",
                   (dir / "o.tsv").string()})
                  .code,
              cli::kFailure);
}
