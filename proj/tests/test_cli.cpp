#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "sepia/cli.hpp"
#include "sepia/eval.hpp"
#include "sepia/trace.hpp"
#include "support.hpp"

using namespace sepia;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path dir() {
    const fs::path d = fs::temp_directory_path() / "sepia_test_cli";
    fs::create_directories(d);
    return d;
}

std::string path(const std::string& name) { return (dir() / name).string(); }

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t dot_nodes(const std::string& dot) {
    const std::regex node(R"(^  \d+ \[shape=)", std::regex::multiline);
    return static_cast<std::size_t>(std::distance(std::sregex_iterator(dot.begin(), dot.end(), node), {}));
}

std::string write_world(const MockWorld& w, const std::string& name) {
    const std::string p = path(name);
    std::ofstream(p) << mock_world_to_json(w).dump();
    return p;
}

}  // namespace

TEST_CASE("usage errors") {
    Run none = cli({});
    CHECK(none.code == 1);
    CHECK(none.err.find("Subcommands") != std::string::npos);
    CHECK(cli({"infer", "x.jsonl", "-o", "y", "--frobnicate"}).code == 1);
    CHECK(cli({"nonsense"}).code == 1);
    Run help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("extract") != std::string::npos);
    CHECK(cli({"infer", "x.jsonl"}).code == 1);
    CHECK(cli({"infer", path("missing.jsonl"), "-o", path("m.json")}).code == 1);
}

TEST_CASE("extract, infer, export-dot on le_antisym") {
    const std::string traces = path("le_antisym.jsonl");
    Run ex = cli({"extract", SEPIA_FIXTURES "/le_antisym.v", "-o", traces});
    REQUIRE(ex.code == 0);
    const Corpus corpus = read_traces(traces);
    REQUIRE(corpus.traces.size() == 1);
    CHECK(corpus.traces[0].elements.size() == 8);

    // Prefix tree (merging capped at one state): 9 nodes, one per prefix.
    const std::string tree = path("le_antisym_tree.json");
    REQUIRE(cli({"infer", traces, "--max-states", "1", "-o", tree}).code == 0);
    Run tree_dot = cli({"export-dot", tree});
    REQUIRE(tree_dot.code == 0);
    CHECK(dot_nodes(tree_dot.out) == 9);

    // Default red-blue, k=1: the hand-traced three-state loop.
    const std::string model = path("le_antisym_model.json");
    REQUIRE(cli({"infer", traces, "--strategy", "redblue", "--k", "1", "-o", model}).code == 0);
    const std::string dot = path("le_antisym.dot");
    REQUIRE(cli({"export-dot", model, "-o", dot}).code == 0);
    CHECK(dot_nodes(slurp(dot)) == 3);
    CHECK(slurp(dot) == to_dot(infer(corpus, InferenceConfig{})));

    CHECK(cli({"infer", traces, "--strategy", "bogus", "-o", model}).code == 1);
}

TEST_CASE("search with a mock backend") {
    const std::string traces = path("auto.jsonl");
    write_traces(Corpus{{Trace{"t", {{"intros", ""}, {"auto", ""}}, "T", ""}}, {}}, traces);
    const std::string model = path("auto_model.json");
    REQUIRE(cli({"infer", traces, "-o", model}).code == 0);

    MockWorld w;
    w.initial = {{"goal", 0}, {"hard", 5}};
    w.complete_goal = 9;
    w.add_transition(0, "intros.", 1);
    w.add_transition(1, "auto.", 9);
    const std::string fixture = write_world(w, "auto_world.json");

    Run found = cli({"search", model, "--lemma", "goal", "--backend", "mock:" + fixture, "--traces", traces});
    CHECK(found.code == 0);
    const std::regex block(
        R"(^Proof was: intros\. auto\.\n2 tactics evaluated\.\nInference and search took \d+ min, \d+ sec\nNew: no, shorter: no\n$)");
    CHECK(std::regex_match(found.out, block));

    Run missing = cli({"search", model, "--lemma", "hard", "--backend", "mock:" + fixture, "--budget", "5"});
    CHECK(missing.code == 3);
    CHECK(missing.out.rfind("No proof found.\n", 0) == 0);

    CHECK(cli({"search", model, "--lemma", "zz", "--backend", "mock:" + fixture}).code == 2);
    CHECK(cli({"search", model, "--lemma", "goal", "--backend", "mock:/nonexistent.json"}).code == 2);
    CHECK(cli({"search", model, "--lemma", "goal", "--backend", "mock:" + fixture, "--budget", "0"}).code == 1);

    unsetenv("SEPIA_BACKEND_CONFIG");
    CHECK(cli({"search", model, "--lemma", "goal"}).code == 1);
    setenv("SEPIA_BACKEND_CONFIG", ("mock:" + fixture).c_str(), 1);
    CHECK(cli({"search", model, "--lemma", "goal"}).code == 0);
    unsetenv("SEPIA_BACKEND_CONFIG");
}

TEST_CASE("search through the subprocess backend") {
    const std::string traces = path("motivating.jsonl");
    write_traces(Corpus{{Trace{"a", {{"intros", "m n diff"}, {"auto", ""}}, "Le", ""},
                         Trace{"b", {{"intros", "m n diff"}, {"elim", "diff;"}, {"auto", "with arith"}}, "Le", ""}},
                        {}},
                 traces);
    const std::string model = path("motivating_model.json");
    REQUIRE(cli({"infer", traces, "-o", model}).code == 0);
    const std::string config = path("fake.json");
    std::ofstream(config) << nlohmann::json{{"command", {"python3", SEPIA_FIXTURES "/fake_prover.py"}},
                                            {"tactic_timeout_seconds", 5}}
                                 .dump();
    Run r = cli({"search", model, "--lemma", "plus_le_reg_l", "--statement",
                 "forall n m p:nat, p + n <= p + m -> n <= m", "--backend", "subprocess:" + config});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("Proof was: intros m n diff. elim diff; auto with arith.\n", 0) == 0);
    // A bare path is taken as a subprocess config.
    CHECK(cli({"search", model, "--lemma", "x", "--statement", "True", "--backend", config}).code == 0);
}

TEST_CASE("eval on a 20-lemma mock corpus") {
    const Corpus corpus = oracle::synthetic_corpus(20);
    const std::string traces = path("synth.jsonl");
    write_traces(corpus, traces);
    MockWorld w = oracle::own_sequence_world(corpus);
    w.baseline_provable = {"lemma_0", "lemma_1"};
    const std::string fixture = write_world(w, "synth_world.json");

    Run a = cli({"eval", traces, "--k", "10", "--seed", "7", "--backend", "mock:" + fixture, "--library", "Demo"});
    REQUIRE(a.code == 0);
    Run b = cli({"eval", traces, "--k", "10", "--seed", "7", "--backend", "mock:" + fixture, "--library", "Demo",
                 "--jobs", "3"});
    CHECK(a.out == b.out);

    const auto expected = oracle::expected_proofs(corpus, 10, 7);
    const std::size_t new_count = static_cast<std::size_t>(
        std::count_if(expected.begin(), expected.end(), [](const auto& e) { return e.second; }));
    std::ostringstream row;
    // Own-sequence proofs are never shorter than the original.
    row << "Demo\tSynth\t20\t" << expected.size() << " (" << expected.size() * 100 / 20 << "%)\t" << new_count
        << "\t0\t2 (10%)\n";
    CHECK(a.out == "Library\tTheory\tSize\tTotal\tNew\tShorter\tBaseline\n" + row.str());

    const std::string per = path("per.jsonl");
    REQUIRE(cli({"eval", traces, "--seed", "7", "--backend", "mock:" + fixture, "--format", "markdown",
                 "--no-baseline", "--per-lemma", per, "-o", path("report.md")})
                .code == 0);
    CHECK(slurp(path("report.md")).find("| - | Synth | 20 |") != std::string::npos);
    std::istringstream lines(slurp(per));
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 20);

    Run rounds = cli({"eval", traces, "--seed", "7", "--backend", "mock:" + fixture, "--rounds", "2"});
    CHECK(rounds.code == 0);
    CHECK(rounds.out.find("Synth@r1") != std::string::npos);
    CHECK(rounds.out.find("Synth@r2") != std::string::npos);

    // Per-theory: a theory smaller than k is skipped with a warning.
    Corpus two = corpus;
    two.traces[0].source_theory = "Tiny";
    write_traces(two, path("two.jsonl"));
    Run skipped = cli({"eval", path("two.jsonl"), "--k", "10", "--backend", "mock:" + fixture});
    CHECK(skipped.code == 0);
    CHECK(skipped.err.find("skipping theory Tiny") != std::string::npos);
    Run pooled = cli({"eval", path("two.jsonl"), "--k", "10", "--backend", "mock:" + fixture, "--pool"});
    CHECK(pooled.out.find("\tall\t20\t") != std::string::npos);

    CHECK(cli({"eval", traces, "--format", "csv", "--backend", "mock:" + fixture}).code == 1);
    CHECK(cli({"eval", traces, "--k", "1", "--backend", "mock:" + fixture}).code == 1);
}

TEST_CASE("baseline command") {
    const Corpus corpus = oracle::synthetic_corpus(10);
    write_traces(corpus, path("base.jsonl"));
    MockWorld w = oracle::own_sequence_world(corpus);
    w.baseline_provable = {"lemma_3"};
    Run r = cli({"baseline", path("base.jsonl"), "--backend", "mock:" + write_world(w, "base_world.json")});
    CHECK(r.code == 0);
    CHECK(r.out == "Theory\tSize\tBaseline\nSynth\t10\t1 (10%)\n");
}
