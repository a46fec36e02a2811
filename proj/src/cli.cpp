#include "sepia/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "sepia/efsm.hpp"
#include "sepia/errors.hpp"
#include "sepia/eval.hpp"
#include "sepia/inference.hpp"
#include "sepia/prover.hpp"
#include "sepia/search.hpp"
#include "sepia/trace.hpp"

namespace sepia {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBackend = 2;
constexpr int kExitNotFound = 3;

class UsageError : public Error {
public:
    using Error::Error;
};

std::unique_ptr<ProverBackend> resolve_backend(const std::string& flag) {
    std::string spec = flag;
    if (spec.empty()) {
        if (const char* env = std::getenv("SEPIA_BACKEND_CONFIG")) spec = env;
    }
    if (spec.empty()) throw UsageError("no backend given; pass --backend or set SEPIA_BACKEND_CONFIG");
    if (spec.rfind("mock:", 0) != 0 && spec.rfind("subprocess:", 0) != 0) spec = "subprocess:" + spec;
    try {
        return make_backend(spec);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + path);
    file << text;
}

struct InferenceFlags {
    std::string strategy = "redblue";
    std::size_t k = 1;
    std::size_t guard_open_threshold = 8;
    std::optional<std::size_t> max_states;

    InferenceConfig config() const {
        InferenceConfig c;
        try {
            c.strategy = parse_strategy(strategy);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        c.k = k;
        c.guard_open_threshold = guard_open_threshold;
        c.max_states_hint = max_states;
        return c;
    }
};

struct SearchFlags {
    std::size_t budget = 10000;
    std::optional<double> timeout;
    std::optional<std::size_t> max_depth;
    std::vector<std::string> params;

    SearchConfig config() const {
        if (budget == 0) throw UsageError("--budget must be at least 1");
        SearchConfig c;
        c.tactic_budget = budget;
        c.timeout_seconds = timeout;
        c.max_depth = max_depth;
        c.extra_params = params;
        return c;
    }
};

void add_search_flags(CLI::App* cmd, SearchFlags& flags) {
    cmd->add_option("--budget", flags.budget, "Tactic budget per lemma")->capture_default_str();
    cmd->add_option("--timeout", flags.timeout, "Search timeout in seconds");
    cmd->add_option("--max-depth", flags.max_depth, "Maximum proof length in trace elements");
    cmd->add_option("--param", flags.params, "Extra parameter tried on open guards (repeatable)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learns tactic models from proof corpora and searches them for proofs"};
    app.name("sepia");
    app.require_subcommand(1);

    std::vector<std::string> extract_inputs;
    std::string extract_output;
    auto* extract = app.add_subcommand("extract", "Extract proof traces from proof scripts");
    extract->add_option("files", extract_inputs, "Proof scripts or trace files")->required();
    extract->add_option("-o,--output", extract_output, "Trace file to write (JSON lines)")->required();

    std::string infer_input;
    std::string infer_output;
    InferenceFlags infer_flags;
    auto* infer_cmd = app.add_subcommand("infer", "Infer a model from a trace file");
    infer_cmd->add_option("traces", infer_input, "Trace file")->required();
    infer_cmd->add_option("--strategy", infer_flags.strategy, "redblue or ktails_exhaustive")->capture_default_str();
    infer_cmd->add_option("--k", infer_flags.k, "Minimum merge score")->capture_default_str();
    infer_cmd->add_option("--guard-open-threshold", infer_flags.guard_open_threshold,
                          "Distinct params after which a merged guard opens")
        ->capture_default_str();
    infer_cmd->add_option("--max-states", infer_flags.max_states, "Stop merging at this many consolidated states");
    infer_cmd->add_option("-o,--output", infer_output, "Model file to write")->required();

    std::string search_model;
    std::string search_lemma;
    std::string search_statement;
    std::string search_backend;
    std::string search_traces;
    SearchFlags search_flags;
    auto* search_cmd = app.add_subcommand("search", "Search a model for a proof of one lemma");
    search_cmd->add_option("model", search_model, "Model file")->required();
    search_cmd->add_option("--lemma", search_lemma, "Lemma name")->required();
    search_cmd->add_option("--statement", search_statement, "Lemma statement");
    search_cmd->add_option("--backend", search_backend, "mock:<fixture.json> or subprocess:<config.json>");
    search_cmd->add_option("--traces", search_traces, "Training traces, to report whether the proof is new");
    add_search_flags(search_cmd, search_flags);

    std::string eval_input;
    std::string eval_backend;
    std::string eval_output;
    std::string eval_per_lemma;
    std::string eval_format = "tsv";
    std::string eval_library;
    std::size_t eval_folds = 10;
    std::uint64_t eval_seed = 0;
    std::size_t eval_rounds = 1;
    std::size_t eval_jobs = 1;
    bool eval_pool = false;
    bool eval_no_baseline = false;
    InferenceFlags eval_infer;
    SearchFlags eval_search;
    auto* eval_cmd = app.add_subcommand("eval", "k-folds evaluation of a trace corpus");
    eval_cmd->add_option("traces", eval_input, "Trace file")->required();
    eval_cmd->add_option("--k", eval_folds, "Number of folds")->capture_default_str();
    eval_cmd->add_option("--seed", eval_seed, "Seed for the fold partition")->capture_default_str();
    eval_cmd->add_option("--backend", eval_backend, "mock:<fixture.json> or subprocess:<config.json>");
    eval_cmd->add_option("--strategy", eval_infer.strategy, "redblue or ktails_exhaustive")->capture_default_str();
    eval_cmd->add_option("--merge-k", eval_infer.k, "Minimum merge score for inference")->capture_default_str();
    eval_cmd->add_option("--guard-open-threshold", eval_infer.guard_open_threshold,
                         "Distinct params after which a merged guard opens")
        ->capture_default_str();
    add_search_flags(eval_cmd, eval_search);
    eval_cmd->add_option("--rounds", eval_rounds, "Adaptive rounds feeding found proofs back")->capture_default_str();
    eval_cmd->add_option("--jobs", eval_jobs, "Folds evaluated in parallel")->capture_default_str();
    eval_cmd->add_flag("--pool", eval_pool, "Evaluate all theories as one corpus");
    eval_cmd->add_flag("--no-baseline", eval_no_baseline, "Skip the built-in automation baseline");
    eval_cmd->add_option("--format", eval_format, "tsv or markdown")->capture_default_str();
    eval_cmd->add_option("--library", eval_library, "Library name for the report");
    eval_cmd->add_option("--per-lemma", eval_per_lemma, "Write per-lemma results (JSON lines)");
    eval_cmd->add_option("-o,--output", eval_output, "Report file (default: stdout)");

    std::string baseline_input;
    std::string baseline_backend;
    auto* baseline_cmd = app.add_subcommand("baseline", "Run the built-in automation on every lemma");
    baseline_cmd->add_option("traces", baseline_input, "Trace file")->required();
    baseline_cmd->add_option("--backend", baseline_backend, "mock:<fixture.json> or subprocess:<config.json>");

    std::string dot_input;
    std::string dot_output;
    auto* dot_cmd = app.add_subcommand("export-dot", "Render a model as Graphviz DOT");
    dot_cmd->add_option("model", dot_input, "Model file")->required();
    dot_cmd->add_option("-o,--output", dot_output, "DOT file (default: stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code != 0) err << app.help();
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (extract->parsed()) {
            std::vector<std::string> warnings;
            const Corpus corpus =
                load_corpus(std::vector<std::filesystem::path>(extract_inputs.begin(), extract_inputs.end()), &warnings);
            for (const std::string& w : warnings) err << "warning: " << w << '\n';
            write_traces(corpus, extract_output);
            out << corpus.traces.size() << " traces written to " << extract_output << '\n';
            return kExitOk;
        }

        if (infer_cmd->parsed()) {
            const Corpus corpus = read_traces(infer_input);
            const Efsm model = infer(corpus, infer_flags.config());
            save_model(model, infer_output);
            out << "model with " << model.state_count << " states and " << model.transitions.size()
                << " transitions written to " << infer_output << '\n';
            return kExitOk;
        }

        if (search_cmd->parsed()) {
            const SearchConfig config = search_flags.config();
            const Efsm model = load_model(search_model);
            auto backend = resolve_backend(search_backend);
            ProofResult result = bfs_search(model, *backend, search_lemma, search_statement, config);
            out << render_result(result);
            if (result.found && !search_traces.empty()) {
                const Corpus training = read_traces(search_traces);
                const Trace* original = nullptr;
                for (const Trace& t : training.traces) {
                    if (t.lemma_name == search_lemma) original = &t;
                }
                const auto c = classify_proof(result.sentences, training.traces, original);
                out << "New: " << (c.is_new ? "yes" : "no") << ", shorter: " << (c.is_shorter ? "yes" : "no") << '\n';
            }
            return result.found ? kExitOk : kExitNotFound;
        }

        if (eval_cmd->parsed()) {
            EvalOptions options;
            options.folds = eval_folds;
            options.seed = eval_seed;
            options.inference = eval_infer.config();
            options.search = eval_search.config();
            options.jobs = eval_jobs;
            ReportFormat format;
            try {
                format = parse_report_format(eval_format);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            if (eval_folds < 2) throw UsageError("--k must be at least 2");
            if (eval_rounds < 1) throw UsageError("--rounds must be at least 1");

            const Corpus corpus = read_traces(eval_input);
            auto backend = resolve_backend(eval_backend);
            const std::vector<Corpus> parts = eval_pool ? std::vector<Corpus>{corpus} : split_by_theory(corpus);

            std::vector<EvalReport> reports;
            for (const Corpus& part : parts) {
                if (part.traces.size() < eval_folds) {
                    err << "warning: skipping theory " << (part.traces.empty() ? "" : part.traces.front().source_theory)
                        << " (" << part.traces.size() << " lemmas, fewer than " << eval_folds << " folds)\n";
                    continue;
                }
                std::optional<std::size_t> baseline;
                if (!eval_no_baseline) baseline = run_baseline(part, *backend);
                AdaptiveRun run = iterate_adaptive(part, eval_rounds, options, *backend);
                for (std::size_t r = 0; r < run.reports.size(); ++r) {
                    EvalReport& report = run.reports[r];
                    report.library = eval_library;
                    if (eval_pool) report.theory = report.theory == "mixed" ? "all" : report.theory;
                    if (eval_rounds > 1) report.theory += "@r" + std::to_string(r + 1);
                    report.baseline_proved = baseline;
                    reports.push_back(std::move(report));
                }
            }
            write_text(eval_output, render_report(reports, format), out);
            if (!eval_per_lemma.empty()) {
                std::string lines;
                for (const EvalReport& r : reports) lines += per_lemma_jsonl(r);
                write_text(eval_per_lemma, lines, out);
            }
            return kExitOk;
        }

        if (baseline_cmd->parsed()) {
            const Corpus corpus = read_traces(baseline_input);
            auto backend = resolve_backend(baseline_backend);
            out << "Theory\tSize\tBaseline\n";
            for (const Corpus& part : split_by_theory(corpus)) {
                const std::size_t proved = run_baseline(part, *backend);
                out << part.traces.front().source_theory << '\t' << part.traces.size() << '\t'
                    << count_with_percent(proved, part.traces.size()) << '\n';
            }
            return kExitOk;
        }

        if (dot_cmd->parsed()) {
            write_text(dot_output, to_dot(load_model(dot_input)), out);
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ProverError& e) {
        err << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace sepia
