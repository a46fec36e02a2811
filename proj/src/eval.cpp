#include "sepia/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sepia/errors.hpp"

namespace sepia {

namespace {

// Uniform draw in [0, n) by rejection; std::uniform_int_distribution is not
// reproducible across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

struct FedBackProof {
    std::string origin;
    Trace trace;
};

std::string common_theory(const Corpus& corpus) {
    std::set<std::string> theories;
    for (const Trace& t : corpus.traces) theories.insert(t.source_theory);
    if (theories.size() == 1) return *theories.begin();
    if (theories.empty()) return "";
    return "mixed";
}

EvalReport cross_validate(const Corpus& corpus, std::span<const FedBackProof> fed_back, const EvalOptions& options,
                          ProverBackend& backend) {
    const FoldPlan plan = partition_kfolds(corpus, options.folds, options.seed);

    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < corpus.traces.size(); ++i) position[corpus.traces[i].lemma_name] = i;

    std::vector<LemmaOutcome> rows(corpus.traces.size());

    auto run_fold = [&](std::size_t fold) {
        const std::set<std::string> held_out(plan.folds[fold].begin(), plan.folds[fold].end());
        std::vector<Trace> training;
        for (const Trace& t : corpus.traces) {
            if (!held_out.contains(t.lemma_name)) training.push_back(t);
        }
        for (const FedBackProof& p : fed_back) {
            if (!held_out.contains(p.origin)) training.push_back(p.trace);
        }

        const auto started = std::chrono::steady_clock::now();
        const Efsm model = infer(training, options.inference);
        const double inference_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        for (const std::string& name : plan.folds[fold]) {
            const Trace& original = corpus.traces[position.at(name)];
            LemmaOutcome row;
            row.lemma = name;
            row.elapsed_seconds = inference_seconds;
            try {
                const ProofResult result = bfs_search(model, backend, name, original.statement, options.search);
                row.found = result.found;
                row.tactics_evaluated = result.tactics_evaluated;
                row.elapsed_seconds += result.elapsed_seconds;
                if (result.found) {
                    const ProofClassification c = classify_proof(result.sentences, training, &original);
                    row.is_new = c.is_new;
                    row.is_shorter = c.is_shorter;
                    row.sentences = result.sentences;
                }
            } catch (const ProverError& e) {
                row.error = e.what();
            }
            rows[position.at(name)] = std::move(row);
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(options.jobs, 1), plan.folds.size());
    if (workers <= 1) {
        for (std::size_t fold = 0; fold < plan.folds.size(); ++fold) run_fold(fold);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&] {
                for (std::size_t fold = next++; fold < plan.folds.size(); fold = next++) {
                    try {
                        run_fold(fold);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& t : threads) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    EvalReport report;
    report.theory = common_theory(corpus);
    report.size = corpus.traces.size();
    for (const LemmaOutcome& row : rows) {
        if (!row.found) continue;
        ++report.total_proved;
        if (row.is_new) ++report.new_count;
        if (row.is_shorter) ++report.shorter_count;
    }
    report.per_lemma = std::move(rows);
    return report;
}

}  // namespace

FoldPlan partition_kfolds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k-folds needs k >= 2");
    if (corpus.traces.size() < k) {
        throw TooFewLemmas(std::to_string(corpus.traces.size()) + " lemmas cannot fill " + std::to_string(k) +
                           " folds");
    }
    std::vector<std::string> names;
    names.reserve(corpus.traces.size());
    for (const Trace& t : corpus.traces) names.push_back(t.lemma_name);

    std::mt19937_64 rng(seed);
    for (std::size_t i = names.size() - 1; i > 0; --i) {
        std::swap(names[i], names[uniform_below(rng, i + 1)]);
    }

    FoldPlan plan{k, seed, std::vector<std::vector<std::string>>(k)};
    for (std::size_t i = 0; i < names.size(); ++i) plan.folds[i % k].push_back(std::move(names[i]));
    return plan;
}

EvalReport run_cross_validation(const Corpus& corpus, const EvalOptions& options, ProverBackend& backend) {
    return cross_validate(corpus, {}, options, backend);
}

std::size_t run_baseline(const Corpus& corpus, ProverBackend& backend) {
    std::size_t proved = 0;
    for (const Trace& t : corpus.traces) {
        try {
            if (backend.run_builtin_baseline(t.lemma_name, t.statement)) ++proved;
        } catch (const ProverError&) {
        }
    }
    return proved;
}

AdaptiveRun iterate_adaptive(const Corpus& corpus, std::size_t rounds, const EvalOptions& options,
                             ProverBackend& backend) {
    if (rounds == 0) throw std::invalid_argument("adaptive evaluation needs at least one round");
    AdaptiveRun run{corpus, {}};
    std::vector<FedBackProof> fed_back;
    std::map<std::string, const Trace*> originals;
    for (const Trace& t : corpus.traces) originals[t.lemma_name] = &t;

    for (std::size_t round = 1; round <= rounds; ++round) {
        EvalReport report = cross_validate(corpus, fed_back, options, backend);
        for (const LemmaOutcome& row : report.per_lemma) {
            if (!row.found) continue;
            std::vector<TraceElement> elements = decompose_sentences(row.sentences);
            const bool known = std::any_of(fed_back.begin(), fed_back.end(), [&](const FedBackProof& p) {
                return p.origin == row.lemma && p.trace.elements == elements;
            });
            if (known) continue;
            const Trace& original = *originals.at(row.lemma);
            Trace trace{row.lemma + "@r" + std::to_string(round), std::move(elements), original.source_theory,
                        original.statement};
            run.corpus.traces.push_back(trace);
            fed_back.push_back({row.lemma, std::move(trace)});
        }
        run.reports.push_back(std::move(report));
    }
    return run;
}

std::vector<Corpus> split_by_theory(const Corpus& corpus) {
    std::vector<Corpus> parts;
    std::map<std::string, std::size_t> index;
    for (const Trace& t : corpus.traces) {
        auto [it, inserted] = index.emplace(t.source_theory, parts.size());
        if (inserted) parts.push_back(Corpus{{}, corpus.provenance});
        parts[it->second].traces.push_back(t);
    }
    return parts;
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "tsv") return ReportFormat::tsv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    throw std::invalid_argument("unknown report format \"" + std::string(name) + "\"");
}

std::string count_with_percent(std::size_t count, std::size_t size) {
    const std::size_t percent = size == 0 ? 0 : count * 100 / size;
    return std::to_string(count) + " (" + std::to_string(percent) + "%)";
}

std::string render_report(std::span<const EvalReport> reports, ReportFormat format) {
    const std::vector<std::string> header = {"Library", "Theory", "Size", "Total", "New", "Shorter", "Baseline"};
    std::vector<std::vector<std::string>> rows;
    for (const EvalReport& r : reports) {
        rows.push_back({r.library.empty() ? "-" : r.library, r.theory.empty() ? "-" : r.theory,
                        std::to_string(r.size), count_with_percent(r.total_proved, r.size),
                        std::to_string(r.new_count), std::to_string(r.shorter_count),
                        r.baseline_proved ? count_with_percent(*r.baseline_proved, r.size) : "-"});
    }

    std::ostringstream out;
    if (format == ReportFormat::tsv) {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
            out << '\n';
        };
        line(header);
        for (const auto& row : rows) line(row);
    } else {
        auto line = [&](const std::vector<std::string>& cells) {
            out << '|';
            for (const std::string& c : cells) out << ' ' << c << " |";
            out << '\n';
        };
        line(header);
        out << "|---|---|---:|---:|---:|---:|---:|\n";
        for (const auto& row : rows) line(row);
    }
    return out.str();
}

std::string per_lemma_jsonl(const EvalReport& report) {
    std::ostringstream out;
    for (const LemmaOutcome& row : report.per_lemma) {
        nlohmann::ordered_json object;
        object["theory"] = report.theory;
        object["lemma"] = row.lemma;
        object["found"] = row.found;
        object["new"] = row.is_new;
        object["shorter"] = row.is_shorter;
        object["tactics_evaluated"] = row.tactics_evaluated;
        object["elapsed_seconds"] = row.elapsed_seconds;
        object["proof"] = row.sentences;
        if (!row.error.empty()) object["error"] = row.error;
        out << object.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    return out.str();
}

}  // namespace sepia
