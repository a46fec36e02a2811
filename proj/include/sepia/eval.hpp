#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepia/inference.hpp"
#include "sepia/prover.hpp"
#include "sepia/search.hpp"
#include "sepia/trace.hpp"

namespace sepia {

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::string>> folds;
};

// Seeded shuffle of the lemma names, dealt round-robin into k folds.
FoldPlan partition_kfolds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

struct LemmaOutcome {
    std::string lemma;
    bool found = false;
    bool is_new = false;
    bool is_shorter = false;
    std::size_t tactics_evaluated = 0;
    // Inference time of the lemma's fold plus its search time.
    double elapsed_seconds = 0.0;
    std::vector<std::string> sentences;
    std::string error;
};

struct EvalReport {
    std::string library;
    std::string theory;
    std::size_t size = 0;
    std::size_t total_proved = 0;
    std::size_t new_count = 0;
    std::size_t shorter_count = 0;
    std::optional<std::size_t> baseline_proved;
    std::vector<LemmaOutcome> per_lemma;
};

struct EvalOptions {
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    InferenceConfig inference;
    SearchConfig search;
    // Folds evaluated concurrently; each search owns its session.
    std::size_t jobs = 1;
};

EvalReport run_cross_validation(const Corpus& corpus, const EvalOptions& options, ProverBackend& backend);

// Lemmas proved by the backend's combined built-in command. Backend errors
// count as not proved.
std::size_t run_baseline(const Corpus& corpus, ProverBackend& backend);

struct AdaptiveRun {
    Corpus corpus;
    std::vector<EvalReport> reports;
};

// Repeats cross-validation, feeding every newly found proof back as a
// training trace named "<lemma>@r<round>". Fed-back proofs never train the
// fold that tests the lemma they prove.
AdaptiveRun iterate_adaptive(const Corpus& corpus, std::size_t rounds, const EvalOptions& options,
                             ProverBackend& backend);

// Groups traces by source theory, keeping first-appearance order.
std::vector<Corpus> split_by_theory(const Corpus& corpus);

enum class ReportFormat { tsv, markdown };

ReportFormat parse_report_format(std::string_view name);

// "135 (39%)": count and floor percentage of size.
std::string count_with_percent(std::size_t count, std::size_t size);

std::string render_report(std::span<const EvalReport> reports, ReportFormat format);

// One JSON object per lemma.
std::string per_lemma_jsonl(const EvalReport& report);

}  // namespace sepia
