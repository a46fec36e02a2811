#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sepia/efsm.hpp"
#include "sepia/prover.hpp"
#include "sepia/trace.hpp"

namespace sepia {

struct SearchConfig {
    // Maximum number of first-time tactic applications.
    std::size_t tactic_budget = 10000;
    std::optional<double> timeout_seconds;
    // Maximum number of trace elements along a path.
    std::optional<std::size_t> max_depth;
    // Longest semicolon chain assembled into one sentence.
    std::size_t max_composition = 8;
    // Extra params tried on open guards, after the observed ones.
    std::vector<std::string> extra_params;
};

struct SearchNode {
    StateId state = 0;
    std::vector<std::string> sentence_path;
    std::size_t element_count = 0;
    // Semicolon-composed elements waiting for a terminating element.
    std::optional<std::string> pending_fragment;
    std::size_t pending_elements = 0;
};

struct ProofResult {
    bool found = false;
    std::vector<std::string> sentences;
    std::size_t tactics_evaluated = 0;
    double elapsed_seconds = 0.0;
    bool is_new = false;
    bool is_shorter = false;
};

// Joins semicolon-composed runs into "."-terminated sentences. Throws
// DanglingComposition when the last element still ends with ";".
std::vector<std::string> compose_sentences(std::span<const TraceElement> elements);

// Inverse of compose_sentences, through split_tactic_sentence.
std::vector<TraceElement> decompose_sentences(std::span<const std::string> sentences);

// Breadth-first search over model paths, shortest first. The prover alone
// decides completion; the model's final states are not consulted.
ProofResult bfs_search(const Efsm& machine, ProverBackend& backend, std::string_view lemma_name,
                       std::string_view lemma_statement, const SearchConfig& config = {});

struct ProofClassification {
    bool is_new = false;
    bool is_shorter = false;
};

// is_new: the found elements equal no training trace. is_shorter: fewer
// elements than the original proof.
ProofClassification classify_proof(std::span<const std::string> found, std::span<const Trace> training,
                                   const Trace* original);

// "Proof was: ..." / "<n> tactics evaluated." / "Inference and search took ..."
std::string render_result(const ProofResult& result, double extra_seconds = 0.0);

}  // namespace sepia
