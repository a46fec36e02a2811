#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sepia/efsm.hpp"
#include "sepia/trace.hpp"

namespace sepia {

enum class Strategy { redblue, ktails_exhaustive };

Strategy parse_strategy(std::string_view name);
std::string to_string(Strategy strategy);

struct InferenceConfig {
    Strategy strategy = Strategy::redblue;
    // Minimum k-tails score for two states to be considered equivalent.
    std::size_t k = 1;
    // Merging stops once this many states have been consolidated (red states
    // under redblue, remaining states under ktails_exhaustive).
    std::optional<std::size_t> max_states_hint;
    // A merged guard opens once it has seen more than this many params.
    std::size_t guard_open_threshold = 8;
};

struct MergeCandidate {
    StateId red = 0;
    StateId blue = 0;
    std::size_t score = 0;
};

// Number of distinct outgoing label sequences of length 1..k shared by `a`
// and `b`. nullopt means the pair is incompatible: one is final and the other
// is a non-final state with no outgoing transitions.
std::optional<std::size_t> score_pair(const Efsm& machine, StateId a, StateId b, std::size_t k);

struct MergeResult {
    Efsm machine;
    // Old state -> state in the merged machine.
    std::vector<StateId> mapping;
};

// Merges `b` into `a`, folds until label-deterministic, and re-checks the
// training traces. Returns nullopt when a training trace is no longer
// accepted (the merge must be discarded).
std::optional<MergeResult> merge_states(const Efsm& machine, StateId a, StateId b,
                                        std::span<const Trace> training,
                                        std::size_t guard_open_threshold = 8);

Efsm infer(const Corpus& corpus, const InferenceConfig& config = {});
Efsm infer(std::span<const Trace> traces, const InferenceConfig& config = {});

bool language_is_superset(const Efsm& machine, const Corpus& corpus);
bool language_is_superset(const Efsm& machine, std::span<const Trace> traces);

}  // namespace sepia
