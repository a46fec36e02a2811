#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sepia/trace.hpp"

namespace sepia {

using StateId = std::uint32_t;

// Data guard over a transition's parameter string. A closed guard admits
// exactly the params observed in training; an open guard admits anything.
struct Guard {
    std::string label;
    std::set<std::string> allowed_params;
    bool open = false;

    friend bool operator==(const Guard&, const Guard&) = default;
    friend auto operator<=>(const Guard&, const Guard&) = default;
};

bool guard_allows(const Guard& guard, std::string_view params);

struct Transition {
    StateId from = 0;
    std::string label;
    Guard guard;
    StateId to = 0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

// States are the dense range [0, state_count).
struct Efsm {
    std::size_t state_count = 1;
    StateId initial = 0;
    std::set<StateId> finals;
    std::vector<Transition> transitions;

    bool is_final(StateId s) const { return finals.contains(s); }
    std::set<std::string> labels() const;

    friend bool operator==(const Efsm&, const Efsm&) = default;
};

// Throws SchemaError when a structural invariant does not hold.
void validate(const Efsm& machine);

// Outgoing transition indices per state, in transition-list order.
std::vector<std::vector<std::size_t>> outgoing_index(const Efsm& machine);

// Orders transitions by (from, label, guard, to).
bool transition_less(const Transition& a, const Transition& b);

struct Renumbered {
    Efsm machine;
    // Old state -> new state; nullopt for states unreachable from initial.
    std::vector<std::optional<StateId>> mapping;
};

// Breadth-first renumbering from the initial state, following edges in
// (label, guard) order. Unreachable states are dropped and the transition
// list is sorted.
Renumbered canonicalize(const Efsm& machine);

Efsm build_prefix_tree(std::span<const Trace> traces);
inline Efsm build_prefix_tree(const Corpus& corpus) { return build_prefix_tree(corpus.traces); }

// Reusable acceptance checker; precomputes the adjacency once.
class Acceptor {
public:
    explicit Acceptor(const Efsm& machine);

    bool accepts(std::span<const TraceElement> elements) const;
    // Same walk, but any reached state counts as accepting.
    bool has_path(std::span<const TraceElement> elements) const;

private:
    std::set<StateId> run(std::span<const TraceElement> elements) const;

    const Efsm& machine_;
    std::vector<std::vector<std::size_t>> outgoing_;
};

bool accepts(const Efsm& machine, const Trace& trace);
bool accepts(const Efsm& machine, std::span<const TraceElement> elements);

std::string to_dot(const Efsm& machine);

nlohmann::ordered_json model_to_json(const Efsm& machine);
Efsm model_from_json(const nlohmann::json& object);
void save_model(const Efsm& machine, const std::filesystem::path& path);
Efsm load_model(const std::filesystem::path& path);

}  // namespace sepia
