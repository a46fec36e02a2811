#include "sepia/inference.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "sepia/errors.hpp"

namespace sepia {

Strategy parse_strategy(std::string_view name) {
    if (name == "redblue") return Strategy::redblue;
    if (name == "ktails_exhaustive" || name == "ktails") return Strategy::ktails_exhaustive;
    throw std::invalid_argument("unknown strategy \"" + std::string(name) + "\"");
}

std::string to_string(Strategy strategy) {
    return strategy == Strategy::redblue ? "redblue" : "ktails_exhaustive";
}

namespace {

using Tails = std::set<std::vector<std::string>>;

void collect_tails(const Efsm& machine, const std::vector<std::vector<std::size_t>>& outgoing, StateId s,
                   std::size_t k, std::vector<std::string>& prefix, Tails& out) {
    if (prefix.size() == k) return;
    for (std::size_t i : outgoing[s]) {
        const Transition& t = machine.transitions[i];
        prefix.push_back(t.label);
        out.insert(prefix);
        collect_tails(machine, outgoing, t.to, k, prefix, out);
        prefix.pop_back();
    }
}

Tails tails_of(const Efsm& machine, const std::vector<std::vector<std::size_t>>& outgoing, StateId s,
               std::size_t k) {
    Tails out;
    std::vector<std::string> prefix;
    collect_tails(machine, outgoing, s, k, prefix, out);
    return out;
}

std::size_t shared_count(const Tails& a, const Tails& b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

bool terminal_conflict(const Efsm& machine, const std::vector<std::vector<std::size_t>>& outgoing, StateId a,
                       StateId b) {
    auto dead_end = [&](StateId s) { return !machine.is_final(s) && outgoing[s].empty(); };
    return (machine.is_final(a) && dead_end(b)) || (machine.is_final(b) && dead_end(a));
}

std::optional<std::size_t> score_with(const Efsm& machine, const std::vector<std::vector<std::size_t>>& outgoing,
                                      StateId a, StateId b, std::size_t k) {
    if (terminal_conflict(machine, outgoing, a, b)) return std::nullopt;
    return shared_count(tails_of(machine, outgoing, a, k), tails_of(machine, outgoing, b, k));
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), StateId{0}); }

    StateId find(StateId x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(StateId a, StateId b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return true;
    }

private:
    std::vector<StateId> parent_;
};

}  // namespace

std::optional<std::size_t> score_pair(const Efsm& machine, StateId a, StateId b, std::size_t k) {
    return score_with(machine, outgoing_index(machine), a, b, k);
}

std::optional<MergeResult> merge_states(const Efsm& machine, StateId a, StateId b, std::span<const Trace> training,
                                        std::size_t guard_open_threshold) {
    if (a == b) throw std::invalid_argument("cannot merge a state with itself");
    if (a >= machine.state_count || b >= machine.state_count) throw std::out_of_range("merge state out of range");

    DisjointSets classes(machine.state_count);
    classes.unite(a, b);

    // Fold: same-source same-label transitions must share a target.
    for (bool changed = true; changed;) {
        changed = false;
        std::map<std::pair<StateId, std::string_view>, StateId> target;
        for (const Transition& t : machine.transitions) {
            const auto key = std::make_pair(classes.find(t.from), std::string_view(t.label));
            const StateId to = classes.find(t.to);
            auto [it, inserted] = target.emplace(key, to);
            if (!inserted && classes.find(it->second) != to) {
                classes.unite(it->second, to);
                changed = true;
            }
        }
    }

    std::map<std::pair<StateId, std::string>, Transition> merged;
    for (const Transition& t : machine.transitions) {
        const StateId from = classes.find(t.from);
        auto [it, inserted] = merged.try_emplace({from, t.label});
        Transition& edge = it->second;
        if (inserted) {
            edge.from = from;
            edge.label = t.label;
            edge.guard.label = t.label;
            edge.to = classes.find(t.to);
        }
        edge.guard.allowed_params.insert(t.guard.allowed_params.begin(), t.guard.allowed_params.end());
        edge.guard.open = edge.guard.open || t.guard.open;
    }

    Efsm quotient;
    quotient.state_count = machine.state_count;
    quotient.initial = classes.find(machine.initial);
    for (StateId f : machine.finals) quotient.finals.insert(classes.find(f));
    for (auto& [key, edge] : merged) {
        if (edge.guard.allowed_params.size() > guard_open_threshold) edge.guard.open = true;
        quotient.transitions.push_back(std::move(edge));
    }

    Renumbered canonical = canonicalize(quotient);
    MergeResult result{std::move(canonical.machine), {}};
    result.mapping.resize(machine.state_count);
    for (StateId s = 0; s < machine.state_count; ++s) {
        const auto mapped = canonical.mapping[classes.find(s)];
        if (!mapped) throw std::logic_error("merge produced an unreachable class");
        result.mapping[s] = *mapped;
    }

    const Acceptor acceptor(result.machine);
    for (const Trace& trace : training) {
        if (!acceptor.accepts(trace.elements)) return std::nullopt;
    }
    return result;
}

namespace {

Efsm infer_redblue(Efsm machine, std::span<const Trace> traces, const InferenceConfig& config) {
    std::set<StateId> red{machine.initial};
    for (;;) {
        if (config.max_states_hint && red.size() >= *config.max_states_hint) break;
        const auto outgoing = outgoing_index(machine);

        std::optional<StateId> blue;
        for (StateId r : red) {
            for (std::size_t i : outgoing[r]) {
                const StateId to = machine.transitions[i].to;
                if (!red.contains(to) && (!blue || to < *blue)) blue = to;
            }
        }
        if (!blue) break;

        std::vector<MergeCandidate> candidates;
        for (StateId r : red) {
            const auto score = score_with(machine, outgoing, r, *blue, config.k);
            if (score && *score >= config.k) candidates.push_back({r, *blue, *score});
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const MergeCandidate& x, const MergeCandidate& y) { return x.score > y.score; });

        bool merged = false;
        for (const MergeCandidate& c : candidates) {
            auto result = merge_states(machine, c.red, c.blue, traces, config.guard_open_threshold);
            if (!result) continue;
            std::set<StateId> next_red;
            for (StateId r : red) next_red.insert(result->mapping[r]);
            red = std::move(next_red);
            machine = std::move(result->machine);
            merged = true;
            break;
        }
        if (!merged) red.insert(*blue);
    }
    return machine;
}

Efsm infer_ktails_exhaustive(Efsm machine, std::span<const Trace> traces, const InferenceConfig& config) {
    for (;;) {
        if (config.max_states_hint && machine.state_count <= *config.max_states_hint) break;
        const auto outgoing = outgoing_index(machine);
        std::vector<Tails> tails(machine.state_count);
        for (StateId s = 0; s < machine.state_count; ++s) tails[s] = tails_of(machine, outgoing, s, config.k);

        std::vector<MergeCandidate> candidates;
        for (StateId a = 0; a < machine.state_count; ++a) {
            for (StateId b = a + 1; b < machine.state_count; ++b) {
                if (terminal_conflict(machine, outgoing, a, b)) continue;
                const std::size_t score = shared_count(tails[a], tails[b]);
                if (score >= config.k) candidates.push_back({a, b, score});
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const MergeCandidate& x, const MergeCandidate& y) { return x.score > y.score; });

        bool merged = false;
        for (const MergeCandidate& c : candidates) {
            if (auto result = merge_states(machine, c.red, c.blue, traces, config.guard_open_threshold)) {
                machine = std::move(result->machine);
                merged = true;
                break;
            }
        }
        if (!merged) break;
    }
    return machine;
}

}  // namespace

Efsm infer(std::span<const Trace> traces, const InferenceConfig& config) {
    Efsm tree = build_prefix_tree(traces);
    if (traces.empty()) return tree;
    if (config.strategy == Strategy::redblue) return infer_redblue(std::move(tree), traces, config);
    return infer_ktails_exhaustive(std::move(tree), traces, config);
}

Efsm infer(const Corpus& corpus, const InferenceConfig& config) { return infer(corpus.traces, config); }

bool language_is_superset(const Efsm& machine, std::span<const Trace> traces) {
    const Acceptor acceptor(machine);
    return std::all_of(traces.begin(), traces.end(),
                       [&](const Trace& t) { return acceptor.accepts(t.elements); });
}

bool language_is_superset(const Efsm& machine, const Corpus& corpus) {
    return language_is_superset(machine, corpus.traces);
}

}  // namespace sepia
