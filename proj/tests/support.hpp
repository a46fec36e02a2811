#pragma once

// Independent oracles and generators shared by the test binaries. None of
// these call into the code under test.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sepia/efsm.hpp"
#include "sepia/eval.hpp"
#include "sepia/inference.hpp"
#include "sepia/prover.hpp"
#include "sepia/trace.hpp"

namespace oracle {

// Character-level splitter: tracks bracket depth and quote state, splits on
// ";" at depth 0, first whitespace-delimited token is the label.
inline std::vector<std::pair<std::string, std::string>> split_by_depth(const std::string& sentence) {
    std::vector<std::string> fragments;
    std::string current;
    int depth = 0;
    bool quoted = false;
    for (char c : sentence) {
        if (quoted) {
            current += c;
            if (c == '"') quoted = false;
            continue;
        }
        if (c == '"') quoted = true;
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (c == ';' && depth == 0) {
            fragments.push_back(current);
            current.clear();
            continue;
        }
        current += c;
    }
    fragments.push_back(current);
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        std::string f = fragments[i];
        const auto b = f.find_first_not_of(" \t\n");
        const auto e = f.find_last_not_of(" \t\n");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
        const auto space = f.find_first_of(" \t\n");
        std::string label = f.substr(0, space);
        std::string params = space == std::string::npos ? "" : f.substr(f.find_first_not_of(" \t\n", space));
        if (i + 1 < fragments.size()) params += ";";
        out.emplace_back(label, params);
    }
    return out;
}

using Word = std::vector<sepia::TraceElement>;

// Every path of the machine from `initial` with at most `depth` elements,
// with whether it ends in a final state. Guards are expanded to their
// allowed params.
inline std::map<Word, bool> enumerate_paths(const sepia::Efsm& m, std::size_t depth) {
    std::map<Word, bool> result;
    struct Item {
        sepia::StateId state;
        Word word;
    };
    std::vector<Item> stack{{m.initial, {}}};
    while (!stack.empty()) {
        Item item = stack.back();
        stack.pop_back();
        result[item.word] = result[item.word] || m.finals.contains(item.state);
        if (item.word.size() == depth) continue;
        for (const sepia::Transition& t : m.transitions) {
            if (t.from != item.state) continue;
            for (const std::string& p : t.guard.allowed_params) {
                Item next = item;
                next.state = t.to;
                next.word.push_back({t.label, p});
                stack.push_back(std::move(next));
            }
        }
    }
    return result;
}

// Distinct outgoing label sequences of length 1..k from `s`.
inline std::set<std::vector<std::string>> tails(const sepia::Efsm& m, sepia::StateId s, std::size_t k) {
    std::set<std::vector<std::string>> out;
    std::vector<std::pair<sepia::StateId, std::vector<std::string>>> frontier{{s, {}}};
    for (std::size_t len = 1; len <= k; ++len) {
        std::vector<std::pair<sepia::StateId, std::vector<std::string>>> next;
        for (const auto& [state, seq] : frontier) {
            for (const sepia::Transition& t : m.transitions) {
                if (t.from != state) continue;
                auto extended = seq;
                extended.push_back(t.label);
                out.insert(extended);
                next.emplace_back(t.to, extended);
            }
        }
        frontier = std::move(next);
    }
    return out;
}

inline std::vector<sepia::Trace> random_corpus(std::mt19937_64& rng, std::size_t max_traces, std::size_t max_len,
                                               std::size_t alphabet, std::size_t param_kinds = 1) {
    std::vector<sepia::Trace> traces;
    const std::size_t n = 1 + rng() % max_traces;
    for (std::size_t i = 0; i < n; ++i) {
        sepia::Trace t;
        t.lemma_name = "l" + std::to_string(i);
        t.source_theory = "T";
        const std::size_t len = 1 + rng() % max_len;
        for (std::size_t j = 0; j < len; ++j) {
            std::string label(1, static_cast<char>('a' + rng() % alphabet));
            std::string params = param_kinds > 1 ? "p" + std::to_string(rng() % param_kinds) : "";
            t.elements.push_back({label, params});
        }
        traces.push_back(std::move(t));
    }
    return traces;
}

inline sepia::Trace word(const std::string& labels, const std::string& name = "w") {
    sepia::Trace t;
    t.lemma_name = name;
    t.source_theory = "T";
    for (char c : labels) t.elements.push_back({std::string(1, c), ""});
    return t;
}

// Random machine with up to `max_states` states; labels a-d, params drawn
// from {"", "x", ";"} (";" composes with the next element).
inline sepia::Efsm random_machine(std::mt19937_64& rng, std::size_t max_states) {
    sepia::Efsm m;
    m.state_count = 1 + rng() % max_states;
    const std::vector<std::string> params = {"", "x", ";"};
    for (sepia::StateId s = 0; s < m.state_count; ++s) {
        if (rng() % 3 == 0) m.finals.insert(s);
        const std::size_t edges = rng() % 4;
        std::set<std::string> used;
        for (std::size_t e = 0; e < edges; ++e) {
            std::string label(1, static_cast<char>('a' + rng() % 4));
            if (!used.insert(label).second) continue;
            sepia::Guard g{label, {}, false};
            for (const std::string& p : params) {
                if (rng() % 2) g.allowed_params.insert(p);
            }
            if (g.allowed_params.empty()) g.allowed_params.insert("");
            m.transitions.push_back({s, label, g, static_cast<sepia::StateId>(rng() % m.state_count)});
        }
    }
    return m;
}

// Sentences of an element sequence; nullopt when it ends mid-composition.
inline std::optional<std::vector<std::string>> sentences_of(const Word& w) {
    std::vector<std::string> out;
    std::string current;
    for (const sepia::TraceElement& e : w) {
        if (!current.empty()) current += " ";
        // Script form: "t1; t2" when the params are just the semicolon.
        current += e.label + (e.params.empty() || e.params == ";" ? e.params : " " + e.params);
        if (e.params.empty() || e.params.back() != ';') {
            out.push_back(current + ".");
            current.clear();
        }
    }
    if (!current.empty()) return std::nullopt;
    return out;
}

// Goal-id table: (goal, sentence) -> goal, with `complete` as the target
// that closes the proof.
using GoalTable = std::map<std::pair<int, std::string>, int>;

// True when replaying `sentences` from `start` ends exactly at `complete`.
inline bool proves(const GoalTable& table, int start, int complete, const std::vector<std::string>& sentences) {
    int goal = start;
    for (const std::string& s : sentences) {
        if (goal == complete) return false;
        auto it = table.find({goal, s});
        if (it == table.end()) return false;
        goal = it->second;
    }
    return goal == complete;
}

// Minimum element count of a model path (length <= depth) that proves the
// lemma, by exhaustive enumeration.
inline std::optional<std::size_t> shortest_proof(const sepia::Efsm& m, const GoalTable& table, int start,
                                                 int complete, std::size_t depth) {
    std::optional<std::size_t> best;
    for (const auto& [w, final] : enumerate_paths(m, depth)) {
        (void)final;
        if (w.empty()) continue;
        const auto sentences = sentences_of(w);
        if (!sentences || !proves(table, start, complete, *sentences)) continue;
        if (!best || w.size() < *best) best = w.size();
    }
    return best;
}

// Synthetic corpus of `n` lemmas in three families: intros/rewrite-loop/auto
// proofs, "induction n; simpl" proofs, and lemmas closed by a tactic no other
// lemma uses (never provable from the rest).
inline sepia::Corpus synthetic_corpus(std::size_t n, const std::string& theory = "Synth") {
    sepia::Corpus corpus;
    for (std::size_t i = 0; i < n; ++i) {
        sepia::Trace t;
        t.lemma_name = "lemma_" + std::to_string(i);
        t.source_theory = theory;
        switch (i % 3) {
            case 0: {
                t.elements.push_back({"intros", ""});
                for (std::size_t r = 0; r < 1 + (i / 3) % 4; ++r) t.elements.push_back({"rewrite", "H"});
                t.elements.push_back({"auto", ""});
                break;
            }
            case 1: {
                t.elements.push_back({"induction", "n;"});
                t.elements.push_back({"simpl", ""});
                if ((i / 3) % 2) t.elements.push_back({"rewrite", "IHn"});
                t.elements.push_back({"reflexivity", ""});
                break;
            }
            default:
                t.elements.push_back({"intros", ""});
                t.elements.push_back({"unique_" + std::to_string(i), ""});
                break;
        }
        corpus.traces.push_back(std::move(t));
    }
    return corpus;
}

// Mock in which every lemma is closed exactly by its own original sentences.
inline sepia::MockWorld own_sequence_world(const sepia::Corpus& corpus, int complete = 99) {
    sepia::MockWorld w;
    w.complete_goal = complete;
    int next = 1000;
    for (const sepia::Trace& t : corpus.traces) {
        const auto sentences = sentences_of(t.elements);
        int goal = next++;
        w.initial[t.lemma_name] = goal;
        for (std::size_t i = 0; i < sentences->size(); ++i) {
            const int to = i + 1 == sentences->size() ? complete : next++;
            w.add_transition(goal, (*sentences)[i], to);
            goal = to;
        }
    }
    return w;
}

// Lemmas whose own element sequence is a path of the model (finals ignored),
// i.e. the ones a search against own_sequence_world can close.
inline std::set<std::string> reachable(const sepia::Efsm& m, std::span<const sepia::Trace> tests) {
    std::set<std::string> out;
    std::size_t depth = 0;
    for (const sepia::Trace& t : tests) depth = std::max(depth, t.elements.size());
    const auto paths = enumerate_paths(m, depth);
    for (const sepia::Trace& t : tests) {
        if (paths.contains(t.elements)) out.insert(t.lemma_name);
    }
    return out;
}

// For every lemma a k-folds run over own_sequence_world can prove: whether the
// proof (its own sequence) is absent from its fold's training traces.
inline std::map<std::string, bool> expected_proofs(const sepia::Corpus& corpus, std::size_t k, std::uint64_t seed,
                                                   const sepia::InferenceConfig& config = {}) {
    std::map<std::string, bool> out;
    for (const auto& fold : sepia::partition_kfolds(corpus, k, seed).folds) {
        const std::set<std::string> held(fold.begin(), fold.end());
        std::vector<sepia::Trace> training, tests;
        for (const sepia::Trace& t : corpus.traces) (held.contains(t.lemma_name) ? tests : training).push_back(t);
        const sepia::Efsm model = sepia::infer(training, config);
        const std::set<std::string> names = reachable(model, tests);
        for (const sepia::Trace& t : tests) {
            if (!names.contains(t.lemma_name)) continue;
            out[t.lemma_name] = std::none_of(training.begin(), training.end(),
                                             [&](const sepia::Trace& o) { return o.elements == t.elements; });
        }
    }
    return out;
}

}  // namespace oracle
