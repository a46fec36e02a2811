#include "sepia/search.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <stdexcept>
#include <cmath>
#include <deque>
#include <sstream>

#include "sepia/errors.hpp"

namespace sepia {

std::vector<std::string> compose_sentences(std::span<const TraceElement> elements) {
    std::vector<std::string> sentences;
    std::string current;
    for (const TraceElement& e : elements) {
        if (!current.empty()) current += ' ';
        current += element_text(e);
        if (!e.composed()) {
            sentences.push_back(current + ".");
            current.clear();
        }
    }
    if (!current.empty()) throw DanglingComposition("composition \"" + current + "\" is never terminated");
    return sentences;
}

std::vector<TraceElement> decompose_sentences(std::span<const std::string> sentences) {
    std::vector<TraceElement> elements;
    for (std::string_view s : sentences) {
        while (!s.empty() && (s.back() == '.' || std::isspace(static_cast<unsigned char>(s.back())))) {
            s.remove_suffix(1);
        }
        for (TraceElement& e : split_tactic_sentence(s)) elements.push_back(std::move(e));
    }
    return elements;
}

namespace {

class Searcher {
public:
    Searcher(const Efsm& machine, ProverBackend& backend, std::string_view lemma_name,
             std::string_view lemma_statement, const SearchConfig& config)
        : machine_(machine),
          backend_(backend),
          lemma_name_(lemma_name),
          lemma_statement_(lemma_statement),
          config_(config),
          started_(std::chrono::steady_clock::now()),
          session_(backend.start_session(lemma_name, lemma_statement)) {
        outgoing_ = outgoing_index(machine);
        for (auto& edges : outgoing_) {
            std::sort(edges.begin(), edges.end(), [&](std::size_t a, std::size_t b) {
                return transition_less(machine_.transitions[a], machine_.transitions[b]);
            });
        }
    }

    ProofResult run() {
        std::deque<SearchNode> frontier;
        frontier.push_back(SearchNode{machine_.initial, {}, 0, std::nullopt, 0});
        while (!frontier.empty()) {
            SearchNode node = std::move(frontier.front());
            frontier.pop_front();
            if (config_.max_depth && node.element_count >= *config_.max_depth) continue;
            if (!expand(node, frontier)) break;
        }
        result_.elapsed_seconds = elapsed();
        return std::move(result_);
    }

private:
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    }

    bool out_of_resources() const {
        if (result_.tactics_evaluated >= config_.tactic_budget) return true;
        return config_.timeout_seconds && elapsed() >= *config_.timeout_seconds;
    }

    std::vector<std::string> choices(const Guard& guard) const {
        std::vector<std::string> params(guard.allowed_params.begin(), guard.allowed_params.end());
        if (guard.open) {
            for (const std::string& p : config_.extra_params) {
                if (!guard.allowed_params.contains(p)) params.push_back(p);
            }
        }
        return params;
    }

    void restart_session() { session_ = backend_.start_session(lemma_name_, lemma_statement_); }

    // Moves the prover to the state after `path`. Replayed sentences were
    // already evaluated once and are not charged.
    bool sync_to(const std::vector<std::string>& path) {
        try {
            const auto& applied = session_.applied();
            const auto mismatch = std::mismatch(applied.begin(), applied.end(), path.begin(), path.end());
            const auto common = static_cast<std::size_t>(mismatch.first - applied.begin());
            while (session_.applied().size() > common) session_.undo();
            for (std::size_t i = common; i < path.size(); ++i) {
                if (session_.apply_tactic(path[i]).kind != OutcomeKind::progress) {
                    if (session_.status() != SessionStatus::open) session_.undo();
                    return false;
                }
            }
            return true;
        } catch (const Timeout&) {
            restart_session();
            return false;
        }
    }

    // Returns false when the search must stop.
    bool expand(const SearchNode& node, std::deque<SearchNode>& frontier) {
        for (std::size_t index : outgoing_[node.state]) {
            const Transition& t = machine_.transitions[index];
            for (std::string& param : choices(t.guard)) {
                const TraceElement element{t.label, std::move(param)};
                std::string text = node.pending_fragment ? *node.pending_fragment + " " + element_text(element)
                                                         : element_text(element);
                if (element.composed()) {
                    if (node.pending_elements + 1 >= config_.max_composition) continue;
                    frontier.push_back(SearchNode{t.to, node.sentence_path, node.element_count + 1, std::move(text),
                                                  node.pending_elements + 1});
                    continue;
                }

                if (out_of_resources()) return false;
                if (!sync_to(node.sentence_path)) return true;

                std::string sentence = std::move(text) + ".";
                ++result_.tactics_evaluated;
                TacticOutcome outcome;
                try {
                    outcome = session_.apply_tactic(sentence);
                } catch (const Timeout&) {
                    restart_session();
                    continue;
                }
                if (outcome.kind == OutcomeKind::failure) continue;

                std::vector<std::string> path = node.sentence_path;
                path.push_back(std::move(sentence));
                if (outcome.kind == OutcomeKind::complete) {
                    result_.found = true;
                    result_.sentences = std::move(path);
                    return false;
                }
                frontier.push_back(SearchNode{t.to, std::move(path), node.element_count + 1, std::nullopt, 0});
            }
        }
        return true;
    }

    const Efsm& machine_;
    ProverBackend& backend_;
    std::string lemma_name_;
    std::string lemma_statement_;
    const SearchConfig& config_;
    std::chrono::steady_clock::time_point started_;
    ProverSession session_;
    std::vector<std::vector<std::size_t>> outgoing_;
    ProofResult result_;
};

}  // namespace

ProofResult bfs_search(const Efsm& machine, ProverBackend& backend, std::string_view lemma_name,
                       std::string_view lemma_statement, const SearchConfig& config) {
    if (config.tactic_budget == 0) throw std::invalid_argument("tactic budget must be at least 1");
    return Searcher(machine, backend, lemma_name, lemma_statement, config).run();
}

ProofClassification classify_proof(std::span<const std::string> found, std::span<const Trace> training,
                                   const Trace* original) {
    const std::vector<TraceElement> elements = decompose_sentences(found);
    ProofClassification c;
    c.is_new = std::none_of(training.begin(), training.end(),
                            [&](const Trace& t) { return t.elements == elements; });
    c.is_shorter = original != nullptr && elements.size() < original->elements.size();
    return c;
}

std::string render_result(const ProofResult& result, double extra_seconds) {
    std::ostringstream out;
    if (result.found) {
        out << "Proof was:";
        for (const std::string& s : result.sentences) out << ' ' << s;
        out << '\n';
    } else {
        out << "No proof found.\n";
    }
    out << result.tactics_evaluated << " tactics evaluated.\n";
    const auto seconds = static_cast<long long>(std::llround(result.elapsed_seconds + extra_seconds));
    out << "Inference and search took " << seconds / 60 << " min, " << seconds % 60 << " sec\n";
    return out.str();
}

}  // namespace sepia
