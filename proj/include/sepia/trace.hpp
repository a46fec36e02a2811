#pragma once

#include <compare>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sepia {

// One tactic call. `params` keeps a trailing ";" when the tactic was
// semicolon-composed with its successor in the source script.
struct TraceElement {
    std::string label;
    std::string params;

    bool composed() const noexcept { return !params.empty() && params.back() == ';'; }

    friend bool operator==(const TraceElement&, const TraceElement&) = default;
    friend auto operator<=>(const TraceElement&, const TraceElement&) = default;
};

struct Trace {
    std::string lemma_name;
    std::vector<TraceElement> elements;
    std::string source_theory;
    // Lemma statement as it appeared in the script ("Lemma x : T."). Optional.
    std::string statement;

    friend bool operator==(const Trace&, const Trace&) = default;
};

struct Corpus {
    std::vector<Trace> traces;
    std::vector<std::string> provenance;

    // Provenance is bookkeeping about where traces were read from and does
    // not take part in equality.
    friend bool operator==(const Corpus& a, const Corpus& b) { return a.traces == b.traces; }
};

// Text of a single element as it would appear in a script: "auto with arith",
// "intros n m H;".
std::string element_text(const TraceElement& element);

// Collapses whitespace runs outside string literals to one space and trims.
std::string normalize_whitespace(std::string_view text);

// Splits one tactic sentence (without its terminating ".") on semicolons
// at bracket depth 0. Throws EmptySentence when there is nothing to split
// or a fragment is empty.
std::vector<TraceElement> split_tactic_sentence(std::string_view sentence);

// Extracts one Trace per Lemma/Theorem/Fact/Corollary/Remark/Proposition block
// closed by Qed or Defined. Admitted/Aborted blocks are dropped and reported
// through `warnings` when given.
std::vector<Trace> parse_proof_script(std::string_view source_text, std::string_view theory = {},
                                      std::vector<std::string>* warnings = nullptr);

// Reads proof scripts and trace files (".jsonl") in order. Duplicate lemma
// names get "#2", "#3", ... suffixes in load order.
Corpus load_corpus(const std::vector<std::filesystem::path>& paths,
                   std::vector<std::string>* warnings = nullptr);

void make_lemma_names_unique(Corpus& corpus);

nlohmann::ordered_json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& object);

void write_traces(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_traces(const std::filesystem::path& path);

}  // namespace sepia
