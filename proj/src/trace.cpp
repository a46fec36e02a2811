#include "sepia/trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "sepia/errors.hpp"

namespace sepia {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

constexpr std::array<std::string_view, 6> kLemmaKeywords = {
    "Lemma", "Theorem", "Fact", "Corollary", "Remark", "Proposition"};
constexpr std::array<std::string_view, 4> kModifiers = {"Local", "Global", "Polymorphic", "Program"};

struct Sentence {
    std::string text;
    std::size_t line = 0;
    bool terminated = true;
};

// Cuts source text into "."-terminated sentences. Comments are replaced by a
// space, string literals are kept verbatim, and whitespace is normalized.
std::vector<Sentence> lex_sentences(std::string_view src) {
    std::vector<Sentence> out;
    std::string current;
    std::size_t line = 1;
    std::size_t start_line = 0;

    auto push = [&](char c) {
        if (start_line == 0 && !is_space(c)) start_line = line;
        current.push_back(c);
    };
    auto flush = [&](bool terminated) {
        std::string text = normalize_whitespace(current);
        if (!text.empty()) out.push_back({std::move(text), start_line, terminated});
        current.clear();
        start_line = 0;
    };

    const std::size_t n = src.size();
    std::size_t i = 0;
    while (i < n) {
        const char c = src[i];
        if (c == '(' && i + 1 < n && src[i + 1] == '*') {
            const std::size_t opened_at = line;
            int depth = 1;
            i += 2;
            while (i < n && depth > 0) {
                if (src[i] == '(' && i + 1 < n && src[i + 1] == '*') {
                    ++depth;
                    i += 2;
                } else if (src[i] == '*' && i + 1 < n && src[i + 1] == ')') {
                    --depth;
                    i += 2;
                } else {
                    if (src[i] == '\n') ++line;
                    ++i;
                }
            }
            if (depth > 0) throw ParseError("", opened_at, "unterminated comment");
            current.push_back(' ');
            continue;
        }
        if (c == '"') {
            const std::size_t opened_at = line;
            push(c);
            ++i;
            bool closed = false;
            while (i < n) {
                if (src[i] == '"') {
                    // "" is an escaped quote inside a literal
                    if (i + 1 < n && src[i + 1] == '"') {
                        current.append("\"\"");
                        i += 2;
                        continue;
                    }
                    current.push_back('"');
                    ++i;
                    closed = true;
                    break;
                }
                if (src[i] == '\n') ++line;
                current.push_back(src[i]);
                ++i;
            }
            if (!closed) throw ParseError("", opened_at, "unterminated string literal");
            continue;
        }
        if (c == '.' && (i + 1 == n || is_space(src[i + 1]))) {
            flush(true);
            ++i;
            continue;
        }
        if (c == '\n') ++line;
        push(c);
        ++i;
    }
    flush(false);
    return out;
}

// Bullets and focus braces carry no tactic content.
std::string_view strip_bullets(std::string_view s) {
    while (!s.empty() && (s.front() == '-' || s.front() == '+' || s.front() == '*' || s.front() == '{' ||
                          s.front() == '}' || is_space(s.front()))) {
        s.remove_prefix(1);
    }
    return s;
}

std::string_view first_token(std::string_view s) {
    std::size_t end = 0;
    while (end < s.size() && !is_space(s[end])) ++end;
    return s.substr(0, end);
}

std::string_view drop_token(std::string_view s) {
    return trim(s.substr(first_token(s).size()));
}

bool is_lemma_keyword(std::string_view token) {
    return std::find(kLemmaKeywords.begin(), kLemmaKeywords.end(), token) != kLemmaKeywords.end();
}

// Returns the lemma name if `sentence` opens a lemma-like block.
std::optional<std::string> lemma_header(std::string_view sentence) {
    std::string_view rest = sentence;
    while (std::find(kModifiers.begin(), kModifiers.end(), first_token(rest)) != kModifiers.end()) {
        rest = drop_token(rest);
    }
    std::string_view keyword = first_token(rest);
    if (!is_lemma_keyword(keyword)) return std::nullopt;
    rest = trim(rest.substr(keyword.size()));
    std::size_t end = 0;
    while (end < rest.size() && !is_space(rest[end]) && rest[end] != ':' && rest[end] != '(' &&
           rest[end] != '{' && rest[end] != '[') {
        ++end;
    }
    if (end == 0) return std::nullopt;
    return std::string(rest.substr(0, end));
}

bool is_opener(char c) { return c == '(' || c == '[' || c == '{'; }
bool is_closer(char c) { return c == ')' || c == ']' || c == '}'; }

TraceElement make_element(std::string_view fragment) {
    TraceElement element;
    std::size_t end = 0;
    if (is_opener(fragment.front()) || fragment.front() == '"') {
        end = 1;
    } else {
        while (end < fragment.size() && !is_space(fragment[end]) && !is_opener(fragment[end]) &&
               fragment[end] != '"') {
            ++end;
        }
    }
    element.label = std::string(fragment.substr(0, end));
    element.params = std::string(trim(fragment.substr(end)));
    return element;
}

}  // namespace

std::string element_text(const TraceElement& element) {
    if (element.params.empty()) return element.label;
    if (element.params.front() == ';') return element.label + element.params;
    return element.label + " " + element.params;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_string = false;
    bool pending_space = false;
    for (char c : text) {
        if (in_string) {
            out.push_back(c);
            if (c == '"') in_string = false;
            continue;
        }
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
        if (c == '"') in_string = true;
    }
    return out;
}

std::vector<TraceElement> split_tactic_sentence(std::string_view sentence) {
    const std::string text = normalize_whitespace(sentence);
    if (text.empty()) throw EmptySentence("empty tactic sentence");

    std::vector<std::string_view> fragments;
    const std::string_view view = text;
    int depth = 0;
    bool in_string = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < view.size(); ++i) {
        const char c = view[i];
        if (in_string) {
            if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (is_opener(c)) {
            ++depth;
        } else if (is_closer(c)) {
            depth = std::max(0, depth - 1);
        } else if (c == ';' && depth == 0) {
            fragments.push_back(trim(view.substr(start, i - start)));
            start = i + 1;
        }
    }
    fragments.push_back(trim(view.substr(start)));

    std::vector<TraceElement> elements;
    elements.reserve(fragments.size());
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        if (fragments[i].empty()) {
            throw EmptySentence("empty tactic between semicolons in \"" + text + "\"");
        }
        TraceElement element = make_element(fragments[i]);
        if (i + 1 < fragments.size()) element.params += ';';
        elements.push_back(std::move(element));
    }
    return elements;
}

std::vector<Trace> parse_proof_script(std::string_view source_text, std::string_view theory,
                                      std::vector<std::string>* warnings) {
    std::vector<Trace> traces;
    std::optional<Trace> open;
    std::size_t open_line = 0;

    for (const Sentence& sentence : lex_sentences(source_text)) {
        const std::string_view body = strip_bullets(sentence.text);
        if (body.empty()) continue;

        if (!open) {
            if (!sentence.terminated) continue;
            if (auto name = lemma_header(body)) {
                open = Trace{*name, {}, std::string(theory), std::string(body) + "."};
                open_line = sentence.line;
            }
            continue;
        }

        if (!sentence.terminated) {
            throw UnterminatedProof("", open_line, "proof of " + open->lemma_name + " is never closed");
        }
        const std::string_view head = first_token(body);
        if (head == "Proof") continue;
        if (head == "Qed" || head == "Defined") {
            if (!open->elements.empty() && open->elements.back().composed()) {
                throw ParseError("", sentence.line, "proof of " + open->lemma_name + " ends mid-composition");
            }
            traces.push_back(std::move(*open));
            open.reset();
            continue;
        }
        if (head == "Admitted" || head == "Abort") {
            if (warnings) {
                warnings->push_back("line " + std::to_string(open_line) + ": skipping " + open->lemma_name + " (" +
                                    std::string(head) + ")");
            }
            open.reset();
            continue;
        }
        if (lemma_header(body)) {
            throw UnterminatedProof("", open_line, "proof of " + open->lemma_name + " is never closed");
        }
        try {
            for (TraceElement& element : split_tactic_sentence(body)) {
                open->elements.push_back(std::move(element));
            }
        } catch (const EmptySentence& e) {
            throw ParseError("", sentence.line, e.what());
        }
    }
    if (open) throw UnterminatedProof("", open_line, "proof of " + open->lemma_name + " is never closed");
    return traces;
}

void make_lemma_names_unique(Corpus& corpus) {
    std::set<std::string> used;
    for (Trace& trace : corpus.traces) {
        if (used.contains(trace.lemma_name)) {
            int n = 2;
            while (used.contains(trace.lemma_name + "#" + std::to_string(n))) ++n;
            trace.lemma_name += "#" + std::to_string(n);
        }
        used.insert(trace.lemma_name);
    }
}

Corpus load_corpus(const std::vector<std::filesystem::path>& paths, std::vector<std::string>* warnings) {
    Corpus corpus;
    for (const auto& path : paths) {
        if (path.extension() == ".jsonl") {
            Corpus part = read_traces(path);
            for (Trace& t : part.traces) corpus.traces.push_back(std::move(t));
        } else {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw IoError("cannot open " + path.string());
            std::ostringstream buffer;
            buffer << in.rdbuf();
            std::vector<Trace> traces;
            try {
                traces = parse_proof_script(buffer.str(), path.stem().string(), warnings);
            } catch (const ParseError& e) {
                throw ParseError(path.string(), e.line(), e.detail());
            }
            for (Trace& t : traces) corpus.traces.push_back(std::move(t));
        }
        corpus.provenance.push_back(path.string());
    }
    make_lemma_names_unique(corpus);
    return corpus;
}

nlohmann::ordered_json trace_to_json(const Trace& trace) {
    nlohmann::ordered_json events = nlohmann::ordered_json::array();
    for (const TraceElement& e : trace.elements) {
        nlohmann::ordered_json event;
        event["l"] = e.label;
        event["v"] = e.params;
        events.push_back(std::move(event));
    }
    nlohmann::ordered_json object;
    object["lemma"] = trace.lemma_name;
    object["theory"] = trace.source_theory;
    object["events"] = std::move(events);
    if (!trace.statement.empty()) object["statement"] = trace.statement;
    return object;
}

Trace trace_from_json(const nlohmann::json& object) {
    if (!object.is_object()) throw SchemaError("trace must be a JSON object");
    for (const auto& [key, value] : object.items()) {
        if (key != "lemma" && key != "theory" && key != "events" && key != "statement") {
            throw SchemaError("unknown trace field \"" + key + "\"");
        }
    }
    auto string_field = [&](const nlohmann::json& obj, const char* key, bool required) -> std::string {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) throw SchemaError(std::string("missing field \"") + key + "\"");
            return {};
        }
        if (!it->is_string()) throw SchemaError(std::string("field \"") + key + "\" must be a string");
        return it->get<std::string>();
    };

    Trace trace;
    trace.lemma_name = string_field(object, "lemma", true);
    trace.source_theory = string_field(object, "theory", false);
    trace.statement = string_field(object, "statement", false);
    auto events = object.find("events");
    if (events == object.end()) throw SchemaError("missing field \"events\"");
    if (!events->is_array()) throw SchemaError("field \"events\" must be an array");
    for (const auto& event : *events) {
        if (!event.is_object()) throw SchemaError("event must be a JSON object");
        for (const auto& [key, value] : event.items()) {
            if (key != "l" && key != "v") throw SchemaError("unknown event field \"" + key + "\"");
        }
        TraceElement element{string_field(event, "l", true), string_field(event, "v", false)};
        if (element.label.empty() || std::any_of(element.label.begin(), element.label.end(), is_space)) {
            throw SchemaError("invalid label \"" + element.label + "\"");
        }
        trace.elements.push_back(std::move(element));
    }
    return trace;
}

void write_traces(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const Trace& trace : corpus.traces) {
        out << trace_to_json(trace).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Corpus read_traces(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            corpus.traces.push_back(trace_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    corpus.provenance.push_back(path.string());
    return corpus;
}

}  // namespace sepia
