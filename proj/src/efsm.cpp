#include "sepia/efsm.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

#include "sepia/errors.hpp"

namespace sepia {

bool guard_allows(const Guard& guard, std::string_view params) {
    return guard.open || guard.allowed_params.contains(std::string(params));
}

std::set<std::string> Efsm::labels() const {
    std::set<std::string> out;
    for (const Transition& t : transitions) out.insert(t.label);
    return out;
}

void validate(const Efsm& machine) {
    if (machine.state_count == 0) throw SchemaError("machine has no states");
    auto check = [&](StateId s, const char* what) {
        if (s >= machine.state_count) {
            throw SchemaError(std::string(what) + " state " + std::to_string(s) + " out of range");
        }
    };
    check(machine.initial, "initial");
    for (StateId f : machine.finals) check(f, "final");
    for (const Transition& t : machine.transitions) {
        check(t.from, "source");
        check(t.to, "target");
        if (t.label.empty()) throw SchemaError("transition with empty label");
        if (t.guard.label != t.label) throw SchemaError("guard label differs from transition label " + t.label);
        if (!t.guard.open && t.guard.allowed_params.empty()) {
            throw SchemaError("closed guard on " + t.label + " admits nothing");
        }
    }
}

std::vector<std::vector<std::size_t>> outgoing_index(const Efsm& machine) {
    std::vector<std::vector<std::size_t>> out(machine.state_count);
    for (std::size_t i = 0; i < machine.transitions.size(); ++i) {
        out[machine.transitions[i].from].push_back(i);
    }
    return out;
}

bool transition_less(const Transition& a, const Transition& b) {
    if (a.from != b.from) return a.from < b.from;
    if (a.label != b.label) return a.label < b.label;
    if (a.guard != b.guard) return a.guard < b.guard;
    return a.to < b.to;
}

Renumbered canonicalize(const Efsm& machine) {
    const auto outgoing = outgoing_index(machine);
    Renumbered result;
    result.mapping.assign(machine.state_count, std::nullopt);

    std::deque<StateId> queue{machine.initial};
    result.mapping[machine.initial] = 0;
    StateId next_id = 1;
    while (!queue.empty()) {
        const StateId s = queue.front();
        queue.pop_front();
        std::vector<std::size_t> edges = outgoing[s];
        std::sort(edges.begin(), edges.end(), [&](std::size_t a, std::size_t b) {
            return transition_less(machine.transitions[a], machine.transitions[b]);
        });
        for (std::size_t e : edges) {
            const StateId to = machine.transitions[e].to;
            if (!result.mapping[to]) {
                result.mapping[to] = next_id++;
                queue.push_back(to);
            }
        }
    }

    Efsm& out = result.machine;
    out.state_count = next_id;
    out.initial = 0;
    for (StateId f : machine.finals) {
        if (result.mapping[f]) out.finals.insert(*result.mapping[f]);
    }
    for (const Transition& t : machine.transitions) {
        if (!result.mapping[t.from]) continue;
        Transition copy = t;
        copy.from = *result.mapping[t.from];
        copy.to = *result.mapping[t.to];
        out.transitions.push_back(std::move(copy));
    }
    std::sort(out.transitions.begin(), out.transitions.end(), transition_less);
    return result;
}

Efsm build_prefix_tree(std::span<const Trace> traces) {
    struct Node {
        std::map<TraceElement, std::size_t> children;
        bool final = false;
    };
    std::vector<Node> nodes(1);
    for (const Trace& trace : traces) {
        std::size_t at = 0;
        for (const TraceElement& e : trace.elements) {
            auto it = nodes[at].children.find(e);
            if (it == nodes[at].children.end()) {
                nodes.emplace_back();
                it = nodes[at].children.emplace(e, nodes.size() - 1).first;
            }
            at = it->second;
        }
        nodes[at].final = true;
    }

    // Number breadth-first; std::map already orders children by (label, params).
    Efsm machine;
    machine.state_count = nodes.size();
    std::vector<StateId> id(nodes.size());
    std::deque<std::size_t> queue{0};
    id[0] = 0;
    StateId next_id = 1;
    while (!queue.empty()) {
        const std::size_t n = queue.front();
        queue.pop_front();
        if (nodes[n].final) machine.finals.insert(id[n]);
        for (const auto& [element, child] : nodes[n].children) {
            id[child] = next_id++;
            machine.transitions.push_back({id[n], element.label, Guard{element.label, {element.params}, false}, id[child]});
            queue.push_back(child);
        }
    }
    std::sort(machine.transitions.begin(), machine.transitions.end(), transition_less);
    return machine;
}

Acceptor::Acceptor(const Efsm& machine) : machine_(machine), outgoing_(outgoing_index(machine)) {}

std::set<StateId> Acceptor::run(std::span<const TraceElement> elements) const {
    std::set<StateId> current{machine_.initial};
    for (const TraceElement& e : elements) {
        std::set<StateId> next;
        for (StateId s : current) {
            for (std::size_t i : outgoing_[s]) {
                const Transition& t = machine_.transitions[i];
                if (t.label == e.label && guard_allows(t.guard, e.params)) next.insert(t.to);
            }
        }
        if (next.empty()) return next;
        current = std::move(next);
    }
    return current;
}

bool Acceptor::accepts(std::span<const TraceElement> elements) const {
    const auto reached = run(elements);
    return std::any_of(reached.begin(), reached.end(), [&](StateId s) { return machine_.is_final(s); });
}

bool Acceptor::has_path(std::span<const TraceElement> elements) const { return !run(elements).empty(); }

bool accepts(const Efsm& machine, std::span<const TraceElement> elements) {
    return Acceptor(machine).accepts(elements);
}

bool accepts(const Efsm& machine, const Trace& trace) { return accepts(machine, trace.elements); }

namespace {

std::string dot_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string edge_label(const Transition& t) {
    constexpr std::size_t kSamples = 3;
    std::string label = t.label + " / {";
    std::size_t shown = 0;
    for (const std::string& p : t.guard.allowed_params) {
        if (shown == kSamples) break;
        if (shown > 0) label += ", ";
        label += p.empty() ? std::string("\"\"") : p;
        ++shown;
    }
    if (t.guard.allowed_params.size() > kSamples) {
        label += " +" + std::to_string(t.guard.allowed_params.size() - kSamples) + " more";
    }
    label += "}";
    if (t.guard.open) label += "*";
    return label;
}

}  // namespace

std::string to_dot(const Efsm& machine) {
    std::vector<Transition> edges = machine.transitions;
    std::sort(edges.begin(), edges.end(), transition_less);

    std::ostringstream out;
    out << "digraph efsm {\n";
    out << "  rankdir=LR;\n";
    for (StateId s = 0; s < machine.state_count; ++s) {
        out << "  " << s << " [shape=" << (machine.is_final(s) ? "doublecircle" : "circle");
        if (s == machine.initial) out << ", style=bold";
        out << "];\n";
    }
    for (const Transition& t : edges) {
        out << "  " << t.from << " -> " << t.to << " [label=\"" << dot_escape(edge_label(t)) << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

nlohmann::ordered_json model_to_json(const Efsm& machine) {
    nlohmann::ordered_json object;
    object["states"] = machine.state_count;
    object["initial"] = machine.initial;
    object["finals"] = machine.finals;
    nlohmann::ordered_json transitions = nlohmann::ordered_json::array();
    for (const Transition& t : machine.transitions) {
        nlohmann::ordered_json edge;
        edge["from"] = t.from;
        edge["label"] = t.label;
        edge["params"] = t.guard.allowed_params;
        edge["open"] = t.guard.open;
        edge["to"] = t.to;
        transitions.push_back(std::move(edge));
    }
    object["transitions"] = std::move(transitions);
    return object;
}

Efsm model_from_json(const nlohmann::json& object) {
    auto require_keys = [](const nlohmann::json& obj, std::initializer_list<std::string_view> keys,
                           std::string_view what) {
        if (!obj.is_object()) throw SchemaError(std::string(what) + " must be a JSON object");
        for (const auto& [key, value] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw SchemaError("unknown " + std::string(what) + " field \"" + key + "\"");
            }
        }
        for (std::string_view key : keys) {
            if (!obj.contains(std::string(key))) {
                throw SchemaError("missing " + std::string(what) + " field \"" + std::string(key) + "\"");
            }
        }
    };

    try {
        require_keys(object, {"states", "initial", "finals", "transitions"}, "model");
        Efsm machine;
        machine.state_count = object.at("states").get<std::size_t>();
        machine.initial = object.at("initial").get<StateId>();
        machine.finals = object.at("finals").get<std::set<StateId>>();
        for (const auto& edge : object.at("transitions")) {
            require_keys(edge, {"from", "label", "params", "open", "to"}, "transition");
            Transition t;
            t.from = edge.at("from").get<StateId>();
            t.label = edge.at("label").get<std::string>();
            t.to = edge.at("to").get<StateId>();
            t.guard.label = t.label;
            t.guard.allowed_params = edge.at("params").get<std::set<std::string>>();
            t.guard.open = edge.at("open").get<bool>();
            machine.transitions.push_back(std::move(t));
        }
        validate(machine);
        return machine;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed model: ") + e.what());
    }
}

void save_model(const Efsm& machine, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << model_to_json(machine).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

Efsm load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

}  // namespace sepia
