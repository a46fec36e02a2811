#include <fstream>

#include "sepia/errors.hpp"
#include "sepia/prover.hpp"
#include "sepia/trace.hpp"

namespace sepia {

namespace {

class MockDriver final : public SessionDriver {
public:
    MockDriver(const MockWorld& world, int start) : world_(world), goals_{start} {}

    TacticOutcome apply(const std::string& sentence) override {
        const int goal = goals_.back();
        auto it = world_.transitions.find({goal, normalize_whitespace(sentence)});
        if (it == world_.transitions.end()) {
            return {OutcomeKind::failure, "Error: tactic failed at goal " + std::to_string(goal)};
        }
        goals_.push_back(it->second);
        if (it->second == world_.complete_goal) return {OutcomeKind::complete, "No more subgoals."};
        return {OutcomeKind::progress, "goal " + std::to_string(it->second)};
    }

    void undo(std::size_t /*remaining*/) override { goals_.pop_back(); }

private:
    const MockWorld& world_;
    std::vector<int> goals_;
};

}  // namespace

void MockWorld::add_transition(int from, std::string_view sentence, int to) {
    auto [it, inserted] = transitions.emplace(std::make_pair(from, normalize_whitespace(sentence)), to);
    if (!inserted && it->second != to) {
        throw SchemaError("mock transition (" + std::to_string(from) + ", \"" + std::string(sentence) +
                          "\") has two targets");
    }
}

MockWorld mock_world_from_json(const nlohmann::json& object) {
    if (!object.is_object()) throw SchemaError("mock fixture must be a JSON object");
    for (const auto& [key, value] : object.items()) {
        if (key != "initial" && key != "transitions" && key != "complete" && key != "baseline_provable") {
            throw SchemaError("unknown mock fixture field \"" + key + "\"");
        }
    }
    MockWorld world;
    try {
        world.complete_goal = object.at("complete").get<int>();
        world.initial = object.at("initial").get<std::map<std::string, int>>();
        for (const auto& row : object.at("transitions")) {
            if (!row.is_array() || row.size() != 3) throw SchemaError("mock transition must be [goal, tactic, goal]");
            world.add_transition(row[0].get<int>(), row[1].get<std::string>(), row[2].get<int>());
        }
        if (object.contains("baseline_provable")) {
            world.baseline_provable = object.at("baseline_provable").get<std::set<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed mock fixture: ") + e.what());
    }
    for (const auto& [key, to] : world.transitions) {
        if (key.first == world.complete_goal) throw SchemaError("complete goal must not have outgoing transitions");
    }
    return world;
}

nlohmann::ordered_json mock_world_to_json(const MockWorld& world) {
    nlohmann::ordered_json object;
    object["initial"] = world.initial;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& [key, to] : world.transitions) rows.push_back({key.first, key.second, to});
    object["transitions"] = std::move(rows);
    object["complete"] = world.complete_goal;
    object["baseline_provable"] = world.baseline_provable;
    return object;
}

MockWorld load_mock_world(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendUnavailable("cannot open mock fixture " + path.string());
    try {
        return mock_world_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

MockBackend::MockBackend(MockWorld world) : world_(std::move(world)) {}

ProverSession MockBackend::start_session(std::string_view lemma_name, std::string_view lemma_statement) {
    auto it = world_.initial.find(std::string(lemma_name));
    if (it == world_.initial.end()) throw UnknownLemma("mock has no lemma \"" + std::string(lemma_name) + "\"");
    return ProverSession(std::string(lemma_name), std::string(lemma_statement),
                         std::make_unique<MockDriver>(world_, it->second));
}

bool MockBackend::run_builtin_baseline(std::string_view lemma_name, std::string_view /*lemma_statement*/) {
    return world_.baseline_provable.contains(std::string(lemma_name));
}

}  // namespace sepia
