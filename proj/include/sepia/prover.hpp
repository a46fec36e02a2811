#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace sepia {

enum class OutcomeKind { progress, complete, failure };

struct TacticOutcome {
    OutcomeKind kind = OutcomeKind::failure;
    std::string message;
};

enum class SessionStatus { open, complete, dead };

std::string to_string(OutcomeKind kind);

// Backend-specific half of a session. Implementations only talk to the
// prover; bookkeeping and state checks live in ProverSession.
class SessionDriver {
public:
    virtual ~SessionDriver() = default;

    // Must leave the prover state untouched when the outcome is a failure.
    virtual TacticOutcome apply(const std::string& sentence) = 0;
    // Backtrack one sentence; `remaining` is the applied count afterwards.
    virtual void undo(std::size_t remaining) = 0;
};

class ProverSession {
public:
    ProverSession(std::string lemma_name, std::string lemma_statement, std::unique_ptr<SessionDriver> driver);

    // Throws SessionDead on a dead session, Timeout when the backend gives up
    // on the tactic (the session is then dead).
    TacticOutcome apply_tactic(std::string_view sentence);
    void undo();

    SessionStatus status() const noexcept { return status_; }
    const std::vector<std::string>& applied() const noexcept { return applied_; }
    const std::string& lemma_name() const noexcept { return lemma_name_; }
    const std::string& lemma_statement() const noexcept { return lemma_statement_; }

private:
    std::string lemma_name_;
    std::string lemma_statement_;
    std::unique_ptr<SessionDriver> driver_;
    std::vector<std::string> applied_;
    SessionStatus status_ = SessionStatus::open;
};

class ProverBackend {
public:
    virtual ~ProverBackend() = default;

    // Safe to call concurrently; every session is independent. Sessions
    // borrow from the backend and must not outlive it.
    virtual ProverSession start_session(std::string_view lemma_name, std::string_view lemma_statement) = 0;

    // Runs the combined built-in automation command on a fresh session.
    virtual bool run_builtin_baseline(std::string_view lemma_name, std::string_view lemma_statement) = 0;
};

// ---------------------------------------------------------------------------
// Mock backend: a deterministic goal-id transition table.

struct MockWorld {
    // (goal, whitespace-normalized tactic sentence) -> goal
    std::map<std::pair<int, std::string>, int> transitions;
    int complete_goal = -1;
    std::map<std::string, int> initial;
    std::set<std::string> baseline_provable;

    void add_transition(int from, std::string_view sentence, int to);
};

MockWorld mock_world_from_json(const nlohmann::json& object);
nlohmann::ordered_json mock_world_to_json(const MockWorld& world);
MockWorld load_mock_world(const std::filesystem::path& path);

class MockBackend final : public ProverBackend {
public:
    explicit MockBackend(MockWorld world);

    ProverSession start_session(std::string_view lemma_name, std::string_view lemma_statement) override;
    bool run_builtin_baseline(std::string_view lemma_name, std::string_view lemma_statement) override;

    const MockWorld& world() const noexcept { return world_; }

private:
    MockWorld world_;
};

// ---------------------------------------------------------------------------
// Subprocess backend: drives a prompt-based interactive prover over pipes.

struct SubprocessConfig {
    std::vector<std::string> command;
    // Regex that marks the end of a response.
    std::string prompt = "<prompt>.*?</prompt>";
    // A response line starting with any of these is a failure.
    std::vector<std::string> error_patterns = {"Error"};
    // A response containing any of these completes the proof.
    std::vector<std::string> complete_patterns = {"No more subgoals", "Proof completed"};
    // "{name}" and "{statement}" are substituted; used when the statement is a
    // bare proposition rather than a full "Lemma ..." sentence.
    std::string lemma_template = "Lemma {name} : {statement}.";
    // "{depth}" is replaced by the number of sentences that remain applied.
    std::string undo_command = "Undo.";
    std::string baseline_command = "auto with * || eauto with * || tauto || firstorder || trivial.";
    std::chrono::milliseconds tactic_timeout{5000};
    std::chrono::milliseconds startup_timeout{30000};
};

SubprocessConfig subprocess_config_from_json(const nlohmann::json& object);
SubprocessConfig load_subprocess_config(const std::filesystem::path& path);

class SubprocessBackend final : public ProverBackend {
public:
    explicit SubprocessBackend(SubprocessConfig config);

    ProverSession start_session(std::string_view lemma_name, std::string_view lemma_statement) override;
    bool run_builtin_baseline(std::string_view lemma_name, std::string_view lemma_statement) override;

    const SubprocessConfig& config() const noexcept { return config_; }

private:
    SubprocessConfig config_;
};

// "mock:<fixture.json>" or "subprocess:<config.json>".
std::unique_ptr<ProverBackend> make_backend(std::string_view spec);

}  // namespace sepia
