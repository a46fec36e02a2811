#include "sepia/prover.hpp"

#include <cstdlib>

#include "sepia/errors.hpp"

namespace sepia {

std::string to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::progress: return "progress";
        case OutcomeKind::complete: return "complete";
        case OutcomeKind::failure: return "failure";
    }
    return "unknown";
}

ProverSession::ProverSession(std::string lemma_name, std::string lemma_statement,
                             std::unique_ptr<SessionDriver> driver)
    : lemma_name_(std::move(lemma_name)), lemma_statement_(std::move(lemma_statement)), driver_(std::move(driver)) {}

TacticOutcome ProverSession::apply_tactic(std::string_view sentence) {
    if (status_ == SessionStatus::dead) throw SessionDead("session for " + lemma_name_ + " is dead");
    if (status_ == SessionStatus::complete) throw ProverError("proof of " + lemma_name_ + " is already complete");

    std::string text(sentence);
    TacticOutcome outcome;
    try {
        outcome = driver_->apply(text);
    } catch (const ProverError&) {
        status_ = SessionStatus::dead;
        throw;
    }
    if (outcome.kind != OutcomeKind::failure) applied_.push_back(std::move(text));
    if (outcome.kind == OutcomeKind::complete) status_ = SessionStatus::complete;
    return outcome;
}

void ProverSession::undo() {
    if (status_ == SessionStatus::dead) throw SessionDead("session for " + lemma_name_ + " is dead");
    if (applied_.empty()) throw NothingToUndo("nothing to undo for " + lemma_name_);
    try {
        driver_->undo(applied_.size() - 1);
    } catch (const ProverError&) {
        status_ = SessionStatus::dead;
        throw;
    }
    applied_.pop_back();
    status_ = SessionStatus::open;
}

std::unique_ptr<ProverBackend> make_backend(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) {
        throw std::invalid_argument("backend must be mock:<fixture> or subprocess:<config>, got \"" +
                                    std::string(spec) + "\"");
    }
    const std::string_view kind = spec.substr(0, colon);
    const std::filesystem::path path(std::string(spec.substr(colon + 1)));
    if (kind == "mock") return std::make_unique<MockBackend>(load_mock_world(path));
    if (kind == "subprocess") return std::make_unique<SubprocessBackend>(load_subprocess_config(path));
    throw std::invalid_argument("unknown backend kind \"" + std::string(kind) + "\"");
}

}  // namespace sepia
