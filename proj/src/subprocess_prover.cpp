#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "sepia/errors.hpp"
#include "sepia/prover.hpp"

extern char** environ;

namespace sepia {

namespace {

class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv) {
        if (argv.empty()) throw BackendUnavailable("prover command is empty");
        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0) throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
        }
        fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
        fcntl(from_child[0], F_SETFD, FD_CLOEXEC);

        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDERR_FILENO);

        std::vector<char*> args;
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        const int rc = posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        close(to_child[0]);
        close(from_child[1]);
        if (rc != 0) {
            close(to_child[1]);
            close(from_child[0]);
            throw BackendUnavailable("cannot start " + argv[0] + ": " + std::strerror(rc));
        }
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        close(in_fd_);
        close(out_fd_);
        kill(pid_, SIGKILL);
        int status = 0;
        waitpid(pid_, &status, 0);
    }

    void write_line(std::string_view text) {
        std::string line(text);
        line.push_back('\n');
        std::size_t done = 0;
        while (done < line.size()) {
            const ssize_t n = ::write(in_fd_, line.data() + done, line.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw BackendUnavailable(std::string("write to prover failed: ") + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    // Returns everything before the next prompt match.
    std::string read_response(const std::regex& prompt, std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            std::smatch match;
            if (std::regex_search(buffer_, match, prompt)) {
                std::string response = buffer_.substr(0, static_cast<std::size_t>(match.position(0)));
                buffer_.erase(0, static_cast<std::size_t>(match.position(0) + match.length(0)));
                return response;
            }
            const auto left =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw Timeout("prover did not answer within " + std::to_string(timeout.count()) + " ms");
            pollfd fd{out_fd_, POLLIN, 0};
            const int ready = poll(&fd, 1, static_cast<int>(left.count()));
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw BackendUnavailable(std::string("poll failed: ") + std::strerror(errno));
            }
            if (ready == 0) continue;
            char chunk[4096];
            const ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw BackendUnavailable(std::string("read from prover failed: ") + std::strerror(errno));
            }
            if (n == 0) throw BackendUnavailable("prover exited");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buffer_;
};

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    for (std::size_t at = text.find(key); at != std::string::npos; at = text.find(key, at + value.size())) {
        text.replace(at, key.size(), value);
    }
    return text;
}

std::string terminated(std::string_view sentence) {
    std::string s(sentence);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty() || s.back() != '.') s.push_back('.');
    return s;
}

bool has_lemma_keyword(std::string_view statement) {
    for (std::string_view kw : {"Lemma", "Theorem", "Fact", "Corollary", "Remark", "Proposition", "Goal"}) {
        if (statement.substr(0, kw.size()) == kw &&
            (statement.size() == kw.size() || std::isspace(static_cast<unsigned char>(statement[kw.size()])))) {
            return true;
        }
    }
    return false;
}

class SubprocessDriver final : public SessionDriver {
public:
    explicit SubprocessDriver(const SubprocessConfig& config)
        : config_(config), prompt_(config.prompt), process_(config.command) {
        process_.read_response(prompt_, config_.startup_timeout);
    }

    TacticOutcome send(std::string_view sentence, std::chrono::milliseconds timeout) {
        process_.write_line(terminated(sentence));
        return classify(process_.read_response(prompt_, timeout));
    }

    TacticOutcome apply(const std::string& sentence) override { return send(sentence, config_.tactic_timeout); }

    void undo(std::size_t remaining) override {
        const std::string command = replace_all(config_.undo_command, "{depth}", std::to_string(remaining));
        const TacticOutcome outcome = send(command, config_.tactic_timeout);
        if (outcome.kind == OutcomeKind::failure) throw BackendUnavailable("prover rejected undo: " + outcome.message);
    }

private:
    TacticOutcome classify(std::string response) const {
        std::istringstream lines(response);
        std::string line;
        while (std::getline(lines, line)) {
            for (const std::string& pattern : config_.error_patterns) {
                if (line.rfind(pattern, 0) == 0) return {OutcomeKind::failure, std::move(response)};
            }
        }
        for (const std::string& pattern : config_.complete_patterns) {
            if (response.find(pattern) != std::string::npos) return {OutcomeKind::complete, std::move(response)};
        }
        return {OutcomeKind::progress, std::move(response)};
    }

    const SubprocessConfig& config_;
    std::regex prompt_;
    ChildProcess process_;
};

std::chrono::milliseconds seconds_field(const nlohmann::json& object, const char* key,
                                        std::chrono::milliseconds fallback) {
    if (!object.contains(key)) return fallback;
    const double seconds = object.at(key).get<double>();
    if (seconds <= 0) throw SchemaError(std::string(key) + " must be positive");
    return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
}

}  // namespace

SubprocessConfig subprocess_config_from_json(const nlohmann::json& object) {
    static const std::set<std::string> known = {
        "command",          "prompt",         "error_patterns",        "complete_patterns",
        "lemma_template",   "undo_command",   "baseline_command",      "tactic_timeout_seconds",
        "startup_timeout_seconds"};
    if (!object.is_object()) throw SchemaError("subprocess config must be a JSON object");
    for (const auto& [key, value] : object.items()) {
        if (!known.contains(key)) throw SchemaError("unknown subprocess config field \"" + key + "\"");
    }
    SubprocessConfig config;
    try {
        config.command = object.at("command").get<std::vector<std::string>>();
        if (config.command.empty()) throw SchemaError("subprocess command is empty");
        auto text = [&](const char* key, std::string& field) {
            if (object.contains(key)) field = object.at(key).get<std::string>();
        };
        auto list = [&](const char* key, std::vector<std::string>& field) {
            if (object.contains(key)) field = object.at(key).get<std::vector<std::string>>();
        };
        text("prompt", config.prompt);
        list("error_patterns", config.error_patterns);
        list("complete_patterns", config.complete_patterns);
        text("lemma_template", config.lemma_template);
        text("undo_command", config.undo_command);
        text("baseline_command", config.baseline_command);
        config.tactic_timeout = seconds_field(object, "tactic_timeout_seconds", config.tactic_timeout);
        config.startup_timeout = seconds_field(object, "startup_timeout_seconds", config.startup_timeout);
        std::regex check(config.prompt);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed subprocess config: ") + e.what());
    } catch (const std::regex_error& e) {
        throw SchemaError(std::string("invalid prompt pattern: ") + e.what());
    }
    return config;
}

SubprocessConfig load_subprocess_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendUnavailable("cannot open subprocess config " + path.string());
    try {
        return subprocess_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

SubprocessBackend::SubprocessBackend(SubprocessConfig config) : config_(std::move(config)) {
    // A prover that dies mid-write must surface as an error, not kill us.
    signal(SIGPIPE, SIG_IGN);
}

ProverSession SubprocessBackend::start_session(std::string_view lemma_name, std::string_view lemma_statement) {
    auto driver = std::make_unique<SubprocessDriver>(config_);
    std::string statement(lemma_statement);
    if (!has_lemma_keyword(statement)) {
        statement = replace_all(replace_all(config_.lemma_template, "{name}", lemma_name), "{statement}", statement);
    }
    const TacticOutcome opened = driver->send(statement, config_.startup_timeout);
    if (opened.kind == OutcomeKind::failure) {
        throw ProverError("prover rejected the statement of " + std::string(lemma_name) + ": " + opened.message);
    }
    return ProverSession(std::string(lemma_name), terminated(statement), std::move(driver));
}

bool SubprocessBackend::run_builtin_baseline(std::string_view lemma_name, std::string_view lemma_statement) {
    ProverSession session = start_session(lemma_name, lemma_statement);
    return session.apply_tactic(config_.baseline_command).kind == OutcomeKind::complete;
}

}  // namespace sepia
